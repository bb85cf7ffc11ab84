#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "phaselink/errors.hpp"

namespace phaselink {

/// Stack of N coregistered SLC rasters. Band-sequential storage, row-major
/// within band; on disk a text header sidecar plus raw little-endian
/// complex64 data.
struct SlcStack {
  int width = 0;
  int height = 0;
  int n_acquisitions = 0;
  std::vector<std::complex<float>> data;  // band * (w*h) + y * w + x
  std::vector<std::string> labels;        // optional acquisition labels

  std::size_t band_size() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  std::complex<float> at(int band, int x, int y) const {
    return data[band * band_size() + static_cast<std::size_t>(y) * width + x];
  }
  std::complex<float>& at(int band, int x, int y) {
    return data[band * band_size() + static_cast<std::size_t>(y) * width + x];
  }
};

/// Writes `<path>` (text header) and the raw data file it references.
/// The header has key=value lines: width, height, n_acquisitions,
/// dtype=complex64, order=band-sequential, data_file, label_<i>.
void write_stack(const SlcStack& stack, const std::string& header_path);

SlcStack read_stack(const std::string& header_path);

void write_raster_f32(const std::string& path, const std::vector<float>& values);
void write_raster_u8(const std::string& path, const std::vector<std::uint8_t>& values);
std::vector<float> read_raster_f32(const std::string& path);

}  // namespace phaselink
