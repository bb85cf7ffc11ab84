#include "phaselink/stack.hpp"

#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

static_assert(std::endian::native == std::endian::little,
              "raster formats are little-endian; big-endian hosts are unsupported");

namespace phaselink {

namespace {

void write_binary(const std::string& path, const void* data, std::size_t bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(bytes));
  if (!out) throw IoError("short write to " + path);
}

std::vector<char> read_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw IoError("cannot open " + path);
  const std::streamsize size = in.tellg();
  in.seekg(0);
  std::vector<char> buffer(static_cast<std::size_t>(size));
  in.read(buffer.data(), size);
  if (!in) throw IoError("short read from " + path);
  return buffer;
}

}  // namespace

void write_stack(const SlcStack& stack, const std::string& header_path) {
  const std::filesystem::path header(header_path);
  std::filesystem::path data = header;
  data.replace_extension(".dat");

  std::ofstream out(header_path);
  if (!out) throw IoError("cannot open " + header_path + " for writing");
  out << "width=" << stack.width << "\n"
      << "height=" << stack.height << "\n"
      << "n_acquisitions=" << stack.n_acquisitions << "\n"
      << "dtype=complex64\n"
      << "order=band-sequential\n"
      << "data_file=" << data.filename().string() << "\n";
  for (std::size_t i = 0; i < stack.labels.size(); ++i)
    out << "label_" << i << "=" << stack.labels[i] << "\n";
  if (!out) throw IoError("short write to " + header_path);

  write_binary(data.string(), stack.data.data(),
               stack.data.size() * sizeof(std::complex<float>));
}

SlcStack read_stack(const std::string& header_path) {
  std::ifstream in(header_path);
  if (!in) throw IoError("cannot open " + header_path);

  std::map<std::string, std::string> fields;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError("malformed header line: " + line);
    fields[line.substr(0, eq)] = line.substr(eq + 1);
  }

  const auto require = [&](const std::string& key) {
    const auto it = fields.find(key);
    if (it == fields.end()) throw IoError("header misses key '" + key + "'");
    return it->second;
  };

  SlcStack stack;
  stack.width = std::stoi(require("width"));
  stack.height = std::stoi(require("height"));
  stack.n_acquisitions = std::stoi(require("n_acquisitions"));
  if (stack.width < 1 || stack.height < 1 || stack.n_acquisitions < 2)
    throw IoError("invalid stack dimensions in " + header_path);
  if (require("dtype") != "complex64") throw IoError("unsupported dtype");
  if (require("order") != "band-sequential") throw IoError("unsupported band order");

  for (int i = 0;; ++i) {
    const auto it = fields.find("label_" + std::to_string(i));
    if (it == fields.end()) break;
    stack.labels.push_back(it->second);
  }

  std::filesystem::path data =
      std::filesystem::path(header_path).parent_path() / require("data_file");
  const std::vector<char> raw = read_binary(data.string());
  const std::size_t expected =
      stack.band_size() * stack.n_acquisitions * sizeof(std::complex<float>);
  if (raw.size() != expected)
    throw IoError("data file size " + std::to_string(raw.size()) + " != expected " +
                  std::to_string(expected));
  stack.data.resize(stack.band_size() * stack.n_acquisitions);
  std::memcpy(stack.data.data(), raw.data(), raw.size());
  return stack;
}

void write_raster_f32(const std::string& path, const std::vector<float>& values) {
  write_binary(path, values.data(), values.size() * sizeof(float));
}

void write_raster_u8(const std::string& path, const std::vector<std::uint8_t>& values) {
  write_binary(path, values.data(), values.size());
}

std::vector<float> read_raster_f32(const std::string& path) {
  const std::vector<char> raw = read_binary(path);
  if (raw.size() % sizeof(float) != 0) throw IoError("raster size is not float-aligned");
  std::vector<float> values(raw.size() / sizeof(float));
  std::memcpy(values.data(), raw.data(), raw.size());
  return values;
}

}  // namespace phaselink
