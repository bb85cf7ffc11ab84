#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "phaselink/coherence.hpp"
#include "phaselink/linking.hpp"
#include "phaselink/noisefloor.hpp"
#include "phaselink/stack.hpp"

namespace phaselink {

struct RunConfig {
  int window = 101;        // odd side length of the SHP search window
  double shp_alpha = 0.25; // Kuiper significance level
  int shp_min = 50;        // pixels with |Omega| <= shp_min are rejected
  double beta = 1e-4;      // spectral regularization
  int reference = 0;       // reference acquisition p
  int threads = 0;         // 0: hardware concurrency
  std::vector<MethodSpec> methods = MethodSpec::all();
  bool four_connected = false;  // SHP component connectivity (default 8)
  PtSolver pt_solver = PtSolver::PRCG;
  enum class PtInit { Eigen, Tridiagonal, SpanningTree };
  PtInit pt_init = PtInit::Eigen;
  bool compute_ambiguity = true;
  bool compute_wishart = true;

  void validate() const;  // window odd >= 3, alpha in (0,1), ...
};

/// Per-pixel error codes recorded in the error raster.
enum class PixelError : std::uint8_t {
  None = 0,
  SingularMatrix = 1,
  Eigensolver = 2,
  NonFinite = 3,
  DegenerateBounds = 4,
  Orthogonality = 5,
  Other = 6,
};

/// Bit flags per (pixel, method).
enum PixelFlag : std::uint8_t {
  kFlagNotConverged = 1,
  kFlagDegenerate = 2,
};

struct PipelineOutputs {
  int width = 0, height = 0, n_acquisitions = 0;
  // Coefficient maps in emission order: gamma_cp, then per method
  // <name>_gof [, <name>_gof_wishart], <name>_amb.
  std::vector<std::pair<std::string, std::vector<float>>> maps;
  std::vector<std::uint8_t> rejection_mask;
  std::vector<std::uint8_t> error_codes;
  std::vector<std::pair<std::string, std::vector<float>>> phase_volumes;
  std::vector<std::pair<std::string, std::vector<std::uint8_t>>> flag_masks;
};

/// Statistically homogeneous neighborhood of (x, y): every pixel of the
/// clipped window is Kuiper-tested against the center on its amplitude
/// series; the connected component containing the center is kept.
PixelEnsemble shp_neighborhood(const SlcStack& stack, int x, int y,
                               const RunConfig& cfg);

/// Pixel-wise processing: SHP detection, coherence estimation,
/// regularization, linking with every configured method and coefficient
/// evaluation. Rejected pixels (|Omega| <= shp_min) keep their original
/// phases and zero coefficients. Per-pixel errors land in the error raster;
/// the run never aborts on them. Output is bit-identical for any thread
/// count.
PipelineOutputs process_stack(const SlcStack& stack, const RunConfig& cfg);

/// Writes coefficient maps (float32), the rejection mask and error raster
/// (uint8), per-method flags and phase volumes, plus a manifest.txt
/// describing dimensions and files.
void write_outputs(const PipelineOutputs& outputs, const std::string& out_dir);

/// Per-coefficient histograms and (gof, amb) scatter pairs as CSV. Pixels at
/// exactly 0 or 1 are excluded, matching the reporting convention for
/// rejected/saturated pixels.
void export_histograms(const PipelineOutputs& outputs, int bins,
                       const std::string& hist_csv_path,
                       const std::string& scatter_csv_path);

/// Same, reading a previously written output directory.
void export_histograms_from_dir(const std::string& out_dir, int bins,
                                const std::string& hist_csv_path,
                                const std::string& scatter_csv_path);

}  // namespace phaselink
