#include "phaselink/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>

#include "phaselink/kuiper.hpp"
#include "phaselink/parallel.hpp"
#include "phaselink/quality.hpp"

namespace phaselink {

void RunConfig::validate() const {
  if (window < 3 || window % 2 == 0)
    throw UsageError("window must be odd and >= 3");
  if (!(shp_alpha > 0.0 && shp_alpha < 1.0))
    throw UsageError("shp_alpha must lie in (0, 1)");
  if (shp_min < 0) throw UsageError("shp_min must be non-negative");
  if (!(beta >= 0.0 && beta < 1.0)) throw UsageError("beta must lie in [0, 1)");
  if (reference < 0) throw UsageError("reference must be non-negative");
  if (methods.empty()) throw UsageError("no methods configured");
}

namespace {

// Sorted per-pixel amplitude series, the input of the Kuiper tests. Sorting
// once per pixel turns each pairwise test into a linear merge walk.
std::vector<float> sorted_amplitudes(const SlcStack& stack, int threads) {
  const std::size_t pixels = stack.band_size();
  const int n = stack.n_acquisitions;
  std::vector<float> amps(pixels * n);
  parallel_for(static_cast<std::int64_t>(pixels), threads, [&](std::int64_t p) {
    float* series = &amps[p * n];
    for (int band = 0; band < n; ++band)
      series[band] = std::abs(stack.data[band * pixels + p]);
    std::sort(series, series + n);
  });
  return amps;
}

// Indices (into the raster) of the statistically homogeneous pixels
// 8-connected (or 4-connected) to the center of the clipped window.
std::vector<std::size_t> shp_members(const SlcStack& stack,
                                     const std::vector<float>& sorted_amps,
                                     int cx, int cy, const RunConfig& cfg) {
  const int n = stack.n_acquisitions;
  const int half = cfg.window / 2;
  const int x0 = std::max(cx - half, 0), x1 = std::min(cx + half, stack.width - 1);
  const int y0 = std::max(cy - half, 0), y1 = std::min(cy + half, stack.height - 1);
  const int ww = x1 - x0 + 1, wh = y1 - y0 + 1;

  const std::span<const float> center(&sorted_amps[(static_cast<std::size_t>(cy) * stack.width + cx) * n],
                                      static_cast<std::size_t>(n));

  std::vector<std::uint8_t> homogeneous(static_cast<std::size_t>(ww) * wh, 0);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const std::span<const float> other(
          &sorted_amps[(static_cast<std::size_t>(y) * stack.width + x) * n],
          static_cast<std::size_t>(n));
      const double v = kuiper_statistic_sorted(center, other);
      if (kuiper_pvalue(v, n, n) > cfg.shp_alpha)
        homogeneous[static_cast<std::size_t>(y - y0) * ww + (x - x0)] = 1;
    }

  // Connected component containing the center.
  static constexpr int dx8[] = {-1, 0, 1, -1, 1, -1, 0, 1};
  static constexpr int dy8[] = {-1, -1, -1, 0, 0, 1, 1, 1};
  static constexpr int dx4[] = {0, -1, 1, 0};
  static constexpr int dy4[] = {-1, 0, 0, 1};
  const int* dx = cfg.four_connected ? dx4 : dx8;
  const int* dy = cfg.four_connected ? dy4 : dy8;
  const int n_dirs = cfg.four_connected ? 4 : 8;

  std::vector<std::size_t> members;
  std::vector<std::pair<int, int>> queue;
  const int scx = cx - x0, scy = cy - y0;
  if (!homogeneous[static_cast<std::size_t>(scy) * ww + scx]) return members;
  homogeneous[static_cast<std::size_t>(scy) * ww + scx] = 2;  // visited
  queue.emplace_back(scx, scy);
  while (!queue.empty()) {
    const auto [x, y] = queue.back();
    queue.pop_back();
    members.push_back((static_cast<std::size_t>(y + y0) * stack.width) + (x + x0));
    for (int d = 0; d < n_dirs; ++d) {
      const int nx = x + dx[d], ny = y + dy[d];
      if (nx < 0 || nx >= ww || ny < 0 || ny >= wh) continue;
      auto& cell = homogeneous[static_cast<std::size_t>(ny) * ww + nx];
      if (cell == 1) {
        cell = 2;
        queue.emplace_back(nx, ny);
      }
    }
  }
  return members;
}

PixelEnsemble gather_ensemble(const SlcStack& stack,
                              const std::vector<std::size_t>& members) {
  const int n = stack.n_acquisitions;
  PixelEnsemble ensemble;
  ensemble.samples.resize(n, static_cast<Eigen::Index>(members.size()));
  const std::size_t pixels = stack.band_size();
  for (std::size_t m = 0; m < members.size(); ++m)
    for (int band = 0; band < n; ++band) {
      const std::complex<float> v = stack.data[band * pixels + members[m]];
      ensemble.samples(band, static_cast<Eigen::Index>(m)) = cdouble(v.real(), v.imag());
    }
  return ensemble;
}

std::uint8_t error_code_of(const Error& e) {
  if (dynamic_cast<const SingularMagnitudeMatrix*>(&e))
    return static_cast<std::uint8_t>(PixelError::SingularMatrix);
  if (dynamic_cast<const EigensolverFailure*>(&e))
    return static_cast<std::uint8_t>(PixelError::Eigensolver);
  if (dynamic_cast<const NonFiniteObjective*>(&e))
    return static_cast<std::uint8_t>(PixelError::NonFinite);
  if (dynamic_cast<const DegenerateBounds*>(&e))
    return static_cast<std::uint8_t>(PixelError::DegenerateBounds);
  if (dynamic_cast<const OrthogonalityNotReached*>(&e))
    return static_cast<std::uint8_t>(PixelError::Orthogonality);
  return static_cast<std::uint8_t>(PixelError::Other);
}

}  // namespace

PixelEnsemble shp_neighborhood(const SlcStack& stack, int x, int y,
                               const RunConfig& cfg) {
  cfg.validate();
  if (x < 0 || x >= stack.width || y < 0 || y >= stack.height)
    throw IndexOutOfRange("pixel out of bounds");
  const std::vector<float> amps = sorted_amplitudes(stack, cfg.threads);
  return gather_ensemble(stack, shp_members(stack, amps, x, y, cfg));
}

PipelineOutputs process_stack(const SlcStack& stack, const RunConfig& cfg) {
  cfg.validate();
  if (stack.n_acquisitions < 2) throw UsageError("stack needs N >= 2");
  if (cfg.reference >= stack.n_acquisitions)
    throw UsageError("reference acquisition out of range");
  if (cfg.shp_min <= stack.n_acquisitions)
    std::fprintf(stderr,
                 "warning: shp_min (%d) should exceed the number of acquisitions (%d)\n",
                 cfg.shp_min, stack.n_acquisitions);

  const int n = stack.n_acquisitions;
  const int p = cfg.reference;
  const std::size_t pixels = stack.band_size();
  const int n_methods = static_cast<int>(cfg.methods.size());

  PipelineOutputs out;
  out.width = stack.width;
  out.height = stack.height;
  out.n_acquisitions = n;

  out.maps.emplace_back("gamma_cp", std::vector<float>(pixels, 0.0f));
  std::vector<int> gof_map(n_methods), wishart_map(n_methods, -1), amb_map(n_methods, -1);
  for (int mi = 0; mi < n_methods; ++mi) {
    const std::string name = cfg.methods[mi].name();
    gof_map[mi] = static_cast<int>(out.maps.size());
    out.maps.emplace_back(name + "_gof", std::vector<float>(pixels, 0.0f));
    if (cfg.compute_wishart && cfg.methods[mi].scheme == WeightScheme::ML) {
      wishart_map[mi] = static_cast<int>(out.maps.size());
      out.maps.emplace_back(name + "_gof_wishart", std::vector<float>(pixels, 0.0f));
    }
    if (cfg.compute_ambiguity) {
      amb_map[mi] = static_cast<int>(out.maps.size());
      out.maps.emplace_back(name + "_amb", std::vector<float>(pixels, 0.0f));
    }
    out.phase_volumes.emplace_back(name, std::vector<float>(pixels * n, 0.0f));
    out.flag_masks.emplace_back(name, std::vector<std::uint8_t>(pixels, 0));
  }
  out.rejection_mask.assign(pixels, 0);
  out.error_codes.assign(pixels, 0);

  const std::vector<float> amps = sorted_amplitudes(stack, cfg.threads);

  parallel_for(static_cast<std::int64_t>(pixels), cfg.threads, [&](std::int64_t index) {
    const int x = static_cast<int>(index % stack.width);
    const int y = static_cast<int>(index / stack.width);

    // Original single-look phases, used whenever a pixel has no linked result.
    const auto passthrough = [&](int mi) {
      const std::complex<float> ref = stack.data[p * pixels + index];
      auto& volume = out.phase_volumes[mi].second;
      for (int band = 0; band < n; ++band) {
        const std::complex<float> v = stack.data[band * pixels + index];
        volume[band * pixels + index] =
            static_cast<float>(wrap_phase(std::arg(cdouble(v.real(), v.imag())) -
                                          std::arg(cdouble(ref.real(), ref.imag()))));
      }
    };

    const std::vector<std::size_t> members = shp_members(stack, amps, x, y, cfg);
    if (static_cast<int>(members.size()) <= cfg.shp_min) {
      out.rejection_mask[index] = 1;
      for (int mi = 0; mi < n_methods; ++mi) passthrough(mi);
      return;
    }

    std::optional<PhaseMagnitudePair> pair;
    std::optional<CoherenceMatrix> c;
    try {
      c = regularize(estimate_coherence(gather_ensemble(stack, members)), cfg.beta);
      pair = decompose(*c);
      if (n >= 3)
        out.maps[0].second[index] = static_cast<float>(closure_coefficient(*pair));
    } catch (const Error& e) {
      out.error_codes[index] = error_code_of(e);
      for (int mi = 0; mi < n_methods; ++mi) passthrough(mi);
      return;
    }

    for (int mi = 0; mi < n_methods; ++mi) {
      const MethodSpec& spec = cfg.methods[mi];
      try {
        const WeightMatrix w = build_weights(spec.scheme, *pair);
        LinkingResult res;
        ObjectiveBounds b1, b2;
        if (spec.method == Method::ED) {
          res = ed_link(w, *pair, p, cfg.compute_ambiguity);
          b1 = objective_bounds_ed(w, *pair, res.objective_primary);
          if (cfg.compute_ambiguity)
            b2 = objective_bounds_ed(w, *pair, res.objective_secondary);
        } else {
          const EigenInit einit = init_eigen(w, *pair, p);
          PhaseHistory init = einit.primary;
          if (cfg.pt_init == RunConfig::PtInit::Tridiagonal)
            init = init_tridiagonal(*pair, p);
          else if (cfg.pt_init == RunConfig::PtInit::SpanningTree)
            init = init_spanning_tree(*pair, p);
          res = pt_link(w, *pair, p, init, cfg.pt_solver);
          res.degenerate = einit.degenerate;
          if (cfg.compute_ambiguity) {
            const LinkingResult sec =
                pt_link_secondary(w, *pair, p, res.primary, einit.secondary);
            res.secondary = sec.secondary;
            res.objective_secondary = sec.objective_secondary;
            res.converged = res.converged && sec.converged;
          }
          b1 = objective_bounds_pt(w, *pair, res.primary);
          if (cfg.compute_ambiguity) b2 = objective_bounds_pt(w, *pair, *res.secondary);
        }

        auto& volume = out.phase_volumes[mi].second;
        for (int band = 0; band < n; ++band)
          volume[band * pixels + index] = static_cast<float>(res.primary.phases[band]);

        std::uint8_t flags = 0;
        if (!res.converged) flags |= kFlagNotConverged;
        if (res.degenerate || b1.degenerate) flags |= kFlagDegenerate;
        out.flag_masks[mi].second[index] = flags;

        const NoiseFloorModel& model = builtin_model(spec.method, spec.scheme);
        const double fit = normalized_fit(b1);
        out.maps[gof_map[mi]].second[index] =
            static_cast<float>(gamma_gof(fit, noise_floor(model, n)));
        if (wishart_map[mi] >= 0)
          out.maps[wishart_map[mi]].second[index] =
              static_cast<float>(gamma_gof_wishart(*c, *pair, res.primary));
        if (amb_map[mi] >= 0)
          out.maps[amb_map[mi]].second[index] = static_cast<float>(
              gamma_ambiguity(res, b1, b2, AmbiguityVariant::Auto, &model));
      } catch (const Error& e) {
        out.error_codes[index] = std::max(out.error_codes[index], error_code_of(e));
        passthrough(mi);
      }
    }
  });

  return out;
}

void write_outputs(const PipelineOutputs& out, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  const auto path_of = [&](const std::string& name) {
    return (fs::path(out_dir) / name).string();
  };

  std::ofstream manifest(path_of("manifest.txt"));
  if (!manifest) throw IoError("cannot write manifest in " + out_dir);
  manifest << "width=" << out.width << "\n"
           << "height=" << out.height << "\n"
           << "n_acquisitions=" << out.n_acquisitions << "\n";

  for (const auto& [name, values] : out.maps) {
    write_raster_f32(path_of(name + ".f32"), values);
    manifest << "map=" << name << ":" << name << ".f32\n";
  }
  write_raster_u8(path_of("rejection_mask.u8"), out.rejection_mask);
  manifest << "rejection_mask=rejection_mask.u8\n";
  write_raster_u8(path_of("error_codes.u8"), out.error_codes);
  manifest << "error_raster=error_codes.u8\n";
  for (const auto& [name, values] : out.phase_volumes) {
    write_raster_f32(path_of(name + "_phases.f32"), values);
    manifest << "volume=" << name << ":" << name << "_phases.f32\n";
  }
  for (const auto& [name, values] : out.flag_masks) {
    write_raster_u8(path_of(name + "_flags.u8"), values);
    manifest << "flags=" << name << ":" << name << "_flags.u8\n";
  }
}

namespace {

bool excluded(float v) { return v == 0.0f || v == 1.0f; }

}  // namespace

void export_histograms(const PipelineOutputs& out, int bins,
                       const std::string& hist_csv_path,
                       const std::string& scatter_csv_path) {
  if (bins < 1) throw UsageError("need at least one histogram bin");

  std::ofstream hist(hist_csv_path);
  if (!hist) throw IoError("cannot write " + hist_csv_path);
  hist << "coefficient,bin_index,bin_lo,bin_hi,count\n";
  hist.precision(9);
  for (const auto& [name, values] : out.maps) {
    std::vector<float> kept;
    kept.reserve(values.size());
    for (float v : values)
      if (!excluded(v)) kept.push_back(v);
    if (kept.empty()) continue;
    const auto [lo_it, hi_it] = std::minmax_element(kept.begin(), kept.end());
    const double lo = *lo_it, hi = *hi_it;
    std::vector<std::size_t> counts(bins, 0);
    for (float v : kept) {
      int bin = hi > lo ? static_cast<int>((v - lo) / (hi - lo) * bins) : 0;
      counts[std::clamp(bin, 0, bins - 1)]++;
    }
    for (int b = 0; b < bins; ++b) {
      const double width = (hi - lo) / bins;
      hist << name << "," << b << "," << lo + b * width << "," << lo + (b + 1) * width
           << "," << counts[b] << "\n";
    }
  }

  // (gof, amb) scatter pairs per method; a pixel enters only when both
  // coefficients exist and neither sits exactly at 0 or 1.
  std::ofstream scatter(scatter_csv_path);
  if (!scatter) throw IoError("cannot write " + scatter_csv_path);
  scatter << "method,gof,amb\n";
  scatter.precision(9);
  std::map<std::string, const std::vector<float>*> by_name;
  for (const auto& [name, values] : out.maps) by_name[name] = &values;
  for (const auto& [name, values] : out.maps) {
    const std::string suffix = "_gof";
    if (name.size() <= suffix.size() ||
        name.compare(name.size() - suffix.size(), suffix.size(), suffix) != 0)
      continue;
    const std::string method = name.substr(0, name.size() - suffix.size());
    const auto amb = by_name.find(method + "_amb");
    if (amb == by_name.end()) continue;
    const std::vector<float>& gof = values;
    const std::vector<float>& ambv = *amb->second;
    for (std::size_t i = 0; i < gof.size(); ++i)
      if (!excluded(gof[i]) && !excluded(ambv[i]))
        scatter << method << "," << gof[i] << "," << ambv[i] << "\n";
  }
}

void export_histograms_from_dir(const std::string& out_dir, int bins,
                                const std::string& hist_csv_path,
                                const std::string& scatter_csv_path) {
  namespace fs = std::filesystem;
  std::ifstream manifest((fs::path(out_dir) / "manifest.txt").string());
  if (!manifest) throw IoError("cannot read manifest in " + out_dir);

  PipelineOutputs out;
  std::string line;
  while (std::getline(manifest, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "width") out.width = std::stoi(value);
    else if (key == "height") out.height = std::stoi(value);
    else if (key == "n_acquisitions") out.n_acquisitions = std::stoi(value);
    else if (key == "map") {
      const auto colon = value.find(':');
      if (colon == std::string::npos) throw IoError("malformed manifest map line");
      out.maps.emplace_back(
          value.substr(0, colon),
          read_raster_f32((fs::path(out_dir) / value.substr(colon + 1)).string()));
    }
  }
  export_histograms(out, bins, hist_csv_path, scatter_csv_path);
}

}  // namespace phaselink
