// Command-line driver: synthetic scene generation, noise-floor Monte Carlo,
// pixel-wise phase linking and histogram export.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "phaselink/pipeline.hpp"
#include "phaselink/rng.hpp"
#include "phaselink/simulator.hpp"

namespace fs = std::filesystem;
using namespace phaselink;

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, sep))
    if (!item.empty()) parts.push_back(item);
  return parts;
}

std::vector<MethodSpec> parse_methods(const std::string& list) {
  std::vector<MethodSpec> methods;
  for (const std::string& name : split(list, ',')) methods.push_back(MethodSpec::parse(name));
  if (methods.empty()) throw UsageError("no methods given");
  return methods;
}

RVector parse_phases(const std::string& spec, int n, std::uint64_t scene_seed) {
  const auto parts = split(spec, ':');
  if (parts[0] == "zero") return RVector::Zero(n);
  if (parts[0] == "linear") {
    if (parts.size() != 2) throw UsageError("linear phases need a slope: linear:<rad>");
    const double slope = std::stod(parts[1]);
    RVector theta(n);
    for (int i = 0; i < n; ++i) theta[i] = wrap_phase(slope * i);
    return theta;
  }
  if (parts[0] == "random") {
    const std::uint64_t salt = parts.size() > 1 ? std::stoull(parts[1]) : 0;
    Rng rng(subseed(scene_seed, 0x70686173, salt));  // phase stream
    RVector theta(n);
    for (int i = 0; i < n; ++i) theta[i] = rng.uniform_angle();
    return theta;
  }
  throw UsageError("unknown phase spec '" + spec + "' (zero, linear:<rad>, random[:salt])");
}

CovarianceSpec parse_region_covariance(const std::vector<std::string>& fields, int n,
                                       std::uint64_t scene_seed) {
  CovarianceSpec cov;
  cov.n = n;
  const std::string& kind = fields[4];
  if (kind == "pure_noise") cov.kind = CovarianceSpec::Kind::PureNoise;
  else if (kind == "rank_one") cov.kind = CovarianceSpec::Kind::RankOnePlusNoise;
  else if (kind == "exp_decorrelation") cov.kind = CovarianceSpec::Kind::ExpDecorrelation;
  else throw UsageError("unknown covariance kind '" + kind + "'");

  for (std::size_t i = 5; i < fields.size(); ++i) {
    const auto eq = fields[i].find('=');
    if (eq == std::string::npos)
      throw UsageError("malformed region parameter '" + fields[i] + "'");
    const std::string key = fields[i].substr(0, eq);
    const std::string value = fields[i].substr(eq + 1);
    if (key == "gamma0") cov.gamma0 = std::stod(value);
    else if (key == "tau") cov.tau_decorr = std::stod(value);
    else if (key == "eps") cov.epsilon = std::stod(value);
    else if (key == "phases") cov.true_phases = parse_phases(value, n, scene_seed);
    else throw UsageError("unknown region parameter '" + key + "'");
  }
  return cov;
}

SceneSpec read_scene_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scene file " + path);

  SceneSpec spec;
  std::vector<std::string> region_lines;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError("malformed scene line: " + line);
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "width") spec.width = std::stoi(value);
    else if (key == "height") spec.height = std::stoi(value);
    else if (key == "n_acquisitions") spec.n_acquisitions = std::stoi(value);
    else if (key == "seed") spec.seed = std::stoull(value);
    else if (key == "region") region_lines.push_back(value);
    else throw UsageError("unknown scene key '" + key + "'");
  }
  for (const std::string& region : region_lines) {
    const auto fields = split(region, ',');
    if (fields.size() < 5)
      throw UsageError("region needs x0,y0,width,height,kind[,key=value...]");
    Region r;
    r.x0 = std::stoi(fields[0]);
    r.y0 = std::stoi(fields[1]);
    r.width = std::stoi(fields[2]);
    r.height = std::stoi(fields[3]);
    r.covariance = parse_region_covariance(fields, spec.n_acquisitions, spec.seed);
    spec.regions.push_back(r);
  }
  return spec;
}

// Vertical noise / decorrelated / rank-one bands; the standard verification
// scene.
SceneSpec three_region_scene(int width, int height, int n, std::uint64_t seed) {
  SceneSpec spec;
  spec.width = width;
  spec.height = height;
  spec.n_acquisitions = n;
  spec.seed = seed;

  const int w1 = width / 3, w2 = width / 3, w3 = width - w1 - w2;
  Region noise{0, 0, w1, height, {}};
  noise.covariance.kind = CovarianceSpec::Kind::PureNoise;
  noise.covariance.n = n;

  Region decorrelated{w1, 0, w2, height, {}};
  decorrelated.covariance.kind = CovarianceSpec::Kind::ExpDecorrelation;
  decorrelated.covariance.n = n;
  decorrelated.covariance.gamma0 = 0.8;
  decorrelated.covariance.tau_decorr = 3.0;
  decorrelated.covariance.true_phases = parse_phases("linear:0.35", n, seed);

  Region rank_one{w1 + w2, 0, w3, height, {}};
  rank_one.covariance.kind = CovarianceSpec::Kind::RankOnePlusNoise;
  rank_one.covariance.n = n;
  rank_one.covariance.epsilon = 0.02;
  rank_one.covariance.true_phases = parse_phases("random:1", n, seed);

  spec.regions = {noise, decorrelated, rank_one};
  return spec;
}

int run(int argc, char** argv) {
  CLI::App app{"Distributed-scatterer phase linking with quality coefficients"};
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Render a synthetic SLC stack");
  std::string sim_out, sim_truth, sim_scene, sim_preset;
  int sim_width = 256, sim_height = 256, sim_n = 20, sim_threads = 0;
  std::uint64_t sim_seed = 1;
  simulate->add_option("--out", sim_out, "Output stack header path (.hdr)")->required();
  simulate->add_option("--truth", sim_truth, "Ground-truth CSV path (default: <out>.truth.csv)");
  simulate->add_option("--scene", sim_scene, "Scene description file");
  simulate->add_option("--preset", sim_preset, "Built-in scene: three-region");
  simulate->add_option("--width", sim_width, "Preset scene width");
  simulate->add_option("--height", sim_height, "Preset scene height");
  simulate->add_option("--n", sim_n, "Preset acquisition count");
  simulate->add_option("--seed", sim_seed, "Preset scene seed");
  simulate->add_option("--threads", sim_threads, "Worker threads (0: all cores)");

  // noisefloor
  auto* noisefloor = app.add_subcommand("noisefloor", "Monte-Carlo noise-floor estimation");
  std::string nf_sizes = "20,25,30,35,40,45,50,55,60,65,70,75,80,85,90,95";
  std::string nf_methods = "pt-ew,pt-cw,pt-ml,ed-ew,ed-cw,ed-ml";
  std::string nf_points = "noise_points.csv", nf_fit = "noise_fit.csv";
  int nf_m = 10000, nf_k = 200, nf_threads = 0;
  std::uint64_t nf_seed = 1;
  double nf_beta = 1e-4;
  noisefloor->add_option("--stack-sizes", nf_sizes, "Comma-separated N values");
  noisefloor->add_option("--ensemble-size", nf_m, "Samples per coherence estimate (M)");
  noisefloor->add_option("--n-ensembles", nf_k, "Independent ensembles per N (K)");
  noisefloor->add_option("--seed", nf_seed, "Base seed");
  noisefloor->add_option("--methods", nf_methods, "Comma-separated method list");
  noisefloor->add_option("--beta", nf_beta, "Spectral regularization");
  noisefloor->add_option("--threads", nf_threads, "Worker threads (0: all cores)");
  noisefloor->add_option("--out-points", nf_points, "Per-N estimates CSV");
  noisefloor->add_option("--out-fit", nf_fit, "Fitted parameters CSV");

  // link
  auto* link = app.add_subcommand("link", "Pixel-wise phase linking of a stack");
  link->set_config("--config", "", "Config file mirroring the flags (flags win)");
  std::string link_stack, link_out_dir;
  std::string link_methods = "pt-ew,pt-cw,pt-ml,ed-ew,ed-cw,ed-ml";
  std::string link_solver = "prcg", link_init = "eigen";
  RunConfig cfg;
  bool no_ambiguity = false, no_wishart = false;
  link->add_option("--stack", link_stack, "Stack header path")->required();
  link->add_option("--out-dir", link_out_dir, "Output directory")->required();
  link->add_option("--methods", link_methods, "Comma-separated method list");
  link->add_option("--window", cfg.window, "SHP window side (odd)");
  link->add_option("--shp-alpha", cfg.shp_alpha, "Kuiper significance level");
  link->add_option("--shp-min", cfg.shp_min, "Minimum SHP count");
  link->add_option("--beta", cfg.beta, "Spectral regularization");
  link->add_option("--reference", cfg.reference, "Reference acquisition p");
  link->add_option("--threads", cfg.threads, "Worker threads (0: all cores)");
  link->add_option("--pt-solver", link_solver, "prcg or jacobi");
  link->add_option("--pt-init", link_init, "eigen, tridiagonal or spanning-tree");
  link->add_flag("--four-connected", cfg.four_connected, "4-connected SHP components");
  link->add_flag("--no-ambiguity", no_ambiguity, "Skip the ambiguity coefficient");
  link->add_flag("--no-wishart", no_wishart, "Skip the Wishart coefficient");

  // histogram
  auto* histogram = app.add_subcommand("histogram", "Histogram/scatter CSV from a link run");
  std::string hist_dir, hist_out = "histograms.csv", scatter_out = "scatter.csv";
  int bins = 50;
  histogram->add_option("--in-dir", hist_dir, "Directory written by `link`")->required();
  histogram->add_option("--bins", bins, "Histogram bin count");
  histogram->add_option("--out-hist", hist_out, "Histogram CSV path");
  histogram->add_option("--out-scatter", scatter_out, "Scatter CSV path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (*simulate) {
    SceneSpec spec;
    if (!sim_scene.empty()) {
      spec = read_scene_file(sim_scene);
    } else if (sim_preset == "three-region") {
      spec = three_region_scene(sim_width, sim_height, sim_n, sim_seed);
    } else {
      throw UsageError("give --scene <file> or --preset three-region");
    }
    spec.threads = sim_threads;
    if (sim_truth.empty()) sim_truth = sim_out + ".truth.csv";
    write_scene(render_scene(spec), sim_out, sim_truth);
    std::cout << "wrote " << sim_out << " and " << sim_truth << "\n";
  }

  if (*noisefloor) {
    NoiseRunConfig nf;
    for (const std::string& s : split(nf_sizes, ',')) nf.stack_sizes.push_back(std::stoi(s));
    nf.ensemble_size = nf_m;
    nf.n_ensembles = nf_k;
    nf.seed = nf_seed;
    nf.beta = nf_beta;
    nf.threads = nf_threads;
    nf.methods = parse_methods(nf_methods);

    const std::vector<NoisePoint> points = simulate_noise_points(nf);
    std::ofstream out(nf_points);
    if (!out) throw IoError("cannot write " + nf_points);
    out << "method,scheme,N,mean_F,stderr\n";
    out.precision(12);
    for (const NoisePoint& p : points)
      out << to_string(p.method.method) << "," << to_string(p.method.scheme) << ","
          << p.n << "," << p.mean_f << "," << p.stderr_f << "\n";

    std::ofstream fit(nf_fit);
    if (!fit) throw IoError("cannot write " + nf_fit);
    fit << "method,scheme,a,b,c,nrmse\n";
    fit.precision(12);
    for (const MethodSpec& method : nf.methods) {
      std::vector<NoisePoint> subset;
      for (const NoisePoint& p : points)
        if (p.method == method) subset.push_back(p);
      try {
        const NoiseFloorModel model = fit_rational(subset);
        fit << to_string(model.method) << "," << to_string(model.scheme) << ","
            << model.a << "," << model.b << "," << model.c << "," << model.nrmse << "\n";
      } catch (const RankDeficient& e) {
        std::cerr << "skipping fit for " << method.name() << ": " << e.what() << "\n";
      }
    }
    std::cout << "wrote " << nf_points << " and " << nf_fit << "\n";
  }

  if (*link) {
    cfg.methods = parse_methods(link_methods);
    cfg.compute_ambiguity = !no_ambiguity;
    cfg.compute_wishart = !no_wishart;
    if (link_solver == "prcg") cfg.pt_solver = PtSolver::PRCG;
    else if (link_solver == "jacobi") cfg.pt_solver = PtSolver::Jacobi;
    else throw UsageError("unknown solver '" + link_solver + "'");
    if (link_init == "eigen") cfg.pt_init = RunConfig::PtInit::Eigen;
    else if (link_init == "tridiagonal") cfg.pt_init = RunConfig::PtInit::Tridiagonal;
    else if (link_init == "spanning-tree") cfg.pt_init = RunConfig::PtInit::SpanningTree;
    else throw UsageError("unknown initializer '" + link_init + "'");

    const SlcStack stack = read_stack(link_stack);
    const PipelineOutputs outputs = process_stack(stack, cfg);
    write_outputs(outputs, link_out_dir);

    std::size_t rejected = 0, errors = 0;
    for (std::uint8_t r : outputs.rejection_mask) rejected += r;
    for (std::uint8_t e : outputs.error_codes) errors += e != 0;
    const ClampCounters clamps = clamp_counters();
    std::cout << "processed " << stack.width << "x" << stack.height << " pixels, "
              << rejected << " rejected, " << errors << " with errors, clamps: fit="
              << clamps.normalized_fit << " gof=" << clamps.gof << " wishart="
              << clamps.wishart << " amb=" << clamps.ambiguity << "\n"
              << "outputs in " << link_out_dir << "\n";
  }

  if (*histogram) {
    export_histograms_from_dir(hist_dir, bins, hist_out, scatter_out);
    std::cout << "wrote " << hist_out << " and " << scatter_out << "\n";
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
