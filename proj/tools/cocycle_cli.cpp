// Command-line driver: batch runs of the cocycle library with reproducible
// artifacts. Every run writes a manifest (resolved config, tool version,
// input hashes) plus CCF1 fields with JSON sidecars into the output
// directory.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cocycle/cocycle.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace cocycle;

namespace {

constexpr const char* kVersion = "1.0.0";

struct RunConfig {
  std::string command;
  json generator = {{"kind", "schrodinger"}, {"energy", 0.0}, {"coupling", 5.0}};
  double omega = kGoldenMean;
  int k = 10;
  int n_levels = 5;
  std::size_t grid = 256;
  std::string strategy = "fourier";
  bool scaling = true;
  unsigned threads = 1;
  fs::path out = "out";
  double bundle_tolerance = 1e-6;
  double straddle_threshold = 4.0;
  std::vector<std::size_t> bench_sizes = {256, 512, 1024, 2048, 4096};
  int bench_reps = 5;
  std::vector<fs::path> inputs;  // files referenced, for hashing
};

json config_json(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  j["generator"] = c.generator;
  j["omega"] = c.omega;
  j["k"] = c.k;
  j["n_levels"] = c.n_levels;
  j["grid"] = c.grid;
  j["strategy"] = c.strategy;
  j["scaling"] = c.scaling;
  j["threads"] = c.threads;
  j["out"] = c.out.string();
  j["bundle_tolerance"] = c.bundle_tolerance;
  j["straddle_threshold"] = c.straddle_threshold;
  j["bench_sizes"] = c.bench_sizes;
  j["bench_reps"] = c.bench_reps;
  return j;
}

Eigen::MatrixXd matrix_from_json(const json& m) {
  if (!m.is_array() || m.empty()) throw ConfigError("generator.matrix must be a nested array");
  const auto rows = static_cast<Eigen::Index>(m.size());
  const auto cols = static_cast<Eigen::Index>(m[0].size());
  Eigen::MatrixXd A(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(m[static_cast<std::size_t>(r)].size()) != cols)
      throw ConfigError("generator.matrix rows have unequal lengths");
    for (Eigen::Index c = 0; c < cols; ++c)
      A(r, c) = m[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)].get<double>();
  }
  return A;
}

MatrixField build_generator(RunConfig& cfg) {
  const json& g = cfg.generator;
  const std::string kind = g.value("kind", std::string("schrodinger"));
  GridSpec grid = GridSpec::dim1(cfg.grid);
  RotationVector w = RotationVector::dim1(cfg.omega);
  if (kind == "input") {
    if (!g.contains("path")) throw ConfigError("generator.kind=input requires generator.path");
    fs::path p = g["path"].get<std::string>();
    cfg.inputs.push_back(p);
    MatrixField f = io::read_ccf1(p);
    cfg.grid = f.grid().sizes[0];
    return f;
  }
  if (kind == "constant") return gen::make_constant(matrix_from_json(g.at("matrix")), grid);
  if (kind == "schrodinger")
    return gen::make_schrodinger(g.value("energy", 0.0), g.value("coupling", 5.0), grid);
  if (kind == "conjugated_constant")
    return gen::make_conjugated_constant(matrix_from_json(g.at("matrix")),
                                         g.value("frame_amplitude", 0.2), w, grid);
  if (kind == "nonorientable") return gen::make_nonorientable(g.value("a", 3.0), w, grid);
  if (kind == "near_constant")
    return gen::make_near_constant(matrix_from_json(g.at("matrix")), g.value("epsilon", 1e-3),
                                   g.value("seed", std::uint64_t{1}), grid);
  throw ConfigError("unknown generator.kind '" + kind +
                    "' (expected input|constant|schrodinger|conjugated_constant|nonorientable|"
                    "near_constant)");
}

void write_json(const fs::path& p, const json& j) {
  std::ofstream out(p);
  if (!out) throw ConfigError("cannot open " + p.string() + " for writing");
  out << j.dump(2) << "\n";
}

void write_manifest(const RunConfig& cfg, const std::vector<std::string>& artifacts) {
  json m;
  m["tool"] = "cocycle";
  m["version"] = kVersion;
  m["config"] = config_json(cfg);
  json hashes = json::object();
  for (const auto& p : cfg.inputs) hashes[p.string()] = io::file_hash(p);
  m["input_hashes"] = hashes;
  m["artifacts"] = artifacts;
  write_json(cfg.out / "manifest.json", m);
}

DiagnosticsSink jsonl_sink(std::ofstream& stream) {
  return [&stream](const StepDiagnostics& d) {
    json j;
    j["step"] = d.step;
    j["log_scale_increment"] = d.log_scale_increment;
    j["sup_norm"] = d.sup_norm;
    j["wall_seconds"] = d.wall_seconds;
    stream << j.dump() << "\n";
  };
}

json iteration_summary(const IterationResult& r) {
  json j;
  j["steps_n"] = r.steps_n;
  j["omega_eff"] = r.omega_eff.omega;
  j["log_scale"] = r.log_scale;
  j["sup_norm"] = r.generator.sup_norm();
  return j;
}

int run_iterate(RunConfig& cfg, bool cf_mode) {
  MatrixField M = build_generator(cfg);
  RotationVector w = RotationVector::dim1(cfg.omega);
  IterationStrategy strat = parse_strategy(cfg.strategy);
  std::ofstream diag(cfg.out / "diagnostics.jsonl");
  IterationResult res =
      cf_mode ? iterate_cf(to_spectral(M), w, cfg.n_levels, strat, cfg.scaling, 1000000,
                           jsonl_sink(diag))
              : iterate_fast(to_spectral(M), w, cfg.k, strat, cfg.scaling, jsonl_sink(diag));
  if (!res.generator.has_grid()) res.generator = to_grid(res.generator);
  io::write_ccf1(cfg.out / "generator.ccf1", res.generator);
  json side = iteration_summary(res);
  if (cf_mode) side["n_levels"] = cfg.n_levels;
  write_json(cfg.out / (cf_mode ? "cf.json" : "iterate.json"), side);
  write_manifest(cfg, {"generator.ccf1", cf_mode ? "cf.json" : "iterate.json",
                       "diagnostics.jsonl", "manifest.json"});
  return 0;
}

int run_bundle(RunConfig& cfg) {
  MatrixField M = build_generator(cfg);
  RotationVector w = RotationVector::dim1(cfg.omega);
  ExtractOptions opts;
  opts.strategy = parse_strategy(cfg.strategy);
  opts.tolerance = cfg.bundle_tolerance;
  BundleSection s = extract_unstable(M, w, cfg.k, opts);
  ScalarField res = invariance_residual(M, w, s);
  io::write_ccf1(cfg.out / "section.ccf1", s.m);
  io::write_ccf1(cfg.out / "lambda.ccf1", s.lambda);
  json side;
  side["orientable"] = s.orientable;
  side["k"] = cfg.k;
  double lam_min = 1e300, lam_max = -1e300, lam_log_mean = 0.0;
  for (std::size_t j = 0; j < s.lambda.nodes(); ++j) {
    const double v = s.lambda.value(j, 0, 0);
    lam_min = std::min(lam_min, v);
    lam_max = std::max(lam_max, v);
    lam_log_mean += std::log(std::abs(v));
  }
  side["lambda"] = {{"min", lam_min},
                    {"max", lam_max},
                    {"log_mean", lam_log_mean / static_cast<double>(s.lambda.nodes())}};
  double res_sum = 0.0;
  for (std::size_t j = 0; j < res.nodes(); ++j) res_sum += res.value(j, 0, 0);
  side["residual"] = {{"sup", res.sup_norm()},
                      {"mean", res_sum / static_cast<double>(res.nodes())}};
  side["section_stored_as"] = "DxD with the vector in column 0";
  write_json(cfg.out / "bundle.json", side);
  write_manifest(cfg, {"section.ccf1", "lambda.ccf1", "bundle.json", "manifest.json"});
  return 0;
}

int run_reduce(RunConfig& cfg) {
  MatrixField M = build_generator(cfg);
  RotationVector w = RotationVector::dim1(cfg.omega);
  ScalarField lambda(M.grid(), 1);
  if (M.dim() == 1) {
    lambda = M;  // scalar input is the multiplier itself
  } else {
    ExtractOptions opts;
    opts.strategy = parse_strategy(cfg.strategy);
    opts.tolerance = cfg.bundle_tolerance;
    BundleSection s = extract_unstable(M, w, cfg.k, opts);
    lambda = s.lambda;
  }
  ReducedForm r = reduce_rank1(lambda, w);
  io::write_ccf1(cfg.out / "p.ccf1", r.p);
  io::write_ccf1(cfg.out / "lambda.ccf1", lambda);
  json side;
  side["mu"] = r.mu;
  side["sign_character"] = r.sign_character == SignCharacter::Plus ? "+" : "-";
  side["min_divisor"] = r.diagnostics.min_divisor;
  side["divisor_floor"] = r.diagnostics.threshold;
  side["dropped_modes"] = r.diagnostics.dropped_modes;
  write_json(cfg.out / "reduce.json", side);
  write_manifest(cfg, {"p.ccf1", "lambda.ccf1", "reduce.json", "manifest.json"});
  return 0;
}

int run_detect(RunConfig& cfg) {
  MatrixField M = build_generator(cfg);
  RotationVector w = RotationVector::dim1(cfg.omega);
  // The straddle symptom lives in the orthogonal frame of the QR path: its
  // seams sharpen exponentially while the plain product telescopes smooth.
  QRState st = qr_initial(to_grid(to_spectral(M)), w);
  std::vector<MatrixField> history{st.qr.Q};
  for (int i = 0; i < cfg.k; ++i) {
    st = qr_double_step(st, parse_strategy(cfg.strategy), true);
    history.push_back(st.qr.Q);
  }
  StraddleOptions opts;
  opts.ratio_threshold = cfg.straddle_threshold;
  StraddleReport rep = detect_straddle(history, opts);
  io::write_ccf1(cfg.out / "derivative_growth.ccf1", rep.derivative_growth);
  json side;
  side["suspect_nodes"] = rep.suspect_nodes;
  side["severity"] = rep.severity;
  side["clean"] = rep.empty();
  side["k"] = cfg.k;
  side["ratio_threshold"] = opts.ratio_threshold;
  write_json(cfg.out / "detect.json", side);
  write_manifest(cfg, {"derivative_growth.ccf1", "detect.json", "manifest.json"});
  return 0;
}

double median_seconds(const std::function<void()>& fn, int reps) {
  fn();  // warmup
  std::vector<double> times;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  std::sort(times.begin(), times.end());
  return times[times.size() / 2];
}

// least-squares slope of y on x plus r^2
std::pair<double, double> fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  const double r_num = n * sxy - sx * sy;
  const double r_den = std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
  const double r = r_den > 0.0 ? r_num / r_den : 0.0;
  return {slope, r * r};
}

int run_bench(RunConfig& cfg) {
  RotationVector w = RotationVector::dim1(cfg.omega);
  std::ofstream csv(cfg.out / "bench.csv");
  csv << "strategy,N,median_seconds\n";
  json exponents = json::object();
  for (const std::string& strat_name : {"grid", "fourier", "spectral"}) {
    IterationStrategy strat = parse_strategy(strat_name);
    std::vector<double> log_n, log_t;
    for (std::size_t N : cfg.bench_sizes) {
      MatrixField M = to_spectral(gen::make_schrodinger(0.0, 1.2, GridSpec::dim1(N)));
      IterationResult state = initial_state(to_grid(M), w);
      const double t = median_seconds(
          [&] { (void)double_step(state, strat, true); }, cfg.bench_reps);
      csv << strat_name << "," << N << "," << t << "\n";
      log_n.push_back(std::log(static_cast<double>(N)));
      log_t.push_back(std::log(std::max(t, 1e-9)));
    }
    auto [slope, r2] = fit_slope(log_n, log_t);
    exponents[strat_name] = {{"exponent", slope}, {"r2", r2}};
  }

  // wall time of k doublings should be linear in k at fixed N
  std::ofstream kcsv(cfg.out / "bench_k.csv");
  kcsv << "k,total_seconds\n";
  std::vector<double> ks, ts;
  MatrixField M = to_spectral(gen::make_schrodinger(0.0, 1.2, GridSpec::dim1(cfg.grid)));
  for (int k = 4; k <= 14; ++k) {
    const double t = median_seconds(
        [&] { (void)iterate_fast(M, w, k, IterationStrategy::FourierDiag, true); },
        std::max(3, cfg.bench_reps / 2));
    kcsv << k << "," << t << "\n";
    ks.push_back(static_cast<double>(k));
    ts.push_back(t);
  }
  auto [kslope, kr2] = fit_slope(ks, ts);
  json side;
  side["product_exponents"] = exponents;
  side["doubling_in_k"] = {{"slope_seconds_per_step", kslope}, {"r2", kr2}, {"N", cfg.grid}};
  write_json(cfg.out / "bench.json", side);
  write_manifest(cfg, {"bench.csv", "bench_k.csv", "bench.json", "manifest.json"});
  return 0;
}

void load_config_file(RunConfig& cfg, const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config parse error in " + path.string() + ": " + e.what());
  }
  cfg.inputs.push_back(path);
  if (j.contains("generator")) cfg.generator = j["generator"];
  if (j.contains("omega")) cfg.omega = j["omega"].get<double>();
  if (j.contains("k")) cfg.k = j["k"].get<int>();
  if (j.contains("n_levels")) cfg.n_levels = j["n_levels"].get<int>();
  if (j.contains("grid")) cfg.grid = j["grid"].get<std::size_t>();
  if (j.contains("strategy")) cfg.strategy = j["strategy"].get<std::string>();
  if (j.contains("scaling")) cfg.scaling = j["scaling"].get<bool>();
  if (j.contains("threads")) cfg.threads = j["threads"].get<unsigned>();
  if (j.contains("out")) cfg.out = j["out"].get<std::string>();
  if (j.contains("bundle_tolerance")) cfg.bundle_tolerance = j["bundle_tolerance"].get<double>();
  if (j.contains("straddle_threshold"))
    cfg.straddle_threshold = j["straddle_threshold"].get<double>();
  if (j.contains("bench_sizes")) cfg.bench_sizes = j["bench_sizes"].get<std::vector<std::size_t>>();
  if (j.contains("bench_reps")) cfg.bench_reps = j["bench_reps"].get<int>();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quasi-periodic cocycle iteration toolkit"};
  app.set_version_flag("--version", std::string("cocycle ") + kVersion);
  app.require_subcommand(1);

  RunConfig cfg;
  std::string config_path, omega_str, strategy;
  std::optional<int> k_opt, levels_opt;
  std::optional<std::size_t> grid_opt;
  std::optional<unsigned> threads_opt;
  std::optional<std::string> out_opt;
  bool no_scaling = false;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file");
    sub->add_option("--omega", omega_str, "rotation number (real, or 'golden'/'silver')");
    sub->add_option("--k", k_opt, "number of doublings");
    sub->add_option("--levels", levels_opt, "continued-fraction levels (cf command)");
    sub->add_option("--grid", grid_opt, "grid size N (power of 2)");
    sub->add_option("--strategy", strategy, "grid|fourier|spectral");
    sub->add_flag("--no-scaling", no_scaling, "disable per-step renormalization");
    sub->add_option("--threads", threads_opt, "worker threads (0 = all cores)");
    sub->add_option("--out", out_opt, "output directory");
  };
  const std::pair<const char*, const char*> subs[] = {
      {"iterate", "k renormalization doublings, 2^k cocycle steps"},
      {"bundle", "extract the dominant rank-1 bundle and its multiplier"},
      {"reduce", "reduce the rank-1 multiplier to a constant"},
      {"cf", "iterate to a continued-fraction return time q_n"},
      {"detect", "scan the iteration history for localized derivative growth"},
      {"bench", "cost-scaling tables for the three product strategies"}};
  for (const auto& [name, desc] : subs) add_common(app.add_subcommand(name, desc));

  CLI11_PARSE(app, argc, argv);
  cfg.command = app.get_subcommands().front()->get_name();

  try {
    if (!config_path.empty()) load_config_file(cfg, config_path);
    if (!omega_str.empty()) {
      if (omega_str == "golden")
        cfg.omega = kGoldenMean;
      else if (omega_str == "silver")
        cfg.omega = kSilverMean;
      else {
        try {
          cfg.omega = std::stod(omega_str);
        } catch (const std::exception&) {
          throw ConfigError("invalid value for --omega: '" + omega_str + "'");
        }
      }
    }
    if (k_opt) cfg.k = *k_opt;
    if (levels_opt) cfg.n_levels = *levels_opt;
    if (grid_opt) cfg.grid = *grid_opt;
    if (!strategy.empty()) cfg.strategy = strategy;
    if (no_scaling) cfg.scaling = false;
    if (threads_opt) cfg.threads = *threads_opt;
    if (out_opt) cfg.out = *out_opt;

    if (cfg.k < 0) throw ConfigError("invalid value for --k: must be >= 0");
    (void)parse_strategy(cfg.strategy);  // validate early
    set_thread_count(cfg.threads);
    fs::create_directories(cfg.out);

    if (cfg.command == "iterate") return run_iterate(cfg, false);
    if (cfg.command == "cf") return run_iterate(cfg, true);
    if (cfg.command == "bundle") return run_bundle(cfg);
    if (cfg.command == "reduce") return run_reduce(cfg);
    if (cfg.command == "detect") return run_detect(cfg);
    if (cfg.command == "bench") return run_bench(cfg);
    throw ConfigError("unknown command " + cfg.command);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const ResonanceError& e) {
    std::cerr << "resonance error: " << e.what() << "\n";
    return 3;
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
