#include "lpbesov/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <vector>

#include <CLI11.hpp>

#include "lpbesov/besov.hpp"
#include "lpbesov/calculus.hpp"
#include "lpbesov/error.hpp"
#include "lpbesov/filters.hpp"
#include "lpbesov/operator.hpp"
#include "lpbesov/report.hpp"
#include "parse_util.hpp"

namespace lpbesov::cli {

namespace {

struct RunConfig {
  std::string command;

  std::string operator_path;
  std::string operator_format = "matrix-market";
  std::string generator;
  int size = 0;
  double shift = 0.0;
  double symmetry_tol = kDefaultSymmetryTol;
  double eigen_tol = kDefaultEigenTol;

  std::vector<std::string> signal_paths;
  std::vector<int> eigenvectors;
  int random_count = 0;
  std::uint64_t seed = 0;
  std::vector<double> band;  // empty or {a, b}

  double alpha = 1.0;
  std::string q = "2";
  int r = 0;
  int s_points = kDefaultSPoints;
  double s_min = 0.0;  // 0 selects the default
  int tau_samples = kDefaultTauSamples;
  double sharpness = kDefaultSharpness;
  double semigroup_c = kDefaultSemigroupConstant;
  bool experimental = false;

  std::string backend = "exact";
  int degree = kDefaultChebyshevDegree;
  int grid_points = 10000;

  std::string output;
  std::string output_dir;
  std::string csv;
  std::string config_path;
};

double parse_q(const std::string& text) {
  const std::string lower = detail::lower(detail::trim(text));
  if (lower == "inf" || lower == "infinity" || lower == "+inf") return std::numeric_limits<double>::infinity();
  return detail::parse_double(lower, 0);
}

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

Json echo_config(const RunConfig& cfg) {
  Json j;
  j["command"] = cfg.command;
  Json op;
  if (!cfg.generator.empty()) {
    op["generator"] = cfg.generator;
    op["size"] = cfg.size;
  } else {
    op["path"] = cfg.operator_path;
    op["format"] = cfg.operator_format;
  }
  op["shift"] = cfg.shift;
  op["symmetry_tol"] = cfg.symmetry_tol;
  op["eigen_tol"] = cfg.eigen_tol;
  j["operator"] = std::move(op);
  Json sig;
  sig["paths"] = cfg.signal_paths;
  sig["eigenvectors"] = cfg.eigenvectors;
  sig["random"] = cfg.random_count;
  sig["seed"] = cfg.seed;
  sig["band"] = cfg.band;
  j["signals"] = std::move(sig);
  Json params;
  params["alpha"] = cfg.alpha;
  params["q"] = cfg.q;
  params["r"] = cfg.r;
  params["s_points"] = cfg.s_points;
  params["s_min"] = cfg.s_min;
  params["tau_samples"] = cfg.tau_samples;
  params["semigroup_c"] = cfg.semigroup_c;
  params["experimental"] = cfg.experimental;
  j["params"] = std::move(params);
  j["window_sharpness"] = cfg.sharpness;
  j["backend"] = cfg.backend;
  j["degree"] = cfg.degree;
  j["grid_points"] = cfg.grid_points;
  return j;
}

// Config file keys mirror the long flag names with '-' replaced by '_'.
void apply_config_file(RunConfig& cfg, const CLI::App& app) {
  if (cfg.config_path.empty()) return;
  Json file;
  try {
    file = Json::parse(detail::read_file(cfg.config_path));
  } catch (const Json::exception& e) {
    throw ParseError("config file '" + cfg.config_path + "': " + e.what());
  }
  if (!file.is_object()) throw ParseError("config file must hold a JSON object");

  using Setter = std::function<void(const Json&)>;
  const std::map<std::string, std::pair<std::string, Setter>> table = {
      {"operator", {"--operator", [&](const Json& v) { cfg.operator_path = v.get<std::string>(); }}},
      {"format", {"--format", [&](const Json& v) { cfg.operator_format = v.get<std::string>(); }}},
      {"generate", {"--generate", [&](const Json& v) { cfg.generator = v.get<std::string>(); }}},
      {"size", {"--size", [&](const Json& v) { cfg.size = v.get<int>(); }}},
      {"shift", {"--shift", [&](const Json& v) { cfg.shift = v.get<double>(); }}},
      {"symmetry_tol", {"--symmetry-tol", [&](const Json& v) { cfg.symmetry_tol = v.get<double>(); }}},
      {"eigen_tol", {"--eigen-tol", [&](const Json& v) { cfg.eigen_tol = v.get<double>(); }}},
      {"signal", {"--signal", [&](const Json& v) { cfg.signal_paths = v.get<std::vector<std::string>>(); }}},
      {"eigenvector", {"--eigenvector", [&](const Json& v) { cfg.eigenvectors = v.get<std::vector<int>>(); }}},
      {"random", {"--random", [&](const Json& v) { cfg.random_count = v.get<int>(); }}},
      {"seed", {"--seed", [&](const Json& v) { cfg.seed = v.get<std::uint64_t>(); }}},
      {"band", {"--band", [&](const Json& v) { cfg.band = v.get<std::vector<double>>(); }}},
      {"alpha", {"--alpha", [&](const Json& v) { cfg.alpha = v.get<double>(); }}},
      {"q", {"--q", [&](const Json& v) { cfg.q = v.is_string() ? v.get<std::string>() : v.dump(); }}},
      {"r", {"--r", [&](const Json& v) { cfg.r = v.get<int>(); }}},
      {"s_points", {"--s-points", [&](const Json& v) { cfg.s_points = v.get<int>(); }}},
      {"s_min", {"--s-min", [&](const Json& v) { cfg.s_min = v.get<double>(); }}},
      {"tau_samples", {"--tau-samples", [&](const Json& v) { cfg.tau_samples = v.get<int>(); }}},
      {"sharpness", {"--sharpness", [&](const Json& v) { cfg.sharpness = v.get<double>(); }}},
      {"semigroup_c", {"--semigroup-c", [&](const Json& v) { cfg.semigroup_c = v.get<double>(); }}},
      {"experimental", {"--experimental", [&](const Json& v) { cfg.experimental = v.get<bool>(); }}},
      {"backend", {"--backend", [&](const Json& v) { cfg.backend = v.get<std::string>(); }}},
      {"degree", {"--degree", [&](const Json& v) { cfg.degree = v.get<int>(); }}},
      {"grid_points", {"--grid-points", [&](const Json& v) { cfg.grid_points = v.get<int>(); }}},
      {"output", {"--output", [&](const Json& v) { cfg.output = v.get<std::string>(); }}},
      {"output_dir", {"--output-dir", [&](const Json& v) { cfg.output_dir = v.get<std::string>(); }}},
      {"csv", {"--csv", [&](const Json& v) { cfg.csv = v.get<std::string>(); }}},
  };
  for (const auto& [key, value] : file.items()) {
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError("config file: unknown key '" + key + "'");
    if (app.count(it->second.first) > 0) continue;  // flags win
    try {
      it->second.second(value);
    } catch (const Json::exception&) {
      throw ConfigError("config file: key '" + key + "' has the wrong type");
    }
  }
}

Operator build_operator(const RunConfig& cfg, Json& provenance) {
  std::optional<Operator> op;
  if (!cfg.generator.empty()) {
    if (!cfg.operator_path.empty()) throw ConfigError("give either --operator or --generate, not both");
    op = build_laplacian(parse_laplacian_kind(cfg.generator), cfg.size);
    provenance["source"] = "generator";
    provenance["generator"] = cfg.generator;
    provenance["size"] = cfg.size;
  } else {
    if (cfg.operator_path.empty()) throw ConfigError("no operator: pass --operator PATH or --generate KIND");
    if (!std::filesystem::exists(cfg.operator_path)) {
      throw ConfigError("operator file '" + cfg.operator_path + "' does not exist");
    }
    op = load_operator(cfg.operator_path, parse_operator_format(cfg.operator_format),
                       LoadOptions{cfg.symmetry_tol, cfg.eigen_tol});
    provenance["source"] = "file";
    provenance["path"] = cfg.operator_path;
    provenance["format"] = cfg.operator_format;
  }
  if (cfg.shift != 0.0) op = op->shifted(cfg.shift);
  provenance["shift"] = cfg.shift;
  provenance["dimension"] = op->dimension();
  provenance["storage"] = std::string(to_string(op->storage()));
  return std::move(*op);
}

std::vector<Signal> build_signals(const RunConfig& cfg, const Operator& op, const EigenDecomposition* decomp,
                                  Json& provenance) {
  std::vector<Signal> signals;
  const Eigen::Index n = op.dimension();
  for (const auto& path : cfg.signal_paths) {
    if (!std::filesystem::exists(path)) throw ConfigError("signal file '" + path + "' does not exist");
    auto signal = load_signal(path);
    if (signal.values.size() != n) {
      throw ConfigError("signal '" + path + "' has length " + std::to_string(signal.values.size()) +
                        ", operator dimension is " + std::to_string(n));
    }
    provenance.push_back({{"label", signal.label}, {"source", "file"}, {"path", path}});
    signals.push_back(std::move(signal));
  }
  for (int k : cfg.eigenvectors) {
    if (!decomp) throw ConfigError("eigenvector signals need the exact backend");
    if (k < 0 || k >= n) throw ConfigError("eigenvector index " + std::to_string(k) + " out of range");
    Signal signal{decomp->eigenvectors.col(k), "eigenvector:" + std::to_string(k)};
    provenance.push_back({{"label", signal.label},
                          {"source", "eigenvector"},
                          {"index", k},
                          {"eigenvalue", decomp->eigenvalues[k]}});
    signals.push_back(std::move(signal));
  }

  int random_count = cfg.random_count;
  if (signals.empty() && random_count == 0) random_count = 1;
  if (random_count < 0) throw ConfigError("--random must be >= 0");
  if (!cfg.band.empty()) {
    if (cfg.band.size() != 2) throw ConfigError("--band needs exactly two values a,b");
    if (!decomp) throw ConfigError("bandlimited signals need the exact backend");
  }
  std::mt19937_64 engine(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int i = 0; i < random_count; ++i) {
    Vector values(n);
    for (Eigen::Index k = 0; k < n; ++k) values[k] = normal(engine);
    std::string label = "random:" + std::to_string(cfg.seed) + ":" + std::to_string(i);
    Json record = {{"label", ""}, {"source", "random"}, {"seed", cfg.seed}, {"index", i}};
    if (!cfg.band.empty()) {
      values = pw_project(*decomp, values, cfg.band[0], cfg.band[1]);
      label = "bandlimited:" + std::to_string(cfg.seed) + ":" + std::to_string(i);
      record["band"] = cfg.band;
    }
    record["label"] = label;
    provenance.push_back(std::move(record));
    signals.push_back({std::move(values), std::move(label)});
  }
  return signals;
}

BesovParams besov_params(const RunConfig& cfg) {
  BesovParams params;
  params.alpha = cfg.alpha;
  params.q = parse_q(cfg.q);
  params.r = cfg.r;
  params.s_points = cfg.s_points;
  if (cfg.s_min != 0.0) params.s_min = cfg.s_min;
  params.tau_samples = cfg.tau_samples;
  params.experimental = cfg.experimental;
  params.semigroup_c = cfg.semigroup_c;
  return params;
}

std::vector<double> dyadic_s_values() {
  std::vector<double> s;
  for (int k = 0; k <= 10; ++k) s.push_back(std::ldexp(1.0, -k));
  return s;
}

struct Context {
  const RunConfig& cfg;
  Operator op;
  std::optional<EigenDecomposition> decomp;
  double bound = 0.0;
  FilterBank bank;
  std::vector<Signal> signals;
};

Json summarize_ratios(const std::vector<EquivalenceReport>& reports) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  bool all_finite = true;
  int divergent = 0;
  for (const auto& r : reports) {
    lo = std::min(lo, r.ratio);
    hi = std::max(hi, r.ratio);
    all_finite = all_finite && std::isfinite(r.integral_side) && std::isfinite(r.dyadic_side);
    if (r.flagged()) ++divergent;
  }
  Json j;
  j["signals"] = reports.size();
  j["min_ratio"] = finite_or_tag(lo);
  j["max_ratio"] = finite_or_tag(hi);
  j["ratio_spread"] = finite_or_tag(lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity());
  j["all_finite"] = all_finite;
  j["divergent_signals"] = divergent;
  return j;
}

void run_decompose(Context& ctx, Json& results) {
  const bool exact = ctx.decomp.has_value();
  Json per_signal = Json::array();
  for (std::size_t i = 0; i < ctx.signals.size(); ++i) {
    const auto& signal = ctx.signals[i];
    const BandComponents bands = exact ? filter_bank_apply(*ctx.decomp, ctx.bank, signal.values)
                                       : filter_bank_apply_chebyshev(ctx.op, ctx.bank, signal.values, ctx.cfg.degree);
    const Vector rebuilt = exact ? calderon_reconstruct(*ctx.decomp, ctx.bank, signal.values)
                                 : calderon_reconstruct_chebyshev(ctx.op, ctx.bank, signal.values, ctx.cfg.degree);
    const double norm = signal.values.norm();
    Json entry;
    entry["label"] = signal.label;
    entry["bands"] = to_json(bands);
    entry["reconstruction_error"] = finite_or_tag(norm > 0.0 ? (rebuilt - signal.values).norm() / norm : 0.0);
    entry["energy_defect"] = finite_or_tag(norm > 0.0 ? std::abs(bands.energy() - norm * norm) / (norm * norm) : 0.0);
    per_signal.push_back(std::move(entry));

    if (!ctx.cfg.csv.empty()) {
      std::ostringstream csv;
      write_bands_csv(csv, bands);
      std::filesystem::path path = ctx.cfg.csv;
      if (ctx.signals.size() > 1) {
        path.replace_filename(path.stem().string() + "_" + std::to_string(i) + path.extension().string());
      }
      write_file_atomic(path, csv.str());
    }
  }
  results["signals"] = std::move(per_signal);
}

void run_verify_frame(Context& ctx, Json& results) {
  results["max_deviation"] = finite_or_tag(verify_partition(ctx.bank, ctx.cfg.grid_points));
  results["grid_points"] = ctx.cfg.grid_points;
  results["grid_upper"] = ctx.bank.lambda_cap();
  if (!ctx.cfg.csv.empty()) {
    std::ostringstream csv;
    write_window_csv(csv, ctx.bank, std::min(ctx.cfg.grid_points, 2001), std::ldexp(1.0, ctx.bank.max_level() + 1));
    write_file_atomic(ctx.cfg.csv, csv.str());
  }
}

void run_besov(Context& ctx, Json& results) {
  const BesovParams params = besov_params(ctx.cfg);
  const auto warnings = params.validate(false);
  BesovParams resolved = params;
  resolved.r = params.order();
  if (!resolved.s_min) resolved.s_min = std::ldexp(1.0, -(ctx.bank.max_level() + 4));
  results["params"] = to_json(resolved);
  results["warnings"] = warnings;
  Json per_signal = Json::array();
  for (const auto& signal : ctx.signals) {
    BesovNorms norms;
    if (ctx.decomp) {
      norms.integral = besov_seminorm_integral(*ctx.decomp, signal.values, resolved);
      norms.dyadic = besov_norm_dyadic(*ctx.decomp, ctx.bank, signal.values, resolved);
    } else {
      norms = besov_norms_chebyshev(ctx.op, ctx.bank, signal.values, resolved, ctx.cfg.degree);
    }
    const double norm = signal.values.norm();
    per_signal.push_back({{"label", signal.label},
                          {"signal_norm", norm},
                          {"integral_side", finite_or_tag(norm + norms.integral.value)},
                          {"dyadic_side", finite_or_tag(norms.dyadic.total)},
                          {"integral", to_json(norms.integral)},
                          {"dyadic", to_json(norms.dyadic)}});
  }
  results["signals"] = std::move(per_signal);
}

void run_equivalence(Context& ctx, Json& results, std::vector<EquivalenceReport>& reports) {
  const BesovParams params = besov_params(ctx.cfg);
  params.validate(true);
  Json per_signal = Json::array();
  for (const auto& signal : ctx.signals) {
    reports.push_back(equivalence_report(*ctx.decomp, ctx.bank, signal, params));
    per_signal.push_back(to_json(reports.back()));
  }
  results["summary"] = summarize_ratios(reports);
  results["reports"] = std::move(per_signal);
  if (!ctx.cfg.csv.empty()) {
    std::ostringstream csv;
    write_equivalence_csv(csv, reports);
    write_file_atomic(ctx.cfg.csv, csv.str());
  }
}

void run_diagnostics(Context& ctx, Json& results) {
  const BesovParams params = besov_params(ctx.cfg);
  results["warnings"] = params.validate(false);
  BesovParams resolved = params;
  resolved.r = params.order();
  const int r = resolved.order();
  const double c = resolved.semigroup_c;
  const std::vector<double> spectrum(ctx.decomp->eigenvalues.data(),
                                     ctx.decomp->eigenvalues.data() + ctx.decomp->eigenvalues.size());

  Json norms = Json::array();
  for (int j = 0; j <= ctx.bank.max_level(); ++j) {
    for (double s : dyadic_s_values()) {
      Json row = to_json(filtered_operator_norm(spectrum, ctx.bank, j, r, s, c));
      row["level"] = j;
      row["r"] = r;
      row["s"] = s;
      norms.push_back(std::move(row));
    }
  }
  results["filtered_operator_norms"] = std::move(norms);

  const GFunctionParams g_params = GFunctionParams::defaults(resolved);
  Json g_table = Json::array();
  for (int j = 0; j <= ctx.bank.max_level(); ++j) {
    const double lambda = std::ldexp(1.0, j);
    g_table.push_back({{"lambda", lambda}, {"G", finite_or_tag(compute_G(g_params, lambda))}});
  }
  results["g_function"] = {{"n", g_params.n}, {"alpha", g_params.alpha}, {"r", g_params.r}, {"values", g_table}};

  const LemmaWeights weights = LemmaWeights::defaults(resolved);
  results["lemma_weights"] = {{"k", weights.k},
                              {"m", weights.m},
                              {"theorem41_feasible", weights.theorem41_feasible(resolved)}};
  const auto decay_s = log_spaced(1e-1, 1e-4, 16);
  const auto dyadic_s = dyadic_s_values();
  const std::vector<double> lemma_s(dyadic_s.begin() + 1, dyadic_s.end());

  Json per_signal = Json::array();
  for (const auto& signal : ctx.signals) {
    Json entry;
    entry["label"] = signal.label;
    const auto decay = decay_slope(*ctx.decomp, signal.values, r, decay_s, c);
    entry["decay_slope"] = decay.exact_zero ? Json("exact-zero") : finite_or_tag(decay.slope);
    if (signal.values.norm() > 0.0) {
      entry["lemma32"] = to_json(lemma32_upper_bound(*ctx.decomp, ctx.bank, signal.values, resolved, weights, lemma_s));
      Json margins = Json::array();
      for (const auto& m : theorem42_lower_margin(*ctx.decomp, ctx.bank, signal.values, resolved, g_params)) {
        margins.push_back({{"level", m.level}, {"margin", finite_or_tag(m.margin)}, {"band_norm", m.band_norm}});
      }
      entry["theorem42_margins"] = std::move(margins);
    }
    per_signal.push_back(std::move(entry));
  }
  results["signals"] = std::move(per_signal);
}

Json error_object(const char* kind, const std::string& message, int code) {
  return {{"error", {{"kind", kind}, {"message", message}, {"exit_code", code}}}};
}

std::filesystem::path report_path(const RunConfig& cfg) {
  if (!cfg.output.empty()) return cfg.output;
  std::filesystem::path dir = cfg.output_dir;
  if (dir.empty()) {
    const char* env = std::getenv(kOutputDirEnv);
    dir = env ? env : ".";
  }
  return dir / (cfg.command + ".json");
}

}  // namespace

int run(std::span<const std::string> args, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Littlewood-Paley analysis of Besov norms for finite self-adjoint operators", "lpbesov"};
  app.require_subcommand(1);

  app.add_option("--operator", cfg.operator_path, "Operator file");
  app.add_option("--format", cfg.operator_format, "Operator file format: matrix-market, dense-csv, diagonal-csv");
  app.add_option("--generate", cfg.generator, "Generated Laplacian: path, cycle, grid2d");
  app.add_option("--size", cfg.size, "Generator size (vertices; grid side length for grid2d)");
  app.add_option("--shift", cfg.shift, "Add shift * I to the operator");
  app.add_option("--symmetry-tol", cfg.symmetry_tol, "Symmetry tolerance");
  app.add_option("--eigen-tol", cfg.eigen_tol, "Negative-eigenvalue tolerance");
  app.add_option("--signal", cfg.signal_paths, "Signal file (repeatable)");
  app.add_option("--eigenvector", cfg.eigenvectors, "Eigenvector index used as a signal (repeatable)");
  app.add_option("--random", cfg.random_count, "Number of random Gaussian signals");
  app.add_option("--seed", cfg.seed, "Seed for random signals");
  app.add_option("--band", cfg.band, "Project random signals onto the spectral band a b")->expected(2);
  app.add_option("--alpha", cfg.alpha, "Smoothness alpha");
  app.add_option("--q", cfg.q, "Summability q in [1, inf]; 'inf' for the sup variant");
  app.add_option("--r", cfg.r, "Difference order r (0 picks the default)");
  app.add_option("--s-points", cfg.s_points, "Points of the log-uniform s grid");
  app.add_option("--s-min", cfg.s_min, "Smallest s of the grid (default 2^-(J+4))");
  app.add_option("--tau-samples", cfg.tau_samples, "Samples of the tau sup cross-check");
  app.add_option("--sharpness", cfg.sharpness, "Window transition sharpness");
  app.add_option("--semigroup-c", cfg.semigroup_c, "Semigroup constant c in u(x) = exp(-c x)");
  app.add_flag("--experimental", cfg.experimental, "Allow alpha <= 1/2 and q < 1 (no equivalence contract)");
  app.add_option("--backend", cfg.backend, "exact or chebyshev");
  app.add_option("--degree", cfg.degree, "Chebyshev degree");
  app.add_option("--grid-points", cfg.grid_points, "Grid points for verify-frame");
  app.add_option("--output", cfg.output, "Report file (default <output-dir>/<command>.json)");
  app.add_option("--output-dir", cfg.output_dir, "Report directory (default $LPBESOV_OUTPUT_DIR or .)");
  app.add_option("--csv", cfg.csv, "CSV projection output file");
  app.add_option("--config", cfg.config_path, "JSON config file; flags win on conflict");

  const std::pair<const char*, const char*> commands[] = {
      {"decompose", "Split signals into frequency bands"},
      {"verify-frame", "Check the partition of unity on a grid"},
      {"besov", "Integral and dyadic Besov seminorms"},
      {"equivalence", "Ratios between the two seminorms"},
      {"diagnostics", "Operator-norm bounds, G-function and margins"},
  };
  for (const auto& [name, description] : commands) {
    app.add_subcommand(name, description)->fallthrough();
  }

  std::vector<std::string> storage{"lpbesov"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<const char*> argv;
  for (const auto& a : storage) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << error_object("config", e.what(), kExitConfig).dump(2) << '\n';
    return kExitConfig;
  }
  cfg.command = app.get_subcommands().front()->get_name();

  Json report;
  report["tool"] = "lpbesov";
  report["version"] = LPBESOV_VERSION;
  report["command"] = cfg.command;
  report["timestamp"] = timestamp_utc();

  std::filesystem::path path;
  try {
    apply_config_file(cfg, app);
    path = report_path(cfg);
    report["config"] = echo_config(cfg);
    report["seed"] = cfg.seed;
    if (cfg.backend != "exact" && cfg.backend != "chebyshev") {
      throw ConfigError("unknown backend '" + cfg.backend + "' (expected exact or chebyshev)");
    }
    if (cfg.degree < 1) throw ConfigError("--degree must be >= 1");
    if (cfg.grid_points < 2) throw ConfigError("--grid-points must be >= 2");
    const bool exact = cfg.backend == "exact";
    if (!exact && (cfg.command == "equivalence" || cfg.command == "diagnostics")) {
      throw ConfigError("command '" + cfg.command + "' needs the exact backend");
    }
    if (cfg.command == "besov" || cfg.command == "equivalence" || cfg.command == "diagnostics") {
      besov_params(cfg).validate(cfg.command == "equivalence");
    }

    Json op_provenance;
    Operator op = build_operator(cfg, op_provenance);
    if (exact && op.dimension() > kMaxDenseDimension) {
      throw ConfigError("the exact backend supports n <= " + std::to_string(kMaxDenseDimension) +
                        "; use --backend chebyshev");
    }

    Json signal_provenance = Json::array();
    std::optional<EigenDecomposition> decomp;
    double bound = spectral_bound(op);
    if (exact && cfg.command != "verify-frame") {
      decomp = eigendecompose(op, cfg.eigen_tol);
      op_provenance["lambda_max"] = decomp->lambda_max;
      op_provenance["lambda_min"] = decomp->eigenvalues[0];
      bound = std::max(bound, decomp->lambda_max);
    }
    op_provenance["spectral_bound"] = bound;
    FilterBank bank = FilterBank::covering(make_window_pair(cfg.sharpness), bound);
    report["operator"] = std::move(op_provenance);
    report["filter_bank"] = {{"max_level", bank.max_level()},
                             {"lambda_cap", bank.lambda_cap()},
                             {"window_sharpness", bank.windows().transition_sharpness()},
                             {"description", bank.windows().description()}};

    std::vector<Signal> signals;
    if (cfg.command != "verify-frame") {
      signals = build_signals(cfg, op, decomp ? &*decomp : nullptr, signal_provenance);
      report["signals"] = std::move(signal_provenance);
    }

    Context ctx{cfg, std::move(op), std::move(decomp), bound, std::move(bank), std::move(signals)};
    Json results;
    std::vector<EquivalenceReport> reports;
    try {
      if (cfg.command == "decompose") run_decompose(ctx, results);
      else if (cfg.command == "verify-frame") run_verify_frame(ctx, results);
      else if (cfg.command == "besov") run_besov(ctx, results);
      else if (cfg.command == "equivalence") run_equivalence(ctx, results, reports);
      else run_diagnostics(ctx, results);
    } catch (const NumericError& e) {
      report["results"] = std::move(results);
      report["failure"] = {{"kind", "numeric"}, {"message", e.what()}};
      write_file_atomic(path, report.dump(2) + "\n");
      err << error_object("numeric", e.what(), kExitNumeric).dump(2) << '\n';
      return kExitNumeric;
    }
    report["results"] = std::move(results);
    write_file_atomic(path, report.dump(2) + "\n");
    out << path.string() << '\n';
    return kExitOk;
  } catch (const ConfigError& e) {
    err << error_object("config", e.what(), kExitConfig).dump(2) << '\n';
    return kExitConfig;
  } catch (const NumericError& e) {
    if (!path.empty()) {
      report["failure"] = {{"kind", "numeric"}, {"message", e.what()}};
      try {
        write_file_atomic(path, report.dump(2) + "\n");
      } catch (const ConfigError&) {
      }
    }
    err << error_object("numeric", e.what(), kExitNumeric).dump(2) << '\n';
    return kExitNumeric;
  }
}

}  // namespace lpbesov::cli
