// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lpbesov/besov.hpp"
#include "lpbesov/calculus.hpp"
#include "lpbesov/cli.hpp"
#include "lpbesov/filters.hpp"
#include "lpbesov/operator.hpp"
#include "oracles.hpp"

using namespace lpbesov;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Bundled {
  std::string name;
  Operator op;
  EigenDecomposition decomp;
  FilterBank bank;
};

Operator log_spaced_diagonal() {
  const auto values = log_spaced(1e-2, 4.0, 64);
  return Operator::diagonal(Eigen::Map<const Vector>(values.data(), 64));
}

Bundled make_bundled(std::string name, Operator op) {
  auto decomp = eigendecompose(op);
  const double cap = std::max(spectral_bound(op), decomp.lambda_max);
  return {std::move(name), std::move(op), std::move(decomp), FilterBank::covering(make_window_pair(), cap)};
}

std::vector<Bundled> bundled_operators() {
  std::vector<Bundled> out;
  out.push_back(make_bundled("path64", build_laplacian(LaplacianKind::path, 64)));
  out.push_back(make_bundled("grid8x8", build_laplacian(LaplacianKind::grid2d, 8)));
  out.push_back(make_bundled("diag64", log_spaced_diagonal()));
  return out;
}

std::vector<Vector> random_suite(Eigen::Index n, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Vector> out;
  for (int i = 0; i < count; ++i) out.push_back(oracle::gaussian(n, rng));
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

double rel(const Vector& got, const Vector& want) {
  const double scale = want.norm();
  return scale > 0.0 ? (got - want).norm() / scale : got.norm();
}

BesovParams params_for(double alpha, double q, int r = 0) {
  BesovParams p;
  p.alpha = alpha;
  p.q = q;
  p.r = r;
  return p;
}

std::string params_name(const BesovParams& p) {
  std::ostringstream out;
  out << "(a=" << p.alpha << ",q=" << (p.q_infinite() ? std::string("inf") : sci(p.q)) << ",r=" << p.order() << ")";
  return out.str();
}

std::vector<BesovParams> criterion7_params() {
  return {params_for(1, 1), params_for(1, 2), params_for(1, kInf), params_for(0.75, 2), params_for(2, 2, 2)};
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

// 1 ---------------------------------------------------------------------------
Outcome partition_of_unity(const std::vector<Bundled>& ops) {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (const auto& b : ops) {
    const double dev = verify_partition(b.bank, 10000);
    worst = std::max(worst, dev);
    out.require(dev <= 1e-12, b.name + " deviation " + sci(dev));
  }
  const double elapsed = seconds_since(start);
  out.require(elapsed < 1.0, "runtime " + sci(elapsed) + " s");
  if (out.pass) out.detail = "max deviation " + sci(worst) + ", " + sci(elapsed) + " s";
  return out;
}

// 2 ---------------------------------------------------------------------------
Outcome calderon(const std::vector<Bundled>& ops) {
  Outcome out;
  const auto start = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (const auto& b : ops) {
    const auto decomp = eigendecompose(b.op);
    for (const auto& f : random_suite(b.op.dimension(), 100, 2)) {
      const double err = rel(calderon_reconstruct(decomp, b.bank, f), f);
      worst = std::max(worst, err);
    }
    out.require(worst <= 1e-10, b.name + " error " + sci(worst));
  }
  const double elapsed = seconds_since(start);
  out.require(elapsed < 5.0, "runtime " + sci(elapsed) + " s");
  if (out.pass) out.detail = "max relative error " + sci(worst) + ", " + sci(elapsed) + " s";
  return out;
}

// 3 ---------------------------------------------------------------------------
Outcome spectral_oracle(const std::vector<Bundled>& ops) {
  Outcome out;
  double worst = 0.0;
  auto close = [&](double got, double want, const std::string& what) {
    const double err = std::abs(got - want) / std::max(1.0, std::abs(want));
    worst = std::max(worst, err);
    out.require(err <= 1e-12, what + " off by " + sci(err));
  };
  auto close_vec = [&](const Vector& got, const Vector& want, const std::string& what) {
    for (Eigen::Index i = 0; i < want.size(); ++i) close(got[i], want[i], what);
  };

  // Diagonal operators only: coefficients are the entries themselves.
  std::vector<Operator> diagonals{ops[2].op, Operator::diagonal(Vector{{0.0, 0.3, 1.0, 1.7, 2.0, 3.0, 5.5}})};
  for (const auto& op : diagonals) {
    const Vector lambda = *op.diagonal_spectrum();
    const auto decomp = eigendecompose(op);
    const auto bank = FilterBank::covering(make_window_pair(), decomp.lambda_max);
    const double a = kDefaultSharpness;
    const Eigen::Index n = op.dimension();
    for (const auto& f : random_suite(n, 5, 3)) {
      for (double t : {0.01, 0.5, 2.0}) {
        Vector heat(n);
        for (Eigen::Index i = 0; i < n; ++i) heat[i] = std::exp(-t * lambda[i]) * f[i];
        close_vec(apply_semigroup(decomp, f, t), heat, "semigroup");
        close_vec(apply_function(decomp, heat_function(t), f), heat, "apply_function");
        for (int r : {1, 2, 3}) {
          Vector diff(n);
          for (Eigen::Index i = 0; i < n; ++i) diff[i] = std::pow(1.0 - std::exp(-t * lambda[i]), r) * f[i];
          close_vec(apply_semigroup_difference(decomp, f, t, r), diff, "difference");
          if (t <= 1.0) close(modulus_of_continuity(decomp, f, r, t), diff.norm(), "modulus");
        }
      }
      Vector recon = Vector::Zero(n);
      const auto bands = filter_bank_apply(decomp, bank, f);
      for (int j = 0; j <= bank.max_level(); ++j) {
        Vector band(n);
        for (Eigen::Index i = 0; i < n; ++i) band[i] = oracle::naive_psi(j, lambda[i], a) * f[i];
        close_vec(bands.bands[static_cast<std::size_t>(j)], band, "band " + std::to_string(j));
        for (Eigen::Index i = 0; i < n; ++i) recon[i] += oracle::naive_psi(j, lambda[i], a) * band[i];
      }
      close_vec(calderon_reconstruct(decomp, bank, f), recon, "calderon");
      Vector projected(n);
      for (Eigen::Index i = 0; i < n; ++i) projected[i] = lambda[i] >= 0.5 && lambda[i] <= 2.0 ? f[i] : 0.0;
      close_vec(pw_project(decomp, f, 0.5, 2.0), projected, "pw_project");
      for (int k : {0, 1, 2}) {
        close(sobolev_norm(decomp, f, k), (lambda.array().pow(k) * f.array()).matrix().norm(), "sobolev");
      }

      for (const auto& params : criterion7_params()) {
        const int r = params.order();
        // Dyadic side from the direct band formula.
        double acc = 0.0;
        for (int j = 0; j <= bank.max_level(); ++j) {
          double band = 0.0;
          for (Eigen::Index i = 0; i < n; ++i) band += std::pow(oracle::naive_psi(j, lambda[i], a) * f[i], 2);
          const double w = std::pow(2.0, j * params.alpha) * std::sqrt(band);
          acc = params.q_infinite() ? std::max(acc, w) : acc + std::pow(w, params.q);
        }
        const double dyadic = params.q_infinite() ? acc : std::pow(acc, 1.0 / params.q);
        close(besov_norm_dyadic(decomp, bank, f, params).term, dyadic, "dyadic " + params_name(params));

        // Integral side: same log-uniform trapezoid, modulus from the direct formula.
        const auto result = besov_seminorm_integral(decomp, f, params);
        const int points = result.s_points;
        const double t_min = std::log(result.s_min);
        double value = 0.0;
        for (int k = 0; k < points; ++k) {
          const double s = k == points - 1 ? 1.0 : std::exp(t_min - t_min * k / (points - 1));
          double omega = 0.0;
          for (Eigen::Index i = 0; i < n; ++i) omega += std::pow(1.0 - std::exp(-s * lambda[i]), 2 * r) * f[i] * f[i];
          const double g = std::pow(s, -params.alpha) * std::sqrt(omega);
          if (params.q_infinite()) {
            value = std::max(value, g);
          } else {
            value += (k == 0 || k == points - 1 ? 0.5 : 1.0) * std::pow(g, params.q);
          }
        }
        if (params.q_infinite()) {
          if (r == params.alpha) value = std::max(value, (lambda.array().pow(r) * f.array()).matrix().norm());
        } else {
          value = std::pow(-t_min / (points - 1) * value, 1.0 / params.q);
        }
        close(result.value, value, "integral " + params_name(params));
      }
    }
  }
  if (out.pass) out.detail = "max relative deviation " + sci(worst);
  return out;
}

// 4 ---------------------------------------------------------------------------
Outcome semigroup_law(const std::vector<Bundled>& ops) {
  Outcome out;
  double worst = 0.0, worst_slope = kInf;
  for (const auto& b : ops) {
    for (const auto& f : random_suite(b.op.dimension(), 5, 4)) {
      for (double s : {0.01, 0.3, 1.0})
        for (double t : {0.02, 0.7, 2.5}) {
          const double err = rel(apply_semigroup(b.decomp, apply_semigroup(b.decomp, f, t), s),
                                 apply_semigroup(b.decomp, f, s + t));
          worst = std::max(worst, err);
        }
      // Generator: residual of (I - T_t) f / t - A f decays linearly in t.
      const Vector g = pw_project(b.decomp, f, 0.0, 2.0);
      const Vector ag = b.op.apply(g);
      const auto ts = log_spaced(1e-2, 1e-5, 8);
      std::vector<double> residuals;
      for (double t : ts) residuals.push_back((apply_semigroup_difference(b.decomp, g, t, 1) / t - ag).norm());
      double sx = 0, sy = 0, sxx = 0, sxy = 0;
      for (std::size_t i = 0; i < ts.size(); ++i) {
        const double x = std::log(ts[i]), y = std::log(residuals[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
      }
      const double m = static_cast<double>(ts.size());
      const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
      worst_slope = std::min(worst_slope, slope);
      out.require(slope >= 0.95, b.name + " generator residual slope " + sci(slope));
      out.require(residuals.back() <= 1e-4 * ag.norm(), b.name + " generator residual " + sci(residuals.back()));
    }
  }
  out.require(worst <= 1e-10, "semigroup law error " + sci(worst));
  if (out.pass) out.detail = "law error " + sci(worst) + ", min generator slope " + sci(worst_slope);
  return out;
}

// 5 ---------------------------------------------------------------------------
Outcome modulus_decay(const std::vector<Bundled>& ops) {
  Outcome out;
  const auto s = log_spaced(1e-1, 1e-4, 16);
  double worst_margin = kInf;
  for (const auto& b : ops) {
    for (const auto& raw : random_suite(b.op.dimension(), 10, 5)) {
      const Vector f = pw_project(b.decomp, raw, 0.0, 2.0);
      for (int r : {1, 2, 3}) {
        const auto slope = decay_slope(b.decomp, f, r, s);
        if (slope.exact_zero) continue;
        worst_margin = std::min(worst_margin, slope.slope - r);
        out.require(slope.slope >= r - 0.05, b.name + " r=" + std::to_string(r) + " slope " + sci(slope.slope));
      }
    }
  }
  if (out.pass) out.detail = "min slope - r = " + sci(worst_margin);
  return out;
}

// 6 ---------------------------------------------------------------------------
Outcome operator_norm_inequality(const std::vector<Bundled>& ops) {
  Outcome out;
  int checks = 0;
  double worst = 0.0;
  for (const auto& b : ops) {
    const std::vector<double> spectrum(b.decomp.eigenvalues.data(),
                                       b.decomp.eigenvalues.data() + b.decomp.eigenvalues.size());
    for (int j = 0; j <= b.bank.max_level(); ++j)
      for (int r : {1, 2, 3})
        for (int k = 0; k <= 10; ++k) {
          const double s = std::ldexp(1.0, -k);
          const double bound = std::pow(s * std::ldexp(1.0, j + 1), r);
          for (const auto& norm :
               {filtered_operator_norm(spectrum, b.bank, j, r, s), filtered_operator_norm(b.bank, j, r, s, 20001)}) {
            ++checks;
            worst = std::max(worst, norm.value / bound);
            out.require(norm.value <= bound, b.name + " j=" + std::to_string(j) + " r=" + std::to_string(r) +
                                                 " s=" + sci(s) + " value " + sci(norm.value));
          }
        }
  }
  if (out.pass) out.detail = std::to_string(checks) + " checks, max value/bound " + sci(worst);
  return out;
}

// 7 ---------------------------------------------------------------------------
Outcome norm_equivalence(const std::vector<Bundled>& ops) {
  Outcome out;
  double worst_spread = 0.0;
  for (const auto& b : ops) {
    const auto suite = random_suite(b.op.dimension(), 50, 7);
    for (const auto& params : criterion7_params()) {
      double lo = kInf, hi = 0.0;
      bool finite = true;
      for (std::size_t i = 0; i < suite.size(); ++i) {
        const auto report = equivalence_report(b.decomp, b.bank, {suite[i], "r" + std::to_string(i)}, params);
        finite = finite && std::isfinite(report.integral_side) && std::isfinite(report.dyadic_side) &&
                 report.integral.status != SeminormStatus::divergent;
        lo = std::min(lo, report.ratio);
        hi = std::max(hi, report.ratio);
      }
      worst_spread = std::max(worst_spread, hi / lo);
      out.require(finite, b.name + " " + params_name(params) + " non-finite side");
      out.require(hi / lo <= 50.0, b.name + " " + params_name(params) + " spread " + sci(hi / lo));
    }
  }
  const auto& path = ops[0];
  const Signal v{path.decomp.eigenvectors.col(32), "lambda=2"};
  out.require(std::abs(path.decomp.eigenvalues[32] - 2.0) <= 1e-12, "eigenvalue 32 of path64 is not 2");
  const auto report = equivalence_report(path.decomp, path.bank, v, params_for(1, kInf, 1));
  out.require(std::abs(report.integral.value - 2.0) <= 0.02, "integral sup " + sci(report.integral.value));
  out.require(std::abs(report.dyadic.term - 2.0) <= 0.02, "dyadic term " + sci(report.dyadic.term));
  if (out.pass) {
    out.detail = "max ratio spread " + sci(worst_spread) + "; eigenvector pair (" + sci(report.integral.value) +
                 ", " + sci(report.dyadic.term) + ")";
  }
  return out;
}

// 8 ---------------------------------------------------------------------------
Outcome chebyshev_backend(const std::vector<Bundled>& ops) {
  Outcome out;
  std::string summary;
  for (const auto& b : ops) {
    const double upper = spectral_bound(b.op);
    const FilterBank bank = FilterBank::covering(make_window_pair(), upper);
    double worst = 0.0;
    for (const auto& f : random_suite(b.op.dimension(), 5, 8)) {
      const auto exact = filter_bank_apply(b.decomp, bank, f);
      const auto cheb = filter_bank_apply_chebyshev(b.op, bank, f, 200);
      for (int j = 0; j <= bank.max_level(); ++j) {
        const auto idx = static_cast<std::size_t>(j);
        if (exact.bands[idx].norm() > 0.0) worst = std::max(worst, rel(cheb.bands[idx], exact.bands[idx]));
      }
      for (double t : {0.1, 1.0, 5.0}) {
        worst = std::max(worst, rel(apply_function_chebyshev(b.op, heat_function(t), f, 200, upper),
                                    apply_semigroup(b.decomp, f, t)));
      }
    }
    out.require(worst <= 1e-6, b.name + " relative error " + sci(worst));
    summary += (summary.empty() ? "" : ", ") + b.name + " " + sci(worst);
  }

  const auto start = std::chrono::steady_clock::now();
  const Operator big = build_laplacian(LaplacianKind::path, 10000);
  const FilterBank bank = FilterBank::covering(make_window_pair(), spectral_bound(big));
  const auto f = random_suite(10000, 1, 9).front();
  const auto bands = filter_bank_apply_chebyshev(big, bank, f, 200);
  const double elapsed = seconds_since(start);
  const double energy_defect = std::abs(bands.energy() - f.squaredNorm()) / f.squaredNorm();
  out.require(elapsed < 30.0, "10^4-node path took " + sci(elapsed) + " s");
  out.require(energy_defect <= 1e-5, "10^4-node path energy defect " + sci(energy_defect));
  summary += "; 10^4-node path " + sci(elapsed) + " s";
  out.detail = out.pass ? summary : out.detail + " [" + summary + "]";
  return out;
}

// 9 ---------------------------------------------------------------------------
Outcome g_function(const std::vector<Bundled>& ops) {
  Outcome out;
  GFunctionParams g;
  g.alpha = 1;
  g.r = 1;
  g.n = 1;
  const double value = compute_G(g, 1.0);
  out.require(std::abs(value - std::exp(-1.0)) <= 1e-8, "G(1) = " + sci(value));

  double worst_factor = 0.0;
  for (const auto& b : ops) {
    for (const auto& params : {params_for(1, kInf, 1), params_for(1, 2), params_for(0.75, 2), params_for(2, 2, 2)}) {
      const auto gp = GFunctionParams::defaults(params);
      for (Eigen::Index k = 0; k < b.decomp.dimension(); ++k) {
        if (b.decomp.eigenvalues[k] <= 1e-8) continue;
        const auto margins = theorem42_lower_margin(b.decomp, b.bank, b.decomp.eigenvectors.col(k), params, gp);
        for (std::size_t i = 0; i < margins.size(); ++i) {
          out.require(margins[i].margin > 0.0 && std::isfinite(margins[i].margin),
                      b.name + " nonpositive margin at level " + std::to_string(margins[i].level));
          if (i > 0 && margins[i].level == margins[i - 1].level + 1) {
            const double factor = std::max(margins[i].margin / margins[i - 1].margin,
                                           margins[i - 1].margin / margins[i].margin);
            worst_factor = std::max(worst_factor, factor);
            out.require(factor <= 8.0, b.name + " adjacent factor " + sci(factor));
          }
        }
      }
    }
  }
  if (out.pass) out.detail = "G(1) - 1/e = " + sci(value - std::exp(-1.0)) + ", max adjacent factor " + sci(worst_factor);
  return out;
}

// 10 --------------------------------------------------------------------------
Outcome quadrature_convergence(const std::vector<Bundled>& ops) {
  Outcome out;
  double worst = 0.0;
  for (const auto& b : ops) {
    std::vector<Vector> suite = random_suite(b.op.dimension(), 10, 10);
    suite.push_back(b.decomp.eigenvectors.col(b.decomp.dimension() / 2));
    for (const auto& params : criterion7_params()) {
      BesovParams fine = params;
      fine.s_points = 2 * params.s_points - 1;
      for (const auto& f : suite) {
        const double coarse = besov_seminorm_integral(b.decomp, f, params).value;
        const double refined = besov_seminorm_integral(b.decomp, f, fine).value;
        const double change = refined > 0.0 ? std::abs(refined - coarse) / refined : std::abs(coarse);
        worst = std::max(worst, change);
        out.require(change <= 1e-3, b.name + " " + params_name(params) + " change " + sci(change));
      }
    }
  }
  if (out.pass) out.detail = "max relative change " + sci(worst);
  return out;
}

// 11 --------------------------------------------------------------------------
std::string strip_timestamp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream kept;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find("\"timestamp\":") == std::string::npos) kept << line << '\n';
  }
  return kept.str();
}

Outcome cli_determinism() {
  Outcome out;
  const auto dir = std::filesystem::temp_directory_path() / "lpbesov_acceptance";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  std::vector<std::string> paths;
  for (const char* name : {"first.json", "second.json"}) {
    const std::vector<std::string> args{"equivalence", "--generate", "path",  "--size", "64", "--random",
                                        "20",          "--seed",     "1234", "--q",    "inf", "--output",
                                        (dir / name).string()};
    std::ostringstream sink;
    const int code = cli::run(args, sink, sink);
    out.require(code == 0, std::string("run exited with ") + std::to_string(code));
    paths.push_back((dir / name).string());
  }
  if (out.pass) {
    const std::string a = strip_timestamp(paths[0]);
    const std::string b = strip_timestamp(paths[1]);
    out.require(!a.empty() && a == b, "reports differ");
    if (out.pass) out.detail = std::to_string(a.size()) + " identical bytes outside the timestamp";
  }
  std::filesystem::remove_all(dir);
  return out;
}

}  // namespace

int main() {
  const auto ops = bundled_operators();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"1 partition of unity", [&] { return partition_of_unity(ops); }},
      {"2 Calderon reconstruction", [&] { return calderon(ops); }},
      {"3 spectral-oracle equivalence", [&] { return spectral_oracle(ops); }},
      {"4 semigroup law and generator", [&] { return semigroup_law(ops); }},
      {"5 modulus decay", [&] { return modulus_decay(ops); }},
      {"6 exact operator-norm inequality", [&] { return operator_norm_inequality(ops); }},
      {"7 norm equivalence", [&] { return norm_equivalence(ops); }},
      {"8 Chebyshev backend", [&] { return chebyshev_backend(ops); }},
      {"9 G-function and lower margins", [&] { return g_function(ops); }},
      {"10 quadrature convergence", [&] { return quadrature_convergence(ops); }},
      {"11 CLI determinism", [&] { return cli_determinism(); }},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    if (!outcome.pass) ++failures;
    std::printf("[%s] %s: %s\n", outcome.pass ? "PASS" : "FAIL", name.c_str(), outcome.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
