#include "lpbesov/besov.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "lpbesov/error.hpp"

namespace lpbesov {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// ||A^r f|| below this fraction of max(1, lambda_max)^r ||f|| counts as zero.
constexpr double kKernelTol = 1e-12;
// Eigenvalues below this fraction of max(1, lambda_max) are treated as ker A.
constexpr double kZeroEigenvalueTol = 1e-10;

// Integer power by repeated multiplication: monotone in the base under
// round-to-nearest, which keeps the exact operator-norm inequality exact.
double ipow(double base, int exponent) {
  double result = 1.0;
  for (int i = 0; i < exponent; ++i) result *= base;
  return result;
}

double difference_factor(double lambda, double tau, int r, double c) {
  return ipow(-std::expm1(-c * tau * lambda), r);
}

void require_order(int r) {
  if (r < 1) throw ConfigError("difference order r must be >= 1");
}

void require_s(double s) {
  if (!(s > 0.0) || !(s <= 1.0)) throw ConfigError("s must lie in (0, 1]");
}

void require_c(double c) {
  if (!(c > 0.0) || !std::isfinite(c)) throw ConfigError("semigroup constant c must be positive and finite");
}

std::string fmt(double x) {
  std::ostringstream out;
  out << x;
  return out.str();
}

// Shared assembly of the integral side from a modulus evaluator.
SeminormResult assemble_seminorm(const std::function<double(double)>& omega, double tail_power_norm,
                                 bool in_kernel, const BesovParams& params, double s_min) {
  const int r = params.order();
  SeminormResult result;
  result.s_min = s_min;
  result.s_points = params.s_points;
  result.tail_exponent = static_cast<double>(r) - params.alpha;
  result.tail_coefficient = std::pow(params.semigroup_c, r) * tail_power_norm;
  if (in_kernel) {
    result.status = SeminormStatus::exact_zero;
    result.tail_coefficient = 0.0;
    return result;
  }
  const bool grows = result.tail_exponent < 0.0;

  const int count = params.s_points;
  const double t_min = std::log(s_min);
  auto s_at = [&](int k) {
    if (k == count - 1) return 1.0;
    return std::exp(t_min + (0.0 - t_min) * static_cast<double>(k) / static_cast<double>(count - 1));
  };

  if (params.q_infinite()) {
    double sup = 0.0;
    for (int k = 0; k < count; ++k) {
      const double s = s_at(k);
      sup = std::max(sup, std::pow(s, -params.alpha) * omega(s));
    }
    // The sup runs over (0, 1]; the s -> 0+ limit is known in closed form.
    if (result.tail_exponent == 0.0) sup = std::max(sup, result.tail_coefficient);
    result.value = sup;
  } else {
    const double h = -t_min / static_cast<double>(count - 1);
    double sum = 0.0;
    for (int k = 0; k < count; ++k) {
      const double s = s_at(k);
      const double integrand = std::pow(std::pow(s, -params.alpha) * omega(s), params.q);
      sum += (k == 0 || k == count - 1) ? 0.5 * integrand : integrand;
    }
    result.value = std::pow(h * sum, 1.0 / params.q);
  }
  if (!std::isfinite(result.value)) throw NumericError("integral Besov seminorm is not finite");
  result.status = grows ? SeminormStatus::divergent : SeminormStatus::finite;
  return result;
}

double dyadic_term(std::span<const double> band_norms, const BesovParams& params) {
  double acc = 0.0;
  for (std::size_t j = 0; j < band_norms.size(); ++j) {
    const double weighted = std::pow(2.0, static_cast<double>(j) * params.alpha) * band_norms[j];
    if (params.q_infinite()) {
      acc = std::max(acc, weighted);
    } else {
      acc += std::pow(weighted, params.q);
    }
  }
  return params.q_infinite() ? acc : std::pow(acc, 1.0 / params.q);
}

}  // namespace

// ---------------------------------------------------------------------------

bool BesovParams::q_infinite() const noexcept { return std::isinf(q) && q > 0.0; }

int BesovParams::default_order(double alpha) noexcept {
  const int ceiling = static_cast<int>(std::ceil(alpha));
  const int order = static_cast<double>(ceiling) < 2.0 * alpha ? ceiling : ceiling - 1;
  return std::max(1, order);
}

std::vector<std::string> BesovParams::validate(bool equivalence_run) const {
  std::vector<std::string> warnings;
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be a positive finite number");
  if (!experimental && !(alpha > 0.5)) {
    throw ConfigError("alpha = " + fmt(alpha) +
                      " is outside the supported range alpha > 1/2 (set the experimental flag to run "
                      "0 < alpha <= 1/2 without an equivalence contract)");
  }
  if (!(q > 0.0) || std::isnan(q)) throw ConfigError("q must be positive (use inf for the sup variant)");
  if (!experimental && q < 1.0) {
    throw ConfigError("q = " + fmt(q) + " is outside [1, inf] (set the experimental flag for 0 < q < 1)");
  }
  if (r < 0) throw ConfigError("r must be a positive integer");
  const int order_r = order();
  if (equivalence_run && !experimental && !(static_cast<double>(order_r) < 2.0 * alpha)) {
    throw ConfigError("r = " + std::to_string(order_r) + " violates r < 2 alpha = " + fmt(2.0 * alpha));
  }
  if (static_cast<double>(order_r) < alpha) {
    warnings.push_back("r = " + std::to_string(order_r) + " < alpha = " + fmt(alpha) +
                       ": the modulus-of-continuity definition expects r >= alpha");
  }
  if (experimental) warnings.emplace_back("experimental parameters: no equivalence contract applies");
  if (s_points < 3) throw ConfigError("s grid needs at least 3 points");
  if (s_min && (!(*s_min > 0.0) || !(*s_min < 1.0))) throw ConfigError("s_min must lie in (0, 1)");
  if (tau_samples < 1) throw ConfigError("tau_samples must be >= 1");
  require_c(semigroup_c);
  return warnings;
}

double BesovParams::resolved_s_min(double lambda_cap) const {
  if (s_min) return *s_min;
  return std::ldexp(1.0, -(FilterBank::levels_for(lambda_cap) + 4));
}

std::string_view to_string(SeminormStatus status) {
  switch (status) {
    case SeminormStatus::finite: return "finite";
    case SeminormStatus::divergent: return "divergent";
    case SeminormStatus::exact_zero: return "exact-zero";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------

SpectralProfile::SpectralProfile(const EigenDecomposition& decomp, const Vector& f)
    : eigenvalues_(decomp.eigenvalues),
      squared_(spectral_coefficients(decomp, f).array().square().matrix()),
      norm_(f.norm()),
      lambda_max_(decomp.lambda_max) {}

double SpectralProfile::difference_norm(int r, double s, double c) const {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < eigenvalues_.size(); ++i) {
    const double factor = difference_factor(eigenvalues_[i], s, r, c);
    sum += factor * factor * squared_[i];
  }
  return std::sqrt(sum);
}

double SpectralProfile::power_norm(int k) const {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < eigenvalues_.size(); ++i) {
    const double p = ipow(eigenvalues_[i], k);
    sum += p * p * squared_[i];
  }
  return std::sqrt(sum);
}

bool SpectralProfile::in_kernel(int r) const {
  return power_norm(r) <= kKernelTol * ipow(std::max(1.0, lambda_max_), r) * norm_;
}

double modulus_of_continuity(const EigenDecomposition& decomp, const Vector& f, int r, double s, double c) {
  require_order(r);
  require_s(s);
  require_c(c);
  return SpectralProfile(decomp, f).difference_norm(r, s, c);
}

double modulus_of_continuity_sampled(const EigenDecomposition& decomp, const Vector& f, int r, double s,
                                     int samples, double c) {
  require_order(r);
  require_s(s);
  require_c(c);
  if (samples < 1) throw ConfigError("tau sample count must be >= 1");
  const SpectralProfile profile(decomp, f);
  double sup = 0.0;
  for (int k = 1; k <= samples; ++k) {
    const double tau = k == samples ? s : s * static_cast<double>(k) / static_cast<double>(samples);
    sup = std::max(sup, profile.difference_norm(r, tau, c));
  }
  return sup;
}

SeminormResult besov_seminorm_integral(const EigenDecomposition& decomp, const Vector& f,
                                       const BesovParams& params) {
  params.validate(false);
  require_dimension(decomp, f);
  const int r = params.order();
  const SpectralProfile profile(decomp, f);
  const double c = params.semigroup_c;
  return assemble_seminorm([&](double s) { return profile.difference_norm(r, s, c); }, profile.power_norm(r),
                           profile.in_kernel(r), params, params.resolved_s_min(decomp.lambda_max));
}

DyadicResult besov_norm_dyadic(const BandComponents& bands, const Vector& f, const BesovParams& params) {
  DyadicResult result;
  result.band_norms = bands.norms();
  result.term = dyadic_term(result.band_norms, params);
  result.total = f.norm() + result.term;
  return result;
}

DyadicResult besov_norm_dyadic(const EigenDecomposition& decomp, const FilterBank& bank, const Vector& f,
                               const BesovParams& params) {
  params.validate(false);
  return besov_norm_dyadic(filter_bank_apply(decomp, bank, f), f, params);
}

BesovNorms besov_norms_chebyshev(const Operator& op, const FilterBank& bank, const Vector& f,
                                 const BesovParams& params, int degree) {
  params.validate(false);
  const int r = params.order();
  const double c = params.semigroup_c;
  const double cap = bank.lambda_cap();

  Vector power = f;
  for (int i = 0; i < r; ++i) power = op.apply(power);
  const double power_norm = power.norm();
  const bool in_kernel = power_norm <= kKernelTol * ipow(std::max(1.0, cap), r) * f.norm();

  BesovParams resolved = params;
  if (!resolved.s_min) resolved.s_min = std::ldexp(1.0, -(bank.max_level() + 4));

  BesovNorms norms;
  norms.integral = assemble_seminorm(
      [&](double s) {
        return ChebyshevFilter(semigroup_difference_function(s, r, c), degree, cap).apply(op, f).norm();
      },
      power_norm, in_kernel, resolved, *resolved.s_min);
  norms.dyadic = besov_norm_dyadic(filter_bank_apply_chebyshev(op, bank, f, degree), f, params);
  return norms;
}

// ---------------------------------------------------------------------------

std::vector<double> log_spaced(double from, double to, int count) {
  if (count < 2 || !(from > 0.0) || !(to > 0.0)) throw ConfigError("log_spaced needs count >= 2 and positive ends");
  std::vector<double> out(static_cast<std::size_t>(count));
  const double a = std::log(from);
  const double b = std::log(to);
  for (int k = 0; k < count; ++k) {
    out[static_cast<std::size_t>(k)] = std::exp(a + (b - a) * static_cast<double>(k) / (count - 1));
  }
  out.front() = from;
  out.back() = to;
  return out;
}

DecaySlope decay_slope(const EigenDecomposition& decomp, const Vector& f, int r, std::span<const double> s_values,
                       double c) {
  require_order(r);
  require_c(c);
  if (s_values.size() < 2) throw ConfigError("decay_slope needs at least two s values");
  for (std::size_t i = 0; i < s_values.size(); ++i) {
    require_s(s_values[i]);
    if (i > 0 && !(s_values[i] < s_values[i - 1])) throw ConfigError("decay_slope: s values must be decreasing");
  }
  if (s_values.front() / s_values.back() < 100.0 * (1.0 - 1e-12)) {
    throw ConfigError("decay_slope: s values must span at least two decades");
  }

  const SpectralProfile profile(decomp, f);
  DecaySlope result;
  if (profile.in_kernel(r)) {
    result.exact_zero = true;
    return result;
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double count = static_cast<double>(s_values.size());
  for (double s : s_values) {
    const double omega = profile.difference_norm(r, s, c);
    if (!(omega > 0.0)) {
      result.exact_zero = true;
      return result;
    }
    const double x = std::log(s);
    const double y = std::log(omega);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  result.slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
  return result;
}

// ---------------------------------------------------------------------------

namespace {

FilteredNorm finish_filtered_norm(double value, int j, int r, double s, double c) {
  FilteredNorm out;
  out.value = value;
  out.elementary_margin = value / ipow(c * s * std::ldexp(1.0, j + 1), r);
  out.half_power_margin = value / (ipow(s, r) * std::pow(2.0, static_cast<double>((j + 1) * r) / 2.0));
  return out;
}

void require_level(const FilterBank& bank, int j) {
  if (j < 0 || j > bank.max_level()) {
    throw ConfigError("level " + std::to_string(j) + " outside [0, " + std::to_string(bank.max_level()) + "]");
  }
}

}  // namespace

FilteredNorm filtered_operator_norm(std::span<const double> spectrum, const FilterBank& bank, int j, int r,
                                    double s, double c) {
  require_level(bank, j);
  require_order(r);
  require_s(s);
  require_c(c);
  // The factor (1 - exp(-c tau lambda))^r is nondecreasing in tau, so the sup sits at tau = s.
  double value = 0.0;
  for (double lambda : spectrum) {
    value = std::max(value, difference_factor(lambda, s, r, c) * bank.value(j, lambda));
  }
  return finish_filtered_norm(value, j, r, s, c);
}

FilteredNorm filtered_operator_norm(const FilterBank& bank, int j, int r, double s, int grid_points, double c) {
  require_level(bank, j);
  if (grid_points < 2) throw ConfigError("filtered_operator_norm needs at least 2 grid points");
  const double lower = bank.support_lower(j);
  const double upper = bank.support_upper(j);
  std::vector<double> grid(static_cast<std::size_t>(grid_points));
  for (int k = 0; k < grid_points; ++k) {
    grid[static_cast<std::size_t>(k)] = lower + (upper - lower) * static_cast<double>(k) / (grid_points - 1);
  }
  return filtered_operator_norm(grid, bank, j, r, s, c);
}

// ---------------------------------------------------------------------------

LemmaWeights LemmaWeights::defaults(const BesovParams& params) {
  constexpr double delta = 0.01;
  const double r = static_cast<double>(params.order());
  LemmaWeights w;
  if (params.q_infinite()) {
    w.k = -delta;
    w.m = delta;
    return w;
  }
  const double q = params.q;
  w.k = std::min(-q * (r / 2.0 - params.alpha) / 2.0 - delta, -delta);
  w.m = -w.k + delta;
  // Pull m down onto k + m q <= q (alpha - r/2) when that keeps k + m >= 0.
  const double cap = (q * (params.alpha - r / 2.0) - w.k) / q;
  if (w.m > cap && cap >= -w.k) w.m = cap;
  return w;
}

void LemmaWeights::validate() const {
  if (!(k < 0.0)) throw ConfigError("lemma weights need k < 0");
  if (!(k + m >= 0.0)) throw ConfigError("lemma weights need k + m >= 0 (infeasible weights)");
}

bool LemmaWeights::theorem41_feasible(const BesovParams& params) const {
  if (params.q_infinite()) return k < 0.0 && k + m >= 0.0;
  const double r = static_cast<double>(params.order());
  return k < 0.0 && k + m >= 0.0 && k + m * params.q <= params.q * (params.alpha - r / 2.0);
}

LemmaBound lemma32_upper_bound(const EigenDecomposition& decomp, const FilterBank& bank, const Vector& f,
                               const BesovParams& params, const LemmaWeights& weights,
                               std::span<const double> s_values) {
  params.validate(false);
  weights.validate();
  if (s_values.empty()) throw ConfigError("lemma32_upper_bound needs at least one s value");
  const int r = params.order();
  const double c = params.semigroup_c;
  const bool sup = params.q_infinite();
  const double q = params.q;

  const auto norms = filter_bank_apply(decomp, bank, f).norms();
  const SpectralProfile profile(decomp, f);

  auto band_sum = [&]() {
    double acc = 0.0;
    for (std::size_t j = 0; j < norms.size(); ++j) {
      const double jd = static_cast<double>(j);
      const double exponent = sup ? jd * (r / 2.0 + weights.m) : jd * (r / 2.0 + weights.k / q + weights.m);
      const double term = std::pow(2.0, exponent) * norms[j];
      acc = sup ? std::max(acc, term) : acc + std::pow(term, q);
    }
    return acc;
  }();

  auto sides = [&](double s) {
    require_s(s);
    const double omega = profile.difference_norm(r, s, c);
    if (sup) return std::pair{omega, ipow(s, r) * band_sum};
    return std::pair{std::pow(omega, q), std::pow(s, q * r) * band_sum};
  };

  LemmaBound result;
  for (double s : s_values) {
    const auto [lhs, rhs] = sides(s);
    result.s_values.push_back(s);
    result.lhs.push_back(lhs);
    result.rhs.push_back(rhs);
    if (rhs > 0.0) {
      result.constant = std::max(result.constant, lhs / rhs);
    } else if (lhs > 0.0) {
      result.constant = kInf;
    }
  }
  // Refine once below the smallest s: a constant that keeps climbing by more
  // than 25% per halving is flagged.
  const double finest = *std::min_element(s_values.begin(), s_values.end());
  const auto [lhs_a, rhs_a] = sides(finest);
  const auto [lhs_b, rhs_b] = sides(finest / 2.0);
  if (rhs_a > 0.0 && rhs_b > 0.0) {
    result.grows_with_refinement = (lhs_b / rhs_b) > 1.25 * (lhs_a / rhs_a);
  }
  return result;
}

// ---------------------------------------------------------------------------

GFunctionParams GFunctionParams::defaults(const BesovParams& params) {
  GFunctionParams g;
  g.r = params.order();
  g.alpha = params.alpha;
  g.c = params.semigroup_c;
  g.n = (g.r + 1) / 2 + 1;
  return g;
}

void GFunctionParams::validate() const {
  if (n < 0) throw ConfigError("G-function exponent n must be >= 0");
  require_order(r);
  require_c(c);
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be a positive finite number");
  if (!(static_cast<double>(r) - alpha + 1.0 > 0.0)) {
    throw ConfigError("G-function integrand not integrable: need r - alpha + 1 > 0");
  }
  if (max_refinements < 1 || !(tolerance > 0.0)) throw ConfigError("invalid G-function quadrature settings");
}

bool GFunctionParams::theorem_regime() const noexcept { return 2.0 * n > static_cast<double>(r + 1); }

double compute_G(const GFunctionParams& params, double lambda, double* error_estimate) {
  params.validate();
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("compute_G needs a finite lambda > 0");
  const double exponent = static_cast<double>(params.r) - params.alpha;
  auto integrand = [&](double s) {
    if (s <= 0.0) return 0.0;
    return std::pow(s, exponent) * difference_factor(lambda, s, params.r, params.c);
  };
  double error = 0.0;
  const double integral = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
      integrand, 0.0, 1.0, static_cast<unsigned>(params.max_refinements), params.tolerance, &error);
  if (!std::isfinite(integral)) throw NumericError("G-function quadrature produced a non-finite value");
  const double prefactor = std::pow(lambda, -static_cast<double>(params.n));
  if (error_estimate) *error_estimate = prefactor * error;
  return prefactor * integral;
}

std::vector<BandMargin> theorem42_lower_margin(const EigenDecomposition& decomp, const FilterBank& bank,
                                               const Vector& f, const BesovParams& params,
                                               const GFunctionParams& g_params) {
  params.validate(false);
  g_params.validate();
  if (!g_params.theorem_regime()) {
    throw ConfigError("theorem42_lower_margin needs n > (r + 1) / 2, got n = " + std::to_string(g_params.n));
  }
  const Vector coefficients = spectral_coefficients(decomp, f);
  const double zero_cut = kZeroEigenvalueTol * std::max(1.0, decomp.lambda_max);

  std::vector<double> g_values(static_cast<std::size_t>(coefficients.size()), 0.0);
  for (Eigen::Index i = 0; i < coefficients.size(); ++i) {
    if (decomp.eigenvalues[i] > zero_cut) g_values[static_cast<std::size_t>(i)] = compute_G(g_params, decomp.eigenvalues[i]);
  }

  const double scale_exponent = static_cast<double>(-g_params.n + 1 + g_params.r) - g_params.alpha;
  const double floor = 1e-12 * f.norm();
  std::vector<BandMargin> margins;
  for (int j = 0; j <= bank.max_level(); ++j) {
    double numerator = 0.0;
    double band = 0.0;
    for (Eigen::Index i = 0; i < coefficients.size(); ++i) {
      if (!(decomp.eigenvalues[i] > zero_cut)) continue;
      const double component = bank.value(j, decomp.eigenvalues[i]) * coefficients[i];
      band += component * component;
      const double filtered = g_values[static_cast<std::size_t>(i)] * component;
      numerator += filtered * filtered;
    }
    band = std::sqrt(band);
    if (!(band > floor)) continue;
    const double reference = std::pow(2.0, static_cast<double>(j) * scale_exponent) * band;
    margins.push_back({j, std::sqrt(numerator) / reference, band});
  }
  if (margins.empty()) throw ConfigError("theorem42_lower_margin: all bands are empty");
  return margins;
}

// ---------------------------------------------------------------------------

EquivalenceReport equivalence_report(const EigenDecomposition& decomp, const FilterBank& bank, const Signal& f,
                                     const BesovParams& params) {
  EquivalenceReport report;
  report.warnings = params.validate(true);
  require_dimension(decomp, f.values);

  report.label = f.label;
  report.params = params;
  report.params.r = params.order();
  if (!report.params.s_min) report.params.s_min = std::ldexp(1.0, -(bank.max_level() + 4));
  report.window_sharpness = bank.windows().transition_sharpness();
  report.max_level = bank.max_level();
  report.signal_norm = f.values.norm();

  report.integral = besov_seminorm_integral(decomp, f.values, report.params);
  report.dyadic = besov_norm_dyadic(filter_bank_apply(decomp, bank, f.values), f.values, report.params);
  report.integral_side = report.signal_norm + report.integral.value;
  report.dyadic_side = report.dyadic.total;
  // The zero signal has both norms 0; its two sides agree.
  report.ratio = report.dyadic_side > 0.0 ? report.integral_side / report.dyadic_side : 1.0;
  if (report.dyadic.term > 0.0) report.seminorm_ratio = report.integral.value / report.dyadic.term;

  const auto s_decay = log_spaced(1e-1, 1e-4, 16);
  report.decay = decay_slope(decomp, f.values, report.params.r, s_decay, params.semigroup_c);

  report.weights = LemmaWeights::defaults(report.params);
  if (report.signal_norm > 0.0) {
    std::vector<double> s_lemma;
    for (int k = 1; k <= 10; ++k) s_lemma.push_back(std::ldexp(1.0, -k));
    const auto lemma = lemma32_upper_bound(decomp, bank, f.values, report.params, report.weights, s_lemma);
    report.lemma_constant = lemma.constant;
    report.lemma_grows = lemma.grows_with_refinement;
  }
  if (report.integral.status == SeminormStatus::divergent) {
    report.warnings.emplace_back("integral side diverges as s -> 0 (r < alpha); value is truncated at s_min");
  }
  return report;
}

}  // namespace lpbesov
