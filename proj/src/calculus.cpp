#include "lpbesov/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "lpbesov/error.hpp"

namespace lpbesov {

namespace {

void require_positive_finite(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw ConfigError(std::string(name) + " must be a positive finite number");
  }
}

void require_interval(double a, double b) {
  if (!(a >= 0.0) || !(b > a) || !std::isfinite(b)) {
    throw ConfigError("spectral interval [a, b] must satisfy 0 <= a < b < inf");
  }
}

// Computed eigenvalues carry roundoff of order eps * lambda_max, so band
// membership tests widen [a, b] by this much.
double edge_slack(const EigenDecomposition& decomp) { return 1e-12 * std::max(1.0, decomp.lambda_max); }

bool in_band(double lambda, double a, double b, double slack) { return lambda >= a - slack && lambda <= b + slack; }

// Multiplies each spectral coefficient by weight(lambda_i) and synthesizes.
template <typename Weight>
Vector spectral_multiply(const EigenDecomposition& decomp, const Vector& f, Weight&& weight) {
  Vector coefficients = spectral_coefficients(decomp, f);
  for (Eigen::Index i = 0; i < coefficients.size(); ++i) {
    coefficients[i] *= weight(decomp.eigenvalues[i]);
  }
  return decomp.eigenvectors * coefficients;
}

}  // namespace

SpectralFunction constant_function(double value) {
  std::ostringstream name;
  name << "constant(" << value << ")";
  return {[value](double) { return value; }, 0.0, std::numeric_limits<double>::infinity(), name.str()};
}

SpectralFunction identity_function() {
  return {[](double xi) { return xi; }, 0.0, std::numeric_limits<double>::infinity(), "identity"};
}

SpectralFunction heat_function(double t, double c) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("semigroup time t must be finite and >= 0");
  require_positive_finite(c, "semigroup constant c");
  std::ostringstream name;
  name << "heat(t=" << t << ",c=" << c << ")";
  return {[t, c](double xi) { return std::exp(-c * t * xi); }, 0.0,
          std::numeric_limits<double>::infinity(), name.str()};
}

SpectralFunction semigroup_difference_function(double tau, int r, double c) {
  require_positive_finite(tau, "tau");
  if (r < 1) throw ConfigError("difference order r must be >= 1");
  require_positive_finite(c, "semigroup constant c");
  std::ostringstream name;
  name << "semigroup_difference(tau=" << tau << ",r=" << r << ",c=" << c << ")";
  return {[tau, r, c](double xi) { return std::pow(-std::expm1(-c * tau * xi), r); }, 0.0,
          std::numeric_limits<double>::infinity(), name.str()};
}

SpectralFunction window_function(const FilterBank& bank, int j) {
  eval_psi(bank, j, 0.0);  // range check
  return {[bank, j](double xi) { return bank.value(j, xi); }, 0.0,
          std::numeric_limits<double>::infinity(), "psi_" + std::to_string(j)};
}

SpectralFunction window_squared_function(const FilterBank& bank, int j) {
  eval_psi(bank, j, 0.0);
  return {[bank, j](double xi) { return bank.value_squared(j, xi); }, 0.0,
          std::numeric_limits<double>::infinity(), "psi_" + std::to_string(j) + "^2"};
}

// ---------------------------------------------------------------------------
// Chebyshev filtering

ChebyshevFilter::ChebyshevFilter(const SpectralFunction& target, int degree, double upper)
    : degree_(degree), upper_(upper) {
  if (degree < 1) throw ConfigError("Chebyshev degree must be >= 1");
  if (!(upper >= 0.0) || !std::isfinite(upper)) {
    throw ConfigError("Chebyshev interval upper end must be finite and >= 0");
  }
  coefficients_.assign(static_cast<std::size_t>(degree) + 1, 0.0);
  if (upper == 0.0) {
    // Null operator: beta(A) = beta(0) I.
    coefficients_[0] = target(0.0);
    if (!std::isfinite(coefficients_[0])) throw NumericError(target.name + " is not finite at 0");
    return;
  }

  const int n = degree;
  std::vector<double> samples(static_cast<std::size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) {
    const double x = std::cos(std::numbers::pi * k / n);
    // Clamp so rounding never pushes the node below 0 or above upper.
    const double xi = std::clamp(0.5 * (x + 1.0) * upper, 0.0, upper);
    samples[static_cast<std::size_t>(k)] = target(xi);
    if (!std::isfinite(samples[static_cast<std::size_t>(k)])) {
      throw NumericError(target.name + " is not finite on [0, " + std::to_string(upper) + "]");
    }
  }
  for (int m = 0; m <= n; ++m) {
    double sum = 0.0;
    for (int k = 0; k <= n; ++k) {
      const double weight = (k == 0 || k == n) ? 0.5 : 1.0;
      // Reduce m k modulo 2n before taking the cosine.
      const long phase = (static_cast<long>(m) * k) % (2L * n);
      sum += weight * samples[static_cast<std::size_t>(k)] * std::cos(std::numbers::pi * phase / n);
    }
    double c = 2.0 * sum / n;
    if (m == 0 || m == n) c *= 0.5;
    coefficients_[static_cast<std::size_t>(m)] = c;
  }
}

double ChebyshevFilter::tail_magnitude() const noexcept {
  const std::size_t k = coefficients_.size();
  return std::abs(coefficients_[k - 1]) + (k >= 2 ? std::abs(coefficients_[k - 2]) : 0.0);
}

double ChebyshevFilter::evaluate(double xi) const {
  if (upper_ == 0.0) return coefficients_[0];
  const double x = 2.0 * xi / upper_ - 1.0;
  // Clenshaw.
  double b1 = 0.0;
  double b2 = 0.0;
  for (int m = degree_; m >= 1; --m) {
    const double b0 = 2.0 * x * b1 - b2 + coefficients_[static_cast<std::size_t>(m)];
    b2 = b1;
    b1 = b0;
  }
  return x * b1 - b2 + coefficients_[0];
}

Vector ChebyshevFilter::apply(const Operator& op, const Vector& f) const {
  return apply_chebyshev_filters(op, std::span<const ChebyshevFilter>(this, 1), f).front();
}

std::vector<Vector> apply_chebyshev_filters(const Operator& op, std::span<const ChebyshevFilter> filters,
                                            const Vector& f) {
  if (f.size() != op.dimension()) {
    throw ConfigError("signal length " + std::to_string(f.size()) +
                      " does not match operator dimension " + std::to_string(op.dimension()));
  }
  std::vector<Vector> outputs;
  if (filters.empty()) return outputs;
  const int degree = filters.front().degree();
  const double upper = filters.front().upper();
  for (const auto& filter : filters) {
    if (filter.degree() != degree || filter.upper() != upper) {
      throw ConfigError("shared Chebyshev recurrence needs equal degree and interval");
    }
  }

  outputs.reserve(filters.size());
  for (const auto& filter : filters) outputs.emplace_back(filter.coefficients()[0] * f);
  if (upper == 0.0) return outputs;

  // T_m of the shifted operator (2/upper) A - I.
  const double scale = 2.0 / upper;
  auto shifted_apply = [&](const Vector& x) -> Vector { return scale * op.apply(x) - x; };

  Vector previous = f;
  Vector current = shifted_apply(f);
  for (std::size_t i = 0; i < filters.size(); ++i) outputs[i] += filters[i].coefficients()[1] * current;
  for (int m = 2; m <= degree; ++m) {
    Vector next = 2.0 * shifted_apply(current) - previous;
    for (std::size_t i = 0; i < filters.size(); ++i) {
      outputs[i] += filters[i].coefficients()[static_cast<std::size_t>(m)] * next;
    }
    previous = std::move(current);
    current = std::move(next);
  }
  return outputs;
}

// ---------------------------------------------------------------------------

std::vector<double> BandComponents::norms() const {
  std::vector<double> out;
  out.reserve(bands.size());
  for (const auto& g : bands) out.push_back(g.norm());
  return out;
}

double BandComponents::energy() const {
  double sum = 0.0;
  for (const auto& g : bands) sum += g.squaredNorm();
  return sum;
}

Vector apply_function(const EigenDecomposition& decomp, const SpectralFunction& beta, const Vector& f) {
  return spectral_multiply(decomp, f, [&](double lambda) {
    const double value = beta(lambda);
    if (!std::isfinite(value)) {
      throw NumericError(beta.name + " is not finite at eigenvalue " + std::to_string(lambda));
    }
    return value;
  });
}

Vector apply_function_chebyshev(const Operator& op, const SpectralFunction& beta, const Vector& f,
                                int degree, double spectral_upper) {
  return ChebyshevFilter(beta, degree, spectral_upper).apply(op, f);
}

Vector apply_semigroup(const EigenDecomposition& decomp, const Vector& f, double t, double c) {
  return apply_function(decomp, heat_function(t, c), f);
}

Vector apply_semigroup_difference(const EigenDecomposition& decomp, const Vector& f, double tau, int r,
                                  double c) {
  return apply_function(decomp, semigroup_difference_function(tau, r, c), f);
}

namespace {

void require_coverage(const FilterBank& bank, double lambda_max) {
  if (std::ldexp(1.0, bank.max_level()) < lambda_max) {
    std::ostringstream msg;
    msg << "filter bank does not cover the spectrum: 2^" << bank.max_level() << " < lambda_max "
        << lambda_max;
    throw ConfigError(msg.str());
  }
}

}  // namespace

BandComponents filter_bank_apply(const EigenDecomposition& decomp, const FilterBank& bank, const Vector& f) {
  require_coverage(bank, decomp.lambda_max);
  const Vector coefficients = spectral_coefficients(decomp, f);
  BandComponents result;
  result.source_norm = f.norm();
  result.bands.reserve(static_cast<std::size_t>(bank.level_count()));
  for (int j = 0; j <= bank.max_level(); ++j) {
    Vector scaled = coefficients;
    for (Eigen::Index i = 0; i < scaled.size(); ++i) scaled[i] *= bank.value(j, decomp.eigenvalues[i]);
    result.bands.emplace_back(decomp.eigenvectors * scaled);
  }
  return result;
}

BandComponents filter_bank_apply_chebyshev(const Operator& op, const FilterBank& bank, const Vector& f,
                                           int degree) {
  std::vector<ChebyshevFilter> filters;
  filters.reserve(static_cast<std::size_t>(bank.level_count()));
  for (int j = 0; j <= bank.max_level(); ++j) {
    filters.emplace_back(window_function(bank, j), degree, bank.lambda_cap());
  }
  BandComponents result;
  result.source_norm = f.norm();
  result.bands = apply_chebyshev_filters(op, filters, f);
  return result;
}

Vector calderon_reconstruct(const EigenDecomposition& decomp, const FilterBank& bank, const Vector& f) {
  require_coverage(bank, decomp.lambda_max);
  const Vector coefficients = spectral_coefficients(decomp, f);
  Vector total = Vector::Zero(f.size());
  for (int j = 0; j <= bank.max_level(); ++j) {
    Vector scaled = coefficients;
    for (Eigen::Index i = 0; i < scaled.size(); ++i) {
      const double psi = bank.value(j, decomp.eigenvalues[i]);
      scaled[i] *= psi * psi;
    }
    total += decomp.eigenvectors * scaled;
  }
  return total;
}

Vector calderon_reconstruct_chebyshev(const Operator& op, const FilterBank& bank, const Vector& f,
                                      int degree) {
  std::vector<ChebyshevFilter> filters;
  for (int j = 0; j <= bank.max_level(); ++j) {
    filters.emplace_back(window_squared_function(bank, j), degree, bank.lambda_cap());
  }
  Vector total = Vector::Zero(f.size());
  for (const auto& g : apply_chebyshev_filters(op, filters, f)) total += g;
  return total;
}

Vector pw_project(const EigenDecomposition& decomp, const Vector& f, double a, double b) {
  require_interval(a, b);
  const double slack = edge_slack(decomp);
  return spectral_multiply(decomp, f, [=](double lambda) { return in_band(lambda, a, b, slack) ? 1.0 : 0.0; });
}

BandlimitCheck is_bandlimited(const EigenDecomposition& decomp, const Vector& f, double a, double b,
                              double tol) {
  require_interval(a, b);
  if (!(tol >= 0.0)) throw ConfigError("bandlimit tolerance must be >= 0");
  const Vector coefficients = spectral_coefficients(decomp, f);
  const double slack = edge_slack(decomp);
  double leakage = 0.0;
  for (Eigen::Index i = 0; i < coefficients.size(); ++i) {
    if (!in_band(decomp.eigenvalues[i], a, b, slack)) leakage += coefficients[i] * coefficients[i];
  }
  return {leakage <= tol * tol * f.squaredNorm(), leakage};
}

double bernstein_check(const EigenDecomposition& decomp, const Vector& f, double a, double b, int k) {
  if (k < 0) throw ConfigError("bernstein_check: k must be >= 0");
  const auto check = is_bandlimited(decomp, f, a, b, 1e-10);
  if (!check.bandlimited) {
    std::ostringstream msg;
    msg << "signal is not bandlimited to [" << a << ", " << b << "] (leakage " << check.leakage << ")";
    throw ConfigError(msg.str());
  }
  const double norm = f.norm();
  if (norm == 0.0) return 0.0;
  return sobolev_norm(decomp, f, k) / (std::pow(b, k) * norm);
}

}  // namespace lpbesov
