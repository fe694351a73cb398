#pragma once

// Functional calculus beta(A) on the exact eigenbasis and through matrix-free
// Chebyshev filtering; the heat semigroup T_t = exp(-c t A); the filter bank
// psi_j(A) applied to signals; Calderon reconstruction; Paley-Wiener
// (spectral band) projection.

#include <functional>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "lpbesov/filters.hpp"
#include "lpbesov/operator.hpp"

namespace lpbesov {

inline constexpr double kDefaultSemigroupConstant = 1.0;
inline constexpr int kDefaultChebyshevDegree = 200;

struct SpectralFunction {
  std::function<double(double)> evaluator;
  double bounded_lower = 0.0;
  double bounded_upper = std::numeric_limits<double>::infinity();
  std::string name;

  double operator()(double xi) const { return evaluator(xi); }
};

SpectralFunction constant_function(double value);
SpectralFunction identity_function();
// u(t xi) = exp(-c t xi).
SpectralFunction heat_function(double t, double c = kDefaultSemigroupConstant);
// (1 - exp(-c tau xi))^r.
SpectralFunction semigroup_difference_function(double tau, int r, double c = kDefaultSemigroupConstant);
SpectralFunction window_function(const FilterBank& bank, int j);
SpectralFunction window_squared_function(const FilterBank& bank, int j);

// Chebyshev interpolant of a spectral function on [0, upper], built on the
// K + 1 Chebyshev points of the second kind cos(k pi / K).
class ChebyshevFilter {
public:
  ChebyshevFilter(const SpectralFunction& target, int degree, double upper);

  int degree() const noexcept { return degree_; }
  double upper() const noexcept { return upper_; }
  const std::vector<double>& coefficients() const noexcept { return coefficients_; }
  // |c_{K-1}| + |c_K|, a cheap proxy for the truncation error.
  double tail_magnitude() const noexcept;

  double evaluate(double xi) const;
  Vector apply(const Operator& op, const Vector& f) const;

private:
  int degree_;
  double upper_;
  std::vector<double> coefficients_;
};

// Evaluates several filters of equal degree and interval with one shared
// three-term recurrence (one matrix-vector product per degree).
std::vector<Vector> apply_chebyshev_filters(const Operator& op, std::span<const ChebyshevFilter> filters,
                                            const Vector& f);

struct BandComponents {
  std::vector<Vector> bands;  // g_j = psi_j(A) f, j = 0..J
  double source_norm = 0.0;

  std::vector<double> norms() const;
  double energy() const;  // sum_j ||g_j||^2
};

Vector apply_function(const EigenDecomposition& decomp, const SpectralFunction& beta, const Vector& f);
Vector apply_function_chebyshev(const Operator& op, const SpectralFunction& beta, const Vector& f,
                                int degree, double spectral_upper);

Vector apply_semigroup(const EigenDecomposition& decomp, const Vector& f, double t,
                       double c = kDefaultSemigroupConstant);
// (I - T_tau)^r f applied in one spectral pass.
Vector apply_semigroup_difference(const EigenDecomposition& decomp, const Vector& f, double tau, int r,
                                  double c = kDefaultSemigroupConstant);

BandComponents filter_bank_apply(const EigenDecomposition& decomp, const FilterBank& bank, const Vector& f);
BandComponents filter_bank_apply_chebyshev(const Operator& op, const FilterBank& bank, const Vector& f,
                                           int degree = kDefaultChebyshevDegree);

// sum_j psi_j(A) (psi_j(A) f).
Vector calderon_reconstruct(const EigenDecomposition& decomp, const FilterBank& bank, const Vector& f);
Vector calderon_reconstruct_chebyshev(const Operator& op, const FilterBank& bank, const Vector& f,
                                      int degree = kDefaultChebyshevDegree);

// Keeps the spectral components with eigenvalue in [a, b].
Vector pw_project(const EigenDecomposition& decomp, const Vector& f, double a, double b);

struct BandlimitCheck {
  bool bandlimited = false;
  double leakage = 0.0;  // sum of e_i^2 over eigenvalues outside [a, b]
};
BandlimitCheck is_bandlimited(const EigenDecomposition& decomp, const Vector& f, double a, double b,
                              double tol);

// ||A^k f|| / (b^k ||f||) for f in PW_[a,b]; throws if f leaks outside [a, b].
double bernstein_check(const EigenDecomposition& decomp, const Vector& f, double a, double b, int k);

}  // namespace lpbesov
