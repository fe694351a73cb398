#pragma once

// Besov (semi)norms of a signal with respect to a PSD operator A and the heat
// semigroup T_t = exp(-c t A):
//
//   integral side  ||f|| + ( int_0^1 (s^-alpha Omega_r(s, f))^q ds/s )^(1/q)
//   dyadic side    ||f|| + ( sum_j (2^(j alpha) ||psi_j(A) f||)^q )^(1/q)
//
// with Omega_r(s, f) = sup_{0 < tau <= s} ||(I - T_tau)^r f||, plus the
// diagnostics that probe the two inequalities relating them.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lpbesov/calculus.hpp"
#include "lpbesov/filters.hpp"
#include "lpbesov/operator.hpp"

namespace lpbesov {

inline constexpr int kDefaultSPoints = 512;
inline constexpr int kDefaultTauSamples = 64;

struct BesovParams {
  double alpha = 1.0;
  double q = 2.0;  // +infinity selects the sup / max variants
  int r = 0;       // 0 selects default_order(alpha)
  int s_points = kDefaultSPoints;
  std::optional<double> s_min;  // default 2^-(J + 4)
  int tau_samples = kDefaultTauSamples;
  bool experimental = false;
  double semigroup_c = kDefaultSemigroupConstant;

  bool q_infinite() const noexcept;
  int order() const noexcept { return r > 0 ? r : default_order(alpha); }
  // max(1, ceil(alpha)) when ceil(alpha) < 2 alpha, else ceil(alpha) - 1 (at least 1).
  static int default_order(double alpha) noexcept;

  // Throws ConfigError; returns warnings (e.g. r < alpha). Equivalence runs
  // additionally require r < 2 alpha unless experimental.
  std::vector<std::string> validate(bool equivalence_run = true) const;
  double resolved_s_min(double lambda_cap) const;
};

// Eigenvalues and squared spectral coefficients of one signal; everything the
// modulus of continuity needs, evaluated in O(n) per s.
class SpectralProfile {
public:
  SpectralProfile(const EigenDecomposition& decomp, const Vector& f);

  double norm() const noexcept { return norm_; }
  // ||(I - T_s)^r f||.
  double difference_norm(int r, double s, double c) const;
  // ||A^k f||.
  double power_norm(int k) const;
  // True when A^r f vanishes to roundoff, i.e. f lies in ker A.
  bool in_kernel(int r) const;
  double lambda_max() const noexcept { return lambda_max_; }

private:
  Vector eigenvalues_;
  Vector squared_;
  double norm_ = 0.0;
  double lambda_max_ = 0.0;
};

enum class SeminormStatus { finite, divergent, exact_zero };
std::string_view to_string(SeminormStatus status);

double modulus_of_continuity(const EigenDecomposition& decomp, const Vector& f, int r, double s,
                             double c = kDefaultSemigroupConstant);
// Max of ||(I - T_tau)^r f|| over tau = s k / samples, k = 1..samples.
double modulus_of_continuity_sampled(const EigenDecomposition& decomp, const Vector& f, int r, double s,
                                     int samples, double c = kDefaultSemigroupConstant);

struct SeminormResult {
  double value = 0.0;  // the seminorm term, truncated at s_min for q < inf
  SeminormStatus status = SeminormStatus::finite;
  // Small-s behaviour: integrand ~ (tail_coefficient s^(r - alpha))^q.
  double tail_coefficient = 0.0;
  double tail_exponent = 0.0;
  double s_min = 0.0;
  int s_points = 0;
};

SeminormResult besov_seminorm_integral(const EigenDecomposition& decomp, const Vector& f,
                                       const BesovParams& params);

struct DyadicResult {
  double total = 0.0;  // ||f|| + term
  double term = 0.0;
  std::vector<double> band_norms;
};

DyadicResult besov_norm_dyadic(const EigenDecomposition& decomp, const FilterBank& bank, const Vector& f,
                               const BesovParams& params);
DyadicResult besov_norm_dyadic(const BandComponents& bands, const Vector& f, const BesovParams& params);

// Both sides through matrix-free Chebyshev filtering (no eigendecomposition).
struct BesovNorms {
  SeminormResult integral;
  DyadicResult dyadic;
};
BesovNorms besov_norms_chebyshev(const Operator& op, const FilterBank& bank, const Vector& f,
                                 const BesovParams& params, int degree = kDefaultChebyshevDegree);

struct DecaySlope {
  double slope = 0.0;
  bool exact_zero = false;
};
// Least-squares slope of log Omega_r(s) against log s. s_values must be
// decreasing, inside (0, 1], and span at least two decades.
DecaySlope decay_slope(const EigenDecomposition& decomp, const Vector& f, int r,
                       std::span<const double> s_values, double c = kDefaultSemigroupConstant);
std::vector<double> log_spaced(double from, double to, int count);

struct FilteredNorm {
  double value = 0.0;               // sup_{tau <= s} ||(I - T_tau)^r psi_j(A)||
  double elementary_margin = 0.0;   // value / (c s 2^(j+1))^r, provably <= 1
  double half_power_margin = 0.0;   // value / (s^r 2^((j+1) r / 2)), reported only
};
FilteredNorm filtered_operator_norm(std::span<const double> spectrum, const FilterBank& bank, int j, int r,
                                    double s, double c = kDefaultSemigroupConstant);
// Same, over a dense uniform grid of the level's support.
FilteredNorm filtered_operator_norm(const FilterBank& bank, int j, int r, double s, int grid_points,
                                    double c = kDefaultSemigroupConstant);

struct LemmaWeights {
  double k = -0.01;  // w_j = 2^(k j)
  double m = 0.02;   // c_j = 2^(m j)

  static LemmaWeights defaults(const BesovParams& params);
  void validate() const;  // k < 0 and k + m >= 0
  bool theorem41_feasible(const BesovParams& params) const;
};

struct LemmaBound {
  std::vector<double> s_values;
  std::vector<double> lhs;  // Omega_r(s, f)^q (Omega for q = inf)
  std::vector<double> rhs;  // s^(q r) sum_j (2^(j r/2) w_j^(1/q) c_j ||psi_j(A) f||)^q
  double constant = 0.0;    // max lhs / rhs
  bool grows_with_refinement = false;
};
LemmaBound lemma32_upper_bound(const EigenDecomposition& decomp, const FilterBank& bank, const Vector& f,
                               const BesovParams& params, const LemmaWeights& weights,
                               std::span<const double> s_values);

struct GFunctionParams {
  int n = 2;
  double alpha = 1.0;
  int r = 1;
  double c = kDefaultSemigroupConstant;
  int max_refinements = 20;
  double tolerance = 1e-14;

  // Smallest integer n > (r + 1) / 2.
  static GFunctionParams defaults(const BesovParams& params);
  void validate() const;  // r - alpha + 1 > 0, n >= 0
  bool theorem_regime() const noexcept;  // n > (r + 1) / 2
};

// G(lambda) = lambda^-n int_0^1 s^(r - alpha) (1 - u(s lambda))^r ds.
double compute_G(const GFunctionParams& params, double lambda, double* error_estimate = nullptr);

struct BandMargin {
  int level = 0;
  double margin = 0.0;  // ||G(A) g_j|| / (2^(j(-n+1-alpha+r)) ||g_j||)
  double band_norm = 0.0;
};
// Components in ker A are excluded (G is singular at 0).
std::vector<BandMargin> theorem42_lower_margin(const EigenDecomposition& decomp, const FilterBank& bank,
                                               const Vector& f, const BesovParams& params,
                                               const GFunctionParams& g_params);

struct EquivalenceReport {
  std::string label;
  BesovParams params;  // r and s_min resolved
  double window_sharpness = kDefaultSharpness;
  int max_level = 0;
  double signal_norm = 0.0;
  SeminormResult integral;
  DyadicResult dyadic;
  double integral_side = 0.0;
  double dyadic_side = 0.0;
  double ratio = 0.0;  // integral_side / dyadic_side
  std::optional<double> seminorm_ratio;
  DecaySlope decay;
  LemmaWeights weights;
  double lemma_constant = 0.0;
  bool lemma_grows = false;
  std::vector<std::string> warnings;

  bool flagged() const noexcept { return integral.status == SeminormStatus::divergent; }
};

EquivalenceReport equivalence_report(const EigenDecomposition& decomp, const FilterBank& bank,
                                     const Signal& f, const BesovParams& params);

}  // namespace lpbesov
