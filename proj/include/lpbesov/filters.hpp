#pragma once

// Dyadic Littlewood-Paley windows with an exact (telescoping) resolution of
// identity.
//
// With the C-infinity step h(x) = s(x) / (s(x) + s(1 - x)), s(x) = exp(-a / x)
// for x > 0 and 0 otherwise, put Phi(xi) = 1 - h(xi - 1). Phi equals 1 on
// [0, 1], vanishes on [2, inf) and is nonincreasing. The windows are
//
//   psi0(xi)   = sqrt(Phi(xi))                 supported in [0, 2]
//   psi(xi)    = sqrt(Phi(xi) - Phi(2 xi))     supported in [1/2, 2]
//   psi_j(xi)  = psi(2^-j xi),  j >= 1         supported in [2^(j-1), 2^(j+1)]
//
// so that sum_{j<=J} psi_j(xi)^2 = Phi(2^-J xi), which is 1 for xi <= 2^J.
// Both windows are real and nonnegative with values in [0, 1].

#include <ostream>
#include <string>
#include <vector>

namespace lpbesov {

inline constexpr double kDefaultSharpness = 2.0;

class WindowPair {
public:
  explicit WindowPair(double transition_sharpness = kDefaultSharpness);

  double transition_sharpness() const noexcept { return sharpness_; }
  const std::string& description() const noexcept { return description_; }

  // The smooth step h on the real line.
  double step(double x) const;
  // 1 - h(x), computed without cancellation.
  double step_complement(double x) const;
  double cutoff(double xi) const;  // Phi

  double low_squared(double xi) const;   // psi0^2 = Phi
  double band_squared(double xi) const;  // psi^2 = Phi(xi) - Phi(2 xi)
  double low(double xi) const;
  double band(double xi) const;

private:
  double sigma(double x) const;

  double sharpness_;
  std::string description_;
};

WindowPair make_window_pair(double transition_sharpness = kDefaultSharpness);

class FilterBank {
public:
  // Throws ConfigError unless 2^max_level >= lambda_cap.
  FilterBank(WindowPair windows, int max_level, double lambda_cap);

  // Smallest J with 2^J >= lambda_cap.
  static FilterBank covering(WindowPair windows, double lambda_cap);
  static int levels_for(double lambda_cap);

  const WindowPair& windows() const noexcept { return windows_; }
  int max_level() const noexcept { return max_level_; }
  int level_count() const noexcept { return max_level_ + 1; }
  double lambda_cap() const noexcept { return lambda_cap_; }

  // psi_j(xi) and psi_j(xi)^2 without range checks on j.
  double value(int j, double xi) const;
  double value_squared(int j, double xi) const;

  // Closed support of level j: [0, 2] for j = 0, [2^(j-1), 2^(j+1)] otherwise.
  double support_lower(int j) const;
  double support_upper(int j) const;

private:
  WindowPair windows_;
  int max_level_;
  double lambda_cap_;
};

// Throws ConfigError for j outside [0, J] or negative/non-finite xi.
double eval_psi(const FilterBank& bank, int j, double xi);

// max over a uniform grid of [0, upper] of |sum_{j<=max_level} psi_j^2 - 1|.
double partition_deviation(const WindowPair& windows, int max_level, double upper, int grid_points);
double verify_partition(const FilterBank& bank, int grid_points);

// Plot-ready table: xi, psi_0(xi), ..., psi_J(xi) on a uniform grid of [0, upper].
void write_window_csv(std::ostream& out, const FilterBank& bank, int grid_points, double upper);

}  // namespace lpbesov
