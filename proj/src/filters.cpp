#include "lpbesov/filters.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "lpbesov/error.hpp"

namespace lpbesov {

WindowPair::WindowPair(double transition_sharpness) : sharpness_(transition_sharpness) {
  if (!(transition_sharpness > 0.0) || !std::isfinite(transition_sharpness)) {
    throw ConfigError("transition_sharpness must be a positive finite number");
  }
  std::ostringstream desc;
  desc << "telescoping smooth-step windows, sharpness " << transition_sharpness;
  description_ = desc.str();
}

WindowPair make_window_pair(double transition_sharpness) { return WindowPair(transition_sharpness); }

double WindowPair::sigma(double x) const { return x > 0.0 ? std::exp(-sharpness_ / x) : 0.0; }

double WindowPair::step(double x) const {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double a = sigma(x);
  const double b = sigma(1.0 - x);
  return a / (a + b);
}

double WindowPair::step_complement(double x) const {
  if (x <= 0.0) return 1.0;
  if (x >= 1.0) return 0.0;
  const double a = sigma(x);
  const double b = sigma(1.0 - x);
  return b / (a + b);
}

double WindowPair::cutoff(double xi) const { return step_complement(xi - 1.0); }

double WindowPair::low_squared(double xi) const { return cutoff(xi); }

double WindowPair::band_squared(double xi) const {
  // Phi(xi) and Phi(2 xi) never both lie strictly inside (0, 1): on (1/2, 1]
  // Phi(xi) = 1 and on (1, 2) Phi(2 xi) = 0. Each branch is one step evaluation,
  // so adjacent levels sum to step + complement of the same argument.
  if (xi <= 0.5 || xi >= 2.0) return 0.0;
  if (xi <= 1.0) return step(2.0 * xi - 1.0);
  return cutoff(xi);
}

double WindowPair::low(double xi) const { return std::sqrt(low_squared(xi)); }
double WindowPair::band(double xi) const { return std::sqrt(band_squared(xi)); }

// ---------------------------------------------------------------------------

int FilterBank::levels_for(double lambda_cap) {
  if (!(lambda_cap >= 0.0) || !std::isfinite(lambda_cap)) {
    throw ConfigError("spectral cap must be a finite nonnegative number");
  }
  int level = 0;
  while (std::ldexp(1.0, level) < lambda_cap) ++level;
  return level;
}

FilterBank::FilterBank(WindowPair windows, int max_level, double lambda_cap)
    : windows_(std::move(windows)), max_level_(max_level), lambda_cap_(lambda_cap) {
  if (max_level < 0) throw ConfigError("filter bank level J must be nonnegative");
  if (!(lambda_cap >= 0.0) || !std::isfinite(lambda_cap)) {
    throw ConfigError("spectral cap must be a finite nonnegative number");
  }
  if (std::ldexp(1.0, max_level) < lambda_cap) {
    std::ostringstream msg;
    msg << "filter bank does not cover the spectrum: 2^" << max_level << " < " << lambda_cap;
    throw ConfigError(msg.str());
  }
}

FilterBank FilterBank::covering(WindowPair windows, double lambda_cap) {
  const int level = levels_for(lambda_cap);
  return FilterBank(std::move(windows), level, lambda_cap);
}

double FilterBank::value_squared(int j, double xi) const {
  if (j == 0) return windows_.low_squared(xi);
  return windows_.band_squared(std::ldexp(xi, -j));
}

double FilterBank::value(int j, double xi) const { return std::sqrt(value_squared(j, xi)); }

double FilterBank::support_lower(int j) const { return j == 0 ? 0.0 : std::ldexp(1.0, j - 1); }
double FilterBank::support_upper(int j) const { return std::ldexp(1.0, j + 1); }

double eval_psi(const FilterBank& bank, int j, double xi) {
  if (j < 0 || j > bank.max_level()) {
    throw ConfigError("level " + std::to_string(j) + " outside [0, " +
                      std::to_string(bank.max_level()) + "]");
  }
  if (!(xi >= 0.0) || !std::isfinite(xi)) throw ConfigError("eval_psi: xi must be finite and >= 0");
  return bank.value(j, xi);
}

double partition_deviation(const WindowPair& windows, int max_level, double upper, int grid_points) {
  if (grid_points < 2) throw ConfigError("partition check needs at least 2 grid points");
  if (max_level < 0) throw ConfigError("filter bank level J must be nonnegative");
  if (!(upper >= 0.0) || !std::isfinite(upper)) throw ConfigError("grid upper end must be finite and >= 0");

  double deviation = 0.0;
  for (int k = 0; k < grid_points; ++k) {
    const double xi = upper * static_cast<double>(k) / static_cast<double>(grid_points - 1);
    double sum = windows.low(xi) * windows.low(xi);
    for (int j = 1; j <= max_level; ++j) {
      const double v = windows.band(std::ldexp(xi, -j));
      sum += v * v;
    }
    deviation = std::max(deviation, std::abs(sum - 1.0));
  }
  return deviation;
}

double verify_partition(const FilterBank& bank, int grid_points) {
  return partition_deviation(bank.windows(), bank.max_level(), bank.lambda_cap(), grid_points);
}

void write_window_csv(std::ostream& out, const FilterBank& bank, int grid_points, double upper) {
  if (grid_points < 2) throw ConfigError("window table needs at least 2 grid points");
  out << "xi";
  for (int j = 0; j <= bank.max_level(); ++j) out << ",psi_" << j;
  out << '\n';
  out.precision(17);
  for (int k = 0; k < grid_points; ++k) {
    const double xi = upper * static_cast<double>(k) / static_cast<double>(grid_points - 1);
    out << xi;
    for (int j = 0; j <= bank.max_level(); ++j) out << ',' << bank.value(j, xi);
    out << '\n';
  }
}

}  // namespace lpbesov
