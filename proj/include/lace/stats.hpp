#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace lace {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_error = 0.0;
  double intercept_error = 0.0;
  double rms_residual = 0.0;
  int points = 0;
};

/// Ordinary least squares y = intercept + slope x.
LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Fit log|y| = c + e log x; slope is the exponent e.
LinearFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y);

/// Mean with its uncertainty and the bookkeeping of the run that produced it.
struct Estimate {
  double mean = 0.0;
  double error = 0.0;
  double tau_int = 0.5;
  std::int64_t samples = 0;
  std::int64_t burn_in = 0;
  std::uint64_t seed = 0;
};

/// Integrated autocorrelation time with the self-consistent window W >= c tau.
double integrated_autocorrelation(const std::vector<double>& series, double window_factor = 6.0);

/// Mean and blocked standard error; block length is at least 6 tau_int.
/// tau_int is returned unchanged so callers can inspect it.
Estimate blocked_estimate(const std::vector<double>& series);

/// Jackknife over blocks of length `block` for a function of several series means.
Estimate jackknife(const std::vector<std::vector<double>>& series, std::int64_t block,
                   const std::function<double(const std::vector<double>&)>& f);

}  // namespace lace
