#include "lace/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "lace/error.hpp"

namespace lace {

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) fail(ErrorCode::InvalidArgument, "line fit needs >= 2 paired points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) fail(ErrorCode::InvalidArgument, "line fit with degenerate abscissae");
  LinearFit fit;
  fit.points = static_cast<int>(x.size());
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    ss += r * r;
  }
  fit.rms_residual = std::sqrt(ss / n);
  if (x.size() > 2) {
    const double s2 = ss / (n - 2);
    fit.slope_error = std::sqrt(s2 / sxx);
    fit.intercept_error = std::sqrt(s2 * (1.0 / n + mx * mx / sxx));
  }
  return fit;
}

LinearFit fit_power_law(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= 0.0 || y[i] == 0.0) fail(ErrorCode::InvalidArgument, "power-law fit needs positive x and nonzero y");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(std::abs(y[i])));
  }
  return fit_line(lx, ly);
}

double integrated_autocorrelation(const std::vector<double>& series, double window_factor) {
  const std::size_t n = series.size();
  if (n < 4) return 0.5;
  double mean = 0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(n);
  double c0 = 0;
  for (double v : series) c0 += (v - mean) * (v - mean);
  c0 /= static_cast<double>(n);
  if (c0 == 0.0) return 0.5;
  double tau = 0.5;
  const std::size_t t_max = std::min<std::size_t>(n / 4, 5000);
  for (std::size_t t = 1; t < t_max; ++t) {
    double c = 0;
    for (std::size_t i = 0; i + t < n; ++i) c += (series[i] - mean) * (series[i + t] - mean);
    c /= static_cast<double>(n - t);
    tau += c / c0;
    if (static_cast<double>(t) >= window_factor * tau) return std::max(tau, 0.5);
  }
  // window never closed: the series is too short for its correlations
  return std::max(tau, static_cast<double>(n));
}

Estimate blocked_estimate(const std::vector<double>& series) {
  Estimate e;
  e.samples = static_cast<std::int64_t>(series.size());
  if (series.empty()) return e;
  double mean = 0;
  for (double v : series) mean += v;
  mean /= static_cast<double>(series.size());
  e.mean = mean;
  e.tau_int = integrated_autocorrelation(series);
  const auto block = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(6.0 * e.tau_int)));
  const std::int64_t nblocks = e.samples / block;
  if (nblocks < 2) {
    e.error = std::numeric_limits<double>::infinity();
    return e;
  }
  std::vector<double> means(nblocks, 0.0);
  for (std::int64_t b = 0; b < nblocks; ++b) {
    for (std::int64_t i = 0; i < block; ++i) means[b] += series[b * block + i];
    means[b] /= static_cast<double>(block);
  }
  double m = 0;
  for (double v : means) m += v;
  m /= static_cast<double>(nblocks);
  double var = 0;
  for (double v : means) var += (v - m) * (v - m);
  var /= static_cast<double>(nblocks - 1);
  e.error = std::sqrt(var / static_cast<double>(nblocks));
  return e;
}

Estimate jackknife(const std::vector<std::vector<double>>& series, std::int64_t block,
                   const std::function<double(const std::vector<double>&)>& f) {
  if (series.empty()) fail(ErrorCode::InvalidArgument, "jackknife needs at least one series");
  const std::int64_t n = static_cast<std::int64_t>(series.front().size());
  for (const auto& s : series)
    if (static_cast<std::int64_t>(s.size()) != n) fail(ErrorCode::InvalidArgument, "jackknife series differ in length");
  block = std::max<std::int64_t>(1, block);
  const std::int64_t nblocks = n / block;
  Estimate e;
  e.samples = n;
  if (nblocks < 2) {
    e.error = std::numeric_limits<double>::infinity();
    return e;
  }
  const std::size_t k = series.size();
  std::vector<std::vector<double>> sums(nblocks, std::vector<double>(k, 0.0));
  std::vector<double> total(k, 0.0);
  for (std::size_t j = 0; j < k; ++j) {
    for (std::int64_t b = 0; b < nblocks; ++b) {
      for (std::int64_t i = 0; i < block; ++i) sums[b][j] += series[j][b * block + i];
      total[j] += sums[b][j];
    }
  }
  const double used = static_cast<double>(nblocks * block);
  std::vector<double> full(k);
  for (std::size_t j = 0; j < k; ++j) full[j] = total[j] / used;
  e.mean = f(full);
  std::vector<double> leave(nblocks);
  std::vector<double> args(k);
  double avg = 0;
  for (std::int64_t b = 0; b < nblocks; ++b) {
    for (std::size_t j = 0; j < k; ++j) args[j] = (total[j] - sums[b][j]) / (used - static_cast<double>(block));
    leave[b] = f(args);
    avg += leave[b];
  }
  avg /= static_cast<double>(nblocks);
  double var = 0;
  for (double v : leave) var += (v - avg) * (v - avg);
  e.error = std::sqrt(var * static_cast<double>(nblocks - 1) / static_cast<double>(nblocks));
  return e;
}

}  // namespace lace
