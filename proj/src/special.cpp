#include "lace/special.hpp"

#include <unsupported/Eigen/SpecialFunctions>

#include <cmath>
#include <numbers>

#include "lace/error.hpp"

namespace lace {

namespace {

// Hankel expansion; only used once z is far beyond n^2.
double ie_asymptotic(int n, double z) {
  const double mu = 4.0 * n * n;
  double term = 1.0, sum = 1.0;
  for (int k = 1; k < 30; ++k) {
    const double next = -term * (mu - (2.0 * k - 1) * (2.0 * k - 1)) / (k * 8.0 * z);
    if (std::abs(next) > std::abs(term)) break;
    term = next;
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return sum / std::sqrt(2.0 * std::numbers::pi * z);
}

double ie_series(int n, double z) {
  // e^{-z} sum_k (z/2)^{2k+n} / (k! (k+n)!)
  const double half = 0.5 * z;
  double log_term = n * std::log(half) - std::lgamma(n + 1.0) - z;
  double term = std::exp(log_term);
  double sum = term;
  for (int k = 1; k < 500; ++k) {
    term *= half * half / (static_cast<double>(k) * (k + n));
    sum += term;
    if (term < 1e-17 * sum) break;
  }
  return sum;
}

}  // namespace

std::vector<double> bessel_ie_orders(int nmax, double z) {
  if (nmax < 0 || z < 0.0) fail(ErrorCode::InvalidArgument, "bessel order and argument must be nonnegative");
  std::vector<double> out(nmax + 1, 0.0);
  if (z == 0.0) {
    out[0] = 1.0;
    return out;
  }
  if (z > 1e4 && z > 40.0 * nmax * nmax) {
    for (int k = 0; k <= nmax; ++k) out[k] = ie_asymptotic(k, z);
    return out;
  }
  if (z <= 1.0) {
    for (int k = 0; k <= nmax; ++k) out[k] = ie_series(k, z);
    return out;
  }
  // Miller: downward recurrence I_{k-1} = (2k/z) I_k + I_{k+1}, normalised by I_0.
  const int start = nmax + 32 + static_cast<int>(12.0 * std::sqrt(z));
  double above = 0.0, cur = 1e-300;
  for (int k = start; k > 0; --k) {
    const double below = (2.0 * k / z) * cur + above;
    above = cur;
    cur = below;
    if (k - 1 <= nmax) out[k - 1] = cur;
    if (std::abs(cur) > 1e250) {
      above *= 1e-250;
      cur *= 1e-250;
      for (int j = k - 1; j <= nmax; ++j) out[j] *= 1e-250;
    }
  }
  const double scale = Eigen::numext::bessel_i0e(z) / out[0];
  for (double& v : out) v *= scale;
  return out;
}

double bessel_ie(int n, double z) { return bessel_ie_orders(std::abs(n), z)[std::abs(n)]; }

}  // namespace lace
