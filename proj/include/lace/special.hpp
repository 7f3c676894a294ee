#pragma once

#include <vector>

namespace lace {

/// Exponentially scaled modified Bessel function e^{-z} I_n(z), z >= 0.
double bessel_ie(int n, double z);

/// e^{-z} I_k(z) for k = 0..nmax in one pass.
std::vector<double> bessel_ie_orders(int nmax, double z);

}  // namespace lace
