#pragma once

#include <complex>

#include "lace/torus.hpp"

namespace lace {

using Spectrum = Eigen::ArrayXcd;

/// d-dimensional DFT on a torus, one axis at a time.
/// forward: fhat(k) = sum_x f(x) e^{-i k.x}; inverse carries the 1/V.
Spectrum fft_forward(const TorusGeometry& g, const Eigen::ArrayXd& f);
Spectrum fft_forward(const TorusGeometry& g, Spectrum f);
Spectrum fft_inverse(const TorusGeometry& g, Spectrum fhat);

/// Inverse transform of a spectrum known to belong to a real table. The largest
/// imaginary residue is returned through `max_imag` when requested.
Eigen::ArrayXd fft_inverse_real(const TorusGeometry& g, const Spectrum& fhat, double* max_imag = nullptr);

/// Real part of the transform; exact for reflection-symmetric tables.
Eigen::ArrayXd symbol(const TorusTabled& f);

TorusTabled convolve(const TorusTabled& f, const TorusTabled& g);

/// Wave-vector component k_axis = 2 pi c / L for spectral index i.
double wave_component(const TorusGeometry& g, Index i, int axis);

}  // namespace lace
