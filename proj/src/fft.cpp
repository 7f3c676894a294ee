#include "lace/fft.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <numbers>
#include <vector>

namespace lace {

namespace {

void transform(const TorusGeometry& g, Spectrum& data, bool inverse) {
  const Index L = g.side();
  const Index V = g.volume();
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> line(L), out(L);
  Index stride = 1;
  for (int axis = 0; axis < g.dim(); ++axis) {
    // every line along `axis` starts at an index whose axis digit is 0
    for (Index base = 0; base < V; ++base) {
      if ((base / stride) % L != 0) continue;
      for (Index j = 0; j < L; ++j) line[j] = data(base + j * stride);
      if (inverse)
        fft.inv(out.data(), line.data(), L);
      else
        fft.fwd(out.data(), line.data(), L);
      for (Index j = 0; j < L; ++j) data(base + j * stride) = out[j];
    }
    stride *= L;
  }
}

}  // namespace

Spectrum fft_forward(const TorusGeometry& g, const Eigen::ArrayXd& f) {
  return fft_forward(g, Spectrum(f.cast<std::complex<double>>()));
}

Spectrum fft_forward(const TorusGeometry& g, Spectrum f) {
  if (f.size() != g.volume()) fail(ErrorCode::InvalidArgument, "fft input size does not match torus");
  transform(g, f, false);
  return f;
}

Spectrum fft_inverse(const TorusGeometry& g, Spectrum fhat) {
  if (fhat.size() != g.volume()) fail(ErrorCode::InvalidArgument, "fft input size does not match torus");
  transform(g, fhat, true);
  return fhat;
}

Eigen::ArrayXd fft_inverse_real(const TorusGeometry& g, const Spectrum& fhat, double* max_imag) {
  Spectrum f = fft_inverse(g, fhat);
  if (max_imag) *max_imag = f.imag().abs().maxCoeff();
  return f.real();
}

Eigen::ArrayXd symbol(const TorusTabled& f) { return fft_forward(f.geometry, f.values).real(); }

TorusTabled convolve(const TorusTabled& f, const TorusTabled& g) {
  if (!(f.geometry == g.geometry)) fail(ErrorCode::InvalidArgument, "convolving tables on different tori");
  Spectrum h = fft_forward(f.geometry, f.values) * fft_forward(g.geometry, g.values);
  return TorusTabled(f.geometry, fft_inverse_real(f.geometry, h));
}

double wave_component(const TorusGeometry& g, Index i, int axis) {
  return 2.0 * std::numbers::pi * g.component(i, axis) / g.side();
}

}  // namespace lace
