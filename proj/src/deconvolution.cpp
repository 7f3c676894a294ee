#include "lace/deconvolution.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "lace/green.hpp"

namespace lace {

TorusTabled lace_tail(const TorusGeometry& torus, double amplitude) {
  TorusTabled t(torus);
  const double power = -3.0 * (torus.dim() - 2);
  for (Index x = 1; x < torus.volume(); ++x) t[x] = amplitude * std::pow(std::max(1.0, std::sqrt(torus.norm2(x))), power);
  return t;
}

PiSource synthetic_pi(const TorusGeometry& torus, double O_bar, double c_tail) {
  PiSource s;
  s.mode = "synthetic";
  s.O_bar = O_bar;
  s.c_tail = c_tail;
  s.pi_over_N = lace_tail(torus, c_tail);
  s.pi_over_N[0] = 1.0 - O_bar;
  return s;
}

PiSource exact_pi(const GSParams& gs, const TorusGeometry& torus) {
  const SpinGraph g = gs_block_graph(gs, torus);
  const Eigen::MatrixXd C = spin_two_point_exact(g);
  const Eigen::MatrixXd pi = full_pi(C, g);
  PiSource s;
  s.mode = "exact";
  s.pi_over_N = TorusTabled(torus);
  const int N = gs.N;
  for (Index x = 0; x < torus.volume(); ++x) {
    double sum = 0.0;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < N; ++j) sum += pi(i, x * N + j);
    s.pi_over_N[x] = sum / N;
  }
  return s;
}

BlockWalk block_walk(const GSParams& gs, const TorusGeometry& torus) {
  BlockWalk w;
  w.N = gs.N;
  w.tanh_I = gs.tanh_I;
  const double denom = 1.0 - (gs.N - 1) * gs.tanh_I;
  if (!(denom > 0.0)) fail(ErrorCode::FugacityOutOfRange, "1 - (N-1) tanh I must be positive");
  w.c = (gs.N - 1) * gs.tanh_I / denom;
  const TorusTabled J = on_torus(gs.coupling, torus);
  w.D = TorusTabled(torus);
  double sum = 0.0;
  for (Index v = 0; v < torus.volume(); ++v) {
    w.D[v] = std::tanh(gs.eps2 * J[v]);
    sum += w.D[v];
  }
  if (!(sum > 0.0)) fail(ErrorCode::ZeroCoupling, "sum of tanh J vanishes");
  w.D.values /= sum;
  w.p = gs.N * sum / denom;
  return w;
}

TorusTabled F_from_Pi(const PiSource& pi, const BlockWalk& walk) {
  const TorusTabled& P = pi.pi_over_N;
  if (!(P.geometry == walk.D.geometry)) fail(ErrorCode::InvalidArgument, "Pi and D live on different tori");
  TorusTabled pD = walk.D;
  pD.values *= walk.p;
  TorusTabled F = convolve(P, pD);
  F.values += walk.c * P.values;
  F[0] -= walk.c;
  const double Fhat0 = F.sum();
  if (!(Fhat0 < 1.0)) fail(ErrorCode::SupercriticalF, "Fhat(0) = " + std::to_string(Fhat0) + " >= 1");
  return F;
}

double chi_from_F(const PiSource& pi, const TorusTabled& F) {
  const double Fhat0 = F.sum();
  if (!(Fhat0 < 1.0)) fail(ErrorCode::SupercriticalF, "Fhat(0) = " + std::to_string(Fhat0) + " >= 1");
  return pi.pi_over_N.sum() / (1.0 - Fhat0);
}

double nabla2_at_zero(const TorusTabled& f, const TorusTabled& D) {
  const double m2D = second_moment(D);
  if (m2D == 0.0) fail(ErrorCode::DegenerateCurvature, "sum |x|^2 D(x) vanishes");
  return second_moment(f) / m2D;
}

QR qr_solve(const TorusTabled& F, const TorusTabled& D) {
  QR out;
  out.Fhat0 = F.sum();
  out.nabla2_F = nabla2_at_zero(F, D);
  out.r = 1.0 / (1.0 - out.Fhat0 + out.nabla2_F);
  out.q = out.r * out.nabla2_F;
  return out;
}

TorusTabled assemble_E(const TorusTabled& F, const TorusTabled& D, const QR& qr) {
  TorusTabled E(F.geometry);
  E.values = -qr.q * D.values + qr.r * F.values;
  E[0] += 1.0 - qr.r;
  return E;
}

DecayReport e_decay_check(const TorusTabled& E, double q, const TorusTabled& D, double fit_min, double fit_max) {
  const TorusGeometry& g = E.geometry;
  if (fit_max < 0.0) fit_max = g.side() / 4.0;
  if (q > 1.0 + 1e-15) fail(ErrorCode::FugacityOutOfRange, "q must not exceed 1");
  DecayReport rep;
  rep.Ehat0 = E.sum();
  rep.nabla2_E = nabla2_at_zero(E, D);
  const Eigen::ArrayXd dhat = symbol(D);
  Spectrum s = fft_forward(g, E.values);
  for (Index k = 0; k < g.volume(); ++k) {
    const double denom = 1.0 - q * dhat(k);
    // Ehat(0) = 0 by construction, so the massless zero mode is dropped
    s(k) = std::abs(denom) < 1e-13 ? 0.0 : s(k) / denom;
  }
  rep.convolution = TorusTabled(g, fft_inverse_real(g, s));

  std::map<long, double> shells;  // |x|^2 -> max |value|
  for (Index x = 0; x < g.volume(); ++x) {
    const double r2 = g.norm2(x);
    if (r2 < fit_min * fit_min - 1e-9 || r2 > fit_max * fit_max + 1e-9) continue;
    auto& m = shells[std::lround(r2)];
    m = std::max(m, std::abs(rep.convolution[x]));
  }
  if (shells.size() < 4) fail(ErrorCode::FitWindowTooSmall, "fewer than 4 radial shells in the fit window");
  const double scale = E.values.abs().sum();
  double largest = 0.0;
  for (const auto& [r2, m] : shells) largest = std::max(largest, m);
  if (scale < 1e-13 || largest <= 1e-13 * scale) {
    // E * S_q vanishes up to rounding: nothing to fit
    rep.identically_zero = true;
    rep.exponent = std::numeric_limits<double>::infinity();
    rep.passed = true;
    for (const auto& [r2, m] : shells) {
      rep.shell_radius.push_back(std::sqrt(static_cast<double>(r2)));
      rep.shell_max.push_back(m);
    }
    return rep;
  }
  for (const auto& [r2, m] : shells) {
    if (m == 0.0) continue;
    rep.shell_radius.push_back(std::sqrt(static_cast<double>(r2)));
    rep.shell_max.push_back(m);
  }
  if (rep.shell_radius.size() < 4) fail(ErrorCode::FitWindowTooSmall, "fewer than 4 nonzero shells to fit");
  rep.fit = fit_power_law(rep.shell_radius, rep.shell_max);
  rep.exponent = -rep.fit.slope;
  rep.passed = rep.exponent >= g.dim();
  return rep;
}

TorusTabled phi_from_pi(const PiSource& pi, const GSParams& gs) {
  TorusTabled Phi = pi.pi_over_N;
  Phi[0] -= 1.0;
  Phi.values *= -gs.eps2 * gs.N * gs.N;
  return Phi;
}

TorusTabled synthetic_phi(const TorusGeometry& torus, double phi2, double c_tail) {
  TorusTabled Phi = lace_tail(torus, c_tail);
  Phi[0] = phi2;
  return Phi;
}

EffectiveWalk effective_linear_sd(const TorusTabled& Phi, const Coupling& coupling, double lambda, double mu) {
  const TorusGeometry& g = Phi.geometry;
  EffectiveWalk w;
  w.Phi = Phi;
  const TorusTabled J = on_torus(coupling, g);
  TorusTabled K(g);
  K.values = J.values - 0.5 * lambda * Phi.values;
  const double norm = K.sum();
  w.chi_inv = mu - norm;
  w.killing = w.chi_inv / mu;
  if (norm == 0.0) fail(ErrorCode::ZeroCoupling, "effective coupling sums to zero");
  w.D_eff = K;
  w.D_eff.values /= norm;
  w.A = second_moment(K);  // the origin carries |y|^2 = 0
  if (!(w.A > 0.0)) fail(ErrorCode::NonpositiveA, "A = " + std::to_string(w.A));

  const Eigen::ArrayXd khat = symbol(K);
  Spectrum s(g.volume());
  for (Index k = 0; k < g.volume(); ++k) {
    const double m = mu - khat(k);
    if (!(m > 0.0)) fail(ErrorCode::SingularMode, "mu - Khat(k) must stay positive");
    s(k) = 1.0 / m;
  }
  w.G = TorusTabled(g, fft_inverse_real(g, s));
  w.chi_roundtrip = 1.0 / w.G.sum();
  if (g.dim() > 2) {
    const double amp = asymptotic_amplitude(g.dim(), 1.0);
    for (int r = 1; r <= g.side() / 4; ++r) {
      Site x = Site::Zero(g.dim());
      x(0) = r;
      w.amplitude_ratio.push_back(w.A * std::pow(r, g.dim() - 2) * w.G.at(x) / amp);
    }
  }
  return w;
}

}  // namespace lace
