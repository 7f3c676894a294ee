#pragma once

#include <limits>
#include <string>
#include <vector>

#include "lace/fft.hpp"
#include "lace/gs.hpp"
#include "lace/stats.hpp"

namespace lace {

/// Pi_N(x)/N on a torus plus where it came from.
struct PiSource {
  std::string mode;        // "synthetic" | "exact" | "table"
  TorusTabled pi_over_N;
  double O_bar = 0.0;      // synthetic: weight removed from the origin
  double c_tail = 0.0;     // synthetic: tail amplitude
};

/// <x>^{-3(d-2)} with <x> = |x| v 1, minimal image; zero at the origin.
TorusTabled lace_tail(const TorusGeometry& torus, double amplitude);

/// (1 - O_bar) delta + c_tail <x>^{-3(d-2)} off the origin.
PiSource synthetic_pi(const TorusGeometry& torus, double O_bar, double c_tail);

/// Sum over replicas of the full lace coefficient of the exact block system.
PiSource exact_pi(const GSParams& gs, const TorusGeometry& torus);

/// Random-walk data of the block model on the torus: p D(v) = N tanh(J_T(v) eps^2)/(1 - (N-1) tanh I).
struct BlockWalk {
  int N = 0;
  double p = 0.0;
  double tanh_I = 0.0;
  double c = 0.0;  // (N-1) tanh I / (1 - (N-1) tanh I)
  TorusTabled D;
};
BlockWalk block_walk(const GSParams& gs, const TorusGeometry& torus);

/// F = (Pi/N) * pD + c (Pi/N - delta). SupercriticalF when Fhat(0) >= 1.
TorusTabled F_from_Pi(const PiSource& pi, const BlockWalk& walk);

/// Ghat(0) = (Pihat(0)/N) / (1 - Fhat(0)).
double chi_from_F(const PiSource& pi, const TorusTabled& F);

struct QR {
  double q = 0.0;
  double r = 0.0;
  double Fhat0 = 0.0;
  double nabla2_F = 0.0;  // sum |x|^2 F / sum |x|^2 D
};
QR qr_solve(const TorusTabled& F, const TorusTabled& D);

/// E = (delta - q D) - r (delta - F)
TorusTabled assemble_E(const TorusTabled& F, const TorusTabled& D, const QR& qr);
double nabla2_at_zero(const TorusTabled& f, const TorusTabled& D);

struct DecayReport {
  TorusTabled convolution;           // E * S_q
  std::vector<double> shell_radius;  // distinct |x| in the window
  std::vector<double> shell_max;     // max |E * S_q| over each shell
  LinearFit fit;                     // log-log; slope = -(decay exponent)
  double exponent = 0.0;             // +inf when E * S_q vanishes identically
  bool identically_zero = false;
  bool passed = false;               // exponent >= d
  double Ehat0 = 0.0;
  double nabla2_E = 0.0;
};

/// Decay of E * S_q over fit_min <= |x| <= fit_max (defaults to [2, L/4]).
DecayReport e_decay_check(const TorusTabled& E, double q, const TorusTabled& D, double fit_min = 2.0,
                          double fit_max = -1.0);

struct EffectiveWalk {
  TorusTabled Phi;
  TorusTabled D_eff;        // (J - (lambda/2) Phi) / (jhat - (lambda/2) sum Phi)
  double chi_inv = 0.0;     // mu - jhat + (lambda/2) sum Phi
  double killing = 0.0;     // chi_inv / mu
  double A = 0.0;           // sum_{y != o} |y|^2 (J(y) - (lambda/2) Phi(y))
  TorusTabled G;            // <phi_o phi_x> of the linear equation
  double chi_roundtrip = 0.0;  // 1 / sum_x G(x)
  std::vector<double> amplitude_ratio;  // A |x|^{d-2} G(x) / amplitude constant along an axis
};

/// Phi = -eps^2 N^2 (Pi/N - delta)
TorusTabled phi_from_pi(const PiSource& pi, const GSParams& gs);
/// phi2 delta + c_tail <x>^{-3(d-2)} off the origin.
TorusTabled synthetic_phi(const TorusGeometry& torus, double phi2, double c_tail);

/// NonpositiveA when A <= 0.
EffectiveWalk effective_linear_sd(const TorusTabled& Phi, const Coupling& coupling, double lambda, double mu);

}  // namespace lace
