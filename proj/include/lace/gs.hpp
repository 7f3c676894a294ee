#pragma once

#include <limits>
#include <vector>

#include "lace/coupling.hpp"
#include "lace/exact.hpp"

namespace lace {

/// Griffiths-Simon parameters: each phi^4 spin ~ eps_N times a sum of N Ising spins
/// coupled pairwise with I inside the block and J = coupling * eps_N^2 across sites.
struct GSParams {
  double lambda = 0.0;
  double mu = 0.0;
  int N = 0;
  double epsilon = 0.0;  // (lambda N^3 / 2)^{-1/4}
  double eps2 = 0.0;
  double I = 0.0;        // 1/N - mu eps^2
  double tanh_I = 0.0;
  double tilde_lambda = std::numeric_limits<double>::infinity();  // 1 / (mu eps^2 N^2)
  Coupling coupling;     // the phi^4 coupling; bonds carry coupling * eps2
  double p = 0.0;        // N sum tanh J / (1 - (N-1) tanh I)
  Coupling D;            // tanh J / sum tanh J (empty when the coupling vanishes)
};

/// FerromagneticViolation when I < 0; NonpositiveLambda when lambda <= 0.
/// `validate = false` skips both checks (pure arithmetic use).
GSParams gs_params(double lambda, double mu, const Coupling& coupling, int N, bool validate = true);

/// (N - 1) tanh I / (1 - (N - 1) tanh I)
double intra_block_prefactor(const GSParams& gs);

struct SingleSiteMoments {
  int N = 0;
  double m2 = 0.0, m4 = 0.0;            // <(eps sigma~)^2>, <(eps sigma~)^4> at finite N
  double target2 = 0.0, target4 = 0.0;  // phi^4 single-site measure
  double diff2 = 0.0, diff4 = 0.0;      // |finite N - target|
  double odd1 = 0.0, odd3 = 0.0;        // first and third moments
};

/// Log-domain weights w_k = C(N,k) 2^{-N} exp(I s^2/2), s = N - 2k. N <= 1e6.
std::vector<double> single_site_log_weights(const GSParams& gs);
SingleSiteMoments single_site_moments(const GSParams& gs);

/// Moments of exp(-mu phi^2/2 - lambda phi^4/24): composite Simpson, |phi| <= 12, h = 1e-3.
std::pair<double, double> phi4_single_site_moments(double lambda, double mu);

/// N replicas per site of a torus; vertex (x, i) has index x N + i.
SpinGraph gs_block_graph(const GSParams& gs, const TorusGeometry& torus);

struct BlockTwoPoint {
  TorusTabled block_correlation;  // <sigma~_o sigma~_x>
  TorusTabled G;                  // (1 - (N-1) tanh I)/N <sigma~_o sigma~_x>
  double max_asymmetry = 0.0;     // spread of <sigma_(o,i) sigma~_x> over i, and block identity
  double min_bound_slack = std::numeric_limits<double>::infinity();  // delta + 4G/(mu eps^2 N^2) - <sigma sigma>
  bool bound_checked = false;     // needs mu > 0
};

/// From a vertex-level correlation matrix of gs_block_graph. BlockAsymmetry if the
/// replicas are not exchangeable within `tolerance`.
BlockTwoPoint block_two_point(const Eigen::MatrixXd& C, const GSParams& gs, const TorusGeometry& torus,
                              double tolerance = 1e-10);

}  // namespace lace
