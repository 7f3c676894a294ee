#include "lace/gs.hpp"

#include <algorithm>
#include <cmath>

namespace lace {

GSParams gs_params(double lambda, double mu, const Coupling& coupling, int N, bool validate) {
  if (N < 1) fail(ErrorCode::InvalidArgument, "N must be >= 1");
  if (validate) {
    if (!(lambda > 0.0)) fail(ErrorCode::NonpositiveLambda, "lambda must be positive");
    if (N < 2) fail(ErrorCode::InvalidArgument, "N must be >= 2");
    if (static_cast<double>(N) < 2.0 * mu * mu / lambda)
      fail(ErrorCode::FerromagneticViolation,
           "N = " + std::to_string(N) + " < 2 mu^2 / lambda = " + std::to_string(2.0 * mu * mu / lambda));
  } else if (!(lambda > 0.0)) {
    fail(ErrorCode::NonpositiveLambda, "epsilon_N needs lambda > 0");
  }
  GSParams gs;
  gs.lambda = lambda;
  gs.mu = mu;
  gs.N = N;
  const double n = N;
  gs.epsilon = std::pow(lambda * n * n * n / 2.0, -0.25);
  gs.eps2 = 1.0 / std::sqrt(lambda * n * n * n / 2.0);
  gs.I = 1.0 / n - mu * gs.eps2;
  if (validate && gs.I < 0.0) gs.I = 0.0;  // rounding at the boundary N = 2 mu^2 / lambda
  gs.tanh_I = std::tanh(gs.I);
  if (mu != 0.0) gs.tilde_lambda = std::sqrt(lambda / (2.0 * n)) / mu;
  gs.coupling = coupling;
  const double denom = 1.0 - (n - 1.0) * gs.tanh_I;
  if (!(denom > 0.0)) fail(ErrorCode::FugacityOutOfRange, "1 - (N-1) tanh I must be positive");
  double sum_tanh = 0.0;
  for (const auto& e : coupling.entries()) sum_tanh += std::tanh(gs.eps2 * e.value);
  gs.p = n * sum_tanh / denom;
  if (sum_tanh > 0.0) gs.D = step_distribution(coupling, gs.eps2);
  return gs;
}

double intra_block_prefactor(const GSParams& gs) {
  const double t = (gs.N - 1) * gs.tanh_I;
  return t / (1.0 - t);
}

std::vector<double> single_site_log_weights(const GSParams& gs) {
  if (gs.N > 1000000) fail(ErrorCode::InvalidArgument, "exact single-site sums are capped at N = 1e6");
  const int N = gs.N;
  std::vector<double> lw(N + 1);
  const double lgN = std::lgamma(N + 1.0);
  for (int k = 0; k <= N; ++k) {
    const double s = N - 2.0 * k;
    lw[k] = lgN - std::lgamma(k + 1.0) - std::lgamma(N - k + 1.0) - N * std::log(2.0) + 0.5 * gs.I * s * s;
  }
  return lw;
}

std::pair<double, double> phi4_single_site_moments(double lambda, double mu) {
  const double h = 1e-3, a = 12.0;
  const int steps = static_cast<int>(std::lround(2.0 * a / h));
  // log-density is shifted by its maximum so the exponentials stay in range
  auto logf = [&](double x) { return -0.5 * mu * x * x - lambda * x * x * x * x / 24.0; };
  double shift = logf(0.0);
  if (mu < 0.0 && lambda > 0.0) shift = logf(std::sqrt(-6.0 * mu / lambda));
  double z = 0, s2 = 0, s4 = 0;
  for (int i = 0; i <= steps; ++i) {
    const double x = -a + i * h;
    const double c = (i == 0 || i == steps) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    const double f = c * std::exp(logf(x) - shift);
    z += f;
    s2 += f * x * x;
    s4 += f * x * x * x * x;
  }
  return {s2 / z, s4 / z};
}

SingleSiteMoments single_site_moments(const GSParams& gs) {
  const auto lw = single_site_log_weights(gs);
  const double top = *std::max_element(lw.begin(), lw.end());
  SingleSiteMoments m;
  m.N = gs.N;
  double z = 0, s1 = 0, s2 = 0, s3 = 0, s4 = 0;
  for (int k = 0; k <= gs.N; ++k) {
    const double w = std::exp(lw[k] - top);
    const double x = gs.epsilon * (gs.N - 2.0 * k);
    z += w;
    s1 += w * x;
    s2 += w * x * x;
    s3 += w * x * x * x;
    s4 += w * x * x * x * x;
  }
  m.m2 = s2 / z;
  m.m4 = s4 / z;
  m.odd1 = s1 / z;
  m.odd3 = s3 / z;
  std::tie(m.target2, m.target4) = phi4_single_site_moments(gs.lambda, gs.mu);
  m.diff2 = std::abs(m.m2 - m.target2);
  m.diff4 = std::abs(m.m4 - m.target4);
  return m;
}

SpinGraph gs_block_graph(const GSParams& gs, const TorusGeometry& torus) {
  const int N = gs.N;
  const Index V = torus.volume();
  if (V * N > 64) fail(ErrorCode::TooManyVertices, "block graph would exceed 64 vertices");
  std::vector<Bond> bonds;
  for (Index x = 0; x < V; ++x)
    for (int i = 0; i < N; ++i)
      for (int j = i + 1; j < N; ++j)
        if (gs.I > 0.0) bonds.push_back({static_cast<int>(x * N + i), static_cast<int>(x * N + j), gs.I});
  const TorusTabled J = on_torus(gs.coupling, torus);
  for (Index x = 0; x < V; ++x)
    for (Index y = x + 1; y < V; ++y) {
      const double Jxy = J[torus.subtract(y, x)] * gs.eps2;
      if (Jxy <= 0.0) continue;
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
          bonds.push_back({static_cast<int>(x * N + i), static_cast<int>(y * N + j), Jxy});
    }
  SpinGraph g(static_cast<int>(V * N), std::move(bonds));
  std::vector<Site> pos;
  std::vector<int> site, rep;
  for (Index x = 0; x < V; ++x)
    for (int i = 0; i < N; ++i) {
      pos.push_back(torus.coordinates(x));
      site.push_back(static_cast<int>(x));
      rep.push_back(i);
    }
  g.set_positions(std::move(pos));
  g.set_blocks(std::move(site), std::move(rep));
  return g;
}

BlockTwoPoint block_two_point(const Eigen::MatrixXd& C, const GSParams& gs, const TorusGeometry& torus,
                              double tolerance) {
  const int N = gs.N;
  const Index V = torus.volume();
  if (C.rows() != V * N || C.cols() != V * N)
    fail(ErrorCode::InvalidArgument, "correlation matrix does not match the block system");
  BlockTwoPoint out;
  out.block_correlation = TorusTabled(torus);
  out.G = TorusTabled(torus);
  const double a = 1.0 - (N - 1) * gs.tanh_I;
  for (Index x = 0; x < V; ++x) {
    // <sigma_(o,i) sigma~_x> for each replica i
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, block = 0.0;
    for (int i = 0; i < N; ++i) {
      double row = 0.0;
      for (int j = 0; j < N; ++j) row += C(i, x * N + j);
      lo = std::min(lo, row);
      hi = std::max(hi, row);
      block += row;
    }
    out.max_asymmetry = std::max(out.max_asymmetry, hi - lo);
    out.max_asymmetry = std::max(out.max_asymmetry, std::abs(block - N * lo));
    out.block_correlation[x] = block;
    out.G[x] = a / N * block;
  }
  if (out.max_asymmetry > tolerance)
    fail(ErrorCode::BlockAsymmetry, "replicas differ by " + std::to_string(out.max_asymmetry));
  if (gs.mu > 0.0) {
    out.bound_checked = true;
    const double scale = 4.0 / (gs.mu * gs.eps2 * N * N);
    for (Index x = 0; x < V; ++x)
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
          const double delta = (x == 0 && i == j) ? 1.0 : 0.0;
          const double slack = delta + scale * out.G[x] - C(i, x * N + j);
          out.min_bound_slack = std::min(out.min_bound_slack, slack);
        }
  }
  return out;
}

}  // namespace lace
