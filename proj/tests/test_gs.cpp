#include <doctest.h>

#include <cmath>

#include "lace/exact.hpp"
#include "lace/gs.hpp"

using namespace lace;

namespace {

template <typename F>
void expect_code(ErrorCode code, F&& f) {
  try {
    f();
    FAIL("no error raised");
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

const Coupling kNone = nearest_neighbor(1, 0.0);

// <(eps sigma~)^k> by plain summation over all 2^N spin configurations collapsed to
// s = N - 2k with binomial multiplicities, no logarithms.
double direct_moment(const GSParams& gs, int order) {
  double num = 0.0, den = 0.0, binom = 1.0;
  for (int k = 0; k <= gs.N; ++k) {
    if (k > 0) binom = binom * (gs.N - k + 1) / k;
    const double s = gs.N - 2.0 * k;
    const double w = binom * std::exp(0.5 * gs.I * s * s);
    den += w;
    num += w * std::pow(gs.epsilon * s, order);
  }
  return num / den;
}

}  // namespace

TEST_CASE("parameter arithmetic") {
  CHECK(gs_params(2.0, 0.0, kNone, 1, false).epsilon == doctest::Approx(1.0).epsilon(1e-15));
  const GSParams a = gs_params(0.5, 1.0, kNone, 16);
  CHECK(a.eps2 == doctest::Approx(1.0 / 32).epsilon(1e-15));
  CHECK(a.I == doctest::Approx(0.03125).epsilon(1e-14));
  expect_code(ErrorCode::FerromagneticViolation, [] { gs_params(0.5, 1.0, kNone, 3); });
  expect_code(ErrorCode::NonpositiveLambda, [] { gs_params(0.0, 1.0, kNone, 16); });
  expect_code(ErrorCode::NonpositiveLambda, [] { gs_params(-1.0, 1.0, kNone, 16); });
}

TEST_CASE("parameter identities") {
  for (double lambda : {0.1, 0.5, 2.0})
    for (double mu : {0.3, 1.0})
      for (int N : {64, 256, 4096}) {
        const GSParams g = gs_params(lambda, mu, kNone, N);
        const double n = N;
        CHECK(std::pow(g.epsilon, 4) * 0.5 * lambda * n * n * n == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(g.tilde_lambda == doctest::Approx(1.0 / (mu * g.eps2 * n * n)).epsilon(1e-14));
        CHECK(g.tilde_lambda == doctest::Approx(std::sqrt(lambda / (2.0 * n)) / mu).epsilon(1e-14));
      }
}

TEST_CASE("limits along doubling N") {
  double prev_IN = 0.0, prev_e2N = 1e300;
  for (int N = 16; N <= (1 << 20); N *= 2) {
    const GSParams g = gs_params(1.0, 1.0, kNone, N);
    const double IN = g.I * N, e2N = g.eps2 * N;
    CHECK(IN > prev_IN);
    CHECK(IN < 1.0);
    CHECK(e2N < prev_e2N);
    prev_IN = IN;
    prev_e2N = e2N;
  }
  CHECK(prev_IN > 0.99);
}

TEST_CASE("log-domain moments reproduce direct sums") {
  for (int N = 2; N <= 30; ++N)
    for (double mu : {0.0, 0.4}) {
      const GSParams g = gs_params(1.0, mu, kNone, N);
      const SingleSiteMoments m = single_site_moments(g);
      CHECK(m.m2 == doctest::Approx(direct_moment(g, 2)).epsilon(1e-13));
      CHECK(m.m4 == doctest::Approx(direct_moment(g, 4)).epsilon(1e-13));
      // weights are normalised: sum_k exp(log w_k - max) relations are internal, check the total
      const auto lw = single_site_log_weights(g);
      double total = 0.0;
      for (double w : lw) total += std::exp(w);
      double direct = 0.0, binom = 1.0;
      for (int k = 0; k <= N; ++k) {
        if (k > 0) binom = binom * (N - k + 1) / k;
        const double s = N - 2.0 * k;
        direct += binom * std::pow(2.0, -N) * std::exp(0.5 * g.I * s * s);
      }
      CHECK(total == doctest::Approx(direct).epsilon(1e-13));
    }
}

TEST_CASE("single-site moments") {
  GSParams g = gs_params(3.0, 0.0, kNone, 1, false);
  g.I = 0.0;
  g.tanh_I = 0.0;
  CHECK(single_site_moments(g).m2 == doctest::Approx(g.eps2).epsilon(1e-15));

  const GSParams sym = gs_params(1.0, 0.0, kNone, 64);
  const SingleSiteMoments m = single_site_moments(sym);
  CHECK(std::abs(m.odd1) <= 1e-14);
  CHECK(std::abs(m.odd3) <= 1e-14);

  double prev2 = 1e300, prev4 = 1e300;
  for (int N : {16, 64, 256}) {
    const SingleSiteMoments s = single_site_moments(gs_params(1.0, 1.0, kNone, N));
    CHECK(s.diff2 < prev2);
    CHECK(s.diff4 < prev4);
    prev2 = s.diff2;
    prev4 = s.diff4;
  }
}

TEST_CASE("single-site quadrature") {
  // Gaussian limit
  const auto [m2, m4] = phi4_single_site_moments(1e-14, 2.0);
  CHECK(m2 == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(m4 == doctest::Approx(0.75).epsilon(1e-10));
  // pure quartic: <phi^2> = sqrt(24/lambda) Gamma(3/4)/Gamma(1/4)
  const auto [q2, q4] = phi4_single_site_moments(1.0, 0.0);
  CHECK(q2 == doctest::Approx(std::sqrt(24.0) * std::tgamma(0.75) / std::tgamma(0.25)).epsilon(1e-10));
  CHECK(q4 == doctest::Approx(6.0).epsilon(1e-10));  // <phi^4> = 24/lambda * 1/4
}

TEST_CASE("block two-point: decoupled sites") {
  // lambda = 1, N = 2: eps^2 = 1/2, so mu = 1 puts I exactly at 0
  const GSParams g = gs_params(1.0, 1.0, kNone, 2);
  CHECK(g.I == 0.0);
  const TorusGeometry t(1, 2);
  const SpinGraph graph = gs_block_graph(g, t);
  CHECK(graph.bonds().empty());
  const BlockTwoPoint b = block_two_point(spin_two_point_exact(graph), g, t);
  CHECK(b.G[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(b.G[1]) <= 1e-15);
}

TEST_CASE("block two-point: one site with intra-block coupling") {
  const GSParams g = gs_params(2.0, 0.5, kNone, 2);
  REQUIRE(g.I > 0.0);
  const TorusGeometry t(1, 2);
  const BlockTwoPoint b = block_two_point(spin_two_point_exact(gs_block_graph(g, t)), g, t);
  // four configurations of the two replicas
  double num = 0.0, den = 0.0;
  for (int s1 : {-1, 1})
    for (int s2 : {-1, 1}) {
      const double w = std::exp(g.I * s1 * s2);
      num += w * (s1 + s2) * (s1 + s2);
      den += w;
    }
  const double sq = num / den;
  CHECK(sq == doctest::Approx(2.0 * (1.0 + std::tanh(g.I))).epsilon(1e-14));
  CHECK(b.G[0] == doctest::Approx((1.0 - std::tanh(g.I)) / 2.0 * sq).epsilon(1e-14));
}

TEST_CASE("block two-point: two coupled sites") {
  const GSParams g = gs_params(2.0, 1.0, nearest_neighbor(1, 0.5), 2);
  const TorusGeometry t(1, 2);
  const SpinGraph graph = gs_block_graph(g, t);
  CHECK(graph.vertex_count() == 4);
  CHECK(graph.bonds().size() == 6);
  const BlockTwoPoint b = block_two_point(spin_two_point_exact(graph), g, t);
  CHECK(b.bound_checked);
  CHECK(b.min_bound_slack >= 0.0);
  CHECK(b.max_asymmetry <= 1e-14);

  Eigen::MatrixXd C = spin_two_point_exact(graph);
  C(0, 2) += 1e-3;
  C(2, 0) += 1e-3;
  expect_code(ErrorCode::BlockAsymmetry, [&] { block_two_point(C, g, t); });
}
