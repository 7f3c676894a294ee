#include <doctest.h>

#include <cmath>

#include "lace/exact.hpp"
#include "oracles.hpp"

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

std::vector<double> uniform(std::size_t n, double J) { return std::vector<double>(n, J); }

}  // namespace

TEST_CASE("closed forms") {
  const SpinGraph bond = oracle::make_graph(2, {{0, 1}}, 0.5);
  CHECK(spin_two_point_exact(bond)(0, 1) == doctest::Approx(std::tanh(0.5)).epsilon(1e-15));

  const double t = std::tanh(0.5);
  const double k3 = (t + t * t) / (1.0 + t * t * t);
  const SpinGraph tri = oracle::make_graph(3, {{0, 1}, {1, 2}, {0, 2}}, 0.5);
  const Eigen::MatrixXd C = spin_two_point_exact(tri);
  CHECK(C(0, 1) == doctest::Approx(k3).epsilon(1e-14));
  CHECK(C(0, 1) == doctest::Approx(0.614979458970125).epsilon(1e-13));

  const SpinGraph free4 = oracle::make_graph(4, {{0, 1}, {1, 2}, {2, 3}}, 0.0);
  CHECK((spin_two_point_exact(free4) - Eigen::MatrixXd::Identity(4, 4)).norm() == 0.0);
  CHECK((current_two_point(free4) - Eigen::MatrixXd::Identity(4, 4)).norm() == 0.0);
}

TEST_CASE("spin sum, current sum and the plain loop agree on every small connected graph") {
  int graphs = 0;
  for (const auto& sg : oracle::graph_suite())
    for (double J : {0.1, 0.7, 2.0}) {
      const SpinGraph g = oracle::make_graph(sg.n, sg.edges, J);
      const Eigen::MatrixXd S = spin_two_point_exact(g);
      const Eigen::MatrixXd Cur = current_two_point(g);
      const auto ref = oracle::spin_sum(sg.n, sg.edges, uniform(sg.edges.size(), J));
      for (int a = 0; a < sg.n; ++a)
        for (int b = 0; b < sg.n; ++b) {
          CHECK(S(a, b) == doctest::Approx(ref[a][b]).epsilon(1e-13));
          CHECK(Cur(a, b) == doctest::Approx(ref[a][b]).epsilon(1e-12));
        }
      ++graphs;
    }
  CHECK(graphs == 3 * (1 + 1 + 4 + 38));
}

TEST_CASE("collapsed currents match raw truncated currents") {
  const std::vector<std::vector<oracle::Edge>> graphs = {
      {{0, 1}, {1, 2}, {0, 2}},
      {{0, 1}, {1, 2}, {2, 3}, {0, 3}},
      {{0, 1}, {1, 2}, {0, 2}, {2, 3}},
      {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}},
  };
  const double J = 0.3;
  const int nmax = 8;
  for (const auto& edges : graphs) {
    const int n = edges.size() == 3 ? 3 : 4;
    const SpinGraph g = oracle::make_graph(n, edges, J);
    const double tol = 10.0 * edges.size() * oracle::poisson_tail(J, nmax) + 1e-13;
    const auto two = oracle::raw_current_two_point(n, edges, uniform(edges.size(), J), 0, nmax);
    const Eigen::MatrixXd Cur = current_two_point(g);
    for (int x = 0; x < n; ++x) CHECK(std::abs(Cur(0, x) - two[x]) <= tol);
    if (edges.size() <= 4) {
      const auto p = oracle::raw_current_pi0(n, edges, uniform(edges.size(), J), 0, nmax);
      const Eigen::VectorXd P = pi0(g, 0);
      for (int x = 0; x < n; ++x) CHECK(std::abs(P(x) - p[x]) <= tol);
    }
  }
}

TEST_CASE("pi0 special cases") {
  // trees have no doubly connected pairs
  const SpinGraph path = oracle::make_graph(4, {{0, 1}, {1, 2}, {2, 3}}, 0.8);
  const Eigen::VectorXd P = pi0(path, 0);
  CHECK(P(0) == doctest::Approx(1.0));
  for (int x = 1; x < 4; ++x) CHECK(P(x) == 0.0);

  // pi0 <= <sigma sigma> pointwise, and is positive on a cycle
  const SpinGraph cyc = oracle::make_graph(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}}, 0.8);
  const Eigen::VectorXd Q = pi0(cyc, 0);
  const Eigen::MatrixXd C = spin_two_point_exact(cyc);
  for (int x = 1; x < 4; ++x) {
    CHECK(Q(x) > 0.0);
    CHECK(Q(x) <= C(0, x) + 1e-15);
  }
}

TEST_CASE("lace identity: single bond") {
  const double J = 0.9, t = std::tanh(J);
  const LaceCheck lc = lace_identity_check(oracle::make_graph(2, {{0, 1}}, J), 0);
  CHECK(lc.residual(0) == doctest::Approx(-t * t).epsilon(1e-14));
  CHECK(std::abs(lc.residual(1)) <= 1e-15);
  CHECK(lc.bound(0) == doctest::Approx(t * t).epsilon(1e-14));
  CHECK(lc.bound(1) == doctest::Approx(t).epsilon(1e-14));
  CHECK(std::abs(lc.min_slack) <= 1e-15);
}

TEST_CASE("lace identity bound holds on the suite") {
  for (const auto& sg : oracle::graph_suite())
    for (double J : {0.2, 1.0}) {
      const SpinGraph g = oracle::make_graph(sg.n, sg.edges, J);
      for (int root = 0; root < sg.n; ++root) {
        const LaceCheck lc = lace_identity_check(g, root);
        CHECK(lc.min_slack >= -1e-12);
        const Eigen::VectorXd recon = lc.pi0 + lc.bound + lc.residual;
        CHECK((recon - lc.two_point).lpNorm<Eigen::Infinity>() <= 1e-13);
      }
    }
}

TEST_CASE("full pi satisfies the convolution identity") {
  for (const auto& sg : oracle::graph_suite()) {
    if (sg.n < 3) continue;
    const SpinGraph g = oracle::make_graph(sg.n, sg.edges, 0.6);
    const Eigen::MatrixXd C = spin_two_point_exact(g);
    const Eigen::MatrixXd P = full_pi(C, g);
    const Eigen::MatrixXd tau = g.tanh_matrix();
    CHECK((P + P * tau * C - C).lpNorm<Eigen::Infinity>() <= 1e-13);
  }
}

TEST_CASE("inequality suite") {
  for (const auto& sg : oracle::graph_suite()) {
    if (sg.n < 2) continue;
    for (double J : {0.3, 1.5}) {
      const InequalityReport r = inequality_suite(oracle::make_graph(sg.n, sg.edges, J), 0, 0.0);
      CHECK(r.passed);
      CHECK(r.min_slack >= -1e-12);
      CHECK(!r.instances.empty());
    }
  }
  const SpinGraph tri = oracle::make_graph(3, {{0, 1}, {1, 2}, {0, 2}}, 0.5);
  CHECK(inequality_suite(tri, 0, 0.0).min_slack == doctest::Approx(0.0).epsilon(1e-14));
  expect_code(ErrorCode::BadCutRadius, [&] { inequality_suite(tri, 0, 1.0); });
  expect_code(ErrorCode::BadCutRadius, [&] { inequality_suite(tri, 0, -1.0); });
  expect_code(ErrorCode::BadCutRadius, [] { inequality_suite(oracle::make_graph(1, {}, 0.0), 0, 0.0); });
}

TEST_CASE("two-point is nondecreasing in every coupling") {
  const SpinGraph base = oracle::make_graph(4, {{0, 1}, {1, 2}, {2, 3}, {0, 3}, {0, 2}}, 0.4);
  const Eigen::MatrixXd C0 = spin_two_point_exact(base);
  for (std::size_t b = 0; b < base.bonds().size(); ++b) {
    const Eigen::MatrixXd C1 = spin_two_point_exact(base.with_coupling(b, 0.9));
    CHECK((C1 - C0).minCoeff() >= -1e-15);
  }
}

TEST_CASE("edge-disjoint paths agree with the bridge test") {
  for (const auto& sg : oracle::graph_suite())
    for (int t = 0; t < sg.n; ++t) {
      const bool two = edge_disjoint_paths(sg.n, sg.edges, 0, t, 2) >= 2;
      CHECK(two == oracle::doubly_connected(sg.n, sg.edges, 0, t));
    }
  CHECK(edge_disjoint_paths(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}, 0, 1, 5) == 3);
  CHECK(edge_disjoint_paths(2, {{0, 1}, {0, 1}}, 0, 1) == 2);
}

TEST_CASE("size limits") {
  std::vector<Bond> ring;
  for (int v = 0; v < 21; ++v) ring.push_back({v, (v + 1) % 21, 0.1});
  expect_code(ErrorCode::TooManyVertices, [&] { spin_two_point_exact(SpinGraph(21, ring)); });
  std::vector<Bond> many;
  for (int a = 0; a < 7; ++a)
    for (int b = a + 1; b < 7; ++b) many.push_back({a, b, 0.1});
  REQUIRE(many.size() > static_cast<std::size_t>(kMaxCurrentBonds));
  expect_code(ErrorCode::TooManyBonds, [&] { current_two_point(SpinGraph(7, many)); });
}

TEST_CASE("edge lists") {
  const SpinGraph g = parse_edge_list("# triangle\n3\n0 1 0.5\n1 2\n0 2 0.25 # tail\n", 1.0);
  REQUIRE(g.bonds().size() == 3);
  CHECK(g.bonds()[1].J == 1.0);
  CHECK(g.bonds()[2].J == 0.25);
  expect_code(ErrorCode::ConfigInvalid, [] { parse_edge_list("3\n0 1\n"); });
  expect_code(ErrorCode::ConfigInvalid, [] { parse_edge_list("3\n0 x 1\n"); });
  expect_code(ErrorCode::ConfigInvalid, [] { parse_edge_list("# nothing\n"); });
  expect_code(ErrorCode::InvalidArgument, [] { parse_edge_list("3\n0 3 1\n"); });
  expect_code(ErrorCode::InvalidArgument, [] { parse_edge_list("3\n0 1 1\n1 0 1\n"); });
  expect_code(ErrorCode::InvalidArgument, [] { parse_edge_list("3\n1 1 1\n"); });
  expect_code(ErrorCode::Io, [] { read_edge_list("/nonexistent/graph.txt"); });
}
