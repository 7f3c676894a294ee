#include <doctest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <cmath>

#include "lace/monte_carlo.hpp"

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

ChainInput small_chain(int dim, int L, double lambda, double mu, std::int64_t sweeps) {
  ChainInput in;
  in.coupling = nearest_neighbor(dim, 1.0 / (2.0 * dim));
  in.lambda = lambda;
  in.mu = mu;
  in.torus = TorusGeometry(dim, L);
  in.schedule = {sweeps, 2000, 1};
  in.seed = 5;
  in.displacements = {Site::Zero(dim)};
  return in;
}

}  // namespace

TEST_CASE("philox known answers") {
  using A4 = std::array<std::uint32_t, 4>;
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5, 0xe169c58d, 0xbc57ac4c, 0x9b00dbd8});
  CHECK(philox4x32({0xffffffff, 0xffffffff, 0xffffffff, 0xffffffff}, {0xffffffff, 0xffffffff}) ==
        A4{0x408f276d, 0x41c83b0e, 0xa20bc7c6, 0x6d5451fd});
  CHECK(philox4x32({0x243f6a88, 0x85a308d3, 0x13198a2e, 0x03707344}, {0xa4093822, 0x299f31d0}) ==
        A4{0xd16cfe09, 0x94fdcceb, 0x5001e420, 0x24126ea1});
}

TEST_CASE("counter streams") {
  CounterRng a(7, 0, StreamPurpose::Proposal), b(7, 0, StreamPurpose::Proposal), c(7, 1, StreamPurpose::Proposal),
      d(7, 0, StreamPurpose::Accept);
  int same_c = 0, same_d = 0;
  double sum = 0.0, sum2 = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const std::uint32_t x = a.next_u32();
    CHECK(x == b.next_u32());
    same_c += x == c.next_u32();
    same_d += x == d.next_u32();
  }
  CHECK(same_c < 3);
  CHECK(same_d < 3);
  CounterRng g(11, 0, StreamPurpose::Misc);
  for (int i = 0; i < n; ++i) {
    const double z = g.normal();
    sum += z;
    sum2 += z * z;
  }
  CHECK(std::abs(sum / n) < 5.0 / std::sqrt(n));
  CHECK(std::abs(sum2 / n - 1.0) < 5.0 * std::sqrt(2.0 / n));
  CounterRng u(3, 0, StreamPurpose::Misc);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform();
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("autocorrelation of an AR(1) series") {
  const double rho = 0.8;
  CounterRng g(21, 0, StreamPurpose::Misc);
  std::vector<double> x(400000);
  x[0] = g.normal();
  for (std::size_t i = 1; i < x.size(); ++i) x[i] = rho * x[i - 1] + std::sqrt(1 - rho * rho) * g.normal();
  const double tau = integrated_autocorrelation(x);
  CHECK(tau == doctest::Approx((1 + rho) / (2 * (1 - rho))).epsilon(0.1));
  const Estimate e = blocked_estimate(x);
  // stderr^2 = 2 tau var / n
  CHECK(e.error == doctest::Approx(std::sqrt(2.0 * 4.5 / x.size())).epsilon(0.2));
  CHECK(std::abs(e.mean) < 4.0 * e.error);

  std::vector<double> white(10000);
  for (auto& w : white) w = g.normal();
  CHECK(integrated_autocorrelation(white) == doctest::Approx(0.5).epsilon(0.15));
}

TEST_CASE("jackknife") {
  CounterRng g(4, 0, StreamPurpose::Misc);
  const int n = 40000;
  std::vector<double> x(n);
  for (auto& v : x) v = 2.0 + g.normal();
  const Estimate m = jackknife({x}, 10, [](const std::vector<double>& a) { return a[0]; });
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  CHECK(m.mean == doctest::Approx(mean).epsilon(1e-12));
  CHECK(m.error == doctest::Approx(1.0 / std::sqrt(n)).epsilon(0.1));
  // delta method for the square of the mean: 2 |mean| sigma / sqrt n
  const Estimate sq = jackknife({x}, 10, [](const std::vector<double>& a) { return a[0] * a[0]; });
  CHECK(sq.mean == doctest::Approx(mean * mean).epsilon(1e-3));
  CHECK(sq.error == doctest::Approx(2.0 * mean / std::sqrt(n)).epsilon(0.1));
}

TEST_CASE("line fits") {
  const LinearFit f = fit_line({0, 1, 2, 3}, {1, 3, 5, 7});
  CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(f.intercept == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(f.rms_residual <= 1e-14);
  const LinearFit p = fit_power_law({1, 2, 4, 8}, {3, 3.0 / 8, 3.0 / 64, 3.0 / 512});
  CHECK(p.slope == doctest::Approx(-3.0).epsilon(1e-13));
  CHECK(std::exp(p.intercept) == doctest::Approx(3.0).epsilon(1e-13));
  const LinearFit noisy = fit_line({0, 1, 2, 3}, {0.1, 0.9, 2.1, 2.9});
  CHECK(noisy.slope_error > 0.0);
}

TEST_CASE("metropolis update samples the single-site measure") {
  const double h = 0.3, lambda = 1.0, mu = -0.5, width = 1.5;
  auto density = [&](double x) { return std::exp(h * x - 0.5 * mu * x * x - lambda * x * x * x * x / 24.0); };
  const int bins = 32;
  const double lo = -5.0, hi = 5.0, dx = (hi - lo) / bins;
  std::vector<double> expected(bins, 0.0);
  double total = 0.0;
  const int sub = 2000;
  for (int b = 0; b < bins; ++b)
    for (int s = 0; s < sub; ++s) {
      const double w = density(lo + (b + (s + 0.5) / sub) * dx) * dx / sub;
      expected[b] += w;
    }
  // mass outside [lo, hi] is below 1e-20
  for (double e : expected) total += e;

  CounterRng prop(99, 0, StreamPurpose::Proposal), acc(99, 0, StreamPurpose::Accept);
  double phi = 0.0;
  const int thin = 25, samples = 40000;
  std::vector<double> count(bins, 0.0);
  for (int i = 0; i < 1000; ++i) metropolis_update(phi, h, lambda, mu, width, prop, acc);
  for (int s = 0; s < samples; ++s) {
    for (int i = 0; i < thin; ++i) metropolis_update(phi, h, lambda, mu, width, prop, acc);
    const int b = static_cast<int>(std::floor((phi - lo) / dx));
    REQUIRE(b >= 0);
    REQUIRE(b < bins);
    count[b] += 1;
  }
  double chi2 = 0.0;
  int used = 0;
  for (int b = 0; b < bins; ++b) {
    const double e = samples * expected[b] / total;
    if (e < 5.0) continue;
    chi2 += (count[b] - e) * (count[b] - e) / e;
    ++used;
  }
  boost::math::chi_squared dist(used - 1);
  const double p = boost::math::cdf(boost::math::complement(dist, chi2));
  INFO("chi2 = " << chi2 << " over " << used << " bins");
  CHECK(p > 0.01);
}

TEST_CASE("Schwinger-Dyson residual vanishes on the exact Gaussian table") {
  const Coupling J = nearest_neighbor(3, 1.0 / 6);
  const TorusGeometry t(3, 6);
  const TorusTabled G = gaussian_two_point(J, 1.3, t);
  const TorusTabled R = sd_residual(G, G, J, 0.0, 1.3);
  CHECK(R.values.abs().maxCoeff() <= 1e-13);
  CHECK(G.values.sum() == doctest::Approx(1.0 / 0.3).epsilon(1e-12));
}

TEST_CASE("Gaussian chain") {
  ChainInput in = small_chain(2, 8, 0.0, 2.0, 40000);
  in.displacements = {Site::Zero(2), Site::Unit(2, 0)};
  const ObservableSet o = run_chain(in);
  const TorusTabled G = gaussian_two_point(in.coupling, 2.0, in.torus);
  CHECK(std::abs(o.chi.mean - 1.0) <= 3.0 * o.chi.error);
  CHECK(std::abs(o.phi2.mean - G[0]) <= 3.0 * o.phi2.error);
  CHECK(std::abs(o.two_point[1].mean - G[in.torus.index(Site::Unit(2, 0))]) <= 3.0 * o.two_point[1].error);
  CHECK(std::abs(o.u4.mean) <= 3.0 * o.u4.error);
  CHECK(o.acceptance > 0.3);
  CHECK(o.acceptance < 0.7);
  for (const auto& r : o.sd_residual) CHECK(std::abs(r.mean) <= 4.0 * r.error + 1e-12);
}

TEST_CASE("determinism and chain merging") {
  const ChainInput in = small_chain(2, 4, 0.5, 1.5, 3000);
  const ObservableSet a = run_chain(in), b = run_chain(in);
  CHECK(a.chi.mean == b.chi.mean);
  CHECK(a.phi4.mean == b.phi4.mean);
  CHECK(a.chi.error == b.chi.error);
  ChainInput other = in;
  other.seed = 6;
  CHECK(run_chain(other).chi.mean != a.chi.mean);

  const ObservableSet m1 = run_chains(in, 3), m2 = run_chains(in, 3);
  CHECK(m1.chi.mean == m2.chi.mean);
  CHECK(m1.measurements == 3 * a.measurements);
}

TEST_CASE("too short a schedule is rejected") {
  ChainInput in = small_chain(2, 4, 0.5, 1.05, 20);
  in.schedule.burn_in = 20;
  expect_code(ErrorCode::NotEquilibrated, [&] { run_chain(in); });
}

TEST_CASE("susceptibility decreases with mu") {
  double prev = 1e300;
  for (double mu : {1.2, 1.5, 2.0}) {
    const ObservableSet o = run_chain(small_chain(2, 4, 0.5, mu, 20000));
    CHECK(o.chi.mean < prev);
    prev = o.chi.mean;
  }
}

TEST_CASE("Gaussian critical point") {
  CriticalInput in;
  in.coupling = nearest_neighbor(2, 0.25);
  in.lambda = 0.0;
  in.mu_grid = {1.1, 1.2, 1.3};
  in.sides = {4};
  in.schedule = {40000, 2000, 1};
  in.seed = 3;
  const CriticalResult r = critical_scan(in);
  CHECK(r.linear);
  CHECK(std::abs(r.mu_c - 1.0) <= 3.0 * r.mu_c_error);
  CHECK(r.mu_c_error < 0.05);
  CHECK(r.mu_star == doctest::Approx(1.1));
  // lambda = 0: the shift correction vanishes, so delta is the extrapolation error
  CHECK(r.delta == doctest::Approx(r.mu_c - 1.0).epsilon(1e-12));
}
