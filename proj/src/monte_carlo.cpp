#include "lace/monte_carlo.hpp"

#include <algorithm>
#include <cmath>

#include "lace/fft.hpp"
#include "lace/parallel.hpp"

namespace lace {

NeighborTable neighbor_table(const Coupling& coupling, const TorusGeometry& torus) {
  const TorusTabled J = on_torus(coupling, torus);
  std::vector<Index> offsets;
  NeighborTable nb;
  for (Index v = 0; v < torus.volume(); ++v)
    if (J[v] != 0.0) {
      offsets.push_back(v);
      nb.J.push_back(J[v]);
    }
  nb.per_site = static_cast<int>(offsets.size());
  nb.index.resize(static_cast<std::size_t>(torus.volume()) * nb.per_site);
  for (Index z = 0; z < torus.volume(); ++z)
    for (int k = 0; k < nb.per_site; ++k) nb.index[z * nb.per_site + k] = static_cast<std::int32_t>(torus.add(z, offsets[k]));
  return nb;
}

double hamiltonian(const std::vector<double>& phi, const NeighborTable& nb, double lambda, double mu) {
  double h = 0.0;
  const std::size_t V = phi.size();
  for (std::size_t z = 0; z < V; ++z) {
    double field = 0.0;
    for (int k = 0; k < nb.per_site; ++k) field += nb.J[k] * phi[nb.index[z * nb.per_site + k]];
    const double f2 = phi[z] * phi[z];
    h += -0.5 * phi[z] * field + 0.5 * mu * f2 + lambda / 24.0 * f2 * f2;
  }
  return h;
}

TorusTabled sd_residual(const TorusTabled& two_point, const TorusTabled& phi3_phi, const Coupling& coupling,
                        double lambda, double mu) {
  const TorusGeometry& g = two_point.geometry;
  const TorusTabled J = on_torus(coupling, g);
  TorusTabled out(g);
  for (Index x = 0; x < g.volume(); ++x) {
    double hop = 0.0;
    for (Index v = 0; v < g.volume(); ++v)
      if (J[v] != 0.0) hop += J[v] * two_point[g.subtract(x, v)];
    out[x] = -hop + mu * two_point[x] + lambda / 6.0 * phi3_phi[x] - (x == 0 ? 1.0 : 0.0);
  }
  return out;
}

TorusTabled gaussian_two_point(const Coupling& coupling, double mu, const TorusGeometry& torus) {
  const Eigen::ArrayXd jhat = symbol(on_torus(coupling, torus));
  Spectrum s(torus.volume());
  for (Index k = 0; k < torus.volume(); ++k) {
    const double m = mu - jhat(k);
    if (!(m > 0.0)) fail(ErrorCode::SingularMode, "Gaussian model needs mu > jhat");
    s(k) = 1.0 / m;
  }
  return TorusTabled(torus, fft_inverse_real(torus, s));
}

bool metropolis_update(double& phi, double field, double lambda, double mu, double width, CounterRng& proposal,
                       CounterRng& accept) {
  const double old = phi;
  const double next = old + width * proposal.normal();
  const double o2 = old * old, n2 = next * next;
  const double dH = -(next - old) * field + 0.5 * mu * (n2 - o2) + lambda / 24.0 * (n2 * n2 - o2 * o2);
  if (dH <= 0.0 || accept.uniform() < std::exp(-dH)) {
    phi = next;
    return true;
  }
  return false;
}

ObservableSet run_chain(const ChainInput& in) {
  const TorusGeometry& g = in.torus;
  if (in.lambda < 0.0) fail(ErrorCode::InvalidArgument, "lambda must be >= 0");
  if (in.schedule.sweeps < 1 || in.schedule.burn_in < 0 || in.schedule.thin < 1)
    fail(ErrorCode::InvalidArgument, "schedule needs sweeps >= 1, burn_in >= 0, thin >= 1");
  if (in.lambda == 0.0 && !(in.mu > in.coupling.jhat()))
    fail(ErrorCode::InvalidArgument, "the Gaussian chain needs mu > jhat");
  const NeighborTable nb = neighbor_table(in.coupling, g);
  const Index V = g.volume();
  const int K = nb.per_site;

  // even/odd ordering by coordinate parity
  std::vector<std::int32_t> order;
  order.reserve(V);
  for (int parity = 0; parity < 2; ++parity)
    for (Index z = 0; z < V; ++z) {
      const Site x = g.coordinates(z);
      if (((x.sum() % 2) + 2) % 2 == parity) order.push_back(static_cast<std::int32_t>(z));
    }

  CounterRng prop(in.seed, in.chain, StreamPurpose::Proposal);
  CounterRng acc(in.seed, in.chain, StreamPurpose::Accept);
  CounterRng init(in.seed, in.chain, StreamPurpose::Init);
  std::vector<double> phi(V);
  for (auto& f : phi) f = 0.1 * init.normal();

  const double mu = in.mu, lam = in.lambda;
  double width = 1.0;
  std::int64_t tried = 0, accepted = 0;
  auto sweep = [&] {
    for (std::int32_t z : order) {
      double field = 0.0;
      const std::int32_t* nbr = &nb.index[static_cast<std::size_t>(z) * K];
      for (int k = 0; k < K; ++k) field += nb.J[k] * phi[nbr[k]];
      ++tried;
      if (metropolis_update(phi[z], field, lam, mu, width, prop, acc)) ++accepted;
    }
  };

  // burn-in with proposal tuning every 20 sweeps; the width is frozen afterwards
  for (std::int64_t s = 0; s < in.schedule.burn_in; ++s) {
    sweep();
    if ((s + 1) % 20 == 0) {
      const double rate = static_cast<double>(accepted) / static_cast<double>(tried);
      if (rate < 0.4 || rate > 0.6) width *= std::exp(2.0 * (rate - 0.5));
      tried = accepted = 0;
    }
  }
  tried = accepted = 0;

  const std::size_t nd = in.displacements.size();
  std::vector<std::vector<std::int32_t>> shift(nd, std::vector<std::int32_t>(V));
  std::vector<Index> disp_index(nd);
  for (std::size_t i = 0; i < nd; ++i) {
    disp_index[i] = g.index(in.displacements[i]);
    for (Index z = 0; z < V; ++z) shift[i][z] = static_cast<std::int32_t>(g.add(z, disp_index[i]));
  }
  const std::int64_t nmeas = in.schedule.sweeps / in.schedule.thin;
  std::vector<double> s_phi2, s_phi4, s_chi;
  std::vector<std::vector<double>> s_tp(nd), s_p3(nd), s_res(nd);
  s_phi2.reserve(nmeas);
  s_phi4.reserve(nmeas);
  s_chi.reserve(nmeas);
  std::vector<double> gz(V), cube(V);
  const double invV = 1.0 / static_cast<double>(V);
  for (std::int64_t m = 0; m < nmeas; ++m) {
    for (std::int64_t t = 0; t < in.schedule.thin; ++t) sweep();
    double m1 = 0, m2 = 0, m4 = 0;
    for (Index z = 0; z < V; ++z) {
      const double f = phi[z], f2 = f * f;
      m1 += f;
      m2 += f2;
      m4 += f2 * f2;
      cube[z] = f2 * f;
      double field = 0.0;
      const std::int32_t* nbr = &nb.index[static_cast<std::size_t>(z) * K];
      for (int k = 0; k < K; ++k) field += nb.J[k] * phi[nbr[k]];
      gz[z] = -field + mu * f + lam / 6.0 * cube[z];
    }
    s_phi2.push_back(m2 * invV);
    s_phi4.push_back(m4 * invV);
    s_chi.push_back(m1 * m1 * invV);
    for (std::size_t i = 0; i < nd; ++i) {
      double tp = 0, p3 = 0, r = 0;
      const auto& sh = shift[i];
      for (Index z = 0; z < V; ++z) {
        const double fx = phi[sh[z]];
        tp += phi[z] * fx;
        p3 += cube[z] * fx;
        r += gz[z] * fx;
      }
      s_tp[i].push_back(tp * invV);
      s_p3[i].push_back(p3 * invV);
      s_res[i].push_back(r * invV - (disp_index[i] == 0 ? 1.0 : 0.0));
    }
  }

  ObservableSet out;
  out.displacements = in.displacements;
  out.seed = in.seed;
  out.chain = in.chain;
  out.measurements = nmeas;
  out.acceptance = tried ? static_cast<double>(accepted) / static_cast<double>(tried) : 0.0;
  out.proposal_width = width;
  auto finish = [&](const std::vector<double>& s) {
    Estimate e = blocked_estimate(s);
    e.burn_in = in.schedule.burn_in;
    e.seed = in.seed;
    return e;
  };
  out.phi2 = finish(s_phi2);
  out.phi4 = finish(s_phi4);
  out.chi = finish(s_chi);
  for (std::size_t i = 0; i < nd; ++i) {
    out.two_point.push_back(finish(s_tp[i]));
    out.phi3_phi.push_back(finish(s_p3[i]));
    out.sd_residual.push_back(finish(s_res[i]));
  }
  const double tau = std::max({out.phi2.tau_int, out.phi4.tau_int, out.chi.tau_int});
  if (static_cast<double>(nmeas) < 100.0 * tau)
    fail(ErrorCode::NotEquilibrated, "tau_int = " + std::to_string(tau) + " measurements but only " +
                                         std::to_string(nmeas) + " taken");
  const auto block = static_cast<std::int64_t>(std::ceil(6.0 * tau));
  out.u4 = jackknife({s_phi2, s_phi4}, block, [](const std::vector<double>& m) { return m[1] - 3.0 * m[0] * m[0]; });
  out.chi_inv = jackknife({s_chi}, block, [](const std::vector<double>& m) { return 1.0 / m[0]; });
  for (Estimate* e : {&out.u4, &out.chi_inv}) {
    e->tau_int = tau;
    e->burn_in = in.schedule.burn_in;
    e->seed = in.seed;
  }
  if (in.keep_series) {
    out.series_phi2 = std::move(s_phi2);
    out.series_chi = std::move(s_chi);
  }
  return out;
}

namespace {

Estimate merge(const std::vector<const Estimate*>& parts) {
  Estimate m;
  double total = 0;
  for (const auto* e : parts) total += static_cast<double>(e->samples);
  double var = 0, tau = 0;
  for (const auto* e : parts) {
    const double w = static_cast<double>(e->samples) / total;
    m.mean += w * e->mean;
    var += w * w * e->error * e->error;
    tau += w * e->tau_int;
    m.samples += e->samples;
  }
  m.error = std::sqrt(var);
  m.tau_int = tau;
  m.burn_in = parts.front()->burn_in;
  m.seed = parts.front()->seed;
  return m;
}

}  // namespace

ObservableSet run_chains(const ChainInput& in, int chains) {
  if (chains < 1) fail(ErrorCode::InvalidArgument, "need at least one chain");
  if (chains == 1) return run_chain(in);
  std::vector<ObservableSet> runs(chains);
  run_tasks(static_cast<std::size_t>(chains), [&](std::size_t c) {
    ChainInput ci = in;
    ci.chain = in.chain + static_cast<std::uint32_t>(c);
    runs[c] = run_chain(ci);
  });
  ObservableSet out = runs.front();
  auto pick = [&](auto member) {
    std::vector<const Estimate*> v;
    for (const auto& r : runs) v.push_back(&(r.*member));
    return merge(v);
  };
  out.phi2 = pick(&ObservableSet::phi2);
  out.phi4 = pick(&ObservableSet::phi4);
  out.chi = pick(&ObservableSet::chi);
  out.chi_inv = pick(&ObservableSet::chi_inv);
  out.u4 = pick(&ObservableSet::u4);
  for (std::size_t i = 0; i < out.displacements.size(); ++i) {
    std::vector<const Estimate*> a, b, c;
    for (const auto& r : runs) {
      a.push_back(&r.two_point[i]);
      b.push_back(&r.phi3_phi[i]);
      c.push_back(&r.sd_residual[i]);
    }
    out.two_point[i] = merge(a);
    out.phi3_phi[i] = merge(b);
    out.sd_residual[i] = merge(c);
  }
  out.measurements = 0;
  double acc = 0;
  for (const auto& r : runs) {
    out.measurements += r.measurements;
    acc += r.acceptance;
  }
  out.acceptance = acc / chains;
  return out;
}

CriticalResult critical_scan(const CriticalInput& in) {
  if (in.mu_grid.size() < 3) fail(ErrorCode::InvalidArgument, "the extrapolation needs >= 3 grid points");
  if (in.sides.empty()) fail(ErrorCode::InvalidArgument, "need at least one torus size");
  CriticalResult res;
  res.lambda = in.lambda;
  std::vector<double> grid = in.mu_grid;
  std::sort(grid.begin(), grid.end());
  std::vector<int> sides = in.sides;
  std::sort(sides.begin(), sides.end());
  const int d = in.coupling.dim();

  for (int L : sides) {
    std::vector<CriticalPoint> pts;
    for (double mu : grid) {
      ChainInput ci;
      ci.coupling = in.coupling;
      ci.lambda = in.lambda;
      ci.mu = mu;
      ci.torus = TorusGeometry(d, L);
      ci.schedule = in.schedule;
      ci.seed = in.seed;
      ci.chain = static_cast<std::uint32_t>(1000 * L + res.points.size() * 16);
      ObservableSet o = run_chains(ci, in.chains);
      pts.push_back({mu, L, o.chi, o.chi_inv, o.phi2, o.u4});
      res.points.push_back(pts.back());
    }
    // weighted line through the three largest mu
    const std::size_t n = pts.size();
    double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = n - 3; i < n; ++i) {
      const double err = std::max(pts[i].chi_inv.error, 1e-15);
      const double w = 1.0 / (err * err);
      sw += w;
      sx += w * pts[i].mu;
      sy += w * pts[i].chi_inv.mean;
      sxx += w * pts[i].mu * pts[i].mu;
      sxy += w * pts[i].mu * pts[i].chi_inv.mean;
    }
    const double det = sw * sxx - sx * sx;
    const double slope = (sw * sxy - sx * sy) / det;
    const double icpt = (sxx * sy - sx * sxy) / det;
    if (!(slope > 0.0)) {
      if (in.strict) fail(ErrorCode::ExtrapolationUnstable, "chi^{-1} does not increase with mu");
      res.linear = false;
    }
    double pull = 0.0;
    for (std::size_t i = n - 3; i < n; ++i)
      pull = std::max(pull, std::abs(pts[i].chi_inv.mean - icpt - slope * pts[i].mu) / std::max(pts[i].chi_inv.error, 1e-15));
    res.max_fit_pull = std::max(res.max_fit_pull, pull);
    const double var_s = sw / det, var_i = sxx / det, cov = -sx / det;
    const double mu_c = -icpt / slope;
    // d mu_c = -d icpt / slope + icpt d slope / slope^2
    const double err = std::sqrt(var_i / (slope * slope) + icpt * icpt * var_s / std::pow(slope, 4) -
                                 2.0 * icpt * cov / std::pow(slope, 3));
    res.mu_c_per_side.push_back(mu_c);
    res.mu_c_error_per_side.push_back(err);
    if (pull > 3.0) res.linear = false;
    if (pull > 3.0 && in.strict)
      fail(ErrorCode::ExtrapolationUnstable,
           "chi^{-1} is not linear within errors at L = " + std::to_string(L) + " (pull " + std::to_string(pull) + ")");
  }
  res.mu_c = res.mu_c_per_side.back();
  res.mu_c_error = res.mu_c_error_per_side.back();
  const auto [lo, hi] = std::minmax_element(res.mu_c_per_side.begin(), res.mu_c_per_side.end());
  res.finite_size_drift = *hi - *lo;
  // smallest grid point of the largest torus
  for (const auto& p : res.points)
    if (p.side == sides.back() && p.mu == grid.front()) {
      res.mu_star = p.mu;
      res.phi2_star = p.phi2;
    }
  res.delta = res.mu_c - (in.coupling.jhat() - 0.5 * in.lambda * res.phi2_star.mean);
  res.delta_error = std::hypot(res.mu_c_error, 0.5 * in.lambda * res.phi2_star.error);
  return res;
}

}  // namespace lace
