#include "lace/cli.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <CLI11.hpp>

#include "lace/deconvolution.hpp"
#include "lace/exact.hpp"
#include "lace/green.hpp"
#include "lace/gs.hpp"
#include "lace/monte_carlo.hpp"
#include "lace/parallel.hpp"

namespace lace {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// section -> allowed keys. Anything else is a typo and rejected up front.
const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"run", {"out", "seeds", "chains", "workers"}},
      {"coupling", {"kind", "dim", "amplitude", "radius", "entries"}},
      {"model", {"lambda", "mu", "N", "p"}},
      {"geometry", {"L"}},
      {"schedule", {"sweeps", "burn_in", "thin"}},
      {"fit", {"min", "max"}},
      {"greens", {"zero_mode", "bessel", "conv_orders", "conv_radius", "conv_a", "conv_b", "conv_fit_min",
                  "conv_fit_max"}},
      {"exact", {"graph", "J", "root", "cut"}},
      {"mc", {"series"}},
      {"critical", {"strict"}},
      {"deconv", {"pi"}},
  };
  return keys;
}

void check_keys(const Config& cfg) {
  const json j = cfg.to_json();
  for (const auto& [sec, kv] : j.items()) {
    auto s = known_keys().find(sec);
    if (s == known_keys().end()) fail(ErrorCode::ConfigInvalid, "unknown section [" + sec + "]");
    for (const auto& [k, v] : kv.items())
      if (!s->second.count(k)) fail(ErrorCode::ConfigInvalid, "unknown key " + sec + "." + k);
  }
}

struct Context {
  const Config& cfg;
  std::string out_dir;
  std::string hash;
  json& results;
  json& errors;

  std::string path(const std::string& file) const { return (fs::path(out_dir) / file).string(); }

  CsvWriter csv(const std::string& file, const std::vector<std::string>& columns) const {
    return CsvWriter(path(file), hash, columns);
  }

  void record(const std::string& where, const Error& e) {
    errors.push_back({{"code", std::string(error_name(e.code()))}, {"message", e.what()}, {"context", where}});
  }
};

json error_record(const std::string& code, const std::string& message, const std::string& where) {
  return {{"code", code}, {"message", message}, {"context", where}};
}

// -- typed access with structural validation -------------------------------------

int side_of(std::int64_t L) {
  if (L < 2 || L % 2 != 0 || L > 4096)
    fail(ErrorCode::ConfigInvalid, "geometry.L must be an even integer in [2, 4096], got " + std::to_string(L));
  return static_cast<int>(L);
}

int positive_int(const Config& cfg, const std::string& sec, const std::string& key, std::int64_t fallback,
                 std::int64_t lo = 1) {
  const std::int64_t v = cfg.integer(sec, key, fallback);
  if (v < lo) fail(ErrorCode::ConfigInvalid, sec + "." + key + " must be >= " + std::to_string(lo));
  return static_cast<int>(v);
}

double finite_real(const Config& cfg, const std::string& sec, const std::string& key) {
  const double v = cfg.real(sec, key);
  if (!std::isfinite(v)) fail(ErrorCode::ConfigInvalid, sec + "." + key + " must be finite");
  return v;
}

std::vector<int> sides(const Config& cfg) {
  std::vector<int> out;
  for (auto L : cfg.integers("geometry", "L")) out.push_back(side_of(L));
  if (out.empty()) fail(ErrorCode::ConfigInvalid, "geometry.L is empty");
  return out;
}

std::vector<double> finite_list(const Config& cfg, const std::string& sec, const std::string& key) {
  auto v = cfg.reals(sec, key);
  if (v.empty()) fail(ErrorCode::ConfigInvalid, sec + "." + key + " is empty");
  for (double x : v)
    if (!std::isfinite(x)) fail(ErrorCode::ConfigInvalid, sec + "." + key + " has a non-finite entry");
  return v;
}

std::vector<std::uint64_t> seeds(const Config& cfg) {
  if (!cfg.has("run", "seeds")) return {1};
  std::vector<std::uint64_t> out;
  for (auto s : cfg.integers("run", "seeds")) {
    if (s < 0) fail(ErrorCode::ConfigInvalid, "run.seeds must be nonnegative");
    out.push_back(static_cast<std::uint64_t>(s));
  }
  if (out.empty()) fail(ErrorCode::ConfigInvalid, "run.seeds is empty");
  return out;
}

unsigned workers(const Config& cfg) { return static_cast<unsigned>(positive_int(cfg, "run", "workers", 0, 0)); }

Schedule schedule(const Config& cfg) {
  Schedule s;
  s.sweeps = cfg.integer("schedule", "sweeps", s.sweeps);
  s.burn_in = cfg.integer("schedule", "burn_in", s.burn_in);
  s.thin = cfg.integer("schedule", "thin", s.thin);
  if (s.sweeps < 1) fail(ErrorCode::ConfigInvalid, "schedule.sweeps must be >= 1");
  if (s.burn_in < 0) fail(ErrorCode::ConfigInvalid, "schedule.burn_in must be >= 0");
  if (s.thin < 1) fail(ErrorCode::ConfigInvalid, "schedule.thin must be >= 1");
  return s;
}

// nn is the default kind; greens normalises D, so the amplitude may be left out there
Coupling coupling_of(const Config& cfg, bool amplitude_optional) {
  std::map<std::string, std::string> block = cfg.section("coupling");
  if (!block.count("dim")) fail(ErrorCode::ConfigInvalid, "missing coupling.dim");
  if (!block.count("kind")) block["kind"] = "nn";
  if (amplitude_optional && !block.count("amplitude")) block["amplitude"] = "1";
  if (block["kind"] == "box" && !block.count("radius")) fail(ErrorCode::ConfigInvalid, "missing coupling.radius");
  const std::int64_t d = parse_integer(block["dim"]);
  if (d < 1 || d > 8) fail(ErrorCode::ConfigInvalid, "coupling.dim must lie in [1, 8]");
  try {
    return coupling_from_config(block);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidArgument) fail(ErrorCode::ConfigInvalid, e.what());
    throw;
  }
}

json coupling_json(const Coupling& c) {
  json j;
  for (const auto& [k, v] : to_config(c)) j[k] = v;
  j["jhat"] = c.jhat();
  j["variance"] = c.variance();
  j["range"] = c.range();
  return j;
}

json gs_json(const GSParams& gs) {
  return {{"lambda", gs.lambda}, {"mu", gs.mu},         {"N", gs.N},
          {"epsilon", gs.epsilon}, {"eps2", gs.eps2},   {"I", gs.I},
          {"tanh_I", gs.tanh_I}, {"tilde_lambda", number(gs.tilde_lambda)}, {"p", gs.p}};
}

json fit_json(const LinearFit& f) {
  return {{"slope", number(f.slope)},
          {"slope_error", number(f.slope_error)},
          {"intercept", number(f.intercept)},
          {"intercept_error", number(f.intercept_error)},
          {"rms_residual", number(f.rms_residual)},
          {"points", f.points}};
}

std::vector<std::string> site_columns(int d, std::vector<std::string> tail) {
  std::vector<std::string> cols;
  for (int a = 1; a <= d; ++a) cols.push_back("x" + std::to_string(a));
  cols.push_back("abs_x");
  cols.insert(cols.end(), tail.begin(), tail.end());
  return cols;
}

std::vector<std::string> site_cells(const Site& x) {
  std::vector<std::string> cells;
  for (int a = 0; a < x.size(); ++a) cells.push_back(std::to_string(x(a)));
  cells.push_back(format_double(std::sqrt(static_cast<double>(x.squaredNorm()))));
  return cells;
}

// One representative per hyperoctahedral orbit: 0 <= x1 <= ... <= xd (minimal image).
std::vector<Index> orbit_sites(const TorusGeometry& torus) {
  std::vector<Index> out;
  for (Index i = 0; i < torus.volume(); ++i) {
    const Site x = torus.coordinates(i);
    bool keep = x(0) >= 0;
    for (int a = 1; keep && a < x.size(); ++a) keep = x(a) >= x(a - 1);
    if (keep) out.push_back(i);
  }
  return out;
}

Site axis_site(int d, int k) {
  Site x = Site::Zero(d);
  x(0) = k;
  return x;
}

// -- greens ----------------------------------------------------------------------

void run_greens(Context& ctx) {
  const Config& cfg = ctx.cfg;
  const Coupling J = coupling_of(cfg, true);
  const int d = J.dim();
  const int L = side_of(cfg.integer("geometry", "L"));
  const double p = finite_real(cfg, "model", "p");
  const std::string zm = cfg.text("greens", "zero_mode", "reject");
  if (zm != "reject" && zm != "subtract") fail(ErrorCode::ConfigInvalid, "greens.zero_mode is reject | subtract");
  const ZeroModePolicy policy = zm == "subtract" ? ZeroModePolicy::Subtract : ZeroModePolicy::Reject;

  const TorusGeometry torus(d, L);
  const Coupling D = step_distribution(J);
  auto& r = ctx.results;
  r["coupling"] = coupling_json(J);
  r["d"] = d;
  r["L"] = L;
  r["p"] = p;
  r["step_variance"] = D.variance();

  const GreenTable S = green_fft(D, p, torus, policy);
  const double sum = S.values.sum();
  r["zero_mode_subtracted"] = S.zero_mode_subtracted;
  r["max_imag"] = S.max_imag;
  const double expected = S.zero_mode_subtracted ? 0.0 : 1.0 / (1.0 - p);
  r["sum_rule"] = {{"sum", sum},
                   {"expected", expected},
                   {"abs_error", std::abs(sum - expected)},
                   {"rel_error", std::abs(sum - expected) / std::max(1.0, std::abs(expected))}};

  auto table = ctx.csv("greens.csv", site_columns(d, {"value"}));
  for (Index i : orbit_sites(torus)) {
    auto cells = site_cells(torus.coordinates(i));
    cells.push_back(format_double(S.values[i]));
    table.row(cells);
  }
  table.close();

  if (cfg.flag("greens", "bessel", false)) {
    if (J.kind() != CouplingKind::NearestNeighbor) fail(ErrorCode::ConfigInvalid, "greens.bessel needs kind = nn");
    if (S.zero_mode_subtracted) fail(ErrorCode::ConfigInvalid, "greens.bessel needs an unsubtracted table");
    json pts = json::array();
    double worst = 0.0;
    auto csv = ctx.csv("greens_bessel.csv", {"abs_x", "torus", "free", "difference"});
    for (int k = 0; k <= L / 4; ++k) {
      const double t = S.values.at(axis_site(d, k));
      const double f = green_bessel_nn(axis_site(d, k), p);
      worst = std::max(worst, std::abs(t - f));
      pts.push_back({{"x", k}, {"torus", t}, {"free", f}});
      csv.row(std::vector<double>{double(k), t, f, t - f});
    }
    csv.close();
    r["bessel"] = {{"points", pts}, {"max_difference", worst}};
  }

  if (cfg.has("fit", "min") || cfg.has("fit", "max")) {
    const int lo = positive_int(cfg, "fit", "min", 0), hi = positive_int(cfg, "fit", "max", 0);
    if (hi > L / 2 || hi <= lo) fail(ErrorCode::ConfigInvalid, "need fit.min < fit.max <= L/2");
    std::vector<double> xs, ys;
    auto csv = ctx.csv("greens_fit.csv", {"abs_x", "value"});
    for (int k = lo; k <= hi; ++k) {
      xs.push_back(k);
      ys.push_back(S.values.at(axis_site(d, k)));
      csv.row(std::vector<double>{xs.back(), ys.back()});
    }
    csv.close();
    const LinearFit f = fit_power_law(xs, ys);
    json fj = fit_json(f);
    fj["window"] = {lo, hi};
    fj["exponent"] = f.slope;
    fj["amplitude"] = std::exp(f.intercept);
    if (d > 2) {
      fj["expected_exponent"] = 2 - d;
      fj["asymptotic_amplitude"] = asymptotic_amplitude(d, D.variance());
    }
    r["fit"] = fj;
  }

  if (cfg.has("greens", "conv_orders")) {
    ConvolutionCheckInput in;
    in.D = D;
    for (auto n : cfg.integers("greens", "conv_orders")) {
      if (n < 1) fail(ErrorCode::ConfigInvalid, "greens.conv_orders must be positive");
      in.n_list.push_back(static_cast<int>(n));
    }
    in.radius = positive_int(cfg, "greens", "conv_radius", in.radius);
    in.a = cfg.real("greens", "conv_a", in.a);
    in.b = cfg.real("greens", "conv_b", in.b);
    in.fit_min = positive_int(cfg, "greens", "conv_fit_min", in.fit_min);
    in.fit_max = positive_int(cfg, "greens", "conv_fit_max", in.fit_max);
    const ConvolutionReport rep = convolution_bounds_check(in);
    json orders = json::array();
    auto csv = ctx.csv("greens_convolution.csv", {"n", "sup_constant", "second_difference"});
    for (const auto& o : rep.orders) {
      orders.push_back({{"n", o.n}, {"sup_constant", o.sup_constant}, {"second_difference", o.second_difference}});
      csv.row(std::vector<double>{double(o.n), o.sup_constant, o.second_difference});
    }
    csv.close();
    auto sums = ctx.csv("greens_convolution_sum.csv", {"abs_x", "value"});
    for (const auto& s : rep.sum_points) sums.row(std::vector<double>{s.x, s.value});
    sums.close();
    r["convolution"] = {{"orders", orders},
                        {"sup_growth", rep.sup_growth},
                        {"second_difference_growth", rep.second_difference_growth},
                        {"sup_bounded", rep.sup_bounded},
                        {"second_difference_bounded", rep.second_difference_bounded},
                        {"a", rep.a},
                        {"b", rep.b},
                        {"sum_fit", fit_json(rep.sum_fit)},
                        {"expected_exponent", rep.expected_exponent},
                        {"exponent_ok", rep.exponent_ok}};
  }
}

// -- gs-check --------------------------------------------------------------------

Coupling optional_coupling(const Config& cfg) {
  if (cfg.section("coupling").empty()) return nearest_neighbor(1, 0.0);
  return coupling_of(cfg, false);
}

void run_gs_check(Context& ctx) {
  const Config& cfg = ctx.cfg;
  const double lambda = finite_real(cfg, "model", "lambda");
  const double mu = finite_real(cfg, "model", "mu");
  std::vector<std::int64_t> Ns = cfg.integers("model", "N");
  if (Ns.empty()) fail(ErrorCode::ConfigInvalid, "model.N is empty");
  for (auto n : Ns)
    if (n < 1 || n > 1000000) fail(ErrorCode::ConfigInvalid, "model.N entries must lie in [1, 1e6]");
  std::sort(Ns.begin(), Ns.end());
  const Coupling J = optional_coupling(cfg);
  auto& r = ctx.results;
  r["lambda"] = lambda;
  r["mu"] = mu;
  const auto [t2, t4] = phi4_single_site_moments(lambda, mu);
  r["target"] = {{"m2", t2}, {"m4", t4}};

  auto csv = ctx.csv("gs_single_site.csv", {"N", "moment", "value", "target", "difference"});
  json rows = json::array();
  std::vector<double> d2, d4;
  for (auto n : Ns) {
    try {
      const GSParams gs = gs_params(lambda, mu, J, static_cast<int>(n));
      const SingleSiteMoments m = single_site_moments(gs);
      json row = gs_json(gs);
      row.update({{"m2", m.m2}, {"m4", m.m4}, {"diff2", m.diff2}, {"diff4", m.diff4}, {"odd1", m.odd1},
                  {"odd3", m.odd3}});
      rows.push_back(row);
      csv.row({std::to_string(n), "m2", format_double(m.m2), format_double(m.target2), format_double(m.diff2)});
      csv.row({std::to_string(n), "m4", format_double(m.m4), format_double(m.target4), format_double(m.diff4)});
      d2.push_back(m.diff2);
      d4.push_back(m.diff4);
    } catch (const Error& e) {
      ctx.record("N=" + std::to_string(n), e);
    }
  }
  csv.close();
  r["single_site"] = rows;
  auto decreasing = [](const std::vector<double>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
      if (!(v[i] < v[i - 1])) return false;
    return true;
  };
  r["monotone_m2"] = decreasing(d2);
  r["monotone_m4"] = decreasing(d4);

  if (!cfg.has("geometry", "L")) return;
  const int L = side_of(cfg.integer("geometry", "L"));
  const TorusGeometry torus(J.dim(), L);
  json blocks = json::array();
  for (auto n : Ns) {
    if (n * torus.volume() > kMaxSpinVertices) continue;
    try {
      const GSParams gs = gs_params(lambda, mu, J, static_cast<int>(n));
      const SpinGraph g = gs_block_graph(gs, torus);
      const BlockTwoPoint b = block_two_point(spin_two_point_exact(g), gs, torus);
      json G = json::array();
      for (Index x = 0; x < torus.volume(); ++x)
        G.push_back({{"x", to_json(torus.coordinates(x))}, {"G", b.G[x]}, {"block", b.block_correlation[x]}});
      blocks.push_back({{"N", n},
                        {"sites", G},
                        {"max_asymmetry", b.max_asymmetry},
                        {"bound_checked", b.bound_checked},
                        {"min_bound_slack", number(b.min_bound_slack)}});
    } catch (const Error& e) {
      ctx.record("block N=" + std::to_string(n), e);
    }
  }
  r["block_systems"] = blocks;
}

// -- exact -----------------------------------------------------------------------

json matrix_json(const Eigen::MatrixXd& m) {
  json j = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    j.push_back(row);
  }
  return j;
}

json vector_json(const Eigen::VectorXd& v) {
  json j = json::array();
  for (Index i = 0; i < v.size(); ++i) j.push_back(v(i));
  return j;
}

void run_exact(Context& ctx) {
  const Config& cfg = ctx.cfg;
  std::optional<double> J;
  if (cfg.has("exact", "J")) {
    J = finite_real(cfg, "exact", "J");
    if (*J < 0.0) fail(ErrorCode::ConfigInvalid, "exact.J must be >= 0");
  }
  const SpinGraph g = read_edge_list(cfg.require("exact", "graph"), J);
  const int root = positive_int(cfg, "exact", "root", 0, 0);
  if (root >= g.vertex_count()) fail(ErrorCode::ConfigInvalid, "exact.root is not a vertex");
  const double cut = cfg.real("exact", "cut", 0.0);

  auto& r = ctx.results;
  r["vertex_count"] = g.vertex_count();
  json bonds = json::array();
  for (const auto& b : g.bonds()) bonds.push_back({b.a, b.b, b.J});
  r["bonds"] = bonds;
  r["root"] = root;

  const Eigen::MatrixXd C = spin_two_point_exact(g);
  r["two_point"] = matrix_json(C);
  const Eigen::MatrixXd Cc = current_two_point(g);
  r["current_two_point_max_difference"] = (C - Cc).cwiseAbs().maxCoeff();

  const LaceCheck lc = lace_identity_check(g, root);
  r["pi0"] = vector_json(lc.pi0);
  r["lace"] = {{"residual", vector_json(lc.residual)}, {"bound", vector_json(lc.bound)}, {"min_slack", lc.min_slack}};
  auto pairs = ctx.csv("exact_pairs.csv", {"x", "two_point", "pi0", "residual", "bound", "slack"});
  for (int x = 0; x < g.vertex_count(); ++x)
    pairs.row(std::vector<double>{double(x), lc.two_point(x), lc.pi0(x), lc.residual(x), lc.bound(x),
                                  lc.bound(x) - std::abs(lc.residual(x))});
  pairs.close();

  const InequalityReport ir = inequality_suite(g, root, cut);
  json inst = json::array();
  auto csv = ctx.csv("exact_inequalities.csv", {"name", "x", "lhs", "rhs", "slack"});
  for (const auto& i : ir.instances) {
    inst.push_back({{"name", i.name}, {"x", i.x}, {"lhs", i.lhs}, {"rhs", i.rhs}, {"slack", i.slack()}});
    csv.row({i.name, std::to_string(i.x), format_double(i.lhs), format_double(i.rhs), format_double(i.slack())});
  }
  csv.close();
  r["inequalities"] = {
      {"cut_radius", ir.cut_radius}, {"instances", inst}, {"min_slack", ir.min_slack}, {"passed", ir.passed}};
}

// -- lace (exact Griffiths-Simon block system) -----------------------------------

GSParams model_gs(const Config& cfg, const Coupling& J) {
  const double lambda = finite_real(cfg, "model", "lambda");
  const double mu = finite_real(cfg, "model", "mu");
  const int N = positive_int(cfg, "model", "N", 0);
  return gs_params(lambda, mu, J, N);
}

void run_lace(Context& ctx) {
  const Config& cfg = ctx.cfg;
  const Coupling J = coupling_of(cfg, false);
  const int L = side_of(cfg.integer("geometry", "L"));
  const TorusGeometry torus(J.dim(), L);
  const GSParams gs = model_gs(cfg, J);
  auto& r = ctx.results;
  r["coupling"] = coupling_json(J);
  r["gs"] = gs_json(gs);
  r["L"] = L;

  const SpinGraph g = gs_block_graph(gs, torus);
  r["vertices"] = g.vertex_count();
  const BlockTwoPoint b = block_two_point(spin_two_point_exact(g), gs, torus);
  r["max_asymmetry"] = b.max_asymmetry;
  r["min_bound_slack"] = number(b.min_bound_slack);
  const double chi = b.G.sum();
  r["chi"] = chi;

  const PiSource pi = exact_pi(gs, torus);
  const BlockWalk walk = block_walk(gs, torus);
  r["block_walk"] = {{"p", walk.p}, {"c", walk.c}};
  const TorusTabled F = F_from_Pi(pi, walk);
  const double chi_F = chi_from_F(pi, F);
  r["Fhat0"] = F.sum();
  r["chi_from_F"] = chi_F;
  r["chi_closure_error"] = std::abs(chi_F - chi) / std::abs(chi);
  // G = P + F * G
  TorusTabled rhs = convolve(F, b.G);
  double worst = 0.0;
  for (Index x = 0; x < torus.volume(); ++x) worst = std::max(worst, std::abs(b.G[x] - pi.pi_over_N[x] - rhs[x]));
  r["identity_residual"] = worst;

  const LaceCheck lc = lace_identity_check(g, 0);
  r["pi0_check"] = {{"min_slack", lc.min_slack}};

  auto csv = ctx.csv("lace_sites.csv", site_columns(J.dim(), {"G", "pi_over_N", "F"}));
  for (Index x = 0; x < torus.volume(); ++x) {
    auto cells = site_cells(torus.coordinates(x));
    for (double v : {b.G[x], pi.pi_over_N[x], F[x]}) cells.push_back(format_double(v));
    csv.row(cells);
  }
  csv.close();
}

// -- mc --------------------------------------------------------------------------

json estimate_list(const std::vector<Site>& xs, const std::vector<Estimate>& es) {
  json j = json::array();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    json e = to_json(es[i]);
    e["x"] = to_json(xs[i]);
    j.push_back(e);
  }
  return j;
}

void run_mc(Context& ctx) {
  const Config& cfg = ctx.cfg;
  const Coupling J = coupling_of(cfg, false);
  const double lambda = finite_real(cfg, "model", "lambda");
  const std::vector<double> mus = finite_list(cfg, "model", "mu");
  const std::vector<int> Ls = sides(cfg);
  const Schedule sched = schedule(cfg);
  const std::vector<std::uint64_t> seed_list = seeds(cfg);
  const int chains = positive_int(cfg, "run", "chains", 1);
  const bool series = cfg.flag("mc", "series", false);
  auto& r = ctx.results;
  r["coupling"] = coupling_json(J);
  r["lambda"] = lambda;

  struct Job {
    int L;
    std::size_t mu_index;
    std::uint64_t seed;
    ObservableSet out;
    std::optional<Error> error;
  };
  std::vector<Job> jobs;
  for (int L : Ls)
    for (std::size_t m = 0; m < mus.size(); ++m)
      for (auto s : seed_list) jobs.push_back({L, m, s, {}, std::nullopt});

  run_tasks(jobs.size(), [&](std::size_t k) {
    Job& job = jobs[k];
    try {
      ChainInput in;
      in.coupling = J;
      in.lambda = lambda;
      in.mu = mus[job.mu_index];
      in.torus = TorusGeometry(J.dim(), job.L);
      in.schedule = sched;
      in.seed = job.seed;
      in.keep_series = series;
      for (int x = 0; x <= job.L / 2; ++x) in.displacements.push_back(axis_site(J.dim(), x));
      job.out = run_chains(in, chains);
    } catch (const Error& e) {
      job.error = e;
    }
  }, workers(cfg));

  json runs = json::array();
  auto csv = ctx.csv("mc_two_point.csv", {"lambda", "mu", "L", "seed", "abs_x", "two_point", "two_point_err",
                                         "phi3_phi", "phi3_phi_err", "sd_residual", "sd_residual_err"});
  for (const auto& job : jobs) {
    const double mu = mus[job.mu_index];
    const std::string where = "mu=" + std::to_string(mu) + " L=" + std::to_string(job.L) +
                              " seed=" + std::to_string(job.seed);
    if (job.error) {
      ctx.record(where, *job.error);
      continue;
    }
    const ObservableSet& o = job.out;
    double worst_pull = 0.0;
    for (const auto& e : o.sd_residual)
      if (e.error > 0) worst_pull = std::max(worst_pull, std::abs(e.mean) / e.error);
    runs.push_back({{"lambda", lambda},
                    {"mu", mu},
                    {"L", job.L},
                    {"seed", job.seed},
                    {"chains", chains},
                    {"phi2", to_json(o.phi2)},
                    {"phi4", to_json(o.phi4)},
                    {"chi", to_json(o.chi)},
                    {"chi_inv", to_json(o.chi_inv)},
                    {"u4", to_json(o.u4)},
                    {"acceptance", o.acceptance},
                    {"proposal_width", o.proposal_width},
                    {"measurements", o.measurements},
                    {"two_point", estimate_list(o.displacements, o.two_point)},
                    {"phi3_phi", estimate_list(o.displacements, o.phi3_phi)},
                    {"sd_residual", estimate_list(o.displacements, o.sd_residual)},
                    {"sd_residual_max_pull", worst_pull}});
    for (std::size_t i = 0; i < o.displacements.size(); ++i)
      csv.row({format_double(lambda), format_double(mu), std::to_string(job.L), std::to_string(job.seed),
               std::to_string(o.displacements[i](0)), format_double(o.two_point[i].mean),
               format_double(o.two_point[i].error), format_double(o.phi3_phi[i].mean),
               format_double(o.phi3_phi[i].error), format_double(o.sd_residual[i].mean),
               format_double(o.sd_residual[i].error)});
    if (series) {
      // chain 0 of the set
      auto s = ctx.csv("mc_series_L" + std::to_string(job.L) + "_mu" + std::to_string(job.mu_index) + "_seed" +
                           std::to_string(job.seed) + ".csv",
                       {"measurement", "phi2", "chi"});
      for (std::size_t t = 0; t < o.series_phi2.size(); ++t)
        s.row({std::to_string(t), format_double(o.series_phi2[t]), format_double(o.series_chi[t])});
      s.close();
    }
  }
  csv.close();
  r["runs"] = runs;
}

// -- critical --------------------------------------------------------------------

void run_critical(Context& ctx) {
  const Config& cfg = ctx.cfg;
  const Coupling J = coupling_of(cfg, false);
  const std::vector<double> lambdas = finite_list(cfg, "model", "lambda");
  CriticalInput base;
  base.coupling = J;
  base.mu_grid = finite_list(cfg, "model", "mu");
  base.sides = sides(cfg);
  base.schedule = schedule(cfg);
  base.seed = seeds(cfg).front();
  base.chains = positive_int(cfg, "run", "chains", 1);
  base.strict = cfg.flag("critical", "strict", true);
  auto& r = ctx.results;
  r["coupling"] = coupling_json(J);
  r["jhat"] = J.jhat();

  std::vector<CriticalResult> res(lambdas.size());
  std::vector<std::optional<Error>> errs(lambdas.size());
  run_tasks(lambdas.size(), [&](std::size_t k) {
    try {
      CriticalInput in = base;
      in.lambda = lambdas[k];
      res[k] = critical_scan(in);
    } catch (const Error& e) {
      errs[k] = e;
    }
  }, workers(cfg));

  json scans = json::array();
  auto csv = ctx.csv("critical_points.csv", {"lambda", "L", "mu", "chi", "chi_err", "chi_inv", "chi_inv_err",
                                            "phi2", "phi2_err", "u4", "u4_err"});
  std::vector<double> lam_fit, delta_fit;
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    if (errs[k]) {
      ctx.record("lambda=" + std::to_string(lambdas[k]), *errs[k]);
      continue;
    }
    const CriticalResult& c = res[k];
    json pts = json::array();
    for (const auto& p : c.points) {
      pts.push_back({{"mu", p.mu}, {"L", p.side}, {"chi", to_json(p.chi)}, {"chi_inv", to_json(p.chi_inv)},
                     {"phi2", to_json(p.phi2)}, {"u4", to_json(p.u4)}});
      csv.row(std::vector<double>{c.lambda, double(p.side), p.mu, p.chi.mean, p.chi.error, p.chi_inv.mean,
                                  p.chi_inv.error, p.phi2.mean, p.phi2.error, p.u4.mean, p.u4.error});
    }
    scans.push_back({{"lambda", c.lambda},
                     {"points", pts},
                     {"mu_c_per_side", c.mu_c_per_side},
                     {"mu_c_error_per_side", c.mu_c_error_per_side},
                     {"mu_c", c.mu_c},
                     {"mu_c_error", c.mu_c_error},
                     {"finite_size_drift", c.finite_size_drift},
                     {"mu_star", c.mu_star},
                     {"phi2_star", to_json(c.phi2_star)},
                     {"delta", c.delta},
                     {"delta_error", c.delta_error},
                     {"max_fit_pull", c.max_fit_pull},
                     {"linear", c.linear}});
    if (c.lambda > 0.0) {
      lam_fit.push_back(c.lambda);
      delta_fit.push_back(c.delta);
    }
  }
  csv.close();
  r["scans"] = scans;
  if (lam_fit.size() >= 2) {
    const LinearFit f = fit_power_law(lam_fit, delta_fit);
    json fj = fit_json(f);
    fj["exponent"] = f.slope;
    r["delta_fit"] = fj;
  }
}

// -- deconv ----------------------------------------------------------------------

double real_field(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) fail(ErrorCode::ConfigInvalid, std::string("pi source field '") + key + "' is not a number");
  return j[key].get<double>();
}

void check_table_symmetry(const TorusTabled& t) {
  const TorusGeometry& g = t.geometry;
  const double scale = std::max(1.0, t.values.abs().maxCoeff());
  for (Index i = 0; i < g.volume(); ++i) {
    const Site x = g.coordinates(i);
    for (int a = 0; a < g.dim(); ++a) {
      Site y = x;
      y(a) = -y(a);
      if (std::abs(t.at(y) - t[i]) > 1e-12 * scale)
        fail(ErrorCode::AsymmetricTable, "pi table is not invariant under sign flips");
      if (a + 1 < g.dim()) {
        y = x;
        std::swap(y(a), y(a + 1));
        if (std::abs(t.at(y) - t[i]) > 1e-12 * scale)
          fail(ErrorCode::AsymmetricTable, "pi table is not invariant under axis exchange");
      }
    }
  }
}

void add_table_entry(TorusTabled& t, const std::vector<int>& xs, double v, std::set<Index>& seen) {
  const TorusGeometry& g = t.geometry;
  if (static_cast<int>(xs.size()) != g.dim()) fail(ErrorCode::ConfigInvalid, "pi table entry has wrong dimension");
  const Index i = g.index(Eigen::Map<const Site>(xs.data(), g.dim()));
  if (!seen.insert(i).second) fail(ErrorCode::ConfigInvalid, "pi table lists a site twice");
  t[i] = v;
}

PiSource read_pi_source(const json& j, const fs::path& base, const GSParams& gs, const TorusGeometry& torus) {
  if (!j.is_object() || !j.contains("mode") || !j["mode"].is_string())
    fail(ErrorCode::ConfigInvalid, "pi source needs a string 'mode'");
  const std::string mode = j["mode"];
  if (mode == "synthetic") return synthetic_pi(torus, real_field(j, "O_bar", 0.0), real_field(j, "c_tail", 0.0));
  if (mode == "exact") return exact_pi(gs, torus);
  if (mode != "table") fail(ErrorCode::ConfigInvalid, "pi source mode is synthetic | exact | table");
  PiSource s;
  s.mode = "table";
  s.pi_over_N = TorusTabled(torus);
  std::set<Index> seen;
  if (j.contains("entries")) {
    for (const auto& e : j["entries"]) {
      if (!e.contains("x") || !e.contains("value")) fail(ErrorCode::ConfigInvalid, "pi entry needs x and value");
      add_table_entry(s.pi_over_N, e["x"].get<std::vector<int>>(), e["value"].get<double>(), seen);
    }
  } else if (j.contains("file")) {
    const fs::path file = base / j["file"].get<std::string>();
    std::ifstream in(file);
    if (!in) fail(ErrorCode::Io, "cannot read pi table " + file.string());
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      if (header) {  // x1,...,xd,value
        header = false;
        continue;
      }
      std::vector<std::string> cells;
      std::stringstream ss(line);
      std::string c;
      while (std::getline(ss, c, ',')) cells.push_back(c);
      if (cells.size() < 2) fail(ErrorCode::ConfigInvalid, "pi table row too short");
      std::vector<int> xs;
      for (std::size_t k = 0; k + 1 < cells.size(); ++k) xs.push_back(static_cast<int>(parse_integer(cells[k])));
      add_table_entry(s.pi_over_N, xs, parse_real(cells.back()), seen);
    }
  } else {
    fail(ErrorCode::ConfigInvalid, "table pi source needs 'entries' or 'file'");
  }
  check_table_symmetry(s.pi_over_N);
  return s;
}

void run_deconv(Context& ctx) {
  const Config& cfg = ctx.cfg;
  const Coupling J = coupling_of(cfg, false);
  const int L = side_of(cfg.integer("geometry", "L"));
  const TorusGeometry torus(J.dim(), L);
  const GSParams gs = model_gs(cfg, J);
  auto& r = ctx.results;
  r["coupling"] = coupling_json(J);
  r["gs"] = gs_json(gs);
  r["L"] = L;

  const fs::path pi_path = cfg.require("deconv", "pi");
  std::ifstream f(pi_path);
  if (!f) fail(ErrorCode::ConfigInvalid, "cannot read pi source " + pi_path.string());
  json src;
  try {
    src = json::parse(f);
  } catch (const json::exception& e) {
    fail(ErrorCode::ConfigInvalid, std::string("pi source is not valid JSON: ") + e.what());
  }
  const PiSource pi = read_pi_source(src, pi_path.parent_path(), gs, torus);
  r["pi_source"] = {{"mode", pi.mode}, {"pihat0", pi.pi_over_N.sum()}, {"origin", pi.pi_over_N[0]}};

  const BlockWalk walk = block_walk(gs, torus);
  const TorusTabled F = F_from_Pi(pi, walk);
  const QR qr = qr_solve(F, walk.D);
  r["Fhat0"] = qr.Fhat0;
  r["nabla2_F"] = qr.nabla2_F;
  r["q"] = qr.q;
  r["r"] = qr.r;
  r["chi"] = chi_from_F(pi, F);

  const double lo = cfg.real("fit", "min", 2.0);
  const double hi = cfg.real("fit", "max", L / 4.0);
  const TorusTabled E = assemble_E(F, walk.D, qr);
  const DecayReport rep = e_decay_check(E, qr.q, walk.D, lo, hi);
  json fj = fit_json(rep.fit);
  fj["window"] = {lo, hi};
  r["E"] = {{"Ehat0", rep.Ehat0},
            {"nabla2_E", rep.nabla2_E},
            {"exponent", number(rep.exponent)},
            {"identically_zero", rep.identically_zero},
            {"passed", rep.passed},
            {"fit", fj}};
  auto csv = ctx.csv("deconv_decay.csv", {"abs_x", "max_abs_E_conv_S"});
  for (std::size_t k = 0; k < rep.shell_radius.size(); ++k)
    csv.row(std::vector<double>{rep.shell_radius[k], rep.shell_max[k]});
  csv.close();

  const TorusTabled Phi = src.contains("phi2")
                              ? synthetic_phi(torus, real_field(src, "phi2", 0.0), real_field(src, "phi_tail", 0.0))
                              : phi_from_pi(pi, gs);
  const EffectiveWalk ew = effective_linear_sd(Phi, J, gs.lambda, gs.mu);
  r["effective"] = {{"A", ew.A},
                    {"chi_inv", ew.chi_inv},
                    {"killing", ew.killing},
                    {"chi_roundtrip", ew.chi_roundtrip},
                    {"amplitude_ratio", ew.amplitude_ratio}};
}

const std::map<std::string, std::function<void(Context&)>>& handlers() {
  static const std::map<std::string, std::function<void(Context&)>> h = {
      {"greens", run_greens}, {"gs-check", run_gs_check}, {"exact", run_exact},  {"lace", run_lace},
      {"mc", run_mc},         {"critical", run_critical}, {"deconv", run_deconv},
  };
  return h;
}

json envelope(const std::string& sub, const std::string& hash) {
  return {{"toolkit", kToolkitName}, {"version", kToolkitVersion}, {"subcommand", sub},
          {"config_hash", hash},     {"status", "ok"},            {"errors", json::array()},
          {"results", json::object()}};
}

// Last resort when the config itself is unusable: still leave a summary behind.
int write_failure(const std::string& sub, const std::string& out_dir, const std::string& code,
                  const std::string& message, int exit_code) {
  json doc = envelope(sub, "");
  doc["status"] = "error";
  doc["errors"].push_back(error_record(code, message, "config"));
  std::cerr << "lace " << sub << ": " << message << "\n";
  try {
    fs::create_directories(out_dir);
    write_text_file((fs::path(out_dir) / (sub + ".json")).string(), doc.dump(2) + "\n");
  } catch (const std::exception&) {
  }
  return exit_code;
}

struct FlagSpec {
  const char* flag;
  const char* section;
  const char* key;
  const char* help;
  bool boolean = false;
};

const std::vector<FlagSpec>& flag_specs() {
  static const std::vector<FlagSpec> specs = {
      {"--coupling", "coupling", "kind", "coupling kind: nn | box | table"},
      {"--d", "coupling", "dim", "lattice dimension"},
      {"--amplitude", "coupling", "amplitude", "coupling amplitude"},
      {"--radius", "coupling", "radius", "box radius"},
      {"--entries", "coupling", "entries", "table entries 'x1 .. xd : J; ...'"},
      {"--p", "model", "p", "fugacity"},
      {"--lambda", "model", "lambda", "quartic coupling (list for critical)"},
      {"--mu", "model", "mu", "mass parameter (list for mc / critical)"},
      {"--N", "model", "N", "replicas per site (list for gs-check)"},
      {"--L", "geometry", "L", "torus side (list for mc / critical)"},
      {"--sweeps", "schedule", "sweeps", "measurement sweeps"},
      {"--burn-in", "schedule", "burn_in", "burn-in sweeps"},
      {"--thin", "schedule", "thin", "sweeps between measurements"},
      {"--seeds", "run", "seeds", "comma separated seeds"},
      {"--chains", "run", "chains", "chains per seed"},
      {"--workers", "run", "workers", "worker threads (0 = all cores)"},
      {"--fit-min", "fit", "min", "lower |x| of the fit window"},
      {"--fit-max", "fit", "max", "upper |x| of the fit window"},
      {"--zero-mode", "greens", "zero_mode", "reject | subtract"},
      {"--bessel", "greens", "bessel", "compare with the free-space Bessel integral", true},
      {"--conv-orders", "greens", "conv_orders", "n list for the convolution bounds"},
      {"--conv-radius", "greens", "conv_radius", "largest |x| of the convolution scan"},
      {"--graph", "exact", "graph", "edge-list file"},
      {"--J", "exact", "J", "coupling applied to every bond"},
      {"--root", "exact", "root", "root vertex"},
      {"--cut", "exact", "cut", "Simon-Lieb cut radius"},
      {"--series", "mc", "series", "write the phi^2 / chi time series", true},
      {"--pi", "deconv", "pi", "pi source JSON"},
  };
  return specs;
}

const std::map<std::string, std::vector<std::string>>& subcommand_flags() {
  static const std::vector<std::string> coupling = {"--coupling", "--d", "--amplitude", "--radius", "--entries"};
  static const std::vector<std::string> mcflags = {"--lambda", "--mu",    "--L",     "--sweeps", "--burn-in",
                                                   "--thin",   "--seeds", "--chains", "--workers"};
  auto with = [](std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  };
  static const std::map<std::string, std::vector<std::string>> m = {
      {"greens", with(coupling, {"--p", "--L", "--zero-mode", "--bessel", "--conv-orders", "--conv-radius",
                                 "--fit-min", "--fit-max"})},
      {"gs-check", with(coupling, {"--lambda", "--mu", "--N", "--L"})},
      {"exact", {"--graph", "--J", "--root", "--cut"}},
      {"lace", with(coupling, {"--lambda", "--mu", "--N", "--L"})},
      {"mc", with(with(coupling, mcflags), {"--series"})},
      {"critical", with(coupling, mcflags)},
      {"deconv", with(coupling, {"--pi", "--lambda", "--mu", "--N", "--L", "--fit-min", "--fit-max"})},
  };
  return m;
}

const char* describe(const std::string& sub) {
  if (sub == "greens") return "random-walk Green function on a torus, sum rule, decay fits, convolution bounds";
  if (sub == "gs-check") return "Griffiths-Simon single-site convergence and small exact block systems";
  if (sub == "exact") return "exact two-point functions, pi0 and inequality checks on an edge-list graph";
  if (sub == "lace") return "lace identity on an exact Griffiths-Simon block system";
  if (sub == "mc") return "Metropolis estimates and Schwinger-Dyson residuals";
  if (sub == "critical") return "critical-point scan and mass-shift check";
  return "deconvolution of G = P + F * G and the effective linear equation";
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> s = {"greens", "gs-check", "exact", "lace", "mc", "critical", "deconv"};
  return s;
}

int dispatch(const std::string& subcommand, const Config& cfg) {
  const std::string out_dir = cfg.text("run", "out", ".");
  auto h = handlers().find(subcommand);
  if (h == handlers().end())
    return write_failure(subcommand, out_dir, "ConfigInvalid", "unknown subcommand " + subcommand, 2);
  try {
    check_keys(cfg);
  } catch (const Error& e) {
    return write_failure(subcommand, out_dir, "ConfigInvalid", e.what(), 2);
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir))
    return write_failure(subcommand, ".", "ConfigInvalid", "output directory " + out_dir + " is not writable", 2);

  const std::string hash = cfg.hash();
  json doc = envelope(subcommand, hash);
  doc["config"] = cfg.to_json();
  Context ctx{cfg, out_dir, hash, doc["results"], doc["errors"]};
  int code = 0;
  try {
    h->second(ctx);
  } catch (const Error& e) {
    ctx.record(subcommand, e);
    code = e.code() == ErrorCode::ConfigInvalid ? 2 : 1;
  } catch (const std::exception& e) {
    doc["errors"].push_back(error_record("Internal", e.what(), subcommand));
    code = 1;
  }
  if (!doc["errors"].empty()) {
    if (code == 0) code = 1;
    doc["status"] = doc["results"].empty() ? "error" : "partial";
    for (const auto& e : doc["errors"]) std::cerr << "lace " << subcommand << ": " << e["message"].get<std::string>() << "\n";
  }
  try {
    write_text_file(ctx.path(subcommand + ".json"), doc.dump(2) + "\n");
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return code ? code : 1;
  }
  return code;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"lacekit: lattice phi^4 two-point function toolkit"};
  app.set_version_flag("--version", std::string(kToolkitName) + " " + kToolkitVersion);
  app.require_subcommand(1);

  struct Bound {
    CLI::Option* opt;
    const FlagSpec* spec;
    std::string* text;
    bool* value;
  };
  std::deque<std::string> texts;
  std::map<std::string, std::vector<Bound>> bound;
  std::map<std::string, std::string> config_path, out_path;
  std::map<std::string, CLI::Option*> config_opt, out_opt;

  std::map<std::string, const FlagSpec*> by_flag;
  for (const auto& s : flag_specs()) by_flag[s.flag] = &s;
  std::deque<bool> flag_store;

  for (const auto& sub : subcommands()) {
    CLI::App* s = app.add_subcommand(sub, describe(sub));
    config_opt[sub] = s->add_option("--config", config_path[sub], "config file (INI-like)");
    out_opt[sub] = s->add_option("--out", out_path[sub], "output directory");
    for (const auto& name : subcommand_flags().at(sub)) {
      const FlagSpec* spec = by_flag.at(name);
      if (spec->boolean) {
        flag_store.push_back(false);
        bool* slot = &flag_store.back();
        bound[sub].push_back({s->add_flag(spec->flag, *slot, spec->help), spec, nullptr, slot});
      } else {
        texts.emplace_back();
        std::string* slot = &texts.back();
        bound[sub].push_back({s->add_option(spec->flag, *slot, spec->help), spec, slot, nullptr});
      }
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  const std::string sub = app.get_subcommands().front()->get_name();
  const std::string flag_out = out_opt[sub]->count() ? out_path[sub] : "";
  Config cfg;
  try {
    if (config_opt[sub]->count()) cfg = Config::load(config_path[sub]);
  } catch (const Error& e) {
    return write_failure(sub, flag_out.empty() ? "." : flag_out, "ConfigInvalid", e.what(), 2);
  }
  for (const auto& b : bound[sub]) {
    if (!b.opt->count()) continue;
    cfg.set(b.spec->section, b.spec->key, b.text ? *b.text : (*b.value ? "true" : "false"));
  }
  if (!flag_out.empty()) cfg.set("run", "out", flag_out);
  return dispatch(sub, cfg);
}

}  // namespace lace
