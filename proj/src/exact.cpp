#include "lace/exact.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>

#include "lace/parallel.hpp"

namespace lace {

Eigen::MatrixXd spin_two_point_exact(const SpinGraph& g) {
  const int n = g.vertex_count();
  if (n > kMaxSpinVertices)
    fail(ErrorCode::TooManyVertices, std::to_string(n) + " vertices exceed the limit " + std::to_string(kMaxSpinVertices));
  std::vector<std::vector<std::pair<int, double>>> adj(n);
  double emax = 0.0;
  for (const auto& b : g.bonds()) {
    adj[b.a].push_back({b.b, b.J});
    adj[b.b].push_back({b.a, b.J});
    emax += b.J;
  }
  // vertex 0 is pinned to +1 (global flip symmetry); Gray code over the rest
  std::vector<int> s(n, 1);
  double energy = emax;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
  double z = 0.0;
  const std::uint64_t configs = std::uint64_t{1} << (n - 1);
  for (std::uint64_t c = 0; c < configs; ++c) {
    if (c > 0) {
      const int v = std::countr_zero(c) + 1;
      double h = 0.0;
      for (auto [u, J] : adj[v]) h += J * s[u];
      energy -= 2.0 * s[v] * h;
      s[v] = -s[v];
    }
    const double w = std::exp(energy - emax);
    z += w;
    for (int a = 0; a < n; ++a) {
      const double wa = w * s[a];
      for (int b = a + 1; b < n; ++b) acc(a, b) += wa * s[b];
    }
  }
  Eigen::MatrixXd C = Eigen::MatrixXd::Identity(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) C(a, b) = C(b, a) = acc(a, b) / z;
  return C;
}

int edge_disjoint_paths(int vertex_count, const std::vector<std::pair<int, int>>& edges, int s, int t, int limit) {
  if (s == t) return limit;
  const int n = vertex_count;
  std::vector<int> cap(static_cast<std::size_t>(n) * n, 0);
  for (auto [a, b] : edges) {
    cap[a * n + b] += 1;
    cap[b * n + a] += 1;
  }
  int flow = 0;
  std::vector<int> parent(n);
  while (flow < limit) {
    std::fill(parent.begin(), parent.end(), -1);
    parent[s] = s;
    std::queue<int> q;
    q.push(s);
    while (!q.empty() && parent[t] < 0) {
      const int u = q.front();
      q.pop();
      for (int v = 0; v < n; ++v)
        if (parent[v] < 0 && cap[u * n + v] > 0) {
          parent[v] = u;
          q.push(v);
        }
    }
    if (parent[t] < 0) break;
    for (int v = t; v != s; v = parent[v]) {
      cap[parent[v] * n + v] -= 1;
      cap[v * n + parent[v]] += 1;
    }
    ++flow;
  }
  return flow;
}

namespace {

struct CurrentSums {
  double z = 0.0;                  // sourceless
  std::vector<double> pair;        // n*n, sources {a, b}
  std::vector<double> pi_num;      // sources {root, x} with root <=> x
};

class CurrentEnumerator {
 public:
  CurrentEnumerator(const SpinGraph& g, int root) : n_(g.vertex_count()), root_(root) {
    if (static_cast<int>(g.bonds().size()) > kMaxCurrentBonds)
      fail(ErrorCode::TooManyBonds, std::to_string(g.bonds().size()) + " bonds exceed the limit " +
                                        std::to_string(kMaxCurrentBonds));
    if (n_ > 64) fail(ErrorCode::TooManyVertices, "current enumeration supports at most 64 vertices");
    bonds_ = g.bonds();
    std::stable_sort(bonds_.begin(), bonds_.end(), [](const Bond& x, const Bond& y) { return x.J > y.J; });
    const int m = static_cast<int>(bonds_.size());
    for (const auto& b : bonds_) {
      // weights rescaled by e^{-J}; the three states then sum to 1
      const double J = b.J;
      weights_.push_back({std::exp(-J), 2.0 * std::pow(std::sinh(0.5 * J), 2) * std::exp(-J), -0.5 * std::expm1(-2.0 * J)});
    }
    finalized_at_.assign(m, {});
    std::vector<int> last(n_, -1);
    for (int i = 0; i < m; ++i) last[bonds_[i].a] = last[bonds_[i].b] = i;
    for (int v = 0; v < n_; ++v)
      if (last[v] >= 0) finalized_at_[last[v]] |= std::uint64_t{1} << v;
  }

  CurrentSums run() {
    const int m = static_cast<int>(bonds_.size());
    const int split = std::min(m, 2);
    std::size_t tasks = 1;
    for (int i = 0; i < split; ++i) tasks *= 3;
    std::vector<CurrentSums> parts(tasks);
    run_tasks(tasks, [&](std::size_t t) {
      CurrentSums& acc = parts[t];
      acc.pair.assign(static_cast<std::size_t>(n_) * n_, 0.0);
      acc.pi_num.assign(n_, 0.0);
      // decode the leading states of this task
      std::uint64_t parity = 0, occupied = 0;
      double w = 1.0;
      int odd_final = 0;
      std::size_t code = t;
      for (int i = 0; i < split; ++i) {
        const int state = static_cast<int>(code % 3);
        code /= 3;
        if (!apply(i, state, parity, occupied, w, odd_final)) return;
      }
      dfs(split, parity, occupied, w, odd_final, acc);
    });
    CurrentSums total;
    total.pair.assign(static_cast<std::size_t>(n_) * n_, 0.0);
    total.pi_num.assign(n_, 0.0);
    for (const auto& p : parts) {
      if (p.pair.empty()) continue;
      total.z += p.z;
      for (std::size_t i = 0; i < total.pair.size(); ++i) total.pair[i] += p.pair[i];
      for (int i = 0; i < n_; ++i) total.pi_num[i] += p.pi_num[i];
    }
    return total;
  }

 private:
  // state: 0 zero, 1 even positive, 2 odd. Returns false when the branch is dead.
  bool apply(int i, int state, std::uint64_t& parity, std::uint64_t& occupied, double& w, int& odd_final) const {
    w *= weights_[i][state];
    if (w == 0.0) return false;
    if (state != 0) occupied |= std::uint64_t{1} << i;
    if (state == 2) parity ^= (std::uint64_t{1} << bonds_[i].a) | (std::uint64_t{1} << bonds_[i].b);
    odd_final += std::popcount(parity & finalized_at_[i]);
    // a finished vertex stays odd; more than two sources never contribute
    return odd_final <= 2;
  }

  void dfs(int i, std::uint64_t parity, std::uint64_t occupied, double w, int odd_final, CurrentSums& acc) const {
    if (i == static_cast<int>(bonds_.size())) {
      leaf(parity, occupied, w, acc);
      return;
    }
    for (int state = 0; state < 3; ++state) {
      std::uint64_t p = parity, o = occupied;
      double ww = w;
      int f = odd_final;
      if (apply(i, state, p, o, ww, f)) dfs(i + 1, p, o, ww, f, acc);
    }
  }

  void leaf(std::uint64_t parity, std::uint64_t occupied, double w, CurrentSums& acc) const {
    const int sources = std::popcount(parity);
    if (sources == 0) {
      acc.z += w;
      return;
    }
    if (sources != 2) return;
    const int a = std::countr_zero(parity);
    const int b = 63 - std::countl_zero(parity);
    acc.pair[a * n_ + b] += w;
    if (root_ < 0 || (a != root_ && b != root_)) return;
    const int x = a == root_ ? b : a;
    std::vector<std::pair<int, int>> edges;
    for (int k = 0; k < static_cast<int>(bonds_.size()); ++k)
      if (occupied >> k & 1) edges.push_back({bonds_[k].a, bonds_[k].b});
    if (edge_disjoint_paths(n_, edges, root_, x, 2) >= 2) acc.pi_num[x] += w;
  }

  int n_;
  int root_;
  std::vector<Bond> bonds_;
  std::vector<std::array<double, 3>> weights_;
  std::vector<std::uint64_t> finalized_at_;
};

}  // namespace

Eigen::MatrixXd current_two_point(const SpinGraph& g) {
  const int n = g.vertex_count();
  CurrentSums s = CurrentEnumerator(g, -1).run();
  Eigen::MatrixXd C = Eigen::MatrixXd::Identity(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b) C(a, b) = C(b, a) = s.pair[a * n + b] / s.z;
  return C;
}

Eigen::VectorXd pi0(const SpinGraph& g, int root) {
  const int n = g.vertex_count();
  if (root < 0 || root >= n) fail(ErrorCode::InvalidArgument, "root vertex out of range");
  CurrentSums s = CurrentEnumerator(g, root).run();
  Eigen::VectorXd out(n);
  for (int x = 0; x < n; ++x) out(x) = x == root ? 1.0 : s.pi_num[x] / s.z;
  return out;
}

Eigen::MatrixXd full_pi(const Eigen::MatrixXd& C, const SpinGraph& g) {
  const Eigen::MatrixXd tau = g.tanh_matrix();
  const Index n = C.rows();
  // pi (1 + tau C) = C, transposed with C and tau symmetric
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) + C * tau;
  Eigen::MatrixXd piT = A.partialPivLu().solve(C);
  return piT.transpose();
}

LaceCheck lace_identity_check(const SpinGraph& g, int root) {
  LaceCheck out;
  out.root = root;
  const Eigen::MatrixXd C = spin_two_point_exact(g);
  out.two_point = C.row(root).transpose();
  out.pi0 = pi0(g, root);
  const Eigen::MatrixXd tau = g.tanh_matrix();
  out.bound = (out.pi0.transpose() * tau * C).transpose();
  out.residual = out.two_point - out.pi0 - out.bound;
  out.min_slack = (out.bound - out.residual.cwiseAbs()).minCoeff();
  return out;
}

InequalityReport inequality_suite(const SpinGraph& g, int root, double cut_radius) {
  const int n = g.vertex_count();
  if (root < 0 || root >= n) fail(ErrorCode::InvalidArgument, "root vertex out of range");
  const auto dist = g.distances_from(root);
  bool outside = false;
  for (double d : dist) outside |= std::isfinite(d) && d > cut_radius;
  if (!(cut_radius >= 0.0) || !outside)
    fail(ErrorCode::BadCutRadius, "cut radius must be >= 0 and leave some vertex outside");

  InequalityReport rep;
  rep.root = root;
  rep.cut_radius = cut_radius;
  const Eigen::MatrixXd C = spin_two_point_exact(g);
  const Eigen::MatrixXd tau = g.tanh_matrix();
  const Eigen::VectorXd p0 = pi0(g, root);

  const Eigen::VectorXd through = tau.row(root) * C;
  for (int x = 0; x < n; ++x)
    rep.instances.push_back({"apriori", x, C(root, x) - (x == root ? 1.0 : 0.0), through(x)});

  for (int x = 0; x < n; ++x) {
    if (!(dist[x] > cut_radius)) continue;
    double rhs = 0.0;
    for (int u = 0; u < n; ++u) {
      if (!(dist[u] <= cut_radius)) continue;
      for (int v = 0; v < n; ++v)
        if (dist[v] > cut_radius) rhs += C(root, u) * tau(u, v) * C(v, x);
    }
    rep.instances.push_back({"simon_lieb", x, C(root, x), rhs});
  }

  for (int x = 0; x < n; ++x) {
    if (x == root) {
      rep.instances.push_back({"pi0_origin", x, p0(x), 1.0});
      continue;
    }
    rep.instances.push_back({"diagrammatic", x, p0(x), std::pow(C(root, x), 3)});
  }
  rep.min_slack = std::numeric_limits<double>::infinity();
  for (const auto& i : rep.instances) rep.min_slack = std::min(rep.min_slack, i.slack());
  rep.passed = rep.min_slack >= -1e-12;
  for (const auto& i : rep.instances)
    if (i.name == "pi0_origin" && i.lhs != 1.0) rep.passed = false;
  return rep;
}

}  // namespace lace
