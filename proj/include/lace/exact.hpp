#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lace/torus.hpp"

namespace lace {

struct Bond {
  int a = 0;
  int b = 0;
  double J = 0.0;
};

/// Simple graph with ferromagnetic couplings. Vertices may carry a spatial
/// position and a replica index (Griffiths-Simon block systems).
class SpinGraph {
 public:
  SpinGraph() = default;
  SpinGraph(int vertex_count, std::vector<Bond> bonds);

  int vertex_count() const noexcept { return n_; }
  const std::vector<Bond>& bonds() const noexcept { return bonds_; }

  void set_positions(std::vector<Site> positions);
  void set_blocks(std::vector<int> site_of_vertex, std::vector<int> replica_of_vertex);
  bool has_positions() const noexcept { return !positions_.empty(); }
  bool has_blocks() const noexcept { return !site_.empty(); }
  const Site& position(int v) const { return positions_.at(v); }
  int site(int v) const { return site_.at(v); }
  int replica(int v) const { return replica_.at(v); }

  /// tanh J as a symmetric matrix (zero off the bond set).
  Eigen::MatrixXd tanh_matrix() const;
  /// Euclidean distance of positions when present, else BFS hop count from `root`.
  std::vector<double> distances_from(int root) const;

  SpinGraph with_coupling(std::size_t bond, double J) const;

 private:
  int n_ = 0;
  std::vector<Bond> bonds_;
  std::vector<Site> positions_;
  std::vector<int> site_, replica_;
};

/// Edge list: first token vertex_count, then lines `a b [J]` (0-based).
/// Lines without J take `default_J` (required then). '#' starts a comment.
SpinGraph read_edge_list(const std::string& path, std::optional<double> default_J = std::nullopt);
SpinGraph parse_edge_list(const std::string& text, std::optional<double> default_J = std::nullopt);

constexpr int kMaxSpinVertices = 20;
constexpr int kMaxCurrentBonds = 18;

/// <sigma_a sigma_b> by summing all 2^|V| spin configurations.
Eigen::MatrixXd spin_two_point_exact(const SpinGraph& g);

/// Same matrix from the random-current representation with collapsed bond states
/// {zero, even>0, odd} of weights {1, cosh J - 1, sinh J}.
Eigen::MatrixXd current_two_point(const SpinGraph& g);

/// pi^(0)(root, x): current configurations with sources {root, x} in which root and
/// x are joined by two bond-disjoint occupied paths, over the sourceless sum.
Eigen::VectorXd pi0(const SpinGraph& g, int root);

/// Number of edge-disjoint s-t paths (capped at `limit`) in an undirected multigraph.
int edge_disjoint_paths(int vertex_count, const std::vector<std::pair<int, int>>& edges, int s, int t, int limit = 2);

/// Full lace coefficient pi = C (1 + tau C)^{-1}, all orders at once.
Eigen::MatrixXd full_pi(const Eigen::MatrixXd& C, const SpinGraph& g);

struct LaceCheck {
  int root = 0;
  Eigen::VectorXd two_point;   // <sigma_root sigma_x>
  Eigen::VectorXd pi0;
  Eigen::VectorXd residual;    // r^(1)(root, x)
  Eigen::VectorXd bound;       // sum_u pi0(root,u) sum_v tanh J_uv <sigma_v sigma_x>
  double min_slack = 0.0;      // min_x bound - |residual|
};

LaceCheck lace_identity_check(const SpinGraph& g, int root);

struct InequalityInstance {
  std::string name;  // apriori | simon_lieb | diagrammatic | pi0_origin
  int x = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack() const { return rhs - lhs; }
};

struct InequalityReport {
  int root = 0;
  double cut_radius = 0.0;
  std::vector<InequalityInstance> instances;
  double min_slack = 0.0;
  bool passed = false;  // all slacks >= -1e-12
};

/// A-priori bound, Simon-Lieb bound through the cut {dist <= cut_radius}, and
/// pi0 <= <sigma sigma>^3. BadCutRadius unless some vertex lies beyond the cut.
InequalityReport inequality_suite(const SpinGraph& g, int root, double cut_radius);

}  // namespace lace
