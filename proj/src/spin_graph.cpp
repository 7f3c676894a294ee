#include "lace/exact.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <set>
#include <sstream>

namespace lace {

SpinGraph::SpinGraph(int vertex_count, std::vector<Bond> bonds) : n_(vertex_count), bonds_(std::move(bonds)) {
  if (vertex_count < 1) fail(ErrorCode::InvalidArgument, "a graph needs at least one vertex");
  std::set<std::pair<int, int>> seen;
  for (const auto& b : bonds_) {
    if (b.a < 0 || b.b < 0 || b.a >= n_ || b.b >= n_)
      fail(ErrorCode::InvalidArgument, "bond endpoint out of range: " + std::to_string(b.a) + " " + std::to_string(b.b));
    if (b.a == b.b) fail(ErrorCode::InvalidArgument, "self-loop at vertex " + std::to_string(b.a));
    if (!(b.J >= 0.0) || !std::isfinite(b.J)) fail(ErrorCode::InvalidArgument, "couplings must be finite and >= 0");
    if (!seen.insert(std::minmax(b.a, b.b)).second)
      fail(ErrorCode::InvalidArgument, "duplicate bond " + std::to_string(b.a) + " " + std::to_string(b.b));
  }
}

void SpinGraph::set_positions(std::vector<Site> positions) {
  if (static_cast<int>(positions.size()) != n_) fail(ErrorCode::InvalidArgument, "one position per vertex");
  positions_ = std::move(positions);
}

void SpinGraph::set_blocks(std::vector<int> site_of_vertex, std::vector<int> replica_of_vertex) {
  if (static_cast<int>(site_of_vertex.size()) != n_ || static_cast<int>(replica_of_vertex.size()) != n_)
    fail(ErrorCode::InvalidArgument, "one block tag per vertex");
  site_ = std::move(site_of_vertex);
  replica_ = std::move(replica_of_vertex);
}

Eigen::MatrixXd SpinGraph::tanh_matrix() const {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(n_, n_);
  for (const auto& b : bonds_) t(b.a, b.b) = t(b.b, b.a) = std::tanh(b.J);
  return t;
}

std::vector<double> SpinGraph::distances_from(int root) const {
  std::vector<double> dist(n_, std::numeric_limits<double>::infinity());
  if (has_positions()) {
    for (int v = 0; v < n_; ++v) dist[v] = std::sqrt(static_cast<double>((positions_[v] - positions_[root]).squaredNorm()));
    return dist;
  }
  std::vector<std::vector<int>> adj(n_);
  for (const auto& b : bonds_) {
    adj[b.a].push_back(b.b);
    adj[b.b].push_back(b.a);
  }
  std::queue<int> q;
  dist[root] = 0.0;
  q.push(root);
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (int v : adj[u])
      if (std::isinf(dist[v])) {
        dist[v] = dist[u] + 1.0;
        q.push(v);
      }
  }
  return dist;
}

SpinGraph SpinGraph::with_coupling(std::size_t bond, double J) const {
  SpinGraph g = *this;
  g.bonds_.at(bond).J = J;
  return g;
}

SpinGraph parse_edge_list(const std::string& text, std::optional<double> default_J) {
  std::istringstream in(text);
  std::string line;
  int n = -1;
  std::vector<Bond> bonds;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    auto bad = [&](const std::string& why) {
      fail(ErrorCode::ConfigInvalid, "edge list line " + std::to_string(lineno) + ": " + why);
    };
    try {
      if (n < 0) {
        if (tok.size() != 1) bad("expected the vertex count alone");
        n = std::stoi(tok[0]);
        continue;
      }
      if (tok.size() < 2 || tok.size() > 3) bad("expected 'a b [J]'");
      Bond b{std::stoi(tok[0]), std::stoi(tok[1]), 0.0};
      if (tok.size() == 3)
        b.J = std::stod(tok[2]);
      else if (default_J)
        b.J = *default_J;
      else
        bad("no coupling given and no default J");
      bonds.push_back(b);
    } catch (const std::invalid_argument&) {
      bad("not a number");
    } catch (const std::out_of_range&) {
      bad("number out of range");
    }
  }
  if (n < 0) fail(ErrorCode::ConfigInvalid, "edge list is empty");
  return SpinGraph(n, std::move(bonds));
}

SpinGraph read_edge_list(const std::string& path, std::optional<double> default_J) {
  std::ifstream f(path);
  if (!f) fail(ErrorCode::Io, "cannot open graph file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_edge_list(ss.str(), default_J);
}

}  // namespace lace
