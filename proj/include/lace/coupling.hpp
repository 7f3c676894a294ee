#pragma once

#include <map>
#include <string>
#include <vector>

#include "lace/torus.hpp"

namespace lace {

enum class CouplingKind { NearestNeighbor, SpreadOutBox, Table };

struct CouplingEntry {
  Site offset;
  double value = 0.0;
};

/// Finite-range, Z^d-symmetric ferromagnetic coupling J(v) with its moments.
/// Immutable once built. Only nonzero entries are stored.
class Coupling {
 public:
  Coupling() = default;

  int dim() const noexcept { return dim_; }
  CouplingKind kind() const noexcept { return kind_; }
  double amplitude() const noexcept { return amplitude_; }
  int box_radius() const noexcept { return radius_; }
  const std::vector<CouplingEntry>& entries() const noexcept { return entries_; }

  /// sum_v J(v)
  double jhat() const noexcept { return jhat_; }
  /// sum_x |x|^2 J(x) / jhat
  double variance() const noexcept { return variance_; }
  /// max_v |v|_inf over the support
  int range() const noexcept { return range_; }

  double at(const Site& v) const;

  friend Coupling nearest_neighbor(int dim, double amplitude);
  friend Coupling spread_out_box(int dim, int radius, double amplitude);
  friend Coupling coupling_from_table(int dim, std::vector<CouplingEntry> entries);

 private:
  void finalize();

  int dim_ = 0;
  CouplingKind kind_ = CouplingKind::Table;
  double amplitude_ = 0.0;
  int radius_ = 0;
  std::vector<CouplingEntry> entries_;
  double jhat_ = 0.0;
  double variance_ = 0.0;
  int range_ = 0;
};

Coupling nearest_neighbor(int dim, double amplitude);
/// J(v) = amplitude for 0 < |v|_inf <= radius.
Coupling spread_out_box(int dim, int radius, double amplitude);
/// Validated, never symmetrized: AsymmetricTable / NonzeroSelfCoupling on bad input.
Coupling coupling_from_table(int dim, std::vector<CouplingEntry> entries);

Coupling build_coupling(CouplingKind kind, int dim, double amplitude, int radius = 1,
                        std::vector<CouplingEntry> table = {});

/// One-step distribution D(v) = tanh(s J(v)) / sum_u tanh(s J(u)), with `bond_scale`
/// s applied to every bond first (s = eps_N^2 for the Griffiths-Simon couplings).
Coupling step_distribution(const Coupling& coupling, double bond_scale = 1.0);

/// Periodized table J_T(v) = sum_z J(v + L z). NonzeroSelfCoupling if an image
/// of a bond lands on the origin.
TorusTabled on_torus(const Coupling& coupling, const TorusGeometry& torus);

/// Flat key/value block: kind, dim, amplitude, radius, entries.
std::map<std::string, std::string> to_config(const Coupling& coupling);
Coupling coupling_from_config(const std::map<std::string, std::string>& block);

}  // namespace lace
