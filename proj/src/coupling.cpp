#include "lace/coupling.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lace {

namespace {

struct SiteLess {
  bool operator()(const Site& a, const Site& b) const {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
  }
};

bool close(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

void check_symmetry(int dim, const std::vector<CouplingEntry>& entries) {
  std::map<Site, double, SiteLess> lookup;
  for (const auto& e : entries) {
    if (e.offset.size() != dim) fail(ErrorCode::InvalidArgument, "coupling entry has wrong dimension");
    if (!lookup.emplace(e.offset, e.value).second)
      fail(ErrorCode::InvalidArgument, "duplicate coupling entry");
    if (e.value < 0.0) fail(ErrorCode::InvalidArgument, "coupling values must be nonnegative");
    if (e.offset.isZero() && e.value != 0.0)
      fail(ErrorCode::NonzeroSelfCoupling, "J(o) must vanish");
  }
  auto value_at = [&](const Site& v) {
    auto it = lookup.find(v);
    return it == lookup.end() ? 0.0 : it->second;
  };
  // Sign flips of each axis and adjacent transpositions generate the
  // hyperoctahedral group, so checking them is enough.
  for (const auto& e : entries) {
    if (e.value == 0.0) continue;
    for (int a = 0; a < dim; ++a) {
      Site flipped = e.offset;
      flipped(a) = -flipped(a);
      if (!close(value_at(flipped), e.value))
        fail(ErrorCode::AsymmetricTable, "table is not invariant under sign flip of axis " + std::to_string(a));
    }
    for (int a = 0; a + 1 < dim; ++a) {
      Site swapped = e.offset;
      std::swap(swapped(a), swapped(a + 1));
      if (!close(value_at(swapped), e.value))
        fail(ErrorCode::AsymmetricTable, "table is not invariant under exchange of axes " + std::to_string(a) +
                                             " and " + std::to_string(a + 1));
    }
  }
}

}  // namespace

double Coupling::at(const Site& v) const {
  for (const auto& e : entries_)
    if (e.offset == v) return e.value;
  return 0.0;
}

void Coupling::finalize() {
  std::erase_if(entries_, [](const CouplingEntry& e) { return e.value == 0.0; });
  std::sort(entries_.begin(), entries_.end(),
            [](const CouplingEntry& a, const CouplingEntry& b) { return SiteLess{}(a.offset, b.offset); });
  jhat_ = 0.0;
  double m2 = 0.0;
  range_ = 0;
  for (const auto& e : entries_) {
    jhat_ += e.value;
    m2 += e.offset.squaredNorm() * e.value;
    range_ = std::max(range_, e.offset.cwiseAbs().maxCoeff());
  }
  variance_ = jhat_ > 0.0 ? m2 / jhat_ : 0.0;
}

Coupling nearest_neighbor(int dim, double amplitude) {
  if (dim < 1) fail(ErrorCode::InvalidArgument, "dimension must be >= 1");
  if (amplitude < 0.0) fail(ErrorCode::InvalidArgument, "amplitude must be nonnegative");
  Coupling c;
  c.dim_ = dim;
  c.kind_ = CouplingKind::NearestNeighbor;
  c.amplitude_ = amplitude;
  c.radius_ = 1;
  for (int a = 0; a < dim; ++a) {
    for (int s : {-1, 1}) {
      Site v = Site::Zero(dim);
      v(a) = s;
      c.entries_.push_back({v, amplitude});
    }
  }
  c.finalize();
  return c;
}

Coupling spread_out_box(int dim, int radius, double amplitude) {
  if (dim < 1) fail(ErrorCode::InvalidArgument, "dimension must be >= 1");
  if (radius < 1) fail(ErrorCode::InvalidArgument, "box radius must be >= 1");
  if (amplitude < 0.0) fail(ErrorCode::InvalidArgument, "amplitude must be nonnegative");
  Coupling c;
  c.dim_ = dim;
  c.kind_ = CouplingKind::SpreadOutBox;
  c.amplitude_ = amplitude;
  c.radius_ = radius;
  const int width = 2 * radius + 1;
  Index count = 1;
  for (int a = 0; a < dim; ++a) count *= width;
  for (Index i = 0; i < count; ++i) {
    Site v(dim);
    Index r = i;
    for (int a = 0; a < dim; ++a) {
      v(a) = static_cast<int>(r % width) - radius;
      r /= width;
    }
    if (!v.isZero()) c.entries_.push_back({v, amplitude});
  }
  c.finalize();
  return c;
}

Coupling coupling_from_table(int dim, std::vector<CouplingEntry> entries) {
  if (dim < 1) fail(ErrorCode::InvalidArgument, "dimension must be >= 1");
  check_symmetry(dim, entries);
  Coupling c;
  c.dim_ = dim;
  c.kind_ = CouplingKind::Table;
  c.entries_ = std::move(entries);
  c.finalize();
  return c;
}

Coupling build_coupling(CouplingKind kind, int dim, double amplitude, int radius,
                        std::vector<CouplingEntry> table) {
  switch (kind) {
    case CouplingKind::NearestNeighbor: return nearest_neighbor(dim, amplitude);
    case CouplingKind::SpreadOutBox: return spread_out_box(dim, radius, amplitude);
    case CouplingKind::Table: return coupling_from_table(dim, std::move(table));
  }
  fail(ErrorCode::InvalidArgument, "unknown coupling kind");
}

Coupling step_distribution(const Coupling& coupling, double bond_scale) {
  double norm = 0.0;
  for (const auto& e : coupling.entries()) norm += std::tanh(bond_scale * e.value);
  if (!(norm > 0.0)) fail(ErrorCode::ZeroCoupling, "sum of tanh J vanishes");
  std::vector<CouplingEntry> d;
  d.reserve(coupling.entries().size());
  for (const auto& e : coupling.entries()) d.push_back({e.offset, std::tanh(bond_scale * e.value) / norm});
  return coupling_from_table(coupling.dim(), std::move(d));
}

TorusTabled on_torus(const Coupling& coupling, const TorusGeometry& torus) {
  if (coupling.dim() != torus.dim()) fail(ErrorCode::InvalidArgument, "coupling/torus dimension mismatch");
  TorusTabled t(torus);
  for (const auto& e : coupling.entries()) {
    Index i = torus.index(e.offset);
    if (i == 0)
      fail(ErrorCode::NonzeroSelfCoupling, "torus side " + std::to_string(torus.side()) +
                                               " wraps a bond onto the origin");
    t[i] += e.value;
  }
  return t;
}

std::map<std::string, std::string> to_config(const Coupling& coupling) {
  std::map<std::string, std::string> out;
  auto fmt = [](double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  };
  out["dim"] = std::to_string(coupling.dim());
  switch (coupling.kind()) {
    case CouplingKind::NearestNeighbor:
      out["kind"] = "nn";
      out["amplitude"] = fmt(coupling.amplitude());
      break;
    case CouplingKind::SpreadOutBox:
      out["kind"] = "box";
      out["amplitude"] = fmt(coupling.amplitude());
      out["radius"] = std::to_string(coupling.box_radius());
      break;
    case CouplingKind::Table: {
      out["kind"] = "table";
      std::ostringstream os;
      bool first = true;
      for (const auto& e : coupling.entries()) {
        if (!first) os << "; ";
        first = false;
        for (int a = 0; a < e.offset.size(); ++a) os << (a ? " " : "") << e.offset(a);
        os << " : " << fmt(e.value);
      }
      out["entries"] = os.str();
      break;
    }
  }
  return out;
}

Coupling coupling_from_config(const std::map<std::string, std::string>& block) {
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = block.find(key);
    if (it == block.end()) fail(ErrorCode::ConfigInvalid, "coupling block is missing '" + key + "'");
    return it->second;
  };
  auto to_double = [](const std::string& s) {
    try {
      std::size_t pos = 0;
      double v = std::stod(s, &pos);
      if (pos != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      fail(ErrorCode::ConfigInvalid, "not a number: '" + s + "'");
    }
  };
  const int dim = static_cast<int>(to_double(get("dim")));
  const std::string& kind = get("kind");
  if (kind == "nn") return nearest_neighbor(dim, to_double(get("amplitude")));
  if (kind == "box")
    return spread_out_box(dim, static_cast<int>(to_double(get("radius"))), to_double(get("amplitude")));
  if (kind == "table") {
    std::vector<CouplingEntry> entries;
    std::stringstream all(get("entries"));
    std::string item;
    while (std::getline(all, item, ';')) {
      auto colon = item.find(':');
      if (colon == std::string::npos) {
        if (item.find_first_not_of(" \t") == std::string::npos) continue;
        fail(ErrorCode::ConfigInvalid, "table entry needs 'coords : value'");
      }
      std::stringstream coords(item.substr(0, colon));
      std::vector<int> xs;
      int x;
      while (coords >> x) xs.push_back(x);
      if (static_cast<int>(xs.size()) != dim) fail(ErrorCode::ConfigInvalid, "table entry has wrong dimension");
      std::string value = item.substr(colon + 1);
      value.erase(0, value.find_first_not_of(" \t"));
      value.erase(value.find_last_not_of(" \t") + 1);
      entries.push_back({Eigen::Map<Site>(xs.data(), dim), to_double(value)});
    }
    return coupling_from_table(dim, std::move(entries));
  }
  fail(ErrorCode::ConfigInvalid, "unknown coupling kind '" + kind + "'");
}

}  // namespace lace
