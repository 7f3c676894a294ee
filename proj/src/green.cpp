#include "lace/green.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "lace/special.hpp"

namespace lace {

GreenTable green_fft(const TorusTabled& D, double p, ZeroModePolicy policy) {
  if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::FugacityOutOfRange, "p must lie in [0, 1], got " + std::to_string(p));
  const TorusGeometry& g = D.geometry;
  const Eigen::ArrayXd dhat = symbol(D);
  Spectrum s(g.volume());
  GreenTable out;
  out.p = p;
  for (Index k = 0; k < g.volume(); ++k) {
    const double denom = 1.0 - p * dhat(k);
    if (std::abs(denom) < 1e-13) {
      if (k == 0 && policy == ZeroModePolicy::Subtract) {
        s(k) = 0.0;
        out.zero_mode_subtracted = true;
        continue;
      }
      fail(ErrorCode::SingularMode, k == 0 ? "p = 1 needs the zero-mode subtraction policy"
                                           : "1 - p Dhat(k) vanishes at a nonzero mode");
    }
    s(k) = 1.0 / denom;
  }
  out.values = TorusTabled(g, fft_inverse_real(g, s, &out.max_imag));
  return out;
}

GreenTable green_fft(const Coupling& D, double p, const TorusGeometry& torus, ZeroModePolicy policy) {
  return green_fft(on_torus(D, torus), p, policy);
}

double green_bessel_nn(const Site& x, double p) {
  const int d = static_cast<int>(x.size());
  if (d < 1) fail(ErrorCode::InvalidArgument, "empty site");
  if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::FugacityOutOfRange, "p must lie in [0, 1]");
  if (p == 0.0) return x.isZero() ? 1.0 : 0.0;
  const Site ax = x.cwiseAbs();
  const int nmax = ax.maxCoeff();

  // integrand in u = log t
  auto f = [&](double u) {
    const double t = std::exp(u);
    const auto ie = bessel_ie_orders(nmax, p * t / d);
    double prod = t * std::exp(-(1.0 - p) * t);
    for (int i = 0; i < d; ++i) prod *= ie[ax(i)];
    return prod;
  };

  // truncation: walk outward until the integrand is negligible
  const double h0 = 0.25, u_cap = 120.0;
  double total = 0.0;
  double hi = 0.0, prev = f(0.0);
  total += prev * h0;
  for (;;) {
    hi += h0;
    if (hi > u_cap) fail(ErrorCode::QuadratureNotConverged, "integrand does not decay (recurrent walk?)");
    const double v = f(hi);
    total += v * h0;
    if (v < prev && v < 1e-16 * total) break;
    prev = v;
  }
  double lo = 0.0;
  prev = f(0.0);
  for (;;) {
    lo -= h0;
    const double v = f(lo);
    total += v * h0;
    if ((v < prev && v < 1e-16 * total) || lo < -740.0) break;
    prev = v;
  }

  // trapezoid with step halving
  double h = 0.5;
  int n = static_cast<int>(std::ceil((hi - lo) / h));
  h = (hi - lo) / n;
  double sum = 0.5 * (f(lo) + f(hi));
  for (int i = 1; i < n; ++i) sum += f(lo + i * h);
  double estimate = sum * h;
  for (int level = 0; level < 24; ++level) {
    for (int i = 0; i < n; ++i) sum += f(lo + (i + 0.5) * h);
    n *= 2;
    h *= 0.5;
    const double next = sum * h;
    if (std::abs(next - estimate) < 1e-10 * std::abs(next)) return next;
    estimate = next;
  }
  fail(ErrorCode::QuadratureNotConverged, "trapezoid refinement did not settle");
}

double asymptotic_amplitude(int dim, double jhat_variance) {
  if (dim <= 2) fail(ErrorCode::DimensionTooLow, "the massless Green function needs d > 2");
  if (!(jhat_variance > 0.0)) fail(ErrorCode::InvalidArgument, "jhat V must be positive");
  return 0.5 * dim * std::tgamma(0.5 * (dim - 2)) * std::pow(std::numbers::pi, -0.5 * dim) / jhat_variance;
}

// ---- free-space orbit tables ----

std::uint64_t OrbitTable::key(const Site& x) {
  if (x.size() > 8) fail(ErrorCode::InvalidArgument, "orbit tables support d <= 8");
  std::array<int, 8> c{};
  for (int i = 0; i < x.size(); ++i) {
    c[i] = std::abs(x(i));
    if (c[i] > 255) fail(ErrorCode::InvalidArgument, "orbit table coordinate exceeds 255");
  }
  std::sort(c.begin(), c.begin() + x.size());
  std::uint64_t k = 0;
  for (int i = 0; i < x.size(); ++i) k = (k << 8) | static_cast<std::uint64_t>(c[i]);
  return k;
}

Site OrbitTable::representative(std::uint64_t key, int dim) {
  Site x(dim);
  for (int i = dim - 1; i >= 0; --i) {
    x(i) = static_cast<int>(key & 0xff);
    key >>= 8;
  }
  return x;
}

std::int64_t OrbitTable::orbit_size(const Site& rep) {
  // distinct permutations times sign choices of the nonzero entries
  std::int64_t perms = 1;
  const int d = static_cast<int>(rep.size());
  for (int i = 2; i <= d; ++i) perms *= i;
  std::vector<int> sorted(rep.data(), rep.data() + d);
  std::sort(sorted.begin(), sorted.end());
  int run = 1;
  std::int64_t nonzero = sorted[0] != 0 ? 1 : 0;
  for (int i = 1; i < d; ++i) {
    if (sorted[i] != 0) ++nonzero;
    if (sorted[i] == sorted[i - 1]) {
      ++run;
      perms /= run;
    } else {
      run = 1;
    }
  }
  return perms << nonzero;
}

OrbitTable OrbitTable::from_coupling(const Coupling& D) {
  OrbitTable t(D.dim());
  for (const auto& e : D.entries()) t.values_[key(e.offset)] = e.value;
  return t;
}

double OrbitTable::at(const Site& x) const {
  auto it = values_.find(key(x));
  return it == values_.end() ? 0.0 : it->second;
}

void OrbitTable::set(const Site& x, double v) { values_[key(x)] = v; }

std::vector<std::pair<Site, double>> OrbitTable::orbits() const {
  std::vector<std::uint64_t> keys;
  keys.reserve(values_.size());
  for (const auto& [k, v] : values_) keys.push_back(k);
  std::sort(keys.begin(), keys.end());
  std::vector<std::pair<Site, double>> out;
  out.reserve(keys.size());
  for (auto k : keys) out.emplace_back(representative(k, dim_), values_.at(k));
  return out;
}

double OrbitTable::total() const {
  double s = 0.0;
  for (const auto& [rep, v] : orbits()) s += static_cast<double>(orbit_size(rep)) * v;
  return s;
}

OrbitTable convolve(const OrbitTable& f, const Coupling& D) {
  if (f.dim() != D.dim()) fail(ErrorCode::InvalidArgument, "dimension mismatch");
  OrbitTable out(f.dim());
  const auto reps = f.orbits();
  std::unordered_map<std::uint64_t, bool> seen;
  std::vector<std::uint64_t> targets;
  for (const auto& [x, v] : reps) {
    for (const auto& e : D.entries()) {
      const auto k = OrbitTable::key(x + e.offset);
      if (seen.emplace(k, true).second) targets.push_back(k);
    }
  }
  std::sort(targets.begin(), targets.end());
  for (auto k : targets) {
    const Site y = OrbitTable::representative(k, f.dim());
    double s = 0.0;
    for (const auto& e : D.entries()) s += e.value * f.at(y - e.offset);
    if (s != 0.0) out.set(y, s);
  }
  return out;
}

namespace {

double bracket(double r) { return std::max(1.0, r); }

// r_k(s): number of integer vectors in Z^k with squared norm s, for s <= smax.
std::vector<double> representation_counts(int k, int smax) {
  std::vector<double> r(smax + 1, 0.0);
  r[0] = 1.0;
  for (int step = 0; step < k; ++step) {
    std::vector<double> next(smax + 1, 0.0);
    for (int s = 0; s <= smax; ++s) {
      if (r[s] == 0.0) continue;
      for (int j = 0; s + j * j <= smax; ++j) next[s + j * j] += r[s] * (j == 0 ? 1.0 : 2.0);
    }
    r = std::move(next);
  }
  return r;
}

double convolution_sum_with(const std::vector<double>& perp, int dim, double a, double b, int x, int cutoff) {
  const int r2 = cutoff * cutoff;
  double sum = 0.0;
  for (int y1 = -cutoff; y1 <= cutoff; ++y1) {
    const double dx = static_cast<double>(x - y1);
    for (int s = 0; s + y1 * y1 <= r2; ++s) {
      if (perp[s] == 0.0) continue;
      const double ny = std::sqrt(static_cast<double>(y1 * y1 + s));
      const double nxy = std::sqrt(dx * dx + s);
      sum += perp[s] * std::pow(bracket(nxy), -a) * std::pow(bracket(ny), -b);
    }
  }
  const double area = 2.0 * std::pow(std::numbers::pi, 0.5 * dim) / std::tgamma(0.5 * dim);
  sum += area * std::pow(static_cast<double>(cutoff), dim - a - b) / (a + b - dim);
  return sum;
}

}  // namespace

double convolution_sum(int dim, double a, double b, int x, int cutoff) {
  if (a + b <= dim) fail(ErrorCode::InvalidArgument, "the sum converges only for a + b > d");
  if (dim < 2) fail(ErrorCode::InvalidArgument, "convolution sums need d >= 2");
  return convolution_sum_with(representation_counts(dim - 1, cutoff * cutoff), dim, a, b, x, cutoff);
}

ConvolutionReport convolution_bounds_check(const ConvolutionCheckInput& in) {
  const int d = in.D.dim();
  if (in.n_list.empty()) fail(ErrorCode::InvalidArgument, "empty convolution order list");
  if (in.fit_max - in.fit_min + 1 < 4)
    fail(ErrorCode::RangeTooSmall, "exponent fit needs at least 4 distinct |x| values");
  if (in.fit_min < 1) fail(ErrorCode::InvalidArgument, "fit window must start at |x| >= 1");
  ConvolutionReport rep;

  std::vector<int> orders = in.n_list;
  std::sort(orders.begin(), orders.end());
  OrbitTable cur = OrbitTable::from_coupling(in.D);
  int have = 1;
  for (int n : orders) {
    if (n < 1) fail(ErrorCode::InvalidArgument, "convolution orders start at 1");
    while (have < n) {
      cur = convolve(cur, in.D);
      ++have;
    }
    ConvolutionOrder o;
    o.n = n;
    const auto orbits = cur.orbits();
    for (const auto& [x, v] : orbits) {
      const double nx = std::sqrt(static_cast<double>(x.squaredNorm()));
      if (nx > in.radius) continue;
      o.sup_constant = std::max(o.sup_constant, std::pow(bracket(nx), d + 2) * v / n);
      // second difference over |y| <= |x|/3
      const int ymax = static_cast<int>(std::floor(nx / 3.0));
      if (ymax < 1) continue;
      const int width = 2 * ymax + 1;
      std::int64_t count = 1;
      for (int i = 0; i < d; ++i) count *= width;
      Site y(d);
      for (std::int64_t c = 0; c < count; ++c) {
        std::int64_t r = c;
        for (int i = 0; i < d; ++i) {
          y(i) = static_cast<int>(r % width) - ymax;
          r /= width;
        }
        const int y2 = y.squaredNorm();
        if (y2 == 0 || y2 > (nx / 3.0) * (nx / 3.0)) continue;
        const double diff = cur.at(x + y) + cur.at(x - y) - 2.0 * v;
        o.second_difference =
            std::max(o.second_difference, std::pow(bracket(nx), d + 4) * std::abs(diff) / (n * static_cast<double>(y2)));
      }
    }
    rep.orders.push_back(o);
  }
  double smax = 0.0, dmax = 0.0;
  for (const auto& o : rep.orders) {
    smax = std::max(smax, o.sup_constant);
    dmax = std::max(dmax, o.second_difference);
  }
  rep.sup_growth = rep.orders.front().sup_constant > 0 ? smax / rep.orders.front().sup_constant : 0.0;
  rep.second_difference_growth =
      rep.orders.front().second_difference > 0 ? dmax / rep.orders.front().second_difference : 0.0;
  // growth of a quantity that starts at 0 (finite support at small n) is judged against the later orders
  if (rep.orders.front().second_difference == 0.0 && rep.orders.size() > 1) {
    double first = 0.0;
    for (const auto& o : rep.orders)
      if (o.second_difference > 0.0) {
        first = o.second_difference;
        break;
      }
    rep.second_difference_growth = first > 0.0 ? dmax / first : 0.0;
  }
  rep.sup_bounded = rep.sup_growth <= 2.0;
  rep.second_difference_bounded = rep.second_difference_growth <= 2.0;

  rep.a = in.a;
  rep.b = in.b;
  const int cutoff = std::max(100, 8 * in.fit_max);
  const auto perp = representation_counts(d - 1, cutoff * cutoff);
  if (in.a + in.b <= d) fail(ErrorCode::InvalidArgument, "the sum converges only for a + b > d");
  std::vector<double> xs, ys;
  for (int x = in.fit_min; x <= in.fit_max; ++x) {
    const double v = convolution_sum_with(perp, d, in.a, in.b, x, cutoff);
    rep.sum_points.push_back({static_cast<double>(x), v});
    xs.push_back(x);
    ys.push_back(v);
  }
  rep.sum_fit = fit_power_law(xs, ys);
  rep.expected_exponent = std::max(in.a, static_cast<double>(d)) - in.a - in.b;
  rep.exponent_ok = std::abs(rep.sum_fit.slope - rep.expected_exponent) <= 0.15;
  return rep;
}

}  // namespace lace
