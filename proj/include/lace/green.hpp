#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "lace/coupling.hpp"
#include "lace/fft.hpp"
#include "lace/stats.hpp"

namespace lace {

enum class ZeroModePolicy { Reject, Subtract };

/// Random-walk Green function S_p on a torus.
struct GreenTable {
  TorusTabled values;
  double p = 0.0;
  bool zero_mode_subtracted = false;
  double max_imag = 0.0;  // imaginary residue left by the inverse transform
};

/// S_p = sum_n p^n D^{*n}, solved as 1/(1 - p Dhat(k)). With `Subtract` and p = 1
/// the k = 0 mode is dropped, so only differences of the result are meaningful.
GreenTable green_fft(const TorusTabled& D, double p, ZeroModePolicy policy = ZeroModePolicy::Reject);
GreenTable green_fft(const Coupling& D, double p, const TorusGeometry& torus,
                     ZeroModePolicy policy = ZeroModePolicy::Reject);

/// Free-space nearest-neighbour Green function through the Bessel-product integral
///   S_p(x) = int_0^inf e^{-t} prod_i I_{x_i}(p t / d) dt.
double green_bessel_nn(const Site& x, double p);

/// (d/2) Gamma((d-2)/2) pi^{-d/2} / (jhat V)
double asymptotic_amplitude(int dim, double jhat_variance);

/// n-fold convolutions in free space, stored once per hyperoctahedral orbit
/// (key: sorted absolute coordinates).
class OrbitTable {
 public:
  explicit OrbitTable(int dim) : dim_(dim) {}
  static OrbitTable from_coupling(const Coupling& D);

  int dim() const noexcept { return dim_; }
  double at(const Site& x) const;
  void set(const Site& x, double v);
  std::size_t orbit_count() const noexcept { return values_.size(); }
  /// (representative, value) pairs in key order, for deterministic scans.
  std::vector<std::pair<Site, double>> orbits() const;
  /// Sum over all of Z^d, i.e. each orbit weighted by its size.
  double total() const;

  static std::uint64_t key(const Site& x);
  static Site representative(std::uint64_t key, int dim);
  static std::int64_t orbit_size(const Site& rep);

 private:
  int dim_;
  std::unordered_map<std::uint64_t, double> values_;
};

/// f * D exactly, D given by its (symmetric) coupling entries.
OrbitTable convolve(const OrbitTable& f, const Coupling& D);

struct ConvolutionOrder {
  int n = 0;
  double sup_constant = 0.0;          // sup_x <x>^{d+2} D^{*n}(x) / n
  double second_difference = 0.0;     // sup <x>^{d+4} |D(x+y)+D(x-y)-2D(x)| / (n |y|^2), |y| <= |x|/3
};

struct ConvolutionSumPoint {
  double x = 0.0;
  double value = 0.0;
};

struct ConvolutionReport {
  std::vector<ConvolutionOrder> orders;
  double sup_growth = 0.0;            // max / first sup-constant over the n list
  double second_difference_growth = 0.0;
  bool sup_bounded = false;           // growth <= 2
  bool second_difference_bounded = false;
  // sum_y <x-y>^{-a} <y>^{-b} along an axis
  double a = 0.0, b = 0.0;
  std::vector<ConvolutionSumPoint> sum_points;
  LinearFit sum_fit;
  double expected_exponent = 0.0;     // (a v d) - a - b
  bool exponent_ok = false;           // within 0.15
};

struct ConvolutionCheckInput {
  Coupling D;                         // a step distribution
  std::vector<int> n_list;
  int radius = 12;                    // |x| scanned for the sup-constants
  double a = 3.0, b = 3.0;
  int fit_min = 2, fit_max = 12;      // integer |x| window of the exponent fit
};

/// The sum over Z^d, ball-truncated at `cutoff` with a continuum tail correction.
double convolution_sum(int dim, double a, double b, int x, int cutoff);

ConvolutionReport convolution_bounds_check(const ConvolutionCheckInput& in);

}  // namespace lace
