#pragma once

#include <cstdint>
#include <vector>

#include "lace/coupling.hpp"
#include "lace/rng.hpp"
#include "lace/stats.hpp"

namespace lace {

struct Schedule {
  std::int64_t sweeps = 10000;   // measurement sweeps after burn-in
  std::int64_t burn_in = 1000;
  std::int64_t thin = 1;         // sweeps between measurements
};

struct ChainInput {
  Coupling coupling;
  double lambda = 0.0;
  double mu = 0.0;
  TorusGeometry torus;
  Schedule schedule;
  std::uint64_t seed = 1;
  std::uint32_t chain = 0;
  std::vector<Site> displacements;  // where <phi_o phi_x>, <phi_o^3 phi_x> and residuals are measured
  bool keep_series = false;
};

struct ObservableSet {
  std::vector<Site> displacements;
  std::vector<Estimate> two_point;      // <phi_o phi_x>
  std::vector<Estimate> phi3_phi;       // <phi_o^3 phi_x>
  std::vector<Estimate> sd_residual;    // Schwinger-Dyson residual at x
  Estimate phi2, phi4, chi, chi_inv, u4;
  double acceptance = 0.0;
  double proposal_width = 0.0;
  std::int64_t measurements = 0;
  std::uint64_t seed = 0;
  std::uint32_t chain = 0;
  std::vector<double> series_phi2, series_chi;  // only with keep_series
};

/// Gaussian proposal phi' = phi + width * xi, accepted with min(1, e^{-dH}) where
/// dH is the change of -phi h + mu phi^2/2 + lambda phi^4/24 in the local field h.
bool metropolis_update(double& phi, double field, double lambda, double mu, double width, CounterRng& proposal,
                       CounterRng& accept);

/// Single-site Metropolis with Gaussian proposals and even/odd sweeps.
/// Deterministic given (seed, chain). NotEquilibrated when the autocorrelation
/// time is too long for the schedule (fewer than ~100 tau_int measurements).
ObservableSet run_chain(const ChainInput& in);

/// Independent chains (chain index 0..n-1) run on a worker pool, merged with
/// sample-count weights.
ObservableSet run_chains(const ChainInput& in, int chains);

/// Per-site neighbour lists of the torus-wrapped coupling.
struct NeighborTable {
  int per_site = 0;
  std::vector<std::int32_t> index;  // V * per_site
  std::vector<double> J;            // per_site couplings (same for every site)
};
NeighborTable neighbor_table(const Coupling& coupling, const TorusGeometry& torus);

/// phi^4 energy of a configuration.
double hamiltonian(const std::vector<double>& phi, const NeighborTable& nb, double lambda, double mu);

/// -sum_v J(v) T(x-v) + mu T(x) + (lambda/6) T3(x) - delta, on full torus tables.
TorusTabled sd_residual(const TorusTabled& two_point, const TorusTabled& phi3_phi, const Coupling& coupling,
                        double lambda, double mu);

/// Exact lambda = 0 two-point function 1/(mu - Jhat_T(k)) on the torus.
TorusTabled gaussian_two_point(const Coupling& coupling, double mu, const TorusGeometry& torus);

struct CriticalInput {
  Coupling coupling;
  double lambda = 0.0;
  std::vector<double> mu_grid;
  std::vector<int> sides;
  Schedule schedule;
  std::uint64_t seed = 1;
  int chains = 1;
  bool strict = true;  // throw ExtrapolationUnstable instead of flagging it
};

struct CriticalPoint {
  double mu = 0.0;
  int side = 0;
  Estimate chi, chi_inv, phi2, u4;
};

struct CriticalResult {
  double lambda = 0.0;
  std::vector<CriticalPoint> points;
  std::vector<double> mu_c_per_side;       // linear chi^{-1} extrapolation per L
  std::vector<double> mu_c_error_per_side;
  double mu_c = 0.0;                       // from the largest L
  double mu_c_error = 0.0;
  double finite_size_drift = 0.0;          // spread of mu_c across L
  double mu_star = 0.0;                    // smallest grid mu (largest L)
  Estimate phi2_star;
  double delta = 0.0;                      // mu_c - (jhat - lambda/2 <phi^2>_{mu*})
  double delta_error = 0.0;
  double max_fit_pull = 0.0;               // largest |residual| / error of the 3-point fit
  bool linear = true;                      // max_fit_pull <= 3 and positive slopes
};

/// ExtrapolationUnstable when the three largest-mu points are not linear within 3 sigma
/// or the fitted slope is not positive.
CriticalResult critical_scan(const CriticalInput& in);

}  // namespace lace
