#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include <json.hpp>

#include "zrp/pmf.hpp"

namespace zrp {

/// Rates dx_k/dt = m_{k-1} - m_k for the stored levels, with flows
/// m_k = x_k (1 - x_0) - x_{k+1} and m_{-1} = 0. The flow out of the last
/// stored level, x_{d-1}(1 - x_0), is reported separately.
struct Drift {
  std::vector<double> rate;
  double boundary_flow = 0.0;
};

Drift drift(std::span<const double> x);
Drift drift(const Pmf& x);

/// Truncated fluid state. `x[k]` for k < d; `leak` is the mass that crossed
/// the truncation boundary and `leak_mean` the first moment it carried out.
struct FluidState {
  std::vector<double> x;
  double time = 0.0;
  double leak = 0.0;
  double leak_mean = 0.0;
  double R = 0.0;

  std::size_t dimension() const { return x.size(); }
  double mass() const;
  double mean() const;
  /// Stored levels as a Pmf whose declared tail is the leaked mass.
  Pmf pmf() const;
};

struct EntropyRate {
  double exact = 0.0;        // sum m_k log(x_k (1-x_0) / x_{k+1}); +inf when a term diverges
  double lower_bound = 0.0;  // sum m_k^2 / max{x_k (1-x_0), x_{k+1}}
};

/// Both forms of the entropy production rate, summed over adjacent pairs
/// inside the stored support. Terms with m_k = 0 contribute 0.
EntropyRate entropy_rate(std::span<const double> x);
EntropyRate entropy_rate(const Pmf& x);

struct KlMetrics {
  double to_gibbs = 0.0;      // D_KL(x || G^R)
  double to_self_bias = 0.0;  // D_KL(x || pi[N, x_0])
};

/// Throws UndefinedBias when x_0 is 0 or 1.
KlMetrics kl_metrics(const Pmf& x, double R);

/// D_KL(x || pi[N, a]) for the infinite geometric law with bias a.
double kl_to_geometric(const Pmf& x, double a);

struct FluidDiagnostics {
  double entropy = 0.0;
  EntropyRate rate;
  double kl_gibbs = 0.0;
  double kl_self_bias = 0.0;
  double mass_error = 0.0;  // sum x + leak - 1
  double mean_error = 0.0;  // mean + leak_mean - R
};

struct FluidSnapshot {
  FluidState state;
  FluidDiagnostics diagnostics;
};

struct FluidOptions {
  double step = 0.01;
  /// 0 selects max(4R, R + 10 ceil(sqrt R), 16), widened to cover x(0).
  std::size_t initial_dimension = 0;
  /// Grow the truncation by half whenever x_{d-2} exceeds this.
  double growth_threshold = 1e-14;
  /// Hard failure when |sum x + leak - 1| exceeds this.
  double mass_tolerance = 1e-7;
  /// Reject states with entries below -kClampTolerance.
  bool strict_nonnegativity = true;
  /// Multiplies the right-hand side; -1 runs the dynamics backwards (used
  /// only for fault-injection checks of the audits).
  double drift_sign = 1.0;
};

struct FluidTrajectory {
  double R = 0.0;
  FluidOptions options;
  /// False when x(0) has no geometric tail bound (support not finite), in
  /// which case decay-rate fits are not meaningful.
  bool geometric_tail = true;
  std::vector<FluidSnapshot> snapshots;

  std::vector<double> times() const;
  std::vector<double> kl_series() const;
};

/// RK4 integration of dx/dt = x Q[N, x_0(t)] from x0 to time T, with a
/// snapshot (and diagnostics) at each requested time. Throws
/// IntegrationFailure if mass conservation breaks.
FluidTrajectory integrate(const Pmf& x0, double T, std::span<const double> snapshot_times,
                          const FluidOptions& options = {});

FluidDiagnostics diagnose(const FluidState& s);

/// Evenly spaced points from a to b inclusive.
std::vector<double> linspace(double a, double b, std::size_t count);

struct DecayFit {
  double slope = 0.0;
  double intercept = 0.0;
  double max_residual = 0.0;
  /// max_residual divided by the range of log D_KL over the window.
  double residual_fraction = 0.0;
  std::size_t points = 0;
};

/// Least-squares line through (t, log D_KL) for snapshots with t in [t0, t1].
/// Throws InvalidParameter with fewer than 3 points or a nonpositive D_KL.
DecayFit fit_decay_rate(const FluidTrajectory& trajectory, double t0, double t1);

/// Least-squares fit of y = intercept + slope * x.
DecayFit least_squares(std::span<const double> xs, std::span<const double> ys);

/// Long format `t,k,x_k` (nonzero entries) after `# R=` and `# step=` lines.
void write_fluid_csv(std::ostream& os, const FluidTrajectory& traj);
/// `t,S,dSdt_exact,dSdt_lower,kl_gibbs,kl_selfbias,leak`
void write_diagnostics_csv(std::ostream& os, const FluidTrajectory& traj);
nlohmann::json to_json(const FluidTrajectory& traj);

}  // namespace zrp
