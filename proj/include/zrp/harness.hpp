#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <json.hpp>

#include "zrp/audit.hpp"
#include "zrp/fluid.hpp"
#include "zrp/pmf.hpp"
#include "zrp/sim.hpp"

namespace zrp {

/// Bounds claimed for a fluid trajectory from the reference time s_ref on:
/// x_0 in [a_lower, b_upper] and x <=_st pi[N + shift, a_lower].
struct EnvelopeConfig {
  double R = 1.0;
  double a_lower = 0.2;
  double b_upper = 0.8;
  std::size_t shift = 0;
  double s_ref = 0.0;
  std::size_t samples = 20;
  /// Slack allowed in the stochastic-order and pointwise comparisons, which
  /// absorbs RK4 error in the envelope evolutions.
  double tolerance = 1e-9;

  /// a = 1/(5R), b = 4/5, shift = ceil(R log(R+1)), s_ref = 5 R^2 (1 + log(R+1)).
  static EnvelopeConfig defaults(double R);
  /// Throws InvalidParameter unless 0 < a_lower <= 1/(R+1) <= b_upper < 1.
  void validate() const;
};

/// Sandwich checks between snapshots at t >= s_ref and the homogeneous
/// walks started from x(s_ref): x_0 range, mu_b <=_st x <=_st mu_a, both
/// lines of the pointwise bound on x_k, the shifted-geometric dominance, and
/// the implication "sandwich holds => pointwise bound holds".
AuditReport envelope_audit(const FluidTrajectory& trajectory, const EnvelopeConfig& config);

struct TransientDecay {
  double d0 = 0.0;          // D_KL(x(0) || G^R) as computed
  double d0_formula = 0.0;  // (R+1) log(R+1) - R log R
  double c = 0.0;           // D(t) ~ D(0) exp(-c sqrt t)
  double c_linear = 0.0;    // D(t) ~ D(0) exp(-c t), for comparison
  double rms_sqrt = 0.0;
  double rms_linear = 0.0;
  std::size_t points = 0;
  AuditReport audits;
};

/// Fits of log(D(0)/D(t)) against sqrt t and against t (both through the
/// origin) on snapshots in (0, t_end]. Needs a trajectory from delta_R.
TransientDecay transient_decay_audit(const FluidTrajectory& trajectory, double R, double t_end);

inline double level_constant(int level) { return std::exp(-std::exp(static_cast<double>(level))); }

struct DaisyRecipe {
  int level = 0;  // largest l with c_l >= D_KL
  double a = 0.0; // 1/(R+1) - sqrt(2 c_l)
  std::size_t n = 0;
};

/// n = ceil(log c_{l+2} / log(1 - a)); empty when D_KL > c_1 or a <= 0.
std::optional<DaisyRecipe> daisy_recipe(double kl, double R);

/// The five chained inequalities bounding the entropy production from below
/// by a multiple of D_KL(x || G^R), plus side conditions:
///   tail_ratio: sum_{k>=n} phi(x_0(1-x_0)^k, x_k) / D_KL <= 1/2
///   ratio_inf:  inf_{k<=n} x_0(1-x_0)^k / x_k >= 1/2
/// Sums over k beyond the stored support use x_k = 0. Throws UndefinedBias
/// when x_0 is 0 or 1.
AuditReport daisy_chain_audit(const Pmf& x, std::size_t n, double R);

struct LevelTime {
  int level = 0;
  double c = 0.0;
  std::optional<double> time;  // empty when not reached within the horizon
  /// False when c_l is below the resolution at which D_KL of a truncated
  /// state can be trusted; such levels are never reported as reached.
  bool resolvable = true;
};

struct LevelTimes {
  double R = 0.0;
  std::vector<LevelTime> levels;
  std::vector<double> ratios;      // s_{l+1} / s_l over consecutive reached levels
  std::vector<double> normalized;  // s_l / (R^2 e^l) per reached level
};

/// First time D_KL reaches c_l = exp(-e^l), l = 1..max_level, located by
/// bisection on the snapshot series and interpolated in log D_KL. Levels
/// already met at the first snapshot are omitted. Throws InvalidParameter if
/// D_KL increases while still above `resolution` (below it the truncation
/// error of the integrator dominates).
LevelTimes level_times(const FluidTrajectory& trajectory, int max_level = 6, double resolution = 1e-10);

/// Conservation, entropy monotonicity, entropy-rate forms and the KL
/// orderings along one trajectory.
AuditReport trajectory_audit(const FluidTrajectory& trajectory);

struct ReportConfig {
  std::uint64_t R = 2;
  std::vector<std::uint64_t> N_list{1000, 10000};
  double T = 5.0;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4};
  ClockMode mode = ClockMode::exponential;
  double step = 0.01;
  /// Simulator snapshot times; empty selects 51 evenly spaced on [0, T].
  std::vector<double> snapshots;
  /// Fluid horizon; 0 selects max(T, 3 s_ref) with s_ref from EnvelopeConfig.
  double fluid_horizon = 0.0;
  std::size_t grid = 200;
  /// Runs the trajectory audits on a fluid path integrated with the drift
  /// sign flipped (from its state at t = 1, for half a time unit). The
  /// entropy audit must then fail.
  bool fault_injection = false;
};

struct FullReport {
  ReportConfig config;
  AuditReport audits;
  FluidTrajectory fluid;
  std::vector<ReplicateResult> replicas;  // one per N
  LevelTimes levels;
  TransientDecay transient;
  std::optional<DecayFit> late_fit;
  nlohmann::json json;
};

nlohmann::json to_json(const ReportConfig& c);
nlohmann::json to_json(const LevelTimes& l);

FullReport full_report(const ReportConfig& config);

/// report.json, audits.csv and one CSV plus gnuplot script per figure.
void write_report(const FullReport& report, const std::filesystem::path& dir);

/// Tool version embedded in provenance blocks.
const char* version();

}  // namespace zrp
