#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "zrp/fluid.hpp"
#include "zrp/pmf.hpp"
#include "zrp/random.hpp"

namespace zrp {

enum class ClockMode {
  exponential,   // Exp(N) holding times: the exact process
  mean_holding,  // deterministic 1/N steps: approximate, flagged as such
};

const char* to_string(ClockMode m);
/// Accepts "exponential", "mean-holding" and "mean_holding".
ClockMode parse_clock_mode(const std::string& s);

/// Default cap on the occupancy array: 4 GiB.
inline constexpr std::uint64_t kDefaultMemoryBudget = std::uint64_t{4} << 30;

struct Event {
  double time = 0.0;
  std::size_t source = 0;
  std::size_t sink = 0;
  bool moved = false;
};

/// Microconfiguration of N boxes. Box indices are 0-based.
class OccupancyState {
 public:
  /// R balls in each of N boxes.
  static OccupancyState uniform(std::uint64_t N, std::uint64_t R, std::uint64_t seed,
                                std::uint64_t memory_budget = kDefaultMemoryBudget);
  /// Given ball counts. The mean need not be an integer; integer_R() says
  /// whether it is.
  static OccupancyState custom(std::vector<std::uint32_t> counts, std::uint64_t seed,
                               std::uint64_t memory_budget = kDefaultMemoryBudget);

  std::uint64_t boxes() const { return occupancy_.size(); }
  std::uint64_t balls() const { return balls_; }
  double mean() const { return static_cast<double>(balls_) / static_cast<double>(boxes()); }
  std::optional<std::uint64_t> integer_R() const;
  double time() const { return time_; }
  std::uint64_t events() const { return events_; }
  std::uint64_t seed() const { return seed_; }
  std::span<const std::uint32_t> occupancy() const { return occupancy_; }
  /// histogram()[k] = number of boxes holding k balls.
  std::span<const std::uint64_t> histogram() const { return histogram_; }

  /// One event of the process (see ClockMode). A diagonal pair or an empty
  /// source leaves the configuration unchanged but still advances the clock.
  Event step(ClockMode mode);

  /// Move one ball from `source` to `sink` if possible, without touching the
  /// clock or the generator. Returns whether a ball moved.
  bool apply_transfer(std::size_t source, std::size_t sink);

  /// Runs events until the next event would land after T, then sets the
  /// clock to T. The pending event time is kept, so the sample path does not
  /// depend on how a run is split into advance_to calls.
  void advance_to(double T, ClockMode mode);

  Pmf empirical() const;

  /// Recomputes ball count and histogram from the occupancy array.
  bool consistent() const;

  /// Versioned binary dump of the full state including the generator.
  void save_checkpoint(std::ostream& os) const;
  static OccupancyState load_checkpoint(std::istream& is);

 private:
  OccupancyState() = default;
  void check_sampled();

  std::vector<std::uint32_t> occupancy_;
  std::vector<std::uint64_t> histogram_;
  std::uint64_t balls_ = 0;
  double time_ = 0.0;
  std::uint64_t events_ = 0;
  std::uint64_t seed_ = 0;
  // Time of the next event once drawn, negative when none is pending.
  // Keeping it across advance_to calls means the sample path does not
  // depend on the snapshot schedule.
  double pending_ = -1.0;
  Xoshiro256 rng_;
};

struct SimSnapshot {
  double time = 0.0;
  Pmf empirical;
};

struct TrajectoryRecord {
  std::uint64_t N = 0;
  double R = 0.0;
  std::uint64_t seed = 0;
  ClockMode mode = ClockMode::exponential;
  double T = 0.0;
  std::uint64_t events = 0;
  std::vector<SimSnapshot> snapshots;

  bool approximate() const { return mode == ClockMode::mean_holding; }
};

/// Advances `state` to T, recording the empirical law at each snapshot time
/// (the state after the last event at or before that time).
TrajectoryRecord run_until(OccupancyState& state, double T, std::span<const double> snapshot_times,
                           ClockMode mode = ClockMode::exponential);

/// Linear interpolation of a fluid trajectory between its snapshots.
/// Throws InvalidParameter outside the snapshot range.
std::vector<double> interpolate(const FluidTrajectory& fluid, double t);

/// sup over snapshots and k of |X_k(t) - x_k(t)|.
double compare_to_fluid(const TrajectoryRecord& record, const FluidTrajectory& fluid);

struct SimConfig {
  std::uint64_t N = 1000;
  std::uint64_t R = 2;
  double T = 1.0;
  std::vector<double> snapshots;
  ClockMode mode = ClockMode::exponential;
  std::uint64_t memory_budget = kDefaultMemoryBudget;
};

struct ReplicateResult {
  std::vector<TrajectoryRecord> records;
  /// Per-seed compare_to_fluid, when a fluid trajectory was supplied.
  std::vector<double> sup_distances;
  double mean_sup_distance = 0.0;
  double max_sup_distance = 0.0;
};

/// Independent replicas from init_uniform, one per seed, run in parallel.
ReplicateResult replicate(const SimConfig& config, std::span<const std::uint64_t> seeds,
                          const FluidTrajectory* fluid = nullptr);

/// Long format `t,k,x_k` (nonzero x_k only) after `# N=`, `# R=`, `# seed=`,
/// `# mode=` comment lines.
void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& r);
nlohmann::json to_json(const TrajectoryRecord& r);

}  // namespace zrp
