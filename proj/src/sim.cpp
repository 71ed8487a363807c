#include "zrp/sim.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

#include "zrp/error.hpp"
#include "zrp/parallel.hpp"
#include "zrp/pmf_io.hpp"

namespace zrp {
namespace {

constexpr char kMagic[8] = {'Z', 'R', 'P', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint32_t kCheckpointVersion = 1;
constexpr std::uint64_t kCheckInterval = std::uint64_t{1} << 20;

void check_budget(std::uint64_t N, std::uint64_t balls, std::uint64_t budget) {
  if (balls > std::numeric_limits<std::uint32_t>::max()) {
    std::ostringstream os;
    os << "N*R = " << balls << " balls cannot be stored in 32-bit box counters";
    throw ResourceError(os.str());
  }
  const std::uint64_t required = N * sizeof(std::uint32_t);
  if (N > budget / sizeof(std::uint32_t) || required > budget) {
    std::ostringstream os;
    os << "occupancy for N=" << N << " needs " << required << " bytes, budget is " << budget;
    throw ResourceError(os.str());
  }
}

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw InvalidParameter("truncated checkpoint");
  return v;
}

}  // namespace

const char* to_string(ClockMode m) { return m == ClockMode::exponential ? "exponential" : "mean-holding"; }

ClockMode parse_clock_mode(const std::string& s) {
  if (s == "exponential") return ClockMode::exponential;
  if (s == "mean-holding" || s == "mean_holding") return ClockMode::mean_holding;
  throw InvalidParameter("unknown clock mode '" + s + "'");
}

OccupancyState OccupancyState::uniform(std::uint64_t N, std::uint64_t R, std::uint64_t seed,
                                       std::uint64_t memory_budget) {
  if (N == 0) throw InvalidParameter("need at least one box");
  if (R != 0 && N > std::numeric_limits<std::uint64_t>::max() / R) throw ResourceError("N*R overflows");
  check_budget(N, N * R, memory_budget);
  OccupancyState s;
  s.occupancy_.assign(N, static_cast<std::uint32_t>(R));
  s.histogram_.assign(R + 2, 0);
  s.histogram_[R] = N;
  s.balls_ = N * R;
  s.seed_ = seed;
  s.rng_.reseed(seed);
  return s;
}

OccupancyState OccupancyState::custom(std::vector<std::uint32_t> counts, std::uint64_t seed,
                                      std::uint64_t memory_budget) {
  if (counts.empty()) throw InvalidParameter("need at least one box");
  std::uint64_t balls = 0;
  std::uint32_t top = 0;
  for (auto c : counts) {
    balls += c;
    top = std::max(top, c);
  }
  check_budget(counts.size(), balls, memory_budget);
  OccupancyState s;
  s.histogram_.assign(static_cast<std::size_t>(top) + 2, 0);
  for (auto c : counts) ++s.histogram_[c];
  s.occupancy_ = std::move(counts);
  s.balls_ = balls;
  s.seed_ = seed;
  s.rng_.reseed(seed);
  return s;
}

std::optional<std::uint64_t> OccupancyState::integer_R() const {
  if (balls_ % boxes() != 0) return std::nullopt;
  return balls_ / boxes();
}

bool OccupancyState::apply_transfer(std::size_t source, std::size_t sink) {
  if (source >= occupancy_.size() || sink >= occupancy_.size())
    throw InvalidParameter("box index out of range");
  if (source == sink || occupancy_[source] == 0) return false;
  const std::uint32_t from = occupancy_[source]--;
  const std::uint32_t to = occupancy_[sink]++;
  --histogram_[from];
  ++histogram_[from - 1];
  --histogram_[to];
  if (static_cast<std::size_t>(to) + 1 >= histogram_.size()) histogram_.resize(static_cast<std::size_t>(to) + 2, 0);
  ++histogram_[to + 1];
  return true;
}

Event OccupancyState::step(ClockMode mode) {
  const auto n = static_cast<double>(boxes());
  if (pending_ < 0.0) pending_ = time_ + (mode == ClockMode::exponential ? rng_.exponential(n) : 1.0 / n);
  Event e;
  e.time = time_ = pending_;
  pending_ = -1.0;
  e.source = rng_.below(boxes());
  e.sink = rng_.below(boxes());
  e.moved = apply_transfer(e.source, e.sink);
  ++events_;
  check_sampled();
  return e;
}

void OccupancyState::advance_to(double T, ClockMode mode) {
  if (T < time_) throw InvalidParameter("cannot advance the clock backwards");
  const auto n = static_cast<double>(boxes());
  for (;;) {
    if (pending_ < 0.0) pending_ = time_ + (mode == ClockMode::exponential ? rng_.exponential(n) : 1.0 / n);
    if (pending_ > T) break;
    step(mode);
  }
  time_ = T;
}

void OccupancyState::check_sampled() {
#ifdef NDEBUG
  if (events_ % kCheckInterval != 0) return;
#endif
  if (!consistent()) {
    std::ostringstream os;
    os << "occupancy bookkeeping broke after event " << events_;
    throw InternalConsistencyError(os.str());
  }
}

bool OccupancyState::consistent() const {
  std::uint64_t balls = 0;
  std::vector<std::uint64_t> hist(histogram_.size(), 0);
  for (auto c : occupancy_) {
    balls += c;
    if (c >= hist.size()) return false;
    ++hist[c];
  }
  return balls == balls_ && hist == histogram_;
}

Pmf OccupancyState::empirical() const {
  std::size_t lo = 0, hi = histogram_.size();
  while (lo < hi && histogram_[lo] == 0) ++lo;
  while (hi > lo && histogram_[hi - 1] == 0) --hi;
  std::vector<double> w(hi - lo);
  const auto n = static_cast<double>(boxes());
  for (std::size_t k = lo; k < hi; ++k) w[k - lo] = static_cast<double>(histogram_[k]) / n;
  return Pmf(lo, std::move(w));
}

void OccupancyState::save_checkpoint(std::ostream& os) const {
  os.write(kMagic, sizeof kMagic);
  put(os, kCheckpointVersion);
  put(os, static_cast<std::uint64_t>(occupancy_.size()));
  put(os, balls_);
  put(os, time_);
  put(os, events_);
  put(os, seed_);
  put(os, pending_);
  for (auto w : rng_.state()) put(os, w);
  os.write(reinterpret_cast<const char*>(occupancy_.data()),
           static_cast<std::streamsize>(occupancy_.size() * sizeof(std::uint32_t)));
  if (!os) throw ResourceError("failed to write checkpoint");
}

OccupancyState OccupancyState::load_checkpoint(std::istream& is) {
  char magic[sizeof kMagic];
  is.read(magic, sizeof magic);
  if (!is || std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw InvalidParameter("not a checkpoint file");
  const auto version = get<std::uint32_t>(is);
  if (version != kCheckpointVersion) throw InvalidParameter("unsupported checkpoint version " + std::to_string(version));
  const auto N = get<std::uint64_t>(is);
  const auto balls = get<std::uint64_t>(is);
  const auto time = get<double>(is);
  const auto events = get<std::uint64_t>(is);
  const auto seed = get<std::uint64_t>(is);
  const auto pending = get<double>(is);
  std::array<std::uint64_t, 4> rng{};
  for (auto& w : rng) w = get<std::uint64_t>(is);
  check_budget(N, balls, kDefaultMemoryBudget);
  std::vector<std::uint32_t> occ(N);
  is.read(reinterpret_cast<char*>(occ.data()), static_cast<std::streamsize>(N * sizeof(std::uint32_t)));
  if (!is) throw InvalidParameter("truncated checkpoint");
  OccupancyState s = custom(std::move(occ), seed);
  if (s.balls_ != balls) throw InvalidParameter("checkpoint ball count does not match its occupancy");
  s.time_ = time;
  s.events_ = events;
  s.pending_ = pending;
  s.rng_.set_state(rng);
  return s;
}

TrajectoryRecord run_until(OccupancyState& state, double T, std::span<const double> snapshot_times,
                           ClockMode mode) {
  if (T < state.time()) throw InvalidParameter("run_until needs T >= current time");
  for (std::size_t i = 0; i < snapshot_times.size(); ++i) {
    if (snapshot_times[i] < state.time() || snapshot_times[i] > T)
      throw InvalidParameter("snapshot times must lie in [current time, T]");
    if (i > 0 && !(snapshot_times[i] > snapshot_times[i - 1]))
      throw InvalidParameter("snapshot times must be strictly increasing");
  }
  TrajectoryRecord r;
  r.N = state.boxes();
  r.R = state.mean();
  r.seed = state.seed();
  r.mode = mode;
  r.T = T;
  const std::uint64_t start_events = state.events();
  for (double t : snapshot_times) {
    state.advance_to(t, mode);
    r.snapshots.push_back({t, state.empirical()});
  }
  state.advance_to(T, mode);
  if (!state.consistent()) throw InternalConsistencyError("ball conservation failed at end of run");
  r.events = state.events() - start_events;
  return r;
}

std::vector<double> interpolate(const FluidTrajectory& fluid, double t) {
  const auto& snaps = fluid.snapshots;
  constexpr double eps = 1e-9;
  if (snaps.empty() || t < snaps.front().state.time - eps || t > snaps.back().state.time + eps)
    throw InvalidParameter("time " + std::to_string(t) + " is outside the fluid trajectory");
  auto it = std::lower_bound(snaps.begin(), snaps.end(), t - eps,
                             [](const FluidSnapshot& s, double v) { return s.state.time < v; });
  if (it == snaps.end()) it = snaps.end() - 1;
  if (std::abs(it->state.time - t) <= eps) return it->state.x;
  const auto& hi = it->state;
  const auto& lo = (it - 1)->state;
  const double w = (t - lo.time) / (hi.time - lo.time);
  std::vector<double> out(std::max(lo.x.size(), hi.x.size()), 0.0);
  for (std::size_t k = 0; k < out.size(); ++k) {
    const double a = k < lo.x.size() ? lo.x[k] : 0.0;
    const double b = k < hi.x.size() ? hi.x[k] : 0.0;
    out[k] = (1.0 - w) * a + w * b;
  }
  return out;
}

double compare_to_fluid(const TrajectoryRecord& record, const FluidTrajectory& fluid) {
  double sup = 0.0;
  for (const auto& snap : record.snapshots) {
    const std::vector<double> x = interpolate(fluid, snap.time);
    const std::size_t n = std::max(x.size(), snap.empirical.end());
    for (std::size_t k = 0; k < n; ++k) {
      const double xk = k < x.size() ? x[k] : 0.0;
      sup = std::max(sup, std::abs(snap.empirical[k] - xk));
    }
  }
  return sup;
}

ReplicateResult replicate(const SimConfig& config, std::span<const std::uint64_t> seeds,
                          const FluidTrajectory* fluid) {
  if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size())
    throw InvalidParameter("replica seeds must be distinct");
  ReplicateResult out;
  out.records.resize(seeds.size());
  if (fluid) out.sup_distances.resize(seeds.size());
  parallel_for(seeds.size(), [&](std::size_t i) {
    OccupancyState s = OccupancyState::uniform(config.N, config.R, seeds[i], config.memory_budget);
    out.records[i] = run_until(s, config.T, config.snapshots, config.mode);
    if (fluid) out.sup_distances[i] = compare_to_fluid(out.records[i], *fluid);
  });
  if (fluid && !seeds.empty()) {
    double sum = 0.0;
    for (double d : out.sup_distances) {
      sum += d;
      out.max_sup_distance = std::max(out.max_sup_distance, d);
    }
    out.mean_sup_distance = sum / static_cast<double>(seeds.size());
  }
  return out;
}

void write_trajectory_csv(std::ostream& os, const TrajectoryRecord& r) {
  os.precision(17);
  os << "# N=" << r.N << "\n# R=" << r.R << "\n# seed=" << r.seed << "\n# mode=" << to_string(r.mode);
  if (r.approximate()) os << " (approximate)";
  os << "\nt,k,x_k\n";
  for (const auto& s : r.snapshots) {
    for (std::size_t k = s.empirical.offset(); k < s.empirical.end(); ++k) {
      if (s.empirical[k] != 0.0) os << s.time << ',' << k << ',' << s.empirical[k] << '\n';
    }
  }
}

nlohmann::json to_json(const TrajectoryRecord& r) {
  nlohmann::json snaps = nlohmann::json::array();
  for (const auto& s : r.snapshots) snaps.push_back({{"t", s.time}, {"pmf", to_json(s.empirical)}});
  return {{"N", r.N},         {"R", r.R},
          {"seed", r.seed},   {"mode", to_string(r.mode)},
          {"approximate", r.approximate()},
          {"T", r.T},         {"events", r.events},
          {"snapshots", snaps}};
}

}  // namespace zrp
