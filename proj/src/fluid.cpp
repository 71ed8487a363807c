#include "zrp/fluid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include "zrp/error.hpp"
#include "zrp/audit.hpp"
#include "zrp/ode.hpp"
#include "zrp/pmf_io.hpp"

namespace zrp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// State vector layout for the integrator: x_0..x_{d-1}, leak, leak_mean.
void fluid_rhs(const std::vector<double>& y, std::vector<double>& out, double sign) {
  const std::size_t d = y.size() - 2;
  const double stay = 1.0 - y[0];
  double prev_flow = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    const double next = k + 1 < d ? y[k + 1] : 0.0;
    const double flow = y[k] * stay - next;
    out[k] = sign * (prev_flow - flow);
    prev_flow = flow;
  }
  // prev_flow is now the boundary flow out of level d-1.
  out[d] = sign * prev_flow;
  out[d + 1] = sign * static_cast<double>(d) * prev_flow;
}

std::size_t default_dimension(double R) {
  const auto r = static_cast<std::size_t>(std::ceil(R));
  return std::max({4 * r, r + 10 * static_cast<std::size_t>(std::ceil(std::sqrt(R))), std::size_t{16}});
}

}  // namespace

Drift drift(std::span<const double> x) {
  if (x.size() < 2) throw InvalidParameter("drift needs truncation dimension d >= 2");
  Drift out;
  out.rate.resize(x.size());
  const double stay = 1.0 - x[0];
  double prev_flow = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double next = k + 1 < x.size() ? x[k + 1] : 0.0;
    const double flow = x[k] * stay - next;
    out.rate[k] = prev_flow - flow;
    prev_flow = flow;
  }
  out.boundary_flow = prev_flow;
  return out;
}

Drift drift(const Pmf& x) { return drift(x.dense(std::max<std::size_t>(x.end(), 2))); }

double FluidState::mass() const {
  double s = 0.0;
  for (double v : x) s += v;
  return s;
}

double FluidState::mean() const {
  double s = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) s += static_cast<double>(k) * x[k];
  return s;
}

Pmf FluidState::pmf() const { return Pmf(0, x, leak); }

EntropyRate entropy_rate(std::span<const double> x) {
  EntropyRate out;
  if (x.empty()) return out;
  const double stay = 1.0 - x[0];
  for (std::size_t k = 0; k + 1 < x.size(); ++k) {
    const double u = x[k] * stay;
    const double v = x[k + 1];
    const double m = u - v;
    if (m == 0.0) continue;
    if (u <= 0.0 || v <= 0.0) {
      out.exact = kInf;
    } else if (std::isfinite(out.exact)) {
      out.exact += m * std::log(u / v);
    }
    out.lower_bound += m * m / std::max(u, v);
  }
  return out;
}

EntropyRate entropy_rate(const Pmf& x) { return entropy_rate(x.dense(x.end())); }

double kl_to_geometric(const Pmf& x, double a) {
  if (!(a > 0.0 && a < 1.0)) throw UndefinedBias("geometric bias must lie in (0, 1)");
  const std::size_t support = std::max<std::size_t>(x.end(), 1);
  return kl_divergence(x, geometric(GeometricFamily::infinite(a), support)).value;
}

KlMetrics kl_metrics(const Pmf& x, double R) {
  const double x0 = x[0];
  if (!(x0 > 0.0 && x0 < 1.0)) throw UndefinedBias("kl_metrics needs x_0 in (0, 1)");
  const std::size_t support = std::max<std::size_t>(x.end(), 1);
  KlMetrics m;
  m.to_gibbs = kl_divergence(x, gibbs_geometric(R, support)).value;
  m.to_self_bias = kl_to_geometric(x, x0);
  return m;
}

FluidDiagnostics diagnose(const FluidState& s) {
  FluidDiagnostics d;
  const Pmf p = s.pmf();
  d.entropy = entropy(p).value;
  d.rate = entropy_rate(std::span<const double>(s.x));
  d.kl_gibbs = kl_divergence(p, gibbs_geometric(s.R, std::max<std::size_t>(p.end(), 1))).value;
  const double x0 = s.x.empty() ? 0.0 : s.x[0];
  d.kl_self_bias = (x0 > 0.0 && x0 < 1.0) ? kl_to_geometric(p, x0) : kInf;
  d.mass_error = s.mass() + s.leak - 1.0;
  d.mean_error = s.mean() + s.leak_mean - s.R;
  return d;
}

std::vector<double> FluidTrajectory::times() const {
  std::vector<double> t;
  t.reserve(snapshots.size());
  for (const auto& s : snapshots) t.push_back(s.state.time);
  return t;
}

std::vector<double> FluidTrajectory::kl_series() const {
  std::vector<double> v;
  v.reserve(snapshots.size());
  for (const auto& s : snapshots) v.push_back(s.diagnostics.kl_gibbs);
  return v;
}

std::vector<double> linspace(double a, double b, std::size_t count) {
  if (count == 0) return {};
  if (count == 1) return {a};
  std::vector<double> v(count);
  for (std::size_t i = 0; i < count; ++i)
    v[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1);
  v.back() = b;
  return v;
}

FluidTrajectory integrate(const Pmf& x0, double T, std::span<const double> snapshot_times,
                          const FluidOptions& options) {
  if (!x0.is_normalized(1e-9)) throw InvalidParameter("integrate needs a normalized initial law");
  if (!(options.step > 0.0)) throw InvalidParameter("integrate needs step > 0");
  if (!(T >= 0.0)) throw InvalidParameter("integrate needs T >= 0");
  for (std::size_t i = 0; i < snapshot_times.size(); ++i) {
    if (snapshot_times[i] < 0.0 || snapshot_times[i] > T)
      throw InvalidParameter("snapshot times must lie in [0, T]");
    if (i > 0 && !(snapshot_times[i] > snapshot_times[i - 1]))
      throw InvalidParameter("snapshot times must be strictly increasing");
  }

  FluidTrajectory traj;
  traj.options = options;
  traj.R = x0.mean();
  traj.geometric_tail = x0.tail_mass() == 0.0;

  std::size_t d = options.initial_dimension ? options.initial_dimension : default_dimension(traj.R);
  d = std::max({d, x0.end() + 2, std::size_t{2}});
  std::vector<double> y = x0.dense(d);
  y.push_back(x0.tail_mass());
  y.push_back(0.0);

  auto state_of = [&](double t) {
    FluidState s;
    s.x.assign(y.begin(), y.end() - 2);
    s.leak = y[y.size() - 2];
    s.leak_mean = y.back();
    s.time = t;
    s.R = traj.R;
    return s;
  };
  auto check = [&](double t) {
    const std::size_t dim = y.size() - 2;
    double mass = y[dim];
    for (std::size_t k = 0; k < dim; ++k) {
      if (y[k] < 0.0) {
        if (y[k] > -kClampTolerance)
          y[k] = 0.0;
        else if (options.strict_nonnegativity) {
          std::ostringstream os;
          os << "fluid state went negative at t=" << t << ": x_" << k << " = " << y[k];
          throw IntegrationFailure(os.str());
        }
      }
      mass += y[k];
    }
    if (std::abs(mass - 1.0) > options.mass_tolerance) {
      std::ostringstream os;
      os << "fluid mass drift " << (mass - 1.0) << " at t=" << t << " (d=" << dim << ", leak=" << y[dim] << ")";
      throw IntegrationFailure(os.str());
    }
  };
  auto maybe_grow = [&] {
    std::size_t dim = y.size() - 2;
    while (std::abs(y[dim - 2]) > options.growth_threshold) {
      const std::size_t grown = dim + std::max<std::size_t>(dim / 2, 1);
      y.insert(y.begin() + static_cast<std::ptrdiff_t>(dim), grown - dim, 0.0);
      dim = grown;
    }
  };
  auto record = [&](double t) {
    FluidSnapshot snap;
    snap.state = state_of(t);
    snap.diagnostics = diagnose(snap.state);
    traj.snapshots.push_back(std::move(snap));
  };

  const double sign = options.drift_sign;
  auto rhs = [sign](double, const std::vector<double>& state, std::vector<double>& out) {
    fluid_rhs(state, out, sign);
  };

  maybe_grow();
  double t = 0.0;
  std::size_t next = 0;
  while (next < snapshot_times.size() && snapshot_times[next] <= 0.0) record(snapshot_times[next++]);
  std::size_t steps = 0;
  while (t < T) {
    double target = T;
    if (next < snapshot_times.size()) target = snapshot_times[next];
    // Fixed grid t = i * step; a snapshot between grid points gets a short
    // step onto it and the grid resumes from there.
    const double grid_next = static_cast<double>(steps + 1) * options.step;
    const bool hit = grid_next >= target - 1e-12;
    const double h = hit ? target - t : grid_next - t;
    if (h > 0.0) rk4_step(rhs, t, h, y);
    t = hit ? target : grid_next;
    if (!hit || std::abs(grid_next - target) <= 1e-12) ++steps;
    check(t);
    maybe_grow();
    while (next < snapshot_times.size() && snapshot_times[next] <= t) record(snapshot_times[next++]);
  }
  return traj;
}

DecayFit least_squares(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size() || xs.size() < 3) throw InvalidParameter("least squares needs at least 3 points");
  const double n = static_cast<double>(xs.size());
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sx += xs[i];
    sy += ys[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) throw InvalidParameter("least squares needs distinct abscissae");
  DecayFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.points = xs.size();
  double lo = ys[0], hi = ys[0];
  for (std::size_t i = 0; i < xs.size(); ++i) {
    fit.max_residual = std::max(fit.max_residual, std::abs(ys[i] - (fit.intercept + fit.slope * xs[i])));
    lo = std::min(lo, ys[i]);
    hi = std::max(hi, ys[i]);
  }
  fit.residual_fraction = hi > lo ? fit.max_residual / (hi - lo) : 0.0;
  return fit;
}

DecayFit fit_decay_rate(const FluidTrajectory& trajectory, double t0, double t1) {
  std::vector<double> ts, logs;
  for (const auto& s : trajectory.snapshots) {
    const double t = s.state.time;
    if (t < t0 || t > t1) continue;
    const double kl = s.diagnostics.kl_gibbs;
    if (!(kl > 0.0)) throw InvalidParameter("fit_decay_rate needs D_KL > 0 throughout the window");
    ts.push_back(t);
    logs.push_back(std::log(kl));
  }
  if (ts.size() < 3) throw InvalidParameter("fit_decay_rate needs at least 3 points in the window");
  return least_squares(ts, logs);
}

void write_fluid_csv(std::ostream& os, const FluidTrajectory& traj) {
  os.precision(17);
  os << "# R=" << traj.R << "\n# step=" << traj.options.step << "\nt,k,x_k\n";
  for (const auto& s : traj.snapshots) {
    for (std::size_t k = 0; k < s.state.x.size(); ++k) {
      if (s.state.x[k] != 0.0) os << s.state.time << ',' << k << ',' << s.state.x[k] << '\n';
    }
  }
}

void write_diagnostics_csv(std::ostream& os, const FluidTrajectory& traj) {
  os.precision(17);
  os << "t,S,dSdt_exact,dSdt_lower,kl_gibbs,kl_selfbias,leak\n";
  for (const auto& s : traj.snapshots) {
    const auto& d = s.diagnostics;
    os << s.state.time << ',' << d.entropy << ',' << d.rate.exact << ',' << d.rate.lower_bound << ',' << d.kl_gibbs
       << ',' << d.kl_self_bias << ',' << s.state.leak << '\n';
  }
}

nlohmann::json to_json(const FluidTrajectory& traj) {
  nlohmann::json snaps = nlohmann::json::array();
  for (const auto& s : traj.snapshots) {
    const auto& d = s.diagnostics;
    snaps.push_back({{"t", s.state.time},
                     {"x", s.state.x},
                     {"leak", s.state.leak},
                     {"S", d.entropy},
                     {"dSdt_exact", json_number(d.rate.exact)},
                     {"dSdt_lower", d.rate.lower_bound},
                     {"kl_gibbs", json_number(d.kl_gibbs)},
                     {"kl_selfbias", json_number(d.kl_self_bias)}});
  }
  return {{"R", traj.R}, {"step", traj.options.step}, {"geometric_tail", traj.geometric_tail}, {"snapshots", snaps}};
}

}  // namespace zrp
