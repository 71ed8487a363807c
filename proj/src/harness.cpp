#include "zrp/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "zrp/brw.hpp"
#include "zrp/error.hpp"

namespace zrp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double gibbs_x0(double R) { return 1.0 / (R + 1.0); }

// Relative slack for comparisons between sums that are equal in exact
// arithmetic for some inputs (e.g. every link of the chain at G^R).
double rel_tol(double lhs, double rhs) {
  double scale = 0.0;
  if (std::isfinite(lhs)) scale = std::max(scale, std::abs(lhs));
  if (std::isfinite(rhs)) scale = std::max(scale, std::abs(rhs));
  return 1e-10 * scale + 1e-300;
}

std::size_t first_at_or_after(const FluidTrajectory& traj, double t) {
  const auto& s = traj.snapshots;
  auto it = std::lower_bound(s.begin(), s.end(), t - 1e-9,
                             [](const FluidSnapshot& snap, double v) { return snap.state.time < v; });
  return static_cast<std::size_t>(it - s.begin());
}

std::vector<double> merge_times(std::vector<double> a, const std::vector<double>& b) {
  a.insert(a.end(), b.begin(), b.end());
  std::sort(a.begin(), a.end());
  std::vector<double> out;
  for (double t : a) {
    if (out.empty() || t - out.back() > 1e-9) out.push_back(t);
  }
  return out;
}

nlohmann::json fit_json(const std::string& name, double t0, double t1, const DecayFit& f) {
  return {{"name", name},
          {"window", {t0, t1}},
          {"slope", f.slope},
          {"intercept", f.intercept},
          {"max_residual", f.max_residual},
          {"residual_fraction", f.residual_fraction},
          {"points", f.points}};
}

}  // namespace

const char* version() { return "0.1.0"; }

EnvelopeConfig EnvelopeConfig::defaults(double R) {
  EnvelopeConfig c;
  c.R = R;
  c.a_lower = 1.0 / (5.0 * R);
  c.b_upper = 0.8;
  c.shift = static_cast<std::size_t>(std::ceil(R * std::log(R + 1.0)));
  c.s_ref = 5.0 * R * R * (1.0 + std::log(R + 1.0));
  return c;
}

void EnvelopeConfig::validate() const {
  const double g = gibbs_x0(R);
  if (!(R > 0.0)) throw InvalidParameter("envelope needs R > 0");
  if (!(a_lower > 0.0 && a_lower <= g && g <= b_upper && b_upper < 1.0))
    throw InvalidParameter("envelope needs 0 < a_lower <= 1/(R+1) <= b_upper < 1");
  if (samples == 0) throw InvalidParameter("envelope needs at least one sample time");
}

AuditReport envelope_audit(const FluidTrajectory& traj, const EnvelopeConfig& cfg) {
  cfg.validate();
  const auto& snaps = traj.snapshots;
  const std::size_t i0 = first_at_or_after(traj, cfg.s_ref);
  if (i0 + 1 >= snaps.size()) throw InvalidParameter("envelope audit needs snapshots beyond s_ref");
  const FluidState& ref = snaps[i0].state;
  const Pmf start(0, ref.x);

  const std::size_t later = snaps.size() - 1 - i0;
  const std::size_t m = std::min(cfg.samples, later);
  std::vector<std::size_t> picks;
  for (std::size_t j = 0; j < m; ++j) picks.push_back(i0 + ((j + 1) * later + m - 1) / m);

  // Finite walks standing in for BRW[N, a] and BRW[N, b]: wide enough that
  // the reflecting end holds no visible mass over the sampled window.
  std::size_t n = ref.x.size() + cfg.shift +
                  static_cast<std::size_t>(std::ceil(-37.0 / std::log1p(-cfg.a_lower)));
  const double horizon = snaps[picks.back()].state.time - ref.time;
  for (;;) {
    const Pmf probe = evolve(start, horizon, BrwSpec{n, cfg.a_lower}, {EvolveMethod::master_equation});
    if (probe[n - 1] < 1e-15) break;
    n *= 2;
    if (n > (std::size_t{1} << 16)) throw InvalidParameter("envelope truncation did not converge");
  }
  const BrwSpec spec_a{n, cfg.a_lower};
  const BrwSpec spec_b{n, cfg.b_upper};
  const SpectralDecomposition decomp_a = eigensystem(spec_a);
  const Pmf pi_a = geometric(GeometricFamily::infinite(cfg.a_lower), n);
  const Pmf pi_b = geometric(GeometricFamily::infinite(cfg.b_upper), n);

  double min_x0 = kInf, max_x0 = -kInf;
  double upper = -kInf, lower = -kInf, line1 = -kInf, line2 = -kInf, shifted = -kInf;
  bool implication = true;
  for (std::size_t i : picks) {
    const FluidState& st = snaps[i].state;
    const double dt = st.time - ref.time;
    const Pmf x = st.pmf();
    const Pmf mu_a = evolve(start, dt, decomp_a);
    const Pmf mu_b = evolve(start, dt, spec_b, {EvolveMethod::master_equation});
    min_x0 = std::min(min_x0, x[0]);
    max_x0 = std::max(max_x0, x[0]);

    const double up = stochastically_leq(x, mu_a, cfg.tolerance).worst_violation;
    const double lo = stochastically_leq(mu_b, x, cfg.tolerance).worst_violation;
    upper = std::max(upper, up);
    lower = std::max(lower, lo);

    const double tv = distance(mu_a, pi_a, Norm::tv).value + distance(mu_b, pi_b, Norm::tv).value;
    double worst1 = -kInf;
    for (std::size_t k = 0; k < std::max(x.end(), n); ++k) {
      const double bound1 = mu_a.tail_upper(k) - mu_b.tail_lower(k + 1);
      const double bound2 = std::exp(static_cast<double>(k) * std::log1p(-cfg.a_lower)) -
                            std::exp(static_cast<double>(k + 1) * std::log1p(-cfg.b_upper)) + tv;
      worst1 = std::max(worst1, x[k] - bound1);
      line2 = std::max(line2, x[k] - bound2);
    }
    line1 = std::max(line1, worst1);
    if (up <= cfg.tolerance && lo <= cfg.tolerance && worst1 > 2.0 * cfg.tolerance) implication = false;

    const Pmf dominating = geometric(GeometricFamily::shifted(cfg.shift, cfg.a_lower), x.end() + n);
    shifted = std::max(shifted, stochastically_leq(x, dominating, cfg.tolerance).worst_violation);
  }

  AuditReport r;
  r.add(AuditEntry::make("envelope.x0_lower", min_x0, Relation::greater_equal, cfg.a_lower));
  r.add(AuditEntry::make("envelope.x0_upper", max_x0, Relation::less_equal, cfg.b_upper));
  r.add(AuditEntry::make("envelope.sandwich_upper", upper, Relation::less_equal, 0.0, cfg.tolerance));
  r.add(AuditEntry::make("envelope.sandwich_lower", lower, Relation::less_equal, 0.0, cfg.tolerance));
  r.add(AuditEntry::make("envelope.pointwise_tails", line1, Relation::less_equal, 0.0, 2.0 * cfg.tolerance));
  r.add(AuditEntry::make("envelope.pointwise_geometric", line2, Relation::less_equal, 0.0, 2.0 * cfg.tolerance));
  r.add(AuditEntry::make("envelope.shifted_geometric", shifted, Relation::less_equal, 0.0, cfg.tolerance));
  r.add(AuditEntry::flag("envelope.sandwich_implies_pointwise", implication));
  return r;
}

TransientDecay transient_decay_audit(const FluidTrajectory& traj, double R, double t_end) {
  if (traj.snapshots.empty() || traj.snapshots.front().state.time != 0.0)
    throw InvalidParameter("transient decay needs a snapshot at t = 0");
  TransientDecay out;
  out.d0 = traj.snapshots.front().diagnostics.kl_gibbs;
  out.d0_formula = (R + 1.0) * std::log(R + 1.0) - (R > 0.0 ? R * std::log(R) : 0.0);

  double sty = 0.0, stt = 0.0, ttt = 0.0, tty = 0.0;
  std::vector<std::pair<double, double>> pts;
  for (const auto& s : traj.snapshots) {
    const double t = s.state.time;
    if (t <= 0.0 || t > t_end) continue;
    const double d = s.diagnostics.kl_gibbs;
    if (!(d > 0.0)) break;
    const double y = std::log(out.d0 / d);
    pts.emplace_back(t, y);
    sty += std::sqrt(t) * y;
    stt += t;
    tty += t * y;
    ttt += t * t;
  }
  if (pts.size() < 3) throw InvalidParameter("transient decay window holds fewer than 3 snapshots");
  out.points = pts.size();
  out.c = sty / stt;
  out.c_linear = tty / ttt;
  for (auto [t, y] : pts) {
    out.rms_sqrt += std::pow(y - out.c * std::sqrt(t), 2);
    out.rms_linear += std::pow(y - out.c_linear * t, 2);
  }
  out.rms_sqrt = std::sqrt(out.rms_sqrt / static_cast<double>(pts.size()));
  out.rms_linear = std::sqrt(out.rms_linear / static_cast<double>(pts.size()));

  out.audits.add(AuditEntry::make("transient.initial_kl", out.d0, Relation::equal, out.d0_formula,
                                  1e-12 * std::max(1.0, out.d0_formula)));
  out.audits.add(AuditEntry::flag("transient.rate_positive", out.c > 0.0, out.c));
  return out;
}

std::optional<DaisyRecipe> daisy_recipe(double kl, double R) {
  if (!(kl > 0.0) || !(R > 0.0)) return std::nullopt;
  int level = static_cast<int>(std::floor(std::log(-std::log(kl))));
  while (level >= 1 && level_constant(level) < kl) --level;
  while (level_constant(level + 1) >= kl) ++level;
  if (level < 1) return std::nullopt;
  DaisyRecipe r;
  r.level = level;
  r.a = gibbs_x0(R) - std::sqrt(2.0 * level_constant(level));
  if (!(r.a > 0.0)) return std::nullopt;
  r.n = static_cast<std::size_t>(std::ceil(-std::exp(static_cast<double>(level + 2)) / std::log1p(-r.a)));
  return r;
}

AuditReport daisy_chain_audit(const Pmf& x, std::size_t n, double R) {
  const double x0 = x[0];
  if (!(x0 > 0.0 && x0 < 1.0)) throw UndefinedBias("daisy chain needs x_0 in (0, 1)");
  if (n < 2) throw InvalidParameter("daisy chain needs n >= 2");
  const double q = 1.0 - x0;
  const double lq = std::log1p(-x0);
  auto w = [&](std::size_t k) { return x0 * std::exp(static_cast<double>(k) * lq); };
  const std::size_t end = x.end();

  const EntropyRate rate = entropy_rate(x.dense(std::max<std::size_t>(end, 2)));
  // Links (i) and (ii) run over pairs inside the stored support, the same
  // pairs entropy_rate sees. Link (iii) takes x as zero beyond its support,
  // so its flow sum also has the pair that leaves the support.
  double lower_n = 0.0, chi_flow = 0.0, chi_flow_all = 0.0;
  for (std::size_t k = 0; k + 2 <= n; ++k) {
    const double u = x[k] * q, v = x[k + 1], mk = u - v;
    if (mk == 0.0) continue;
    chi_flow_all += mk * mk / w(k + 1);
    if (k + 1 >= end) continue;
    lower_n += mk * mk / std::max(u, v);
    chi_flow += mk * mk / w(k + 1);
  }
  double inf_lt_n = kInf;
  for (std::size_t k = 0; k < n; ++k)
    if (x[k] > 0.0) inf_lt_n = std::min(inf_lt_n, w(k) / x[k]);
  const double inf_le_n = x[n] > 0.0 ? std::min(inf_lt_n, w(n) / x[n]) : inf_lt_n;

  double chi = 0.0, phi_n = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    const double d = x[k] - w(k);
    chi += d * d / w(k);
    phi_n += phi(w(k), x[k]);
  }
  // Beyond the stored support x_k = 0 and phi(w, 0) = w, which sums to q^k.
  double phi_tail = 0.0;
  for (std::size_t k = n; k < end; ++k) phi_tail += phi(w(k), x[k]);
  phi_tail += std::exp(static_cast<double>(std::max(end, n)) * lq);
  double phi_all = phi_n + phi_tail;
  if (end > n) {
    phi_all = 0.0;
    for (std::size_t k = 1; k < end; ++k) phi_all += phi(w(k), x[k]);
    phi_all += std::exp(static_cast<double>(end) * lq);
  }
  const double kl = kl_divergence(x, gibbs_geometric(R, std::max<std::size_t>(end, 1))).value;

  const double rhs2 = std::isfinite(inf_lt_n) ? chi_flow * inf_lt_n : kInf;
  const double rhs3 = 0.25 * x0 * x0 * chi;
  AuditReport r;
  r.add(AuditEntry::make("daisy.i_entropy_rate", rate.exact, Relation::greater_equal, lower_n,
                         rel_tol(rate.exact, lower_n)));
  r.add(AuditEntry::make("daisy.ii_ratio_infimum", lower_n, Relation::greater_equal, chi_flow == 0.0 ? 0.0 : rhs2,
                         rel_tol(lower_n, rhs2)));
  r.add(AuditEntry::make("daisy.iii_chi_square", chi_flow_all, Relation::greater_equal, rhs3,
                         rel_tol(chi_flow_all, rhs3)));
  r.add(AuditEntry::make("daisy.iv_phi_bound", chi, Relation::greater_equal, phi_n, rel_tol(chi, phi_n)));
  r.add(AuditEntry::make("daisy.v_tail", phi_all, Relation::greater_equal, kl, rel_tol(phi_all, kl)));
  const double tail_ratio = kl > 0.0 ? phi_tail / kl : (phi_tail > 0.0 ? kInf : 0.0);
  r.add(AuditEntry::make("daisy.side_tail_ratio", tail_ratio, Relation::less_equal, 0.5));
  r.add(AuditEntry::make("daisy.side_ratio_infimum", inf_le_n, Relation::greater_equal, 0.5));
  return r;
}

LevelTimes level_times(const FluidTrajectory& traj, int max_level, double resolution) {
  LevelTimes out;
  out.R = traj.R;
  const auto& s = traj.snapshots;
  if (s.empty()) return out;
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (s[i - 1].diagnostics.kl_gibbs <= resolution) break;
    if (s[i].diagnostics.kl_gibbs > s[i - 1].diagnostics.kl_gibbs) {
      std::ostringstream os;
      os << "D_KL increases between t=" << s[i - 1].state.time << " and t=" << s[i].state.time;
      throw InvalidParameter(os.str());
    }
  }
  const double d0 = s.front().diagnostics.kl_gibbs;
  for (int level = 1; level <= max_level; ++level) {
    const double c = level_constant(level);
    if (d0 <= c) continue;
    LevelTime lt{level, c, std::nullopt, c >= resolution};
    if (!lt.resolvable) {
      out.levels.push_back(lt);
      continue;
    }
    auto it = std::partition_point(s.begin(), s.end(),
                                   [c](const FluidSnapshot& snap) { return snap.diagnostics.kl_gibbs > c; });
    if (it != s.end()) {
      const auto& hi = *it;
      const auto& lo = *(it - 1);
      const double dh = hi.diagnostics.kl_gibbs, dl = lo.diagnostics.kl_gibbs;
      if (dh <= 0.0) {
        lt.time = hi.state.time;
      } else {
        const double w = (std::log(c) - std::log(dl)) / (std::log(dh) - std::log(dl));
        lt.time = lo.state.time + w * (hi.state.time - lo.state.time);
      }
    }
    out.levels.push_back(lt);
  }
  const double R2 = traj.R * traj.R;
  const LevelTime* prev = nullptr;
  for (const auto& lt : out.levels) {
    if (!lt.time) break;
    out.normalized.push_back(*lt.time / (R2 * std::exp(static_cast<double>(lt.level))));
    if (prev) out.ratios.push_back(*lt.time / *prev->time);
    prev = &lt;
  }
  return out;
}

AuditReport trajectory_audit(const FluidTrajectory& traj) {
  const auto& s = traj.snapshots;
  double mass = 0.0, mean = 0.0, entropy_drop = 0.0, rate_gap = kInf, kl_rise = -kInf, bias_gap = kInf;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& d = s[i].diagnostics;
    mass = std::max(mass, std::abs(d.mass_error));
    mean = std::max(mean, std::abs(d.mean_error));
    rate_gap = std::min(rate_gap, d.rate.exact - d.rate.lower_bound);
    bias_gap = std::min(bias_gap, d.kl_self_bias - d.kl_gibbs);
    if (i > 0) {
      entropy_drop = std::max(entropy_drop, s[i - 1].diagnostics.entropy - d.entropy);
      kl_rise = std::max(kl_rise, d.kl_gibbs - s[i - 1].diagnostics.kl_gibbs);
    }
  }
  if (s.size() < 2) kl_rise = 0.0;
  AuditReport r;
  r.add(AuditEntry::make("fluid.entropy_monotone", entropy_drop, Relation::less_equal, 0.0, 1e-9));
  r.add(AuditEntry::make("fluid.kl_monotone", kl_rise, Relation::less_equal, 0.0, 1e-12));
  r.add(AuditEntry::make("fluid.entropy_rate_forms", rate_gap, Relation::greater_equal, 0.0, 1e-12));
  r.add(AuditEntry::make("fluid.self_bias_dominates", bias_gap, Relation::greater_equal, 0.0, 1e-12));
  r.add(AuditEntry::make("fluid.mass_conservation", mass, Relation::less_equal, 1e-8));
  r.add(AuditEntry::make("fluid.mean_conservation", mean, Relation::less_equal, 1e-6));
  return r;
}

nlohmann::json to_json(const ReportConfig& c) {
  return {{"R", c.R},
          {"N_list", c.N_list},
          {"T", c.T},
          {"seeds", c.seeds},
          {"mode", to_string(c.mode)},
          {"step", c.step},
          {"snapshots", c.snapshots},
          {"fluid_horizon", c.fluid_horizon},
          {"grid", c.grid},
          {"fault_injection", c.fault_injection}};
}

nlohmann::json to_json(const LevelTimes& l) {
  auto arr = nlohmann::json::array();
  for (const auto& lt : l.levels) {
    arr.push_back({{"level", lt.level},
                   {"c", lt.c},
                   {"time", lt.time ? nlohmann::json(*lt.time) : nlohmann::json(nullptr)},
                   {"reached", lt.time.has_value()},
                   {"resolvable", lt.resolvable}});
  }
  return arr;
}

FullReport full_report(const ReportConfig& config) {
  if (config.R == 0) throw InvalidParameter("report needs R >= 1");
  if (config.N_list.empty() || config.seeds.empty()) throw InvalidParameter("report needs boxes and seeds");
  if (!(config.T > 0.0)) throw InvalidParameter("report needs T > 0");
  FullReport rep;
  rep.config = config;
  const double R = static_cast<double>(config.R);
  const EnvelopeConfig env = EnvelopeConfig::defaults(R);
  const double horizon = config.fluid_horizon > 0.0 ? config.fluid_horizon : std::max(config.T, 3.0 * env.s_ref);
  if (horizon < config.T) throw InvalidParameter("fluid horizon must cover the simulation time");
  rep.config.fluid_horizon = horizon;
  std::vector<double> sim_times = config.snapshots.empty() ? linspace(0.0, config.T, 51) : config.snapshots;
  rep.config.snapshots = sim_times;

  FluidOptions opts;
  opts.step = config.step;
  const Pmf start = Pmf::dirac(config.R);
  rep.fluid = integrate(start, horizon, merge_times(linspace(0.0, horizon, config.grid + 1), sim_times), opts);

  if (config.fault_injection) {
    const double t1 = std::min(1.0, horizon);
    const std::vector<double> one{t1};
    const FluidTrajectory warm = integrate(start, t1, one, opts);
    FluidOptions bad = opts;
    bad.drift_sign = -1.0;
    bad.strict_nonnegativity = false;
    const FluidTrajectory corrupted = integrate(warm.snapshots.back().state.pmf(), 0.5, linspace(0.0, 0.5, 51), bad);
    rep.audits.append(trajectory_audit(corrupted));
  } else {
    rep.audits.append(trajectory_audit(rep.fluid));
  }

  rep.transient = transient_decay_audit(rep.fluid, R, env.s_ref);
  rep.audits.append(rep.transient.audits);
  rep.audits.append(envelope_audit(rep.fluid, env));

  const FluidState& last = rep.fluid.snapshots.back().state;
  const Pmf final_x = last.pmf();
  const auto recipe = daisy_recipe(rep.fluid.snapshots.back().diagnostics.kl_gibbs, R);
  if (recipe) {
    rep.audits.append(daisy_chain_audit(final_x, recipe->n, R));
  } else {
    rep.audits.add(AuditEntry::flag("daisy.recipe_applicable", false));
  }

  double worst72 = kInf;
  for (std::size_t i = first_at_or_after(rep.fluid, env.s_ref); i < rep.fluid.snapshots.size(); ++i) {
    const FluidState& st = rep.fluid.snapshots[i].state;
    const AuditEntry e = lemma72_audit(st.pmf(), st.x.size());
    worst72 = std::min(worst72, e.margin + e.tolerance);
  }
  if (std::isfinite(worst72))
    rep.audits.add(AuditEntry::make("chi_square_flow_inequality", worst72, Relation::greater_equal, 0.0));

  try {
    rep.levels = level_times(rep.fluid);
  } catch (const InvalidParameter&) {
    rep.audits.add(AuditEntry::flag("levels.kl_monotone", false));
  }

  nlohmann::json fits = nlohmann::json::array();
  try {
    rep.late_fit = fit_decay_rate(rep.fluid, horizon / 2.0, horizon);
    fits.push_back(fit_json("late_log_kl", horizon / 2.0, horizon, *rep.late_fit));
    rep.audits.add(AuditEntry::flag("decay.late_slope_negative", rep.late_fit->slope < 0.0, -rep.late_fit->slope));
  } catch (const InvalidParameter&) {
    rep.audits.add(AuditEntry::flag("decay.late_slope_negative", false));
  }

  std::vector<std::uint64_t> Ns = config.N_list;
  std::sort(Ns.begin(), Ns.end());
  rep.config.N_list = Ns;
  nlohmann::json sup = nlohmann::json::array();
  bool decreasing = true;
  for (std::size_t i = 0; i < Ns.size(); ++i) {
    SimConfig sc;
    sc.N = Ns[i];
    sc.R = config.R;
    sc.T = config.T;
    sc.snapshots = sim_times;
    sc.mode = config.mode;
    rep.replicas.push_back(replicate(sc, config.seeds, &rep.fluid));
    const auto& rr = rep.replicas.back();
    sup.push_back({{"N", Ns[i]}, {"per_seed", rr.sup_distances}, {"mean", rr.mean_sup_distance},
                   {"max", rr.max_sup_distance}});
    if (i > 0 && !(rr.max_sup_distance < rep.replicas[i - 1].max_sup_distance)) decreasing = false;
  }
  if (Ns.size() > 1) rep.audits.add(AuditEntry::flag("sim.sup_distance_decreasing", decreasing));

  const auto& tr = rep.transient;
  rep.json = {
      {"config", to_json(rep.config)},
      {"audits", to_json(rep.audits)},
      {"level_times", to_json(rep.levels)},
      {"decay_fits", fits},
      {"transient", {{"d0", tr.d0}, {"d0_formula", tr.d0_formula}, {"c_sqrt", tr.c}, {"c_linear", tr.c_linear},
                     {"rms_sqrt", tr.rms_sqrt}, {"rms_linear", tr.rms_linear}, {"points", tr.points}}},
      {"sup_distance", sup},
      {"all_pass", rep.audits.all_pass()},
      {"provenance",
       {{"seeds", config.seeds},
        {"versions", {{"zrp", version()}, {"nlohmann_json", NLOHMANN_JSON_VERSION_MAJOR * 10000 +
                                                                NLOHMANN_JSON_VERSION_MINOR * 100 +
                                                                NLOHMANN_JSON_VERSION_PATCH}}}}}};
  if (const AuditEntry* f = rep.audits.first_failure()) rep.json["first_failure"] = f->name;
  if (recipe) rep.json["daisy_recipe"] = {{"level", recipe->level}, {"a", recipe->a}, {"n", recipe->n}};
  return rep;
}

namespace {

void provenance_comment(std::ostream& os, const FullReport& rep) {
  os << "# zrp " << version() << " config=" << to_json(rep.config).dump() << '\n';
}

void gnuplot(const std::filesystem::path& path, const FullReport& rep, const std::string& body) {
  std::ofstream os(path);
  provenance_comment(os, rep);
  os << "set datafile separator ','\nset key autotitle columnhead\n" << body;
}

}  // namespace

void write_report(const FullReport& rep, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream os(dir / "report.json");
    os << rep.json.dump(2) << '\n';
  }
  {
    std::ofstream os(dir / "audits.csv");
    provenance_comment(os, rep);
    write_csv(os, rep.audits);
  }
  {
    std::ofstream os(dir / "fluid_diagnostics.csv");
    provenance_comment(os, rep);
    write_diagnostics_csv(os, rep.fluid);
  }
  {
    std::ofstream os(dir / "kl_decay.csv");
    os.precision(17);
    provenance_comment(os, rep);
    os << "t,kl_gibbs,kl_selfbias\n";
    for (const auto& s : rep.fluid.snapshots)
      os << s.state.time << ',' << s.diagnostics.kl_gibbs << ',' << s.diagnostics.kl_self_bias << '\n';
  }
  gnuplot(dir / "kl_decay.gp", rep,
          "set logscale y\nset xlabel 't'\nplot 'kl_decay.csv' using 1:2 with lines, '' using 1:3 with lines\n");
  {
    std::ofstream os(dir / "sup_vs_N.csv");
    os.precision(17);
    provenance_comment(os, rep);
    os << "N,mean_sup,max_sup\n";
    for (std::size_t i = 0; i < rep.replicas.size(); ++i)
      os << rep.config.N_list[i] << ',' << rep.replicas[i].mean_sup_distance << ','
         << rep.replicas[i].max_sup_distance << '\n';
  }
  gnuplot(dir / "sup_vs_N.gp", rep,
          "set logscale xy\nset xlabel 'N'\nplot 'sup_vs_N.csv' using 1:2 with linespoints, '' using 1:3 with "
          "linespoints\n");
  if (!rep.replicas.empty() && !rep.replicas.back().records.empty()) {
    const TrajectoryRecord& rec = rep.replicas.back().records.front();
    std::ofstream os(dir / "snapshots.csv");
    os.precision(17);
    provenance_comment(os, rep);
    os << "# N=" << rec.N << " seed=" << rec.seed << "\nt,k,empirical,fluid\n";
    for (const auto& snap : rec.snapshots) {
      const std::vector<double> x = interpolate(rep.fluid, snap.time);
      const std::size_t n = std::max(x.size(), snap.empirical.end());
      for (std::size_t k = 0; k < n; ++k) {
        const double xk = k < x.size() ? x[k] : 0.0;
        if (snap.empirical[k] == 0.0 && xk < 1e-12) continue;
        os << snap.time << ',' << k << ',' << snap.empirical[k] << ',' << xk << '\n';
      }
    }
    gnuplot(dir / "snapshots.gp", rep,
            "set xlabel 'k'\nplot 'snapshots.csv' using 2:3 with points title 'empirical', '' using 2:4 with "
            "lines title 'fluid'\n");
  }
}

}  // namespace zrp
