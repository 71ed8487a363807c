#include "zrp/brw.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>

#include "zrp/error.hpp"
#include "zrp/ode.hpp"
#include "zrp/parallel.hpp"
#include "zrp/random.hpp"

namespace zrp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string describe(const BrwSpec& s) {
  std::ostringstream os;
  os << "BRW[" << s.n << ", " << s.a << "]";
  return os.str();
}

// lambda_j for j = 1..n-1 (0-based index into the nonzero spectrum + 1).
double eigenvalue(const BrwSpec& spec, std::size_t j) {
  const double r = std::sqrt(1.0 - spec.a);
  const double theta = std::numbers::pi * static_cast<double>(j) / static_cast<double>(spec.n);
  return -(1.0 + r * r - 2.0 * r * std::cos(theta));
}

void master_rhs(const BrwSpec& spec, const std::vector<double>& mu, std::vector<double>& out) {
  const std::size_t n = spec.n;
  const double right = spec.right_rate();
  for (std::size_t k = 0; k < n; ++k) {
    double v = 0.0;
    if (k > 0) v += mu[k - 1] * right;
    if (k + 1 < n) v += mu[k + 1];
    const double leave = (k > 0 ? 1.0 : 0.0) + (k + 1 < n ? right : 0.0);
    out[k] = v - mu[k] * leave;
  }
}

double log_geometric(double a, std::size_t k) { return std::log(a) + static_cast<double>(k) * std::log1p(-a); }

}  // namespace

void BrwSpec::validate() const {
  if (n < 2) throw InvalidParameter("BRW needs n >= 2");
  if (!(a >= 0.0 && a < 1.0)) throw InvalidParameter("BRW bias must lie in [0, 1)");
}

SquareMatrix q_matrix(const BrwSpec& spec) {
  spec.validate();
  SquareMatrix Q{spec.n, std::vector<double>(spec.n * spec.n, 0.0)};
  for (std::size_t j = 0; j < spec.n; ++j) {
    if (j > 0) Q(j, j - 1) = 1.0;
    if (j + 1 < spec.n) Q(j, j + 1) = spec.right_rate();
    Q(j, j) = -((j > 0 ? 1.0 : 0.0) + (j + 1 < spec.n ? spec.right_rate() : 0.0));
  }
  return Q;
}

Pmf stationary(const BrwSpec& spec) {
  spec.validate();
  if (spec.a == 0.0) return Pmf(0, std::vector<double>(spec.n, 1.0 / static_cast<double>(spec.n)));
  return geometric(GeometricFamily::truncated(spec.n, spec.a), spec.n);
}

SpectralDecomposition eigensystem(const BrwSpec& spec) {
  spec.validate();
  const std::size_t n = spec.n;
  const double r = std::sqrt(1.0 - spec.a);
  SpectralDecomposition d;
  d.spec = spec;
  const Pmf pi = stationary(spec);
  d.pi = pi.dense(n);

  // pi(k) = r^{2k} / Z, so F^2 / pi = c^2 g^2 Z with the r^{2k} cancelled.
  double Z = 0.0;
  for (std::size_t k = 0; k < n; ++k) Z += std::pow(r, 2.0 * static_cast<double>(k));

  d.eigenvalues.assign(n, 0.0);
  d.eigenvectors.assign(n, std::vector<double>(n));
  d.right_eigenvectors.assign(n, std::vector<double>(n, 1.0));
  d.normalization.assign(n, 1.0);
  d.eigenvectors[0] = d.pi;

  std::vector<double> g(n);
  for (std::size_t j = 1; j < n; ++j) {
    const double theta = std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
    double g2 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double kk = static_cast<double>(k);
      g[k] = std::sin(kk * theta) - r * std::sin((kk + 1.0) * theta);
      g2 += g[k] * g[k];
    }
    // g(0) = -r sin(theta) < 0; a negative constant makes F(0) > 0.
    const double c = -1.0 / std::sqrt(Z * g2);
    d.normalization[j] = c;
    d.eigenvalues[j] = eigenvalue(spec, j);
    for (std::size_t k = 0; k < n; ++k) {
      const double kk = static_cast<double>(k);
      d.eigenvectors[j][k] = c * std::pow(r, kk) * g[k];
      d.right_eigenvectors[j][k] = c * Z * g[k] * std::pow(r, -kk);
    }
  }
  return d;
}

nlohmann::json to_json(const SpectralDecomposition& d) {
  return {{"n", d.spec.n},
          {"a", d.spec.a},
          {"eigenvalues", d.eigenvalues},
          {"eigenvectors", d.eigenvectors},
          {"normalization", d.normalization}};
}

double eigen_residual(const SpectralDecomposition& d, const SquareMatrix& Q) {
  const std::size_t n = d.spec.n;
  double worst = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const auto& F = d.eigenvectors[j];
    for (std::size_t k = 0; k < n; ++k) {
      double fq = 0.0;
      for (std::size_t i = 0; i < n; ++i) fq += F[i] * Q(i, k);
      worst = std::max(worst, std::abs(fq - d.eigenvalues[j] * F[k]));
    }
  }
  return worst;
}

std::vector<double> evolve_master_equation(std::span<const double> mu, double t, const BrwSpec& spec,
                                           double step) {
  spec.validate();
  if (mu.size() != spec.n) throw InvalidParameter("master equation input must have length n");
  std::vector<double> y(mu.begin(), mu.end());
  auto rhs = [&](double, const std::vector<double>& x, std::vector<double>& out) { master_rhs(spec, x, out); };
  rk4_integrate(rhs, 0.0, t, step, y);
  return y;
}

Pmf evolve(const Pmf& mu, double t, const BrwSpec& spec, const EvolveOptions& options) {
  return evolve(mu, t, eigensystem(spec), options);
}

Pmf evolve(const Pmf& mu, double t, const SpectralDecomposition& d, const EvolveOptions& options) {
  const std::size_t n = d.spec.n;
  if (mu.end() > n) throw InvalidParameter("evolve: mu is supported outside {0.." + std::to_string(n - 1) + "}");
  if (!(t >= 0.0)) throw InvalidParameter("evolve needs t >= 0");
  const std::vector<double> m = mu.dense(n);
  if (options.method == EvolveMethod::master_equation)
    return Pmf(0, evolve_master_equation(m, t, d.spec, options.rk_step));

  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double alpha = 0.0;
    for (std::size_t k = mu.offset(); k < mu.end(); ++k) alpha += m[k] * d.right_eigenvectors[i][k];
    if (alpha == 0.0) continue;
    const double decay = alpha * std::exp(t * d.eigenvalues[i]);
    if (decay == 0.0) continue;
    for (std::size_t l = 0; l < n; ++l) out[l] += decay * d.eigenvectors[i][l];
  }

  if (options.cross_check && t > 0.0) {
    const auto rk = evolve_master_equation(m, t, d.spec, options.rk_step);
    double gap = 0.0;
    for (std::size_t l = 0; l < n; ++l) gap = std::max(gap, std::abs(rk[l] - out[l]));
    if (gap > options.consistency_tolerance) {
      std::ostringstream os;
      os << "evolve on " << describe(d.spec) << " at t=" << t << ": eigen expansion and master equation differ by "
         << gap;
      throw InternalConsistencyError(os.str());
    }
  }
  return Pmf(0, std::move(out));
}

ConvergenceBounds convergence_bounds(const BrwSpec& spec, std::size_t k, double t, double epsilon) {
  spec.validate();
  if (k >= spec.n) throw InvalidParameter("convergence_bounds needs k < n");
  const auto pi = stationary(spec).dense(spec.n);
  const double lambda2 = eigenvalue(spec, 1);
  const double decay = std::exp(t * lambda2);
  const double pi_min = *std::min_element(pi.begin(), pi.end());

  ConvergenceBounds b;
  b.pointwise.resize(spec.n);
  for (std::size_t l = 0; l < spec.n; ++l) b.pointwise[l] = decay * std::sqrt(pi[l] / pi[k]);
  b.tv = decay / pi_min;
  if (spec.a > 0.0) {
    const double a = spec.a;
    b.first_moment = 4.0 * std::exp(-t * a * a / 4.0) /
                     (a * a * std::exp(0.5 * static_cast<double>(k) * std::log1p(-a)));
  } else {
    b.first_moment = kInf;
  }
  b.tau1 = std::max(0.0, std::log(1.0 / (epsilon * pi_min)) / -lambda2);
  return b;
}

DirichletLaplacian dirichlet_and_laplacian(std::span<const double> f, std::span<const double> g,
                                           const BrwSpec& spec) {
  spec.validate();
  if (f.size() != spec.n || g.size() != spec.n) throw InvalidParameter("Dirichlet form inputs must have length n");
  const auto pi = stationary(spec).dense(spec.n);
  DirichletLaplacian out;
  for (std::size_t k = 0; k + 1 < spec.n; ++k) {
    // pi(k) Q(k,k+1) and pi(k+1) Q(k+1,k) each appear once in the double sum.
    const double w = 0.5 * (pi[k] * spec.right_rate() + pi[k + 1] * 1.0);
    out.dirichlet += w * (f[k] - f[k + 1]) * (g[k] - g[k + 1]);
  }
  double norm2 = 0.0;
  for (std::size_t k = 0; k < spec.n; ++k) norm2 += pi[k] * f[k] * f[k];
  if (norm2 == 0.0) throw InvalidParameter("Laplacian undefined for f = 0");
  for (std::size_t k = 0; k < spec.n; ++k) {
    const double f2 = f[k] * f[k];
    if (f2 > 0.0) out.laplacian += pi[k] * f2 * std::log(f2 / norm2);
  }
  return out;
}

double log_sobolev_lower_bound(const BrwSpec& spec) {
  spec.validate();
  const auto pi = stationary(spec).dense(spec.n);
  const double pi_min = *std::min_element(pi.begin(), pi.end());
  const double gap = -eigenvalue(spec, 1);
  if (std::abs(pi_min - 0.5) < 1e-15) return gap / 2.0;
  return (1.0 - 2.0 * pi_min) * gap / std::log(1.0 / pi_min - 1.0);
}

namespace {

struct RatioEval {
  double ratio = kInf;
  double dirichlet = 0.0;
  double laplacian = 0.0;
};

RatioEval log_sobolev_ratio(const std::vector<double>& f, const std::vector<double>& pi,
                            const std::vector<double>& edge) {
  RatioEval r;
  double norm2 = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) norm2 += pi[k] * f[k] * f[k];
  for (std::size_t k = 0; k + 1 < f.size(); ++k) r.dirichlet += edge[k] * (f[k] - f[k + 1]) * (f[k] - f[k + 1]);
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double f2 = f[k] * f[k];
    if (f2 > 0.0) r.laplacian += pi[k] * f2 * std::log(f2 / norm2);
  }
  r.ratio = r.laplacian > 0.0 ? r.dirichlet / r.laplacian : kInf;
  return r;
}

void normalize(std::vector<double>& f, const std::vector<double>& pi) {
  double norm2 = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) norm2 += pi[k] * f[k] * f[k];
  const double s = 1.0 / std::sqrt(norm2);
  for (double& x : f) x *= s;
}

double descend(std::vector<double> f, const std::vector<double>& pi, const std::vector<double>& edge,
               const LogSobolevOptions& options) {
  const std::size_t n = f.size();
  normalize(f, pi);
  RatioEval cur = log_sobolev_ratio(f, pi, edge);
  if (!std::isfinite(cur.ratio)) return kInf;
  std::vector<double> dir(n), trial(n);
  double step = 0.1;
  for (int it = 0; it < options.max_iterations; ++it) {
    double norm2 = 0.0;
    for (std::size_t k = 0; k < n; ++k) norm2 += pi[k] * f[k] * f[k];
    const double log_norm2 = std::log(norm2);
    // Gradient of E/L in the L2(pi) metric, i.e. the Euclidean gradient over pi.
    for (std::size_t k = 0; k < n; ++k) {
      double dE = 0.0;
      if (k > 0) dE += 2.0 * edge[k - 1] * (f[k] - f[k - 1]);
      if (k + 1 < n) dE += 2.0 * edge[k] * (f[k] - f[k + 1]);
      const double f2 = f[k] * f[k];
      const double dL = f2 > 0.0 ? 2.0 * pi[k] * f[k] * (std::log(f2) - log_norm2) : 0.0;
      dir[k] = -((dE - cur.ratio * dL) / cur.laplacian) / pi[k];
    }
    bool improved = false;
    RatioEval next;
    for (int tries = 0; tries < 60; ++tries) {
      for (std::size_t k = 0; k < n; ++k) trial[k] = f[k] + step * dir[k];
      normalize(trial, pi);
      next = log_sobolev_ratio(trial, pi, edge);
      if (next.ratio < cur.ratio) {
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
    const double gain = (cur.ratio - next.ratio) / next.ratio;
    f.swap(trial);
    cur = next;
    step *= 1.5;
    if (gain < options.relative_stop) break;
  }
  return cur.ratio;
}

}  // namespace

LogSobolev log_sobolev(const BrwSpec& spec, const LogSobolevOptions& options) {
  spec.validate();
  if (!(spec.a > 0.0)) throw InvalidParameter("log_sobolev needs a in (0, 1)");
  LogSobolev out;
  out.lower_bound = log_sobolev_lower_bound(spec);
  if (spec.n > options.max_n) return out;

  const std::size_t n = spec.n;
  const auto d = eigensystem(spec);
  const auto& pi = d.pi;
  std::vector<double> edge(n - 1);
  for (std::size_t k = 0; k + 1 < n; ++k) edge[k] = 0.5 * (pi[k] * spec.right_rate() + pi[k + 1]);

  std::vector<std::vector<double>> starts;
  {
    // sqrt(uniform / pi): the uniform-start witness.
    std::vector<double> f(n);
    for (std::size_t k = 0; k < n; ++k) f[k] = std::sqrt(1.0 / (static_cast<double>(n) * pi[k]));
    starts.push_back(std::move(f));
  }
  {
    // Near-constant perturbation along the slowest mode.
    std::vector<double> f(n);
    for (std::size_t k = 0; k < n; ++k) f[k] = 1.0 + 1e-3 * d.right_eigenvectors[1][k] / d.right_eigenvectors[1][0];
    starts.push_back(std::move(f));
  }
  Xoshiro256 rng(options.seed);
  while (starts.size() < static_cast<std::size_t>(std::max(options.restarts, 2))) {
    std::vector<double> f(n);
    const double scale = 0.1 + 3.0 * rng.uniform();
    double walk = 0.0;
    const bool cumulative = rng.coin();
    for (std::size_t k = 0; k < n; ++k) {
      const double z = std::sqrt(-2.0 * std::log(rng.uniform_open0())) * std::cos(2.0 * std::numbers::pi * rng.uniform());
      walk = cumulative ? walk + scale * z / std::sqrt(static_cast<double>(n)) : scale * z;
      f[k] = std::exp(walk);
    }
    starts.push_back(std::move(f));
  }

  double best = kInf;
  for (const auto& f : starts) best = std::min(best, descend(f, pi, edge, options));
  out.numeric_estimate = best;
  return out;
}

double hardy_constant(std::span<const double> u, std::span<const double> v, double u_tail) {
  if (u.size() != v.size() || u.empty()) throw InvalidParameter("hardy weights must be nonempty and equal length");
  const std::size_t m = u.size();
  std::vector<double> suffix(m + 1, u_tail);
  for (std::size_t k = m; k-- > 0;) {
    if (!(u[k] > 0.0) || !(v[k] > 0.0)) throw InvalidParameter("hardy weights must be positive");
    suffix[k] = suffix[k + 1] + u[k];
  }
  double prefix = 0.0;
  double B = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    prefix += 1.0 / v[k];
    B = std::max(B, prefix * suffix[k]);
  }
  return B;
}

AuditEntry hardy_audit(std::span<const double> u, std::span<const double> v, std::span<const double> f,
                       double u_tail) {
  if (f.size() > u.size()) throw InvalidParameter("hardy_audit: f is longer than the weights");
  const double B = hardy_constant(u, v, u_tail);
  if (!std::isfinite(B)) {
    auto e = AuditEntry::flag("hardy (vacuous, B infinite)", true);
    e.rhs = B;
    return e;
  }
  double lhs = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) lhs += v[j] * f[j] * f[j];
  double partial = 0.0;
  double acc = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    if (j < f.size()) partial += f[j];
    acc += u[j] * partial * partial;
  }
  acc += u_tail * partial * partial;
  const double rhs = acc / (4.0 * B);
  return AuditEntry::make("hardy", lhs, Relation::greater_equal, rhs, 1e-12 * std::max({1.0, lhs, rhs}));
}

AuditEntry lemma71_audit(const Pmf& mu, std::size_t n, double a, double alpha) {
  if (!(a > 0.0 && a < 1.0)) throw InvalidParameter("lemma71_audit needs a in (0, 1)");
  if (n < 2) throw InvalidParameter("lemma71_audit needs n >= 2");
  double window = 0.0;
  for (std::size_t k = 0; k < n; ++k) window += mu[k];
  if (!(window > 0.0)) throw InvalidParameter("lemma71_audit needs positive mass on {0..n-1}");

  double lhs = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double u = mu[k] * (1.0 - a);
    const double v = mu[k + 1];
    if (u == v) continue;
    if (u == 0.0 || v == 0.0) {
      lhs = kInf;
      break;
    }
    lhs += (u - v) * std::log(u / v);
  }
  double bracket = std::log(-std::expm1(static_cast<double>(n) * std::log1p(-a)));
  for (std::size_t k = 0; k < n; ++k)
    if (mu[k] > 0.0) bracket += mu[k] * (std::log(mu[k]) - log_geometric(a, k));
  const double rhs = 4.0 * alpha * bracket;
  return AuditEntry::make("log-Sobolev flow bound", lhs, Relation::greater_equal, rhs,
                          1e-12 * std::max(1.0, std::abs(rhs)));
}

AuditEntry lemma72_audit(const Pmf& mu, std::size_t n) {
  const double a = mu[0];
  if (!(a > 0.0 && a < 1.0)) throw InvalidParameter("lemma72_audit needs mu(0) in (0, 1)");
  if (n < 2) throw InvalidParameter("lemma72_audit needs n >= 2");
  double lhs = 0.0;
  for (std::size_t k = 0; k + 1 < n; ++k) {
    const double flow = mu[k] * (1.0 - a) - mu[k + 1];
    lhs += flow * flow / std::exp(log_geometric(a, k + 1));
  }
  double chi2 = 0.0;
  for (std::size_t k = 1; k < n; ++k) {
    const double g = std::exp(log_geometric(a, k));
    const double dev = mu[k] - g;
    chi2 += dev * dev / g;
  }
  const double rhs = a * a / 4.0 * chi2;
  return AuditEntry::make("weighted chi-square bound", lhs, Relation::greater_equal, rhs,
                          1e-12 * std::max(1.0, rhs));
}

AuditEntry dominance_audit(std::size_t k, double a, double t) {
  if (!(a > 0.0 && a < 1.0)) throw InvalidParameter("dominance_audit needs a in (0, 1)");
  if (!(t >= 0.0)) throw InvalidParameter("dominance_audit needs t >= 0");
  constexpr double kCertificate = 1e-12;
  std::size_t n = k + static_cast<std::size_t>(std::ceil(std::log(kCertificate) / std::log1p(-a))) + 2;
  std::ostringstream name;
  name << "dominance k=" << k << " a=" << a << " t=" << t;
  for (int attempt = 0; attempt < 4; ++attempt, n *= 2) {
    const BrwSpec spec{n, a};
    const Pmf evolved = evolve(Pmf::dirac(k), t, spec);
    if (evolved[n - 1] > kCertificate) continue;
    const Pmf target = geometric(GeometricFamily::shifted(k, a), n - k);
    const auto check = stochastically_leq(evolved, target, 1e-10);
    return AuditEntry::make(name.str(), check.worst_violation, Relation::less_equal, 0.0, 1e-10);
  }
  throw InvalidParameter("dominance_audit: truncation insufficient after enlarging");
}

namespace {

std::size_t quantile(const Pmf& p, double u) {
  double acc = 0.0;
  for (std::size_t k = p.offset(); k < p.end(); ++k) {
    acc += p[k];
    if (u < acc) return k;
  }
  return p.end() == 0 ? 0 : p.end() - 1;
}

}  // namespace

CouplingResult coupling_sim(double a, double b, const Pmf& mu_a, const Pmf& mu_b, double horizon,
                            std::uint64_t seed, std::uint64_t replicas) {
  if (!(a >= 0.0 && a <= b && b <= 1.0)) throw InvalidParameter("coupling_sim needs 0 <= a <= b <= 1");
  if (!stochastically_leq(mu_b, mu_a, 1e-12).holds)
    throw InvalidParameter("coupling_sim needs mu_a >=_st mu_b");
  const double rate = 1.0 + (1.0 - b) + (b - a);
  std::vector<CouplingResult> per(replicas);
  parallel_for(replicas, [&](std::size_t r) {
    Xoshiro256 rng(seed, r);
    const double u = rng.uniform();
    std::int64_t ca = static_cast<std::int64_t>(quantile(mu_a, u));
    std::int64_t cb = static_cast<std::int64_t>(quantile(mu_b, u));
    CouplingResult& out = per[r];
    if (ca < cb) ++out.violations;
    double t = rng.exponential(rate);
    while (t <= horizon) {
      const double pick = rng.uniform() * rate;
      if (pick < 1.0) {
        if (ca > 0) --ca;
        if (cb > 0) --cb;
      } else if (pick < 1.0 + (1.0 - b)) {
        ++ca;
        ++cb;
      } else {
        ++ca;
      }
      ++out.events;
      if (ca < cb) ++out.violations;
      t += rng.exponential(rate);
    }
  });
  CouplingResult total;
  total.replicas = replicas;
  for (const auto& p : per) {
    total.violations += p.violations;
    total.violating_replicas += p.violations > 0 ? 1 : 0;
    total.events += p.events;
  }
  return total;
}

double skellam_pmf(std::int64_t d, double t) {
  if (!(t >= 0.0)) throw InvalidParameter("skellam_pmf needs t >= 0");
  if (t == 0.0) return d == 0 ? 1.0 : 0.0;
  const double m = static_cast<double>(d < 0 ? -d : d);
  const double log_t = std::log(t);
  double sum = 0.0;
  for (double j = 0.0;; j += 1.0) {
    const double term = std::exp(-2.0 * t + (2.0 * j + m) * log_t - std::lgamma(j + 1.0) - std::lgamma(j + m + 1.0));
    sum += term;
    const bool past_peak = t * t < (j + 1.0) * (j + m + 1.0);
    if (past_peak && (term < 1e-16 * sum || term < 1e-300)) break;
  }
  return sum;
}

Pmf reflection_law(std::size_t R, double t) {
  if (!(t >= 0.0)) throw InvalidParameter("reflection_law needs t >= 0");
  if (t == 0.0) return Pmf::dirac(R);
  std::size_t reach = static_cast<std::size_t>(2.0 * t + 12.0 * std::sqrt(2.0 * t) + 40.0);
  for (;;) {
    const std::size_t K = R + reach + 1;
    std::vector<double> w(K);
    const auto r = static_cast<std::int64_t>(R);
    for (std::size_t k = 0; k < K; ++k) {
      const auto kk = static_cast<std::int64_t>(k);
      w[k] = skellam_pmf(kk - r, t) + skellam_pmf(kk + r + 1, t);
    }
    double mass = 0.0;
    for (double x : w) mass += x;
    const double missing = 1.0 - mass;
    if (std::abs(missing) < 1e-12 || reach > 100000) return Pmf(0, std::move(w), std::max(0.0, missing));
    reach *= 2;
  }
}

}  // namespace zrp
