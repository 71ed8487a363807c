#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "zrp/audit.hpp"
#include "zrp/pmf.hpp"

namespace zrp {

/// Biased random walk on {0, ..., n-1}: left at rate 1 (except at 0), right
/// at rate 1 - a (except at n-1).
struct BrwSpec {
  std::size_t n = 2;
  double a = 0.0;

  /// Throws InvalidParameter unless n >= 2 and 0 <= a < 1.
  void validate() const;
  double right_rate() const { return 1.0 - a; }
};

/// Dense row-major square matrix.
struct SquareMatrix {
  std::size_t n = 0;
  std::vector<double> data;

  double operator()(std::size_t i, std::size_t j) const { return data[i * n + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data[i * n + j]; }
};

SquareMatrix q_matrix(const BrwSpec& spec);

/// Equilibrium of BRW[n, a]: truncated geometric, or uniform when a = 0.
Pmf stationary(const BrwSpec& spec);

/// Left eigensystem of Q[n, a] in closed form. Index 0 holds the stationary
/// law (eigenvalue 0); index j >= 1 holds F_{j+1}(k) = c Im[(1 - A) A^k] with
/// A = sqrt(1-a) exp(i pi j / n), eigenvalue -|1 - A|^2. Each F is scaled to
/// unit norm in <f, g>_pi = sum f g / pi, with F(0) > 0 for j >= 1.
struct SpectralDecomposition {
  BrwSpec spec;
  std::vector<double> eigenvalues;
  std::vector<std::vector<double>> eigenvectors;
  /// Right eigenvectors h = F / pi, kept separately because pi can be tiny.
  std::vector<std::vector<double>> right_eigenvectors;
  std::vector<double> normalization;
  std::vector<double> pi;

  double spectral_gap() const { return -eigenvalues.at(1); }
};

SpectralDecomposition eigensystem(const BrwSpec& spec);

nlohmann::json to_json(const SpectralDecomposition& d);

/// max_k |(F_j Q)(k) - lambda_j F_j(k)| over all j.
double eigen_residual(const SpectralDecomposition& d, const SquareMatrix& Q);

enum class EvolveMethod {
  spectral,         // eigen expansion, cross-checked against the RK route
  master_equation,  // RK4 only; use when mu/pi is huge somewhere, which
                    // makes the eigen expansion lose all its digits
};

struct EvolveOptions {
  EvolveMethod method = EvolveMethod::spectral;
  double rk_step = 0.01;
  /// Agreement demanded between the eigen expansion and the RK route.
  double consistency_tolerance = 1e-6;
  bool cross_check = true;
};

/// mu e^{tQ} via the eigen expansion, cross-checked against RK4 on the
/// master equation. Throws InternalConsistencyError if they disagree.
Pmf evolve(const Pmf& mu, double t, const BrwSpec& spec, const EvolveOptions& options = {});
Pmf evolve(const Pmf& mu, double t, const SpectralDecomposition& d, const EvolveOptions& options = {});

/// mu e^{tQ} by RK4 on d/dt mu = mu Q only.
std::vector<double> evolve_master_equation(std::span<const double> mu, double t, const BrwSpec& spec,
                                           double step = 0.01);

struct ConvergenceBounds {
  std::vector<double> pointwise;  // e^{t lambda_2} sqrt(pi(l) / pi(k)) per state l
  double tv = 0.0;                // e^{t lambda_2} / pi_min
  double first_moment = 0.0;      // 4 e^{-t a^2/4} / (a^2 (1-a)^{k/2}); +inf when a = 0
  double tau1 = 0.0;              // least t with e^{t lambda_2} / pi_min <= epsilon
};

ConvergenceBounds convergence_bounds(const BrwSpec& spec, std::size_t k, double t, double epsilon = 0.25);

struct DirichletLaplacian {
  double dirichlet = 0.0;  // E(f, g)
  double laplacian = 0.0;  // L(f)
};

/// E(f, g) = 1/2 sum pi(j) Q(j,k) [f(j)-f(k)][g(j)-g(k)] and
/// L(f) = sum pi f^2 log(f^2 / |f|^2_{2,pi}), with 0 log 0 = 0.
DirichletLaplacian dirichlet_and_laplacian(std::span<const double> f, std::span<const double> g,
                                           const BrwSpec& spec);

struct LogSobolev {
  double lower_bound = 0.0;
  /// Best E(f,f)/L(f) found by descent; an upper bound on the constant.
  /// Absent when n exceeds the search size limit.
  std::optional<double> numeric_estimate;
};

struct LogSobolevOptions {
  int restarts = 32;
  std::uint64_t seed = 1;
  std::size_t max_n = 128;
  int max_iterations = 4000;
  double relative_stop = 1e-10;
};

LogSobolev log_sobolev(const BrwSpec& spec, const LogSobolevOptions& options = {});

/// (1 - 2 pi_min) |lambda_2| / log(1/pi_min - 1), with the two-point limit
/// |lambda_2| / 2 when pi_min = 1/2.
double log_sobolev_lower_bound(const BrwSpec& spec);

/// Hardy constant B = sup_k (sum_{j<=k} 1/v(j)) (sum_{j>=k} u(j)); u_tail is
/// u-mass beyond the stored range.
double hardy_constant(std::span<const double> u, std::span<const double> v, double u_tail = 0.0);

/// sum v f^2 >= (1/4B) sum_j u(j) (sum_{i<=j} f(i))^2, f zero beyond its
/// stored range. A vacuous inequality (B infinite) is reported as passing.
AuditEntry hardy_audit(std::span<const double> u, std::span<const double> v, std::span<const double> f,
                       double u_tail = 0.0);

/// Flow-entropy inequality for a full-support law against BRW[n, a]:
/// sum_{k<n-1} [mu(k)(1-a) - mu(k+1)] log(mu(k)(1-a)/mu(k+1))
///   >= 4 alpha [sum_{k<n} mu(k) log(mu(k)/(a(1-a)^k)) + log(1 - (1-a)^n)].
AuditEntry lemma71_audit(const Pmf& mu, std::size_t n, double a, double alpha);

/// Weighted chi-square inequality with a = mu(0):
/// sum_{k<=n-2} [mu(k)(1-a) - mu(k+1)]^2 / (a(1-a)^{k+1})
///   >= (a^2/4) sum_{k=1}^{n-1} [mu(k) - a(1-a)^k]^2 / (a(1-a)^k).
AuditEntry lemma72_audit(const Pmf& mu, std::size_t n);

/// delta_k e^{tQ[N,a]} <=_st pi[N + k, a], on a truncation certified to
/// leave less than 1e-12 mass unaccounted.
AuditEntry dominance_audit(std::size_t k, double a, double t);

struct CouplingResult {
  std::uint64_t violations = 0;             // (replica, event) pairs with C_a < C_b
  std::uint64_t violating_replicas = 0;
  std::uint64_t events = 0;
  std::uint64_t replicas = 0;
};

/// Monotone coupling of BRW[N, a] and BRW[N, b] (a <= b): at rate 1 both
/// step left, at rate 1-b both step right, at rate b-a only C_a steps right.
/// Starting points are drawn by quantile coupling from mu_a >=_st mu_b.
CouplingResult coupling_sim(double a, double b, const Pmf& mu_a, const Pmf& mu_b, double horizon,
                            std::uint64_t seed, std::uint64_t replicas);

/// P(X = d) for X = Y - Z, Y, Z independent Poisson(t).
double skellam_pmf(std::int64_t d, double t);

/// Law at time t of BRW[N, 0] started at R, via the reflection of a
/// two-sided walk in -1/2: nu(k) = P(X = k - R) + P(X = k + R + 1).
Pmf reflection_law(std::size_t R, double t);

}  // namespace zrp
