#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>
#include <doctest.h>

#include "zrp/brw.hpp"
#include "zrp/error.hpp"
#include "zrp/pmf.hpp"

using namespace zrp;

namespace {

Eigen::MatrixXd to_eigen(const SquareMatrix& q) {
  Eigen::MatrixXd m(q.n, q.n);
  for (std::size_t i = 0; i < q.n; ++i)
    for (std::size_t j = 0; j < q.n; ++j) m(i, j) = q(i, j);
  return m;
}

// Eigenvalues of the generator, sorted descending (0 first). The walk is
// reversible, so Q is similar to a symmetric tridiagonal matrix with
// off-diagonal sqrt(1-a); a general nonsymmetric solver is badly
// conditioned here once (1-a)^n is tiny.
std::vector<double> eigen_oracle(const BrwSpec& spec) {
  const int n = static_cast<int>(spec.n);
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    if (i > 0) s(i, i) -= 1.0;
    if (i + 1 < n) {
      s(i, i) -= 1.0 - spec.a;
      s(i, i + 1) = s(i + 1, i) = std::sqrt(1.0 - spec.a);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(s, Eigen::EigenvaluesOnly);
  std::vector<double> out(solver.eigenvalues().begin(), solver.eigenvalues().end());
  std::sort(out.rbegin(), out.rend());
  return out;
}

}  // namespace

TEST_SUITE("brw") {

TEST_CASE("generator rows sum to zero") {
  auto q = q_matrix({5, 0.3});
  for (std::size_t i = 0; i < 5; ++i) {
    double s = 0;
    for (std::size_t j = 0; j < 5; ++j) s += q(i, j);
    CHECK(std::abs(s) < 1e-15);
  }
  CHECK(q(0, 1) == doctest::Approx(0.7));
  CHECK(q(1, 0) == 1.0);
  CHECK(q(4, 4) == -1.0);
  CHECK_THROWS_AS(BrwSpec({1, 0.3}).validate(), InvalidParameter);
  CHECK_THROWS_AS(BrwSpec({4, 1.0}).validate(), InvalidParameter);
}

TEST_CASE("closed-form spectrum matches a dense solver") {
  for (std::size_t n : {2, 3, 7, 16, 33}) {
    for (double a : {0.0, 0.1, 0.5, 0.9}) {
      const BrwSpec spec{n, a};
      auto d = eigensystem(spec);
      auto oracle = eigen_oracle(spec);
      auto mine = d.eigenvalues;
      std::sort(mine.rbegin(), mine.rend());
      REQUIRE(mine.size() == oracle.size());
      for (std::size_t j = 0; j < n; ++j) CHECK(std::abs(mine[j] - oracle[j]) < 1e-12);
      CHECK(eigen_residual(d, q_matrix(spec)) < 1e-10);
    }
  }
}

TEST_CASE("eigenvalue formula and normalization") {
  const BrwSpec spec{9, 0.3};
  auto d = eigensystem(spec);
  for (std::size_t j = 1; j < spec.n; ++j) {
    const std::complex<double> A = std::sqrt(1 - spec.a) * std::polar(1.0, M_PI * static_cast<double>(j) / 9.0);
    CHECK(d.eigenvalues[j] == doctest::Approx(-std::norm(1.0 - A)).epsilon(1e-12));
    double norm = 0;
    for (std::size_t k = 0; k < spec.n; ++k) norm += d.eigenvectors[j][k] * d.eigenvectors[j][k] / d.pi[k];
    CHECK(norm == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(d.eigenvectors[j][0] > 0.0);
  }
  // Gap bound |lambda_2| >= a^2 / 4.
  CHECK(d.spectral_gap() >= spec.a * spec.a / 4);
}

TEST_CASE("stationary law is invariant") {
  const BrwSpec spec{12, 0.25};
  auto pi = stationary(spec);
  auto q = q_matrix(spec);
  for (std::size_t k = 0; k < spec.n; ++k) {
    double s = 0;
    for (std::size_t i = 0; i < spec.n; ++i) s += pi[i] * q(i, k);
    CHECK(std::abs(s) < 1e-15);
  }
  auto flat = stationary({6, 0.0});
  CHECK(flat[3] == doctest::Approx(1.0 / 6));
}

TEST_CASE("evolve agrees with a dense matrix exponential") {
  const BrwSpec spec{10, 0.4};
  Eigen::MatrixXd q = to_eigen(q_matrix(spec));
  // e^{tQ} by scaling and squaring a Taylor series, independent of the
  // library's spectral route.
  const double t = 1.7;
  Eigen::MatrixXd m = q * (t / 64.0);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(10, 10);
  Eigen::MatrixXd expm = term;
  for (int i = 1; i < 30; ++i) {
    term = term * m / i;
    expm += term;
  }
  for (int i = 0; i < 6; ++i) expm = expm * expm;
  Eigen::RowVectorXd mu = Eigen::RowVectorXd::Zero(10);
  mu(3) = 1.0;
  Eigen::RowVectorXd expect = mu * expm;
  auto got = evolve(Pmf::dirac(3), t, spec);
  for (std::size_t k = 0; k < 10; ++k) CHECK(got[k] == doctest::Approx(expect(static_cast<int>(k))).epsilon(1e-10).scale(1.0));
  auto me = evolve(Pmf::dirac(3), t, spec, {EvolveMethod::master_equation});
  for (std::size_t k = 0; k < 10; ++k) CHECK(me[k] == doctest::Approx(expect(static_cast<int>(k))).epsilon(1e-8).scale(1.0));
}

TEST_CASE("reflection law against evolve") {
  for (double t : {0.5, 2.0}) {
    auto refl = reflection_law(3, t);
    auto ev = evolve(Pmf::dirac(3), t, BrwSpec{120, 0.0});
    double sup = 0;
    for (std::size_t k = 0; k < 120; ++k) sup = std::max(sup, std::abs(refl[k] - ev[k]));
    CHECK(sup < 1e-8);
  }
  double total = 0;
  for (std::int64_t d = -60; d <= 60; ++d) total += skellam_pmf(d, 3.0);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(skellam_pmf(2, 3.0) == doctest::Approx(skellam_pmf(-2, 3.0)));
}

TEST_CASE("convergence bounds dominate actual distance") {
  const BrwSpec spec{8, 0.3};
  for (double t : {0.5, 2.0, 8.0}) {
    auto b = convergence_bounds(spec, 4, t);
    auto ev = evolve(Pmf::dirac(4), t, spec);
    CHECK(distance(ev, stationary(spec), Norm::tv).value <= b.tv + 1e-12);
  }
}

TEST_CASE("dirichlet form and laplacian on constants") {
  const BrwSpec spec{5, 0.2};
  std::vector<double> one(5, 1.0);
  auto dl = dirichlet_and_laplacian(one, one, spec);
  CHECK(dl.dirichlet == doctest::Approx(0.0));
  CHECK(dl.laplacian == doctest::Approx(0.0).scale(1.0));
}

TEST_CASE("log-Sobolev numeric estimate sits above the lower bound") {
  for (double a : {0.2, 0.5}) {
    const BrwSpec spec{6, a};
    auto ls = log_sobolev(spec, {.restarts = 8, .seed = 3});
    REQUIRE(ls.numeric_estimate.has_value());
    CHECK(*ls.numeric_estimate >= ls.lower_bound - 1e-12);
    CHECK(ls.lower_bound > 0.0);
  }
}

TEST_CASE("hardy constant for geometric weights") {
  // u(j) = r^j, v(j) = r^j with r < 1: B = sup_k (sum_{j<=k} r^-j)(sum_{j>=k} r^j).
  const double r = 0.6;
  const std::size_t K = 200;
  std::vector<double> u(K), v(K);
  for (std::size_t j = 0; j < K; ++j) u[j] = v[j] = std::pow(r, static_cast<double>(j));
  const double tail = std::pow(r, static_cast<double>(K)) / (1 - r);
  double brute = 0;
  for (std::size_t k = 0; k < K; ++k) {
    double left = 0, right = tail;
    for (std::size_t j = 0; j <= k; ++j) left += 1 / v[j];
    for (std::size_t j = k; j < K; ++j) right += u[j];
    brute = std::max(brute, left * right);
  }
  CHECK(hardy_constant(u, v, tail) == doctest::Approx(brute).epsilon(1e-12));
  CHECK(brute == doctest::Approx(1 / ((1 - r) * (1 - r))).epsilon(1e-10));
  std::vector<double> f{0.3, -1.0, 2.0, 0.5};
  CHECK(hardy_audit(u, v, f, tail).pass);
}

TEST_CASE("flow-entropy and chi-square bounds on geometric laws") {
  const double a = 0.3;
  const std::size_t n = 60;
  auto g = geometric(GeometricFamily::infinite(a), n);
  auto e71 = lemma71_audit(g, n, a, log_sobolev_lower_bound({n, a}));
  CHECK(e71.pass);
  CHECK(e71.lhs == doctest::Approx(0.0).scale(1.0));
  CHECK(e71.rhs < 0.0);  // 4 alpha log(1 - (1-a)^n)
  auto e72 = lemma72_audit(g, n);
  CHECK(e72.pass);
  CHECK(e72.rhs == doctest::Approx(0.0).scale(1.0));

  Pmf lumpy(0, {0.4, 0.1, 0.3, 0.1, 0.1});
  CHECK(lemma71_audit(lumpy, 5, 0.4, log_sobolev_lower_bound({5, 0.4})).pass);
  CHECK(lemma72_audit(lumpy, 5).pass);
}

TEST_CASE("dominance and coupling") {
  CHECK(dominance_audit(3, 0.3, 2.0).pass);
  CHECK(dominance_audit(0, 0.5, 0.0).pass);
  auto mu_a = geometric(GeometricFamily::infinite(0.2), 100);
  auto mu_b = geometric(GeometricFamily::infinite(0.5), 100);
  auto c = coupling_sim(0.2, 0.5, mu_a, mu_b, 5.0, 9, 500);
  CHECK(c.violations == 0);
  CHECK(c.events > 0);
  CHECK_THROWS_AS(coupling_sim(0.2, 0.5, mu_b, mu_a, 5.0, 9, 10), InvalidParameter);
}

}
