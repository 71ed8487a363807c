#include <cmath>
#include <sstream>
#include <vector>

#include <doctest.h>

#include "zrp/error.hpp"
#include "zrp/fluid.hpp"
#include "zrp/pmf.hpp"
#include "zrp/random.hpp"

using namespace zrp;

namespace {

double shannon(const std::vector<double>& x) {
  double s = 0;
  for (double v : x)
    if (v > 0) s -= v * std::log(v);
  return s;
}

// Random law on {0..K} with mean exactly R, by mixing random weights with a
// point mass on the far side of R.
Pmf random_mean_R(Xoshiro256& rng, double R, std::size_t K) {
  std::vector<double> w(K + 1);
  double s = 0;
  for (auto& v : w) s += (v = rng.uniform_open0());
  double m = 0;
  for (std::size_t k = 0; k <= K; ++k) m += k * (w[k] /= s);
  if (m > R) {
    const double lambda = R / m;
    for (auto& v : w) v *= lambda;
    w[0] += 1 - lambda;
  } else {
    const double lambda = (K - R) / (K - m);
    for (auto& v : w) v *= lambda;
    w[K] += 1 - lambda;
  }
  return Pmf(0, w);
}

}  // namespace

TEST_SUITE("fluid") {

TEST_CASE("drift from a point mass at 1") {
  std::vector<double> x{0, 1, 0, 0, 0};
  auto d = drift(x);
  CHECK(d.rate[0] == 1.0);
  CHECK(d.rate[1] == -2.0);
  CHECK(d.rate[2] == 1.0);
  CHECK(d.rate[3] == 0.0);
  CHECK(d.boundary_flow == 0.0);
}

TEST_CASE("gibbs law is a fixed point") {
  for (double R : {1.0, 2.0, 5.0, 20.0}) {
    auto g = gibbs_geometric(R, 2000);
    auto d = drift(g);
    for (std::size_t k = 0; k + 1 < d.rate.size(); ++k) CHECK(std::abs(d.rate[k]) < 1e-12);
  }
}

TEST_CASE("drift matches a finite-difference of the flow definition") {
  // d/dt sum_k k x_k = 0 and d/dt sum_k x_k = 0 for any state with room
  // to spare at the top.
  Xoshiro256 rng(4);
  auto x = random_mean_R(rng, 2.0, 8).dense(30);
  auto d = drift(x);
  double dm = 0, dmean = 0;
  for (std::size_t k = 0; k < 30; ++k) {
    dm += d.rate[k];
    dmean += k * d.rate[k];
  }
  CHECK(std::abs(dm) < 1e-15);
  CHECK(std::abs(dmean) < 1e-14);
}

TEST_CASE("entropy rate equals the time derivative of entropy") {
  const double t0 = 0.7, h = 1e-4;
  std::vector<double> times{t0 - h, t0, t0 + h};
  FluidOptions opt;
  opt.step = 1e-4;
  auto traj = integrate(Pmf::dirac(2), t0 + h, times, opt);
  const double s_minus = shannon(traj.snapshots[0].state.x);
  const double s_plus = shannon(traj.snapshots[2].state.x);
  const double fd = (s_plus - s_minus) / (2 * h);
  const auto rate = entropy_rate(traj.snapshots[1].state.x);
  // O(h^2) from the difference plus round-off of order 1e-16 / h.
  CHECK(rate.exact == doctest::Approx(fd).epsilon(1e-6));
  CHECK(rate.exact >= rate.lower_bound);
}

TEST_CASE("entropy rate forms on a random state") {
  Xoshiro256 rng(8);
  for (int i = 0; i < 20; ++i) {
    auto x = random_mean_R(rng, 3.0, 10);
    auto r = entropy_rate(x);
    CHECK(r.exact >= r.lower_bound - 1e-15);
    CHECK(r.lower_bound >= 0.0);
  }
  // Mass above an empty level makes the exact rate infinite.
  std::vector<double> gap{0.5, 0.0, 0.5, 0.0};
  CHECK(std::isinf(entropy_rate(gap).exact));
}

TEST_CASE("geometric bias minimizes KL at 1/(R+1)") {
  Xoshiro256 rng(21);
  for (int i = 0; i < 10; ++i) {
    const double R = 2.0;
    auto x = random_mean_R(rng, R, 9);
    double best_a = 0, best = 1e300;
    for (int j = 1; j < 1000; ++j) {
      const double a = j * 1e-3;
      const double v = kl_to_geometric(x, a);
      if (v < best) {
        best = v;
        best_a = a;
      }
    }
    CHECK(std::abs(best_a - 1 / (R + 1)) <= 1e-3);
    // D(x || pi_a) = D(x || G^R) + D(G^R || pi_a), the second term summed
    // directly from the two geometric laws.
    const double a = 0.45;
    double cross = 0;
    const double g0 = 1 / (R + 1);
    for (int k = 0; k < 4000; ++k) {
      const double gk = g0 * std::pow(1 - g0, k);
      if (gk == 0) break;
      cross += gk * (std::log(g0 / a) + k * std::log((1 - g0) / (1 - a)));
    }
    const double direct = kl_to_geometric(x, a);
    const double split = kl_metrics(x, R).to_gibbs + cross;
    CHECK(std::abs(direct - split) < 1e-10);
  }
  CHECK_THROWS_AS(kl_metrics(Pmf::dirac(2), 2.0), UndefinedBias);
}

TEST_CASE("trajectory from a point mass conserves mass and mean") {
  auto times = linspace(0.0, 20.0, 41);
  FluidOptions opt;
  opt.initial_dimension = 6;  // forces the truncation to grow
  auto traj = integrate(Pmf::dirac(2), 20.0, times, opt);
  REQUIRE(traj.snapshots.size() == 41);
  CHECK(traj.snapshots.back().state.dimension() > 6);
  double prev_s = -1, prev_kl = 1e300;
  for (const auto& s : traj.snapshots) {
    CHECK(std::abs(s.diagnostics.mass_error) < 1e-8);
    CHECK(std::abs(s.diagnostics.mean_error) < 1e-6);
    CHECK(s.diagnostics.entropy >= prev_s - 1e-12);
    CHECK(s.diagnostics.kl_gibbs <= prev_kl + 1e-12);
    CHECK(s.diagnostics.kl_self_bias >= s.diagnostics.kl_gibbs - 1e-12);
    prev_s = s.diagnostics.entropy;
    prev_kl = s.diagnostics.kl_gibbs;
  }
  CHECK(traj.snapshots.back().state.x[0] == doctest::Approx(1.0 / 3).epsilon(1e-2));
}

TEST_CASE("reversed drift lowers entropy") {
  auto start = integrate(Pmf::dirac(2), 1.0, std::vector<double>{1.0});
  FluidOptions rev;
  rev.drift_sign = -1.0;
  rev.strict_nonnegativity = false;
  auto back = integrate(start.snapshots.back().state.pmf(), 0.3, std::vector<double>{0.0, 0.3}, rev);
  CHECK(back.snapshots[1].diagnostics.entropy < back.snapshots[0].diagnostics.entropy);
}

TEST_CASE("input validation") {
  CHECK_THROWS_AS(integrate(Pmf(0, {0.5, 0.2}), 1.0, std::vector<double>{}), InvalidParameter);
  CHECK_THROWS_AS(integrate(Pmf::dirac(1), 1.0, std::vector<double>{0.5, 0.2}), InvalidParameter);
  CHECK_THROWS_AS(integrate(Pmf::dirac(1), 1.0, std::vector<double>{2.0}), InvalidParameter);
}

TEST_CASE("decay fit on an exact exponential") {
  std::vector<double> xs{0, 1, 2, 3, 4};
  std::vector<double> ys;
  for (double x : xs) ys.push_back(1.5 - 0.25 * x);
  auto f = least_squares(xs, ys);
  CHECK(f.slope == doctest::Approx(-0.25));
  CHECK(f.intercept == doctest::Approx(1.5));
  CHECK(f.max_residual < 1e-12);
}

TEST_CASE("csv layouts") {
  auto traj = integrate(Pmf::dirac(1), 0.1, std::vector<double>{0.0, 0.1});
  std::ostringstream a, b;
  write_fluid_csv(a, traj);
  write_diagnostics_csv(b, traj);
  CHECK(a.str().find("# R=1") != std::string::npos);
  CHECK(a.str().find("t,k,x_k") != std::string::npos);
  CHECK(b.str().find("t,S,dSdt_exact,dSdt_lower,kl_gibbs,kl_selfbias,leak") != std::string::npos);
  CHECK(to_json(traj)["snapshots"].size() == 2);
}

}
