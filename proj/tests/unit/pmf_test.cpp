#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include <doctest.h>

#include "zrp/error.hpp"
#include "zrp/pmf.hpp"
#include "zrp/pmf_io.hpp"
#include "zrp/random.hpp"

using namespace zrp;

namespace {

// Brute-force count of compositions of `balls` into `boxes` parts with the
// first part at least k.
long long count_configs(int boxes, int balls, int min_first) {
  if (boxes == 1) return balls >= min_first ? 1 : 0;
  long long total = 0;
  for (int b = 0; b <= balls; ++b) {
    if (b < min_first) continue;
    total += count_configs(boxes - 1, balls - b, 0);
  }
  return total;
}

}  // namespace

TEST_SUITE("pmf") {

TEST_CASE("clamp policy") {
  Pmf p(0, {0.5, -1e-13, 0.5});
  CHECK(p[1] == 0.0);
  CHECK(p.total_mass() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(Pmf(0, {0.5, -1e-6, 0.5}), InvalidParameter);
  CHECK_THROWS_AS(Pmf(0, {std::nan(""), 1.0}), InvalidParameter);
}

TEST_CASE("offset support and tails") {
  Pmf p(3, {0.25, 0.25}, 0.5);
  CHECK(p[2] == 0.0);
  CHECK(p[3] == 0.25);
  CHECK(p.end() == 5);
  CHECK(p.tail_upper(4) == doctest::Approx(0.75));
  CHECK(p.tail_upper(9) == doctest::Approx(0.5));
  CHECK(p.tail_lower(9) == 0.0);
  CHECK(p.mean() == doctest::Approx(3 * 0.25 + 4 * 0.25));
}

TEST_CASE("geometric families") {
  const double a = 0.3;
  auto inf = geometric(GeometricFamily::infinite(a), 50);
  CHECK(inf[7] == doctest::Approx(a * std::pow(1 - a, 7)));
  CHECK(inf.total_mass() == doctest::Approx(1.0).epsilon(1e-14));

  auto tr = geometric(GeometricFamily::truncated(6, a), 6);
  double z = 1 - std::pow(1 - a, 6);
  CHECK(tr[2] == doctest::Approx(a * std::pow(1 - a, 2) / z));
  CHECK(tr.total_mass() == doctest::Approx(1.0));

  auto sh = geometric(GeometricFamily::shifted(4, a), 40);
  CHECK(sh[3] == 0.0);
  CHECK(sh[4] == doctest::Approx(a));

  auto g = gibbs_geometric(2.0, 200);
  CHECK(g[3] == doctest::Approx(8.0 / 81.0));
  CHECK(g.mean() == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("phi is stable near the diagonal") {
  const double x = 0.3;
  for (double eps : {1e-3, 1e-6, 1e-9}) {
    const double y = x * (1 + eps);
    // Second-order Taylor expansion: phi ~ x eps^2 / 2.
    CHECK(phi(x, y) == doctest::Approx(x * eps * eps / 2).epsilon(1e-2));
    CHECK(phi(x, y) >= 0.0);
  }
  CHECK(phi(0.5, 0.0) == doctest::Approx(0.5));
}

TEST_CASE("entropy and kl against hand values") {
  Pmf u(0, {0.25, 0.25, 0.25, 0.25});
  CHECK(entropy(u).value == doctest::Approx(std::log(4.0)));
  Pmf p(0, {0.5, 0.5});
  Pmf q(0, {0.25, 0.75});
  const double expect = 0.5 * std::log(2.0) + 0.5 * std::log(0.5 / 0.75);
  CHECK(kl_divergence(p, q).value == doctest::Approx(expect));
  CHECK(kl_divergence(p, p).value == doctest::Approx(0.0));
  Pmf r(0, {1.0});
  CHECK(std::isinf(kl_divergence(p, r).value));
}

TEST_CASE("distances") {
  Pmf p(0, {0.5, 0.5});
  Pmf q(0, {0.25, 0.25, 0.5});
  CHECK(distance(p, q, Norm::tv).value == doctest::Approx(0.5));
  CHECK(distance(Pmf::dirac(0), Pmf::dirac(1), Norm::tv).value == 1.0);
  CHECK(distance(Pmf::dirac(0), Pmf::dirac(2), Norm::first_moment).value == 2.0);
  CHECK(distance(p, q, Norm::sup).value == doctest::Approx(0.5));
  CHECK(distance(p, q, Norm::first_moment).value == doctest::Approx(0.25 * 0 + 0.25 * 1 + 0.5 * 2));
}

TEST_CASE("stochastic order") {
  auto a = geometric(GeometricFamily::infinite(0.5), 80);
  auto b = geometric(GeometricFamily::infinite(0.3), 80);
  CHECK(stochastically_leq(a, b).holds);
  auto check = stochastically_leq(b, a);
  CHECK_FALSE(check.holds);
  CHECK(check.worst_violation > 0.0);
  CHECK(stochastically_leq(Pmf::dirac(2), Pmf::dirac(3)).holds);
}

TEST_CASE("pinsker on random pairs") {
  Xoshiro256 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> w1(6), w2(6);
    double s1 = 0, s2 = 0;
    for (int k = 0; k < 6; ++k) {
      w1[k] = rng.uniform_open0();
      w2[k] = rng.uniform_open0();
      s1 += w1[k];
      s2 += w2[k];
    }
    for (int k = 0; k < 6; ++k) {
      w1[k] /= s1;
      w2[k] /= s2;
    }
    CHECK(pinsker_audit(Pmf(0, w1), Pmf(0, w2)).pass);
  }
}

TEST_CASE("exact equilibrium against enumeration") {
  auto e = exact_equilibrium(2, 1, 1);
  CHECK(e.exact);
  CHECK(e.tail_probability == 2.0 / 3.0);
  CHECK(e.log_config_count == doctest::Approx(std::log(3.0)));
  for (int N = 1; N <= 5; ++N)
    for (int R = 1; R <= 3; ++R)
      for (int k = 0; k <= N * R; ++k) {
        const double brute = static_cast<double>(count_configs(N, N * R, k)) /
                             static_cast<double>(count_configs(N, N * R, 0));
        CHECK(exact_equilibrium(N, R, k).tail_probability == doctest::Approx(brute).epsilon(1e-15));
      }
  // P(B_1 >= 1) = N/(2N-1) for R = 1.
  for (int N : {3, 10, 40, 200}) {
    CHECK(exact_equilibrium(N, 1, 1).tail_probability == doctest::Approx(N / (2.0 * N - 1)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(exact_equilibrium(2, 1, 3), InvalidParameter);
}

TEST_CASE("ensemble counts and thermodynamic entropy") {
  EnsembleCounts c(4, {{0, 2}, {2, 1}, {6, 1}}, 2);
  auto x = c.empirical();
  CHECK(x[0] == 0.5);
  CHECK(x.mean() == doctest::Approx(2.0));
  CHECK_THROWS_AS(EnsembleCounts(4, {{0, 2}, {2, 1}}), InvalidParameter);
  CHECK_THROWS_AS(EnsembleCounts(4, {{0, 2}, {2, 2}}, 3), InvalidParameter);
  // Stirling: the gap shrinks like log(N)/N.
  double prev = 1e9;
  for (std::int64_t N : {12, 100, 1000, 10000}) {
    EnsembleCounts e(N, {{0, N / 2}, {1, N / 4}, {2, N / 4}});
    const double gap = thermodynamic_entropy_gap(e);
    CHECK(gap < prev);
    prev = gap;
  }
}

TEST_CASE("csv and json round trip") {
  Pmf p(2, {0.125, 0.375, 0.25}, 0.25);
  std::stringstream ss;
  write_pmf_csv(ss, p);
  auto back = read_pmf_csv(ss);
  CHECK(back.offset() == 2);
  CHECK(back.size() == 3);
  CHECK(back[3] == 0.375);
  CHECK(back.tail_mass() == 0.25);
  auto j = pmf_from_json(to_json(p));
  CHECK(j[4] == 0.25);
  CHECK(j.tail_mass() == 0.25);
}

}
