#include <cmath>
#include <sstream>
#include <vector>

#include <doctest.h>

#include "zrp/ehrenfest.hpp"
#include "zrp/fluid.hpp"

using namespace zrp;

TEST_SUITE("ehrenfest") {

TEST_CASE("closed form at log 2") {
  auto f = ehrenfest::fluid_closed_form(std::log(2.0));
  CHECK(f.x_H == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(f.x_T == doctest::Approx(0.75).epsilon(1e-15));
  CHECK(ehrenfest::entropy(ehrenfest::fluid_closed_form(0.0)) == 0.0);
  CHECK(ehrenfest::entropy(ehrenfest::fluid_closed_form(50.0)) == doctest::Approx(std::log(2.0)));
}

TEST_CASE("integrator matches closed form") {
  auto times = linspace(0.0, 10.0, 101);
  auto samples = ehrenfest::integrate(10.0, 0.01, times);
  double sup = 0;
  for (const auto& s : samples) sup = std::max(sup, std::abs(s.x_H - ehrenfest::fluid_closed_form(s.t).x_H));
  CHECK(sup < 1e-8);
}

TEST_CASE("entropy increases along the fluid path") {
  double prev = -1;
  for (double t = 0; t < 5; t += 0.25) {
    const double s = ehrenfest::entropy(ehrenfest::fluid_closed_form(t));
    CHECK(s > prev);
    prev = s;
  }
}

TEST_CASE("simulation converges in N") {
  auto times = linspace(0.0, 3.0, 31);
  auto err = [&](std::uint64_t N) {
    double worst = 0;
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      for (const auto& s : ehrenfest::simulate(N, 3.0, seed, times))
        worst = std::max(worst, std::abs(s.x_H - ehrenfest::fluid_closed_form(s.t).x_H));
    }
    return worst;
  };
  const double e2 = err(100), e4 = err(10000), e6 = err(1000000);
  CHECK(e4 < e2);
  CHECK(e6 < e4);
  CHECK(e6 < 0.005);
}

TEST_CASE("csv layout") {
  std::vector<ehrenfest::Sample> s{{0.0, 0.0}, {1.0, 0.3}};
  std::ostringstream os;
  ehrenfest::write_csv(os, 10, 4, s);
  CHECK(os.str().find("# N=10") != std::string::npos);
  CHECK(os.str().find("# seed=4") != std::string::npos);
  CHECK(os.str().find("t,x_H") != std::string::npos);
}

}
