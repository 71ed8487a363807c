#include <cmath>
#include <sstream>
#include <vector>

#include <doctest.h>

#include "zrp/error.hpp"
#include "zrp/fluid.hpp"
#include "zrp/sim.hpp"

using namespace zrp;

TEST_SUITE("sim") {

TEST_CASE("uniform start") {
  auto s = OccupancyState::uniform(10, 3, 1);
  CHECK(s.balls() == 30);
  CHECK(s.integer_R() == 3u);
  auto x = s.empirical();
  CHECK(x[3] == 1.0);
  CHECK(s.consistent());
  CHECK_THROWS_AS(OccupancyState::uniform(1000, 1, 1, 100), ResourceError);
}

TEST_CASE("hand-traced transfers") {
  auto s = OccupancyState::custom({1, 1}, 1);
  CHECK(s.apply_transfer(0, 1));
  CHECK(s.occupancy()[0] == 0);
  CHECK(s.occupancy()[1] == 2);
  CHECK(s.histogram()[0] == 1);
  CHECK(s.histogram()[2] == 1);
  // Empty source: nothing moves.
  CHECK_FALSE(s.apply_transfer(0, 1));
  // Diagonal pair: nothing moves.
  CHECK_FALSE(s.apply_transfer(1, 1));
  CHECK(s.occupancy()[1] == 2);
  CHECK(s.consistent());
}

TEST_CASE("single box never changes") {
  auto s = OccupancyState::uniform(1, 5, 3);
  for (int i = 0; i < 100; ++i) {
    auto e = s.step(ClockMode::exponential);
    CHECK_FALSE(e.moved);
  }
  CHECK(s.occupancy()[0] == 5);
  CHECK(s.time() > 0.0);
}

TEST_CASE("mean-holding clock advances in 1/N steps") {
  auto s = OccupancyState::uniform(4, 1, 2);
  for (int i = 0; i < 8; ++i) s.step(ClockMode::mean_holding);
  CHECK(s.time() == doctest::Approx(2.0));
  CHECK(s.events() == 8);
}

TEST_CASE("determinism and schedule independence") {
  auto a = OccupancyState::uniform(200, 2, 42);
  auto b = OccupancyState::uniform(200, 2, 42);
  std::vector<double> fine = linspace(0.0, 3.0, 31);
  std::vector<double> coarse{3.0};
  run_until(a, 3.0, fine);
  run_until(b, 3.0, coarse);
  CHECK(a.events() == b.events());
  for (std::size_t i = 0; i < 200; ++i) CHECK(a.occupancy()[i] == b.occupancy()[i]);
  auto c = OccupancyState::uniform(200, 2, 43);
  run_until(c, 3.0, coarse);
  bool differs = c.events() != a.events();
  for (std::size_t i = 0; i < 200 && !differs; ++i) differs = a.occupancy()[i] != c.occupancy()[i];
  CHECK(differs);
}

TEST_CASE("event count matches the Poisson clock") {
  auto s = OccupancyState::uniform(1000, 2, 5);
  s.advance_to(20.0, ClockMode::exponential);
  // Events ~ Poisson(N T) = Poisson(20000); 5 sigma is about 707.
  CHECK(std::abs(static_cast<double>(s.events()) - 20000.0) < 707.0);
  CHECK(s.balls() == 2000);
  CHECK(s.consistent());
}

TEST_CASE("two boxes one ball each: states equiprobable in the long run") {
  // Configurations (2,0), (1,1), (0,2) each have stationary probability 1/3.
  auto s = OccupancyState::uniform(2, 1, 17);
  std::array<double, 3> time_in{0, 0, 0};
  double last = 0;
  const int events = 300000;
  for (int i = 0; i < events; ++i) {
    const int state = static_cast<int>(s.occupancy()[0]);
    auto e = s.step(ClockMode::exponential);
    time_in[state] += e.time - last;
    last = e.time;
  }
  for (double t : time_in) CHECK(t / last == doctest::Approx(1.0 / 3).epsilon(0.02));
}

TEST_CASE("checkpoint round trip resumes the same path") {
  auto a = OccupancyState::uniform(50, 3, 8);
  a.advance_to(1.0, ClockMode::exponential);
  std::stringstream ss;
  a.save_checkpoint(ss);
  auto b = OccupancyState::load_checkpoint(ss);
  CHECK(b.time() == a.time());
  CHECK(b.events() == a.events());
  a.advance_to(4.0, ClockMode::exponential);
  b.advance_to(4.0, ClockMode::exponential);
  CHECK(a.events() == b.events());
  for (std::size_t i = 0; i < 50; ++i) CHECK(a.occupancy()[i] == b.occupancy()[i]);

  std::stringstream bad("not a checkpoint");
  CHECK_THROWS_AS(OccupancyState::load_checkpoint(bad), InvalidParameter);
}

TEST_CASE("run_until snapshots and csv") {
  auto s = OccupancyState::uniform(100, 2, 1);
  std::vector<double> times{0.0, 0.5, 1.0};
  auto r = run_until(s, 1.0, times, ClockMode::mean_holding);
  REQUIRE(r.snapshots.size() == 3);
  CHECK(r.snapshots[0].empirical[2] == 1.0);
  CHECK(r.approximate());
  std::ostringstream os;
  write_trajectory_csv(os, r);
  CHECK(os.str().find("# mode=mean-holding") != std::string::npos);
  CHECK(os.str().find("t,k,x_k") != std::string::npos);
  CHECK(to_json(r)["approximate"] == true);
}

TEST_CASE("empirical law approaches the fluid path") {
  auto times = linspace(0.0, 2.0, 11);
  auto fluid = integrate(Pmf::dirac(2), 2.0, times);
  SimConfig cfg{.N = 20000, .R = 2, .T = 2.0, .snapshots = times};
  std::vector<std::uint64_t> seeds{1, 2};
  auto rep = replicate(cfg, seeds, &fluid);
  REQUIRE(rep.sup_distances.size() == 2);
  CHECK(rep.max_sup_distance < 0.02);
  std::vector<std::uint64_t> dup{3, 3};
  CHECK_THROWS_AS(replicate(cfg, dup, &fluid), InvalidParameter);
}

TEST_CASE("interpolation between snapshots") {
  auto fluid = integrate(Pmf::dirac(1), 1.0, std::vector<double>{0.0, 1.0});
  auto mid = interpolate(fluid, 0.5);
  CHECK(mid[1] == doctest::Approx(0.5 * (1.0 + fluid.snapshots[1].state.x[1])));
  CHECK_THROWS_AS(interpolate(fluid, 1.5), InvalidParameter);
}

}
