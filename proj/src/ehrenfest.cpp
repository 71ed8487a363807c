#include "zrp/ehrenfest.hpp"

#include <cmath>
#include <ostream>

#include "zrp/error.hpp"
#include "zrp/ode.hpp"
#include "zrp/random.hpp"

namespace zrp::ehrenfest {
namespace {

void check_schedule(double T, std::span<const double> snapshots) {
  if (!(T >= 0.0)) throw InvalidParameter("need T >= 0");
  for (std::size_t i = 0; i < snapshots.size(); ++i) {
    if (snapshots[i] < 0.0 || snapshots[i] > T) throw InvalidParameter("snapshot times must lie in [0, T]");
    if (i > 0 && !(snapshots[i] > snapshots[i - 1]))
      throw InvalidParameter("snapshot times must be strictly increasing");
  }
}

}  // namespace

std::vector<Sample> simulate(std::uint64_t N, double T, std::uint64_t seed, std::span<const double> snapshots) {
  if (N == 0) throw InvalidParameter("need at least one coin");
  check_schedule(T, snapshots);
  Xoshiro256 rng(seed);
  std::vector<bool> heads(N, false);
  std::uint64_t count = 0;
  double t = 0.0;
  const auto rate = static_cast<double>(N);
  double next = rng.exponential(rate);
  std::vector<Sample> out;
  out.reserve(snapshots.size());
  for (double s : snapshots) {
    while (next <= s) {
      t = next;
      const std::uint64_t i = rng.below(N);
      const bool h = rng.coin();
      if (heads[i] != h) {
        count += h ? 1 : std::uint64_t(-1);
        heads[i] = h;
      }
      next = t + rng.exponential(rate);
    }
    out.push_back({s, static_cast<double>(count) / rate});
  }
  return out;
}

Fractions fluid_closed_form(double t) {
  if (!(t >= 0.0)) throw InvalidParameter("need t >= 0");
  const double e = std::exp(-t);
  return {0.5 * (1.0 - e), 0.5 * (1.0 + e)};
}

std::vector<Sample> integrate(double T, double step, std::span<const double> snapshots) {
  check_schedule(T, snapshots);
  if (!(step > 0.0)) throw InvalidParameter("need step > 0");
  auto rhs = [](double, const std::vector<double>& y, std::vector<double>& dy) {
    dy[0] = 0.5 * (y[1] - y[0]);
    dy[1] = -dy[0];
  };
  std::vector<double> y{0.0, 1.0};
  double t = 0.0;
  std::vector<Sample> out;
  out.reserve(snapshots.size());
  for (double s : snapshots) {
    rk4_integrate(rhs, t, s, step, y);
    t = s;
    out.push_back({s, y[0]});
  }
  return out;
}

double entropy(const Fractions& f) {
  auto term = [](double p) { return p > 0.0 ? -p * std::log(p) : 0.0; };
  return term(f.x_H) + term(f.x_T);
}

void write_csv(std::ostream& os, std::uint64_t N, std::uint64_t seed, std::span<const Sample> samples) {
  os.precision(17);
  os << "# N=" << N << "\n# seed=" << seed << "\nt,x_H\n";
  for (const auto& s : samples) os << s.t << ',' << s.x_H << '\n';
}

}  // namespace zrp::ehrenfest
