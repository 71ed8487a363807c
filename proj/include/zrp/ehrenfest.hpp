#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

namespace zrp::ehrenfest {

struct Sample {
  double t = 0.0;
  double x_H = 0.0;
};

/// N coins, all tails at t = 0. At rate N a uniformly chosen coin is tossed
/// (lands heads or tails with probability 1/2). Returns X_H at each
/// snapshot time, with the same right-continuous semantics as the ZRP
/// simulator.
std::vector<Sample> simulate(std::uint64_t N, double T, std::uint64_t seed, std::span<const double> snapshots);

struct Fractions {
  double x_H = 0.0;
  double x_T = 1.0;
};

/// x_H = (1 - e^{-t})/2, x_T = (1 + e^{-t})/2.
Fractions fluid_closed_form(double t);

/// dx_H/dt = (x_T - x_H)/2 through the shared RK4 integrator.
std::vector<Sample> integrate(double T, double step, std::span<const double> snapshots);

/// Two-state entropy -x_H log x_H - x_T log x_T.
double entropy(const Fractions& f);

/// `t,x_H` rows after `# N=` and `# seed=` comment lines.
void write_csv(std::ostream& os, std::uint64_t N, std::uint64_t seed, std::span<const Sample> samples);

}  // namespace zrp::ehrenfest
