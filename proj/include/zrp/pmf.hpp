#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "zrp/audit.hpp"

namespace zrp {

/// Negative weights with magnitude below this are treated as round-off and
/// clamped to zero; anything more negative is rejected.
inline constexpr double kClampTolerance = 1e-12;

/// Finite-support probability mass function on the nonnegative integers.
///
/// Mass is stored for k in [offset, offset + size). `tail_mass` is mass known
/// to lie strictly beyond the stored support, which is how truncations of
/// laws on all of N are represented. Values are immutable after construction.
class Pmf {
 public:
  Pmf() = default;

  /// Applies the clamp policy: entries in (-kClampTolerance, 0) become 0 and
  /// the remaining weights are rescaled to keep the original total; more
  /// negative or non-finite entries throw InvalidParameter.
  Pmf(std::size_t offset, std::vector<double> weights, double tail_mass = 0.0);

  static Pmf dirac(std::size_t k);

  std::size_t offset() const { return offset_; }
  /// One past the last stored point.
  std::size_t end() const { return offset_ + weights_.size(); }
  std::size_t size() const { return weights_.size(); }
  std::span<const double> weights() const { return weights_; }
  double tail_mass() const { return tail_; }

  /// Mass at k; zero outside the stored support.
  double operator[](std::size_t k) const {
    return (k >= offset_ && k < end()) ? weights_[k - offset_] : 0.0;
  }

  double stored_mass() const;
  double total_mass() const { return stored_mass() + tail_; }
  bool is_normalized(double tol = 1e-9) const;

  /// First moment over the stored support.
  double mean() const;
  /// First moment with the declared tail placed no further than
  /// `tail_mean_bound` per unit of tail mass (an upper bound on the mean).
  double mean_upper(double tail_mean_bound) const { return mean() + tail_ * tail_mean_bound; }

  /// Mass at k >= c, counting the declared tail as lying beyond every
  /// stored point. For c >= end() only the bounds [0, tail_mass] are known;
  /// this returns the upper bound.
  double tail_upper(std::size_t c) const;
  /// Lower bound counterpart of tail_upper.
  double tail_lower(std::size_t c) const;

  /// Dense copy of masses for k in [0, n); entries beyond end() are zero.
  std::vector<double> dense(std::size_t n) const;

 private:
  std::size_t offset_ = 0;
  std::vector<double> weights_;
  std::vector<double> suffix_;  // suffix_[i] = sum of weights_[i..]
  double tail_ = 0.0;
};

/// Value plus the mass that the stored supports could not account for.
/// For tv and sup distances the bound is rigorous; for entropy, KL and first
/// moments it is the unaccounted tail mass itself.
struct Estimate {
  double value = 0.0;
  double truncation_bound = 0.0;
};

struct GeometricFamily {
  enum class Kind { infinite, truncated, shifted };
  Kind kind = Kind::infinite;
  double a = 0.5;
  std::size_t n = 0;  // truncated kind
  std::size_t j = 0;  // shifted kind

  static GeometricFamily infinite(double a) { return {Kind::infinite, a, 0, 0}; }
  static GeometricFamily truncated(std::size_t n, double a) { return {Kind::truncated, a, n, 0}; }
  static GeometricFamily shifted(std::size_t j, double a) { return {Kind::shifted, a, 0, j}; }
};

/// a(1-a)^k on N (support_size stored points), a(1-a)^k / (1-(1-a)^n) on
/// {0..n-1}, or the infinite law shifted right by j.
Pmf geometric(const GeometricFamily& family, std::size_t support_size);

/// G^R: geometric with mean R, G^R(k) = R^k / (R+1)^(k+1).
Pmf gibbs_geometric(double R, std::size_t support_size);

/// Occupancy multiplicities of an ensemble: counts[k] = boxes holding k.
class EnsembleCounts {
 public:
  /// Validates sum counts == N and, when R is given, sum k*counts == N*R.
  EnsembleCounts(std::int64_t N, std::map<std::size_t, std::int64_t> counts,
                 std::optional<std::int64_t> R = std::nullopt);

  std::int64_t boxes() const { return N_; }
  const std::map<std::size_t, std::int64_t>& counts() const { return counts_; }
  Pmf empirical() const;

 private:
  std::int64_t N_;
  std::map<std::size_t, std::int64_t> counts_;
};

/// Shannon entropy (natural log), 0 log 0 = 0.
Estimate entropy(const Pmf& p);

/// phi(x, y) = y log(y/x) - (y - x), evaluated without cancellation near y = x.
double phi(double x, double y);

/// D_KL(mu || pi) over the stored supports. Returns +infinity (deliberately,
/// not by overflow) when mu puts mass where pi has none.
Estimate kl_divergence(const Pmf& mu, const Pmf& pi);

enum class Norm { tv, first_moment, sup };

Estimate distance(const Pmf& mu, const Pmf& pi, Norm norm);

struct OrderCheck {
  bool holds = true;
  /// max over cutoffs c of tail(mu, c) - tail(nu, c); <= 0 when mu <=_st nu.
  double worst_violation = 0.0;
  std::size_t worst_cutoff = 0;
};

/// mu <=_st nu up to `tol`, with declared tails treated conservatively
/// (upper bound for mu, lower bound for nu).
OrderCheck stochastically_leq(const Pmf& mu, const Pmf& nu, double tol = 1e-12);

/// (sum |mu - pi|)^2 <= 2 D_KL(mu || pi).
AuditEntry pinsker_audit(const Pmf& mu, const Pmf& pi);

/// |S(X) - N^-1 log(N! / prod N_k!)|, all factorials via lgamma.
double thermodynamic_entropy_gap(const EnsembleCounts& counts);

struct EquilibriumTail {
  double tail_probability = 0.0;  // pi(B_1 >= k)
  double log_config_count = 0.0;  // log |B_N|
  bool exact = false;             // computed with exact integer arithmetic
};

/// Exact equilibrium law of a single box in the N-box, NR-ball ensemble.
EquilibriumTail exact_equilibrium(std::int64_t N, std::int64_t R, std::int64_t k);

}  // namespace zrp
