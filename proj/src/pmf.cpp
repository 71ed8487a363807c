#include "zrp/pmf.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "zrp/error.hpp"

namespace zrp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Neumaier compensated summation.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v))
      comp_ += (sum_ - t) + v;
    else
      comp_ += (v - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

std::vector<double> geometric_weights(double a, double r, std::size_t count) {
  std::vector<double> w(count);
  for (std::size_t k = 0; k < count; ++k) w[k] = a * std::pow(r, static_cast<double>(k));
  return w;
}

void require_bias(double a) {
  if (!(a > 0.0 && a < 1.0))
    throw InvalidParameter("geometric bias must lie in (0, 1), got " + std::to_string(a));
}

}  // namespace

Pmf::Pmf(std::size_t offset, std::vector<double> weights, double tail_mass)
    : offset_(offset), weights_(std::move(weights)), tail_(tail_mass) {
  if (!std::isfinite(tail_) || tail_ < 0.0) {
    if (tail_ > -kClampTolerance && tail_ <= 0.0)
      tail_ = 0.0;
    else
      throw InvalidParameter("Pmf tail mass must be finite and nonnegative");
  }
  CompensatedSum before;
  bool clamped = false;
  for (double& w : weights_) {
    if (!std::isfinite(w)) throw InvalidParameter("Pmf weight is not finite");
    before.add(w);
    if (w < 0.0) {
      if (w <= -kClampTolerance)
        throw InvalidParameter("Pmf weight " + std::to_string(w) + " is below the clamp tolerance");
      w = 0.0;
      clamped = true;
    }
  }
  if (clamped) {
    CompensatedSum after;
    for (double w : weights_) after.add(w);
    if (after.value() > 0.0) {
      const double scale = before.value() / after.value();
      for (double& w : weights_) w *= scale;
    }
  }
  suffix_.assign(weights_.size() + 1, 0.0);
  for (std::size_t i = weights_.size(); i-- > 0;) suffix_[i] = suffix_[i + 1] + weights_[i];
}

Pmf Pmf::dirac(std::size_t k) { return Pmf(k, {1.0}); }

double Pmf::stored_mass() const {
  CompensatedSum s;
  for (double w : weights_) s.add(w);
  return s.value();
}

bool Pmf::is_normalized(double tol) const { return std::abs(total_mass() - 1.0) <= tol; }

double Pmf::mean() const {
  CompensatedSum s;
  for (std::size_t i = 0; i < weights_.size(); ++i) s.add(static_cast<double>(offset_ + i) * weights_[i]);
  return s.value();
}

double Pmf::tail_upper(std::size_t c) const {
  if (c <= offset_) return suffix_.front() + tail_;
  if (c < end()) return suffix_[c - offset_] + tail_;
  return tail_;
}

double Pmf::tail_lower(std::size_t c) const {
  if (c >= end()) return 0.0;
  return tail_upper(c);
}

std::vector<double> Pmf::dense(std::size_t n) const {
  std::vector<double> out(n, 0.0);
  for (std::size_t k = offset_; k < std::min(n, end()); ++k) out[k] = weights_[k - offset_];
  return out;
}

Pmf geometric(const GeometricFamily& family, std::size_t support_size) {
  require_bias(family.a);
  const double a = family.a;
  const double r = 1.0 - a;
  switch (family.kind) {
    case GeometricFamily::Kind::infinite:
    case GeometricFamily::Kind::shifted: {
      if (support_size < 1) throw InvalidParameter("geometric support_size must be >= 1");
      const std::size_t offset = family.kind == GeometricFamily::Kind::shifted ? family.j : 0;
      return Pmf(offset, geometric_weights(a, r, support_size), std::pow(r, static_cast<double>(support_size)));
    }
    case GeometricFamily::Kind::truncated: {
      if (family.n < 1) throw InvalidParameter("truncated geometric needs n >= 1");
      auto w = geometric_weights(a, r, family.n);
      const double norm = -std::expm1(static_cast<double>(family.n) * std::log1p(-a));
      for (double& x : w) x /= norm;
      return Pmf(0, std::move(w));
    }
  }
  throw InvalidParameter("unknown geometric family");
}

Pmf gibbs_geometric(double R, std::size_t support_size) {
  if (!(R > 0.0) || !std::isfinite(R)) throw InvalidParameter("gibbs_geometric needs R > 0");
  if (support_size < 1) throw InvalidParameter("gibbs_geometric support_size must be >= 1");
  const double a = 1.0 / (R + 1.0);
  const double r = R / (R + 1.0);
  return Pmf(0, geometric_weights(a, r, support_size), std::pow(r, static_cast<double>(support_size)));
}

EnsembleCounts::EnsembleCounts(std::int64_t N, std::map<std::size_t, std::int64_t> counts,
                               std::optional<std::int64_t> R)
    : N_(N), counts_(std::move(counts)) {
  if (N_ < 1) throw InvalidParameter("EnsembleCounts needs N >= 1");
  std::int64_t boxes = 0;
  std::int64_t balls = 0;
  for (auto [k, c] : counts_) {
    if (c < 0) throw InvalidParameter("EnsembleCounts multiplicities must be nonnegative");
    boxes += c;
    balls += static_cast<std::int64_t>(k) * c;
  }
  if (boxes != N_) throw InvalidParameter("EnsembleCounts multiplicities must sum to N");
  if (R && balls != N_ * *R) throw InvalidParameter("EnsembleCounts ball total must equal N*R");
}

Pmf EnsembleCounts::empirical() const {
  std::size_t top = 0;
  for (auto [k, c] : counts_)
    if (c > 0) top = std::max(top, k);
  std::vector<double> w(top + 1, 0.0);
  for (auto [k, c] : counts_) w[k] = static_cast<double>(c) / static_cast<double>(N_);
  return Pmf(0, std::move(w));
}

Estimate entropy(const Pmf& p) {
  CompensatedSum s;
  for (double w : p.weights())
    if (w > 0.0) s.add(-w * std::log(w));
  return {s.value(), p.tail_mass()};
}

double phi(double x, double y) {
  if (!(x > 0.0)) throw InvalidParameter("phi needs x > 0");
  if (y < 0.0) throw InvalidParameter("phi needs y >= 0");
  if (y == 0.0) return x;
  const double d = (y - x) / x;
  if (std::abs(d) < 1e-2) {
    // (1+d) log(1+d) - d = sum_{m>=2} (-1)^m d^m / (m(m-1))
    double term = d * d;
    double acc = 0.0;
    for (int m = 2; m <= 14; ++m) {
      acc += ((m % 2 == 0) ? term : -term) / static_cast<double>(m * (m - 1));
      term *= d;
    }
    return x * acc;
  }
  return std::max(0.0, y * std::log(y / x) - (y - x));
}

Estimate kl_divergence(const Pmf& mu, const Pmf& pi) {
  const std::size_t lo = std::min(mu.offset(), pi.offset());
  const std::size_t hi = std::max(mu.end(), pi.end());
  CompensatedSum phis;
  CompensatedSum diff;
  for (std::size_t k = lo; k < hi; ++k) {
    const double m = mu[k];
    const double p = pi[k];
    if (p == 0.0) {
      if (m > 0.0) return {kInf, mu.tail_mass() + pi.tail_mass()};
      continue;
    }
    phis.add(phi(p, m));
    diff.add(m - p);
  }
  return {phis.value() + diff.value(), mu.tail_mass() + pi.tail_mass()};
}

Estimate distance(const Pmf& mu, const Pmf& pi, Norm norm) {
  const std::size_t lo = std::min(mu.offset(), pi.offset());
  const std::size_t hi = std::max(mu.end(), pi.end());
  CompensatedSum s;
  double sup = 0.0;
  for (std::size_t k = lo; k < hi; ++k) {
    const double d = std::abs(mu[k] - pi[k]);
    switch (norm) {
      case Norm::tv: s.add(d); break;
      case Norm::first_moment: s.add(static_cast<double>(k) * d); break;
      case Norm::sup: sup = std::max(sup, d); break;
    }
  }
  switch (norm) {
    case Norm::tv: return {0.5 * s.value(), 0.5 * (mu.tail_mass() + pi.tail_mass())};
    case Norm::first_moment: return {s.value(), mu.tail_mass() + pi.tail_mass()};
    case Norm::sup: return {sup, std::max(mu.tail_mass(), pi.tail_mass())};
  }
  return {};
}

OrderCheck stochastically_leq(const Pmf& mu, const Pmf& nu, double tol) {
  OrderCheck out;
  out.worst_violation = -kInf;
  const std::size_t hi = std::max(mu.end(), nu.end());
  for (std::size_t c = 0; c <= hi; ++c) {
    const double v = mu.tail_upper(c) - nu.tail_lower(c);
    if (v > out.worst_violation) {
      out.worst_violation = v;
      out.worst_cutoff = c;
    }
  }
  out.holds = out.worst_violation <= tol;
  return out;
}

AuditEntry pinsker_audit(const Pmf& mu, const Pmf& pi) {
  const double l1 = 2.0 * distance(mu, pi, Norm::tv).value;
  const double kl = kl_divergence(mu, pi).value;
  return AuditEntry::make("pinsker", l1 * l1, Relation::less_equal, 2.0 * kl, 1e-12);
}

double thermodynamic_entropy_gap(const EnsembleCounts& counts) {
  const double N = static_cast<double>(counts.boxes());
  double log_multinomial = std::lgamma(N + 1.0);
  for (auto [k, c] : counts.counts()) log_multinomial -= std::lgamma(static_cast<double>(c) + 1.0);
  return std::abs(entropy(counts.empirical()).value - log_multinomial / N);
}

namespace {

// Pascal's triangle up to row 127 in 128-bit integers; C(127, 63) < 2^124.
unsigned __int128 exact_binomial(int n, int k) {
  static const auto table = [] {
    std::vector<std::array<unsigned __int128, 128>> t(128);
    for (int i = 0; i < 128; ++i) {
      t[i].fill(0);
      t[i][0] = 1;
      for (int j = 1; j <= i; ++j) t[i][j] = t[i - 1][j - 1] + (j < i ? t[i - 1][j] : 0);
    }
    return t;
  }();
  return table[n][k];
}

double log_binomial(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace

EquilibriumTail exact_equilibrium(std::int64_t N, std::int64_t R, std::int64_t k) {
  if (N < 1 || R < 1) throw InvalidParameter("exact_equilibrium needs N >= 1 and R >= 1");
  if (k < 0 || k > N * R) throw InvalidParameter("exact_equilibrium needs 0 <= k <= N*R");
  EquilibriumTail out;
  const std::int64_t balls = N * R;
  if (balls <= 64) {
    const auto top = exact_binomial(static_cast<int>(balls - k + N - 1), static_cast<int>(N - 1));
    const auto all = exact_binomial(static_cast<int>(balls + N - 1), static_cast<int>(N - 1));
    out.tail_probability = k == 0 ? 1.0 : static_cast<double>(top) / static_cast<double>(all);
    out.log_config_count = std::log(static_cast<double>(all));
    out.exact = true;
    return out;
  }
  const double n = static_cast<double>(N);
  const double b = static_cast<double>(balls);
  const double kk = static_cast<double>(k);
  out.log_config_count = log_binomial(b + n - 1.0, n - 1.0);
  out.tail_probability = k == 0 ? 1.0 : std::exp(log_binomial(b - kk + n - 1.0, n - 1.0) - out.log_config_count);
  return out;
}

}  // namespace zrp
