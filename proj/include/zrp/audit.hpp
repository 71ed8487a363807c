#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace zrp {

enum class Relation { less_equal, greater_equal, equal };

const char* to_string(Relation r);

/// One verified inequality: lhs <relation> rhs, with the signed margin by
/// which it holds (negative means violated).
struct AuditEntry {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  Relation relation = Relation::less_equal;
  double margin = 0.0;
  double tolerance = 0.0;
  bool pass = true;

  static AuditEntry make(std::string name, double lhs, Relation rel, double rhs, double tolerance = 0.0);
  /// A check that is not an inequality between two numbers (e.g. a sign or
  /// band test). `margin` is reported as given.
  static AuditEntry flag(std::string name, bool pass, double margin = 0.0);
};

struct AuditReport {
  std::vector<AuditEntry> entries;

  void add(AuditEntry e) { entries.push_back(std::move(e)); }
  void append(const AuditReport& other);
  bool all_pass() const;
  /// First failing entry, or nullptr.
  const AuditEntry* first_failure() const;
  std::size_t failures() const;
};

nlohmann::json to_json(const AuditEntry& e);
nlohmann::json to_json(const AuditReport& r);
/// CSV with header `name,lhs,rhs,relation,margin,pass`.
void write_csv(std::ostream& os, const AuditReport& r);

/// Doubles that may be infinite or NaN go through here so the JSON stays valid.
nlohmann::json json_number(double v);

}  // namespace zrp
