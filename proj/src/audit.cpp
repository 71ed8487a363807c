#include "zrp/audit.hpp"

#include <cmath>
#include <ostream>

namespace zrp {

const char* to_string(Relation r) {
  switch (r) {
    case Relation::less_equal: return "<=";
    case Relation::greater_equal: return ">=";
    case Relation::equal: return "==";
  }
  return "?";
}

AuditEntry AuditEntry::make(std::string name, double lhs, Relation rel, double rhs, double tolerance) {
  AuditEntry e;
  e.name = std::move(name);
  e.lhs = lhs;
  e.rhs = rhs;
  e.relation = rel;
  e.tolerance = tolerance;
  switch (rel) {
    case Relation::less_equal: e.margin = rhs - lhs; break;
    case Relation::greater_equal: e.margin = lhs - rhs; break;
    case Relation::equal: e.margin = -std::abs(lhs - rhs); break;
  }
  // inf - inf and friends: an infinite side that satisfies the relation passes.
  if (std::isnan(e.margin)) e.margin = (lhs == rhs) ? 0.0 : -INFINITY;
  e.pass = e.margin >= -tolerance;
  return e;
}

AuditEntry AuditEntry::flag(std::string name, bool pass, double margin) {
  AuditEntry e;
  e.name = std::move(name);
  e.lhs = pass ? 1.0 : 0.0;
  e.rhs = 1.0;
  e.relation = Relation::equal;
  e.margin = margin;
  e.pass = pass;
  return e;
}

void AuditReport::append(const AuditReport& other) {
  entries.insert(entries.end(), other.entries.begin(), other.entries.end());
}

bool AuditReport::all_pass() const { return first_failure() == nullptr; }

const AuditEntry* AuditReport::first_failure() const {
  for (const auto& e : entries)
    if (!e.pass) return &e;
  return nullptr;
}

std::size_t AuditReport::failures() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.pass ? 0 : 1;
  return n;
}

nlohmann::json json_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

nlohmann::json to_json(const AuditEntry& e) {
  return {{"name", e.name},
          {"lhs", json_number(e.lhs)},
          {"rhs", json_number(e.rhs)},
          {"relation", to_string(e.relation)},
          {"margin", json_number(e.margin)},
          {"pass", e.pass}};
}

nlohmann::json to_json(const AuditReport& r) {
  auto arr = nlohmann::json::array();
  for (const auto& e : r.entries) arr.push_back(to_json(e));
  return arr;
}

void write_csv(std::ostream& os, const AuditReport& r) {
  const auto old = os.precision(17);
  os << "name,lhs,rhs,relation,margin,pass\n";
  for (const auto& e : r.entries)
    os << e.name << ',' << e.lhs << ',' << e.rhs << ',' << to_string(e.relation) << ',' << e.margin << ','
       << (e.pass ? "true" : "false") << '\n';
  os.precision(old);
}

}  // namespace zrp
