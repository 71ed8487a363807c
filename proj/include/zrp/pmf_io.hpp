#pragma once

#include <iosfwd>

#include <json.hpp>

#include "zrp/pmf.hpp"

namespace zrp {

/// `# offset=<k0>` and `# tail=<mass>` comment lines, then `k,weight` rows.
void write_pmf_csv(std::ostream& os, const Pmf& p);
Pmf read_pmf_csv(std::istream& is);

/// {"offset": k0, "weights": [...], "tail": mass}
nlohmann::json to_json(const Pmf& p);
Pmf pmf_from_json(const nlohmann::json& j);

}  // namespace zrp
