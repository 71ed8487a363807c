#include "zrp/pmf_io.hpp"

#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "zrp/error.hpp"

namespace zrp {

void write_pmf_csv(std::ostream& os, const Pmf& p) {
  const auto old = os.precision(17);
  os << "# offset=" << p.offset() << '\n' << "# tail=" << p.tail_mass() << '\n' << "k,weight\n";
  for (std::size_t i = 0; i < p.size(); ++i) os << p.offset() + i << ',' << p.weights()[i] << '\n';
  os.precision(old);
}

Pmf read_pmf_csv(std::istream& is) {
  std::size_t offset = 0;
  double tail = 0.0;
  bool have_offset = false;
  std::vector<double> weights;
  std::size_t expected_k = 0;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line.rfind("# offset=", 0) == 0) {
      offset = std::stoul(line.substr(9));
      expected_k = offset;
      have_offset = true;
      continue;
    }
    if (line.rfind("# tail=", 0) == 0) {
      tail = std::stod(line.substr(7));
      continue;
    }
    if (line[0] == '#' || line == "k,weight") continue;
    std::istringstream row(line);
    std::size_t k = 0;
    char comma = 0;
    double w = 0.0;
    if (!(row >> k >> comma >> w) || comma != ',') throw InvalidParameter("malformed Pmf CSV row: " + line);
    if (!have_offset) {
      offset = k;
      expected_k = k;
      have_offset = true;
    }
    if (k != expected_k) throw InvalidParameter("Pmf CSV rows must be consecutive from the offset");
    weights.push_back(w);
    ++expected_k;
  }
  return Pmf(offset, std::move(weights), tail);
}

nlohmann::json to_json(const Pmf& p) {
  return {{"offset", p.offset()},
          {"weights", std::vector<double>(p.weights().begin(), p.weights().end())},
          {"tail", p.tail_mass()}};
}

Pmf pmf_from_json(const nlohmann::json& j) {
  try {
    return Pmf(j.at("offset").get<std::size_t>(), j.at("weights").get<std::vector<double>>(),
               j.value("tail", 0.0));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidParameter(std::string("malformed Pmf JSON: ") + e.what());
  }
}

}  // namespace zrp
