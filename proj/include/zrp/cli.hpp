#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "zrp/error.hpp"
#include "zrp/sim.hpp"

namespace zrp::cli {

/// Bad command line or config file; maps to exit code 2.
class UsageError : public Error {
 public:
  using Error::Error;
};

enum class ExitCode : int { ok = 0, audit_failure = 1, usage = 2, resource = 3 };

struct RunConfig {
  std::string command;  // simulate, fluid, spectra, audit, report
  std::vector<std::uint64_t> boxes{1000};
  std::uint64_t balls = 2;
  double time = 5.0;
  double step = 0.01;
  std::size_t truncation = 0;  // 0 = automatic
  std::vector<std::uint64_t> seeds{1};
  std::vector<double> snapshots;  // empty = command default
  ClockMode mode = ClockMode::exponential;
  std::filesystem::path out = "out";
  std::string format = "csv";
  std::size_t n = 32;
  double bias = 0.25;
  bool fault_injection = false;

  nlohmann::json to_json() const;
};

/// "linspace:a:b:n" or a comma-separated list of increasing times.
std::vector<double> parse_schedule(const std::string& text);

/// Reads `key=value` lines (`#` starts a comment) or a JSON object and turns
/// them into `--key value` arguments.
std::vector<std::string> config_file_arguments(const std::filesystem::path& path);

/// args excludes the program name. Flags override the config file given by
/// --config. Throws UsageError.
RunConfig parse(const std::vector<std::string>& args);

/// Runs the command and writes its artifacts. Returns the exit code.
int execute(const RunConfig& config);

/// parse + execute with error reporting on stderr.
int run(int argc, const char* const* argv);

}  // namespace zrp::cli
