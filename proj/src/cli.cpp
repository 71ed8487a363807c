#include "zrp/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "zrp/audit.hpp"
#include "zrp/brw.hpp"
#include "zrp/fluid.hpp"
#include "zrp/harness.hpp"
#include "zrp/pmf_io.hpp"

namespace zrp::cli {
namespace {

const std::set<std::string> kCommands{"simulate", "fluid", "spectra", "audit", "report"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string canonical_key(std::string key) {
  std::replace(key.begin(), key.end(), '_', '-');
  if (key == "seed") return "seeds";
  return key;
}

// Keys given on the command line, so that config-file values for them can be
// dropped (flags win).
std::set<std::string> given_keys(const std::vector<std::string>& args) {
  std::set<std::string> keys;
  for (const auto& a : args) {
    if (a.rfind("--", 0) != 0) continue;
    keys.insert(canonical_key(a.substr(2, a.find('=') == std::string::npos ? std::string::npos : a.find('=') - 2)));
  }
  return keys;
}

std::ofstream open_output(const std::filesystem::path& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  std::ofstream os(dir / name);
  if (!os) throw ResourceError("cannot write " + (dir / name).string());
  return os;
}

nlohmann::json provenance(const RunConfig& c) {
  return {{"tool", "zrp"}, {"version", version()}, {"config", c.to_json()}, {"seeds", c.seeds}};
}

void provenance_line(std::ostream& os, const RunConfig& c) { os << "# provenance=" << provenance(c).dump() << '\n'; }

void write_audits(const RunConfig& c, const AuditReport& audits, const std::string& stem) {
  if (c.format == "json") {
    auto os = open_output(c.out, stem + ".json");
    nlohmann::json j{{"provenance", provenance(c)}, {"audits", to_json(audits)}, {"all_pass", audits.all_pass()}};
    os << j.dump(2) << '\n';
  } else {
    auto os = open_output(c.out, stem + ".csv");
    provenance_line(os, c);
    write_csv(os, audits);
  }
}

int audit_exit(const AuditReport& audits) {
  if (const AuditEntry* f = audits.first_failure()) {
    std::cerr << "audit failed: " << f->name << " (lhs=" << f->lhs << ", rhs=" << f->rhs << ", margin=" << f->margin
              << ")\n";
    return static_cast<int>(ExitCode::audit_failure);
  }
  return static_cast<int>(ExitCode::ok);
}

std::vector<double> schedule_or(const RunConfig& c, std::size_t count) {
  return c.snapshots.empty() ? linspace(0.0, c.time, count) : c.snapshots;
}

int run_simulate(const RunConfig& c) {
  if (c.boxes.size() != 1) throw UsageError("simulate takes a single --boxes value");
  const auto times = schedule_or(c, 11);
  SimConfig sc;
  sc.N = c.boxes.front();
  sc.R = c.balls;
  sc.T = c.time;
  sc.snapshots = times;
  sc.mode = c.mode;
  const ReplicateResult res = replicate(sc, c.seeds);
  for (const auto& rec : res.records) {
    const std::string stem = "trajectory_seed" + std::to_string(rec.seed);
    if (c.format == "json") {
      auto os = open_output(c.out, stem + ".json");
      nlohmann::json j = to_json(rec);
      j["provenance"] = provenance(c);
      os << j.dump(2) << '\n';
    } else {
      auto os = open_output(c.out, stem + ".csv");
      provenance_line(os, c);
      write_trajectory_csv(os, rec);
    }
    const Pmf& last = rec.snapshots.empty() ? Pmf::dirac(c.balls) : rec.snapshots.back().empirical;
    std::cout << "seed " << rec.seed << ": " << rec.events << " events, D_KL(X(T) || G^R) = "
              << kl_divergence(last, gibbs_geometric(static_cast<double>(c.balls), last.end())).value
              << (rec.approximate() ? " [approximate clock]" : "") << '\n';
  }
  return 0;
}

FluidTrajectory integrate_from_delta(const RunConfig& c, const std::vector<double>& times) {
  FluidOptions opts;
  opts.step = c.step;
  opts.initial_dimension = c.truncation;
  return integrate(Pmf::dirac(c.balls), c.time, times, opts);
}

int run_fluid(const RunConfig& c) {
  const FluidTrajectory traj = integrate_from_delta(c, schedule_or(c, 101));
  if (c.format == "json") {
    auto os = open_output(c.out, "fluid.json");
    nlohmann::json j = to_json(traj);
    j["provenance"] = provenance(c);
    os << j.dump(2) << '\n';
  } else {
    auto os = open_output(c.out, "fluid.csv");
    provenance_line(os, c);
    write_fluid_csv(os, traj);
    auto ds = open_output(c.out, "diagnostics.csv");
    provenance_line(ds, c);
    write_diagnostics_csv(ds, traj);
  }
  const auto& last = traj.snapshots.back();
  std::cout << "t=" << last.state.time << " D_KL=" << last.diagnostics.kl_gibbs << " S=" << last.diagnostics.entropy
            << " leak=" << last.state.leak << '\n';
  const AuditReport audits = trajectory_audit(traj);
  return audit_exit(audits);
}

int run_spectra(const RunConfig& c) {
  const BrwSpec spec{c.n, c.bias};
  spec.validate();
  const SpectralDecomposition d = eigensystem(spec);
  const double residual = eigen_residual(d, q_matrix(spec));
  const LogSobolev ls = log_sobolev(spec);
  const auto times = schedule_or(c, 51);

  AuditReport audits;
  audits.add(AuditEntry::make("spectra.eigen_residual", residual, Relation::less_equal, 1e-10));
  const double gap_floor = c.bias > 0.0 ? c.bias * c.bias / 4.0 : 4.0 / static_cast<double>(c.n * c.n);
  audits.add(AuditEntry::make("spectra.gap_bound", d.spectral_gap(), Relation::greater_equal, gap_floor));

  nlohmann::json j = to_json(d);
  j["provenance"] = provenance(c);
  j["eigen_residual"] = residual;
  j["log_sobolev"] = {{"lower_bound", ls.lower_bound},
                      {"numeric_estimate", ls.numeric_estimate ? nlohmann::json(*ls.numeric_estimate)
                                                               : nlohmann::json(nullptr)}};
  j["audits"] = to_json(audits);
  {
    auto os = open_output(c.out, "spectral.json");
    os << j.dump(2) << '\n';
  }
  {
    auto os = open_output(c.out, "bounds.csv");
    os.precision(17);
    provenance_line(os, c);
    os << "t,pointwise_max,tv_bound,first_moment_bound,tv_actual\n";
    const Pmf pi = stationary(spec);
    for (double t : times) {
      const ConvergenceBounds b = convergence_bounds(spec, 0, t);
      const double pw = *std::max_element(b.pointwise.begin(), b.pointwise.end());
      const Pmf law = evolve(Pmf::dirac(0), t, d, {EvolveMethod::master_equation});
      os << t << ',' << pw << ',' << b.tv << ',' << json_number(b.first_moment).dump() << ','
         << distance(law, pi, Norm::tv).value << '\n';
    }
  }
  std::cout << "BRW[" << c.n << ", " << c.bias << "]: gap=" << d.spectral_gap() << " residual=" << residual
            << " log-Sobolev >= " << ls.lower_bound << '\n';
  return audit_exit(audits);
}

int run_audit(const RunConfig& c) {
  const double R = static_cast<double>(c.balls);
  if (c.balls == 0) throw UsageError("audit needs --balls >= 1");
  const EnvelopeConfig env = EnvelopeConfig::defaults(R);
  const FluidTrajectory traj = integrate_from_delta(c, schedule_or(c, 201));
  AuditReport audits = trajectory_audit(traj);
  audits.append(transient_decay_audit(traj, R, std::min(env.s_ref, c.time)).audits);
  if (traj.snapshots.back().state.time > env.s_ref) audits.append(envelope_audit(traj, env));
  const auto& last = traj.snapshots.back();
  if (auto recipe = daisy_recipe(last.diagnostics.kl_gibbs, R)) {
    audits.append(daisy_chain_audit(last.state.pmf(), recipe->n, R));
  } else {
    std::cout << "D_KL at the horizon is above the level where the daisy-chain recipe applies; skipped\n";
  }
  write_audits(c, audits, "audits");
  std::cout << audits.entries.size() << " audit entries, " << audits.failures() << " failing\n";
  return audit_exit(audits);
}

int run_report(const RunConfig& c) {
  ReportConfig rc;
  rc.R = c.balls;
  rc.N_list = c.boxes;
  rc.T = c.time;
  rc.seeds = c.seeds;
  rc.mode = c.mode;
  rc.step = c.step;
  rc.snapshots = c.snapshots;
  rc.fault_injection = c.fault_injection;
  FullReport rep = full_report(rc);
  rep.json["provenance"]["cli"] = c.to_json();
  write_report(rep, c.out);
  std::cout << "report written to " << c.out.string() << ": " << rep.audits.entries.size() << " entries, "
            << rep.audits.failures() << " failing\n";
  return audit_exit(rep.audits);
}

}  // namespace

nlohmann::json RunConfig::to_json() const {
  return {{"command", command}, {"boxes", boxes},         {"balls", balls},     {"time", time},
          {"step", step},       {"truncation", truncation}, {"seeds", seeds},   {"snapshots", snapshots},
          {"mode", to_string(mode)}, {"out", out.string()}, {"format", format}, {"n", n},
          {"bias", bias},       {"fault_injection", fault_injection}};
}

std::vector<double> parse_schedule(const std::string& text) {
  std::vector<double> out;
  try {
    if (text.rfind("linspace:", 0) == 0) {
      std::stringstream ss(text.substr(9));
      std::string a, b, n;
      if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') || !std::getline(ss, n) )
        throw UsageError("snapshot schedule must look like linspace:a:b:n");
      const long count = std::stol(n);
      if (count < 1) throw UsageError("linspace needs n >= 1");
      out = linspace(std::stod(a), std::stod(b), static_cast<std::size_t>(count));
    } else {
      std::stringstream ss(text);
      std::string item;
      while (std::getline(ss, item, ',')) out.push_back(std::stod(trim(item)));
    }
  } catch (const std::logic_error&) {
    throw UsageError("cannot parse snapshot schedule '" + text + "'");
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!std::isfinite(out[i]) || out[i] < 0.0) throw UsageError("snapshot times must be finite and >= 0");
    if (i > 0 && !(out[i] > out[i - 1])) throw UsageError("snapshot times must be strictly increasing");
  }
  return out;
}

std::vector<std::string> config_file_arguments(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot read config file " + path.string());
  std::stringstream buf;
  buf << is.rdbuf();
  const std::string text = buf.str();
  std::vector<std::pair<std::string, std::string>> kv;
  if (trim(text).rfind('{', 0) == 0) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw UsageError("config file is not valid JSON: " + std::string(e.what()));
    }
    if (!j.is_object()) throw UsageError("JSON config must be an object");
    for (const auto& [k, v] : j.items()) {
      std::string value;
      if (v.is_array()) {
        for (const auto& el : v) value += (value.empty() ? "" : ",") + (el.is_string() ? el.get<std::string>() : el.dump());
      } else if (v.is_string()) {
        value = v.get<std::string>();
      } else {
        value = v.dump();
      }
      kv.emplace_back(k, value);
    }
  } else {
    std::stringstream ss(text);
    std::string line;
    int lineno = 0;
    while (std::getline(ss, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos)
        throw UsageError(path.string() + ":" + std::to_string(lineno) + ": expected key=value");
      kv.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
  }
  std::vector<std::string> args;
  for (auto& [raw_key, v] : kv) {
    const std::string k = canonical_key(raw_key);
    if (k == "command" || k == "config") throw UsageError("config key '" + raw_key + "' is not allowed");
    if (k == "fault-injection") {
      if (v == "true") args.push_back("--" + k);
      else if (v != "false") throw UsageError("fault-injection must be true or false");
      continue;
    }
    args.push_back("--" + k);
    args.push_back(v);
  }
  return args;
}

RunConfig parse(const std::vector<std::string>& raw) {
  // --config is handled here so that the file's keys can be spliced in ahead
  // of the command-line flags.
  std::vector<std::string> args;
  std::vector<std::string> from_file;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == "--config") {
      if (i + 1 >= raw.size()) throw UsageError("--config needs a path");
      from_file = config_file_arguments(raw[++i]);
    } else if (raw[i].rfind("--config=", 0) == 0) {
      from_file = config_file_arguments(raw[i].substr(9));
    } else {
      args.push_back(raw[i]);
    }
  }
  if (!args.empty() && (args.front() == "--help" || args.front() == "-h")) throw CLI::CallForHelp();
  if (args.empty() || !kCommands.count(args.front()))
    throw UsageError("expected a command: simulate, fluid, spectra, audit or report");

  const std::set<std::string> given = given_keys(args);
  std::vector<std::string> merged{args.front()};
  for (std::size_t i = 0; i < from_file.size(); ++i) {
    const std::string key = canonical_key(from_file[i].substr(2));
    const bool has_value = !(key == "fault-injection");
    if (!given.count(key)) {
      merged.push_back(from_file[i]);
      if (has_value) merged.push_back(from_file[i + 1]);
    }
    if (has_value) ++i;
  }
  merged.insert(merged.end(), args.begin() + 1, args.end());

  RunConfig c;
  c.command = args.front();
  std::string mode = "exponential", snapshots;
  CLI::App app{"zrp " + c.command};
  app.add_option("--boxes", c.boxes, "number of boxes N (comma list for report)")
      ->delimiter(',')
      ->check(CLI::PositiveNumber);
  app.add_option("--balls", c.balls, "balls per box R");
  app.add_option("--time", c.time, "time horizon T")->check(CLI::NonNegativeNumber);
  app.add_option("--step", c.step, "RK4 step")->check(CLI::PositiveNumber);
  app.add_option("--truncation", c.truncation, "initial fluid truncation dimension (0 = automatic)");
  app.add_option("--seed,--seeds", c.seeds, "seed or comma list of seeds")->delimiter(',');
  app.add_option("--snapshots", snapshots, "comma list of times or linspace:a:b:n");
  app.add_option("--mode", mode, "exponential or mean-holding")
      ->check(CLI::IsMember({"exponential", "mean-holding", "mean_holding"}));
  app.add_option("--out", c.out, "output directory");
  app.add_option("--format", c.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--n", c.n, "BRW state count")->check(CLI::Range(std::size_t{2}, std::size_t{1} << 14));
  app.add_option("--bias", c.bias, "BRW bias a in [0, 1)")->check(CLI::Range(0.0, 0.999999999));
  app.add_flag("--fault-injection", c.fault_injection, "report: flip the fluid drift sign for the entropy audit");

  std::vector<std::string> reversed(merged.rbegin(), merged.rend() - 1);
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    throw;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }
  if (c.seeds.empty()) throw UsageError("need at least one seed");
  if (std::set<std::uint64_t>(c.seeds.begin(), c.seeds.end()).size() != c.seeds.size())
    throw UsageError("seeds must be distinct");
  if (!std::isfinite(c.time)) throw UsageError("--time must be finite");
  c.mode = parse_clock_mode(mode);
  if (!snapshots.empty()) {
    c.snapshots = parse_schedule(snapshots);
    if (!c.snapshots.empty() && c.snapshots.back() > c.time) throw UsageError("snapshot times must not exceed --time");
  }
  return c;
}

int execute(const RunConfig& c) {
  if (c.command == "simulate") return run_simulate(c);
  if (c.command == "fluid") return run_fluid(c);
  if (c.command == "spectra") return run_spectra(c);
  if (c.command == "audit") return run_audit(c);
  if (c.command == "report") return run_report(c);
  throw UsageError("unknown command '" + c.command + "'");
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  RunConfig config;
  try {
    config = parse(args);
  } catch (const CLI::CallForHelp&) {
    std::cout << "usage: zrp <simulate|fluid|spectra|audit|report> [--boxes N[,N...]] [--balls R] [--time T]\n"
                 "           [--step h] [--truncation d] [--seed s | --seeds s1,s2,...]\n"
                 "           [--snapshots t1,t2,... | linspace:a:b:n] [--mode exponential|mean-holding]\n"
                 "           [--out DIR] [--format csv|json] [--n states] [--bias a] [--config FILE]\n";
    return static_cast<int>(ExitCode::ok);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::usage);
  } catch (const InvalidParameter& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::usage);
  }
  try {
    return execute(config);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::usage);
  } catch (const ResourceError& e) {
    std::cerr << "resource error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::resource);
  } catch (const InvalidParameter& e) {
    std::cerr << "invalid parameter: " << e.what() << '\n';
    return static_cast<int>(ExitCode::usage);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::audit_failure);
  } catch (const std::bad_alloc&) {
    std::cerr << "resource error: out of memory\n";
    return static_cast<int>(ExitCode::resource);
  }
}

}  // namespace zrp::cli
