#include "app.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <ostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "commands.hpp"
#include "config.hpp"
#include "hybridmeas/errors.hpp"
#include "hybridmeas/fock.hpp"

#ifndef HYBRIDMEAS_VERSION
#define HYBRIDMEAS_VERSION "unknown"
#endif

namespace hybridmeas::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Raised when an output file cannot be written.
class WriteError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "write"; }
};

json tolerances(const RunConfig* c) {
  const FamilyOptions family;
  const ReconstructOptions fock;
  const StepControl ode;
  const ThresholdOptions threshold;
  const PhiOptions phi = c ? c->phi : PhiOptions{};
  return {
      {"fisher_dtheta", family.dtheta},
      {"fisher_drift_tol", family.drift_tol},
      {"fisher_floor", family.floor},
      {"wigner_norm_tol", WignerGrid::kNormTol},
      {"fock_tail_tol", fock.tail_tol},
      {"fock_trace_tol", fock.trace_tol},
      {"rk4_rel_tol", ode.rel_tol},
      {"threshold_rel_tol", threshold.rel_tol},
      {"threshold_horizon", threshold.horizon},
      {"phi_tail_tol", phi.tail_tol},
      {"phi_limit", phi.phi_limit},
      {"cfi_qfi_slack", 1e-3},
      {"csv_significant_digits", 12},
  };
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

std::optional<std::string> env_output_dir() {
  if (const char* v = std::getenv("HYBRIDMEAS_OUTPUT_DIR")) return std::string(v);
  return std::nullopt;
}

json error_json(const std::string& kind, const std::string& stage, const std::string& message,
                const std::vector<std::string>& problems) {
  return {{"kind", kind}, {"stage", stage}, {"message", message}, {"problems", problems}};
}

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw WriteError("cannot open " + path.string() + " for writing");
  body(f);
  f.flush();
  if (!f) throw WriteError("failed writing " + path.string());
}

struct Flags {
  std::string config;
  ConfigValues v;
  std::string thresholds, t1_grid, t2_grid, curves, quantities, phis, mode, format;
};

void add_options(CLI::App& app, Flags& f) {
  auto num = [&](const char* name, auto& target, const char* help) {
    using T = typename std::decay_t<decltype(target)>::value_type;
    app.add_option_function<T>(name, [&target](const T& x) { target = x; }, help);
  };
  app.add_option("--config", f.config, "JSON config file; flags override its values");
  app.add_option("-o,--output-dir", f.v.output_dir,
                 "Output directory (default: $HYBRIDMEAS_OUTPUT_DIR, then .)");
  app.add_option("--format", f.format, "Dataset format: csv or json");
  num("--jobs", f.v.jobs, "Worker threads for sweeps");
  num("--kappa", f.v.kappa, "Measurement rate kappa");
  num("--kappa-over-gamma", f.v.kappa_over_gamma, "kappa as a multiple of gamma");
  num("--gamma", f.v.gamma, "Optical-pumping rate gamma");
  num("--n-atoms", f.v.n_atoms, "Number of atoms N");
  num("--eta", f.v.eta, "Detection efficiency in [0, 1]");
  num("--t1", f.v.t1, "Phase-I duration");
  num("--t2", f.v.t2, "Phase-II pre-click duration");
  num("--threshold", f.v.p_threshold, "Click-probability threshold in [0, 1)");
  app.add_option("--thresholds", f.thresholds, "fig3 thresholds, e.g. 0,0.1,0.2");
  app.add_option("--t1-grid", f.t1_grid, "t1 values: a,b,c or start:stop:step");
  app.add_option("--t2-grid", f.t2_grid, "sweep t2 values: a,b,c or start:stop:step");
  app.add_option("--curves", f.curves, "fig4 curves, e.g. 1:immediate,0.1:threshold");
  app.add_flag_function(
      "--with-qfi", [&f](std::int64_t) { f.v.with_qfi = true; }, "fig4: also compute the QFI");
  app.add_option("--mode", f.mode, "sweep post-selection: immediate or threshold");
  app.add_option("--quantities", f.quantities, "sweep quantities: gaussian,homodyne,phi,qfi");
  app.add_option("--phis", f.phis, "fig6 phi values");
  num("--phi-extent", f.v.phi_extent, "fig6 half-width of the x and p axes");
  num("--phi-min", f.v.phi_min, "phi-basis grid: smallest |phi|");
  num("--phi-max", f.v.phi_max, "phi-basis grid: initial largest |phi|");
  num("--phi-per-sign", f.v.phi_per_sign, "phi-basis grid: nodes per sign");
  num("--grid-points", f.v.grid_points, "Phase-space points per axis for computations");
  num("--dump-points", f.v.dump_points, "Phase-space points per axis for Wigner dumps");
}

// String flags that need parsing into typed values.
void finish_flags(Flags& f) {
  std::vector<std::string> bad;
  auto guarded = [&](const std::function<void()>& body) {
    try {
      body();
    } catch (const ValidationError& e) {
      bad.insert(bad.end(), e.problems().begin(), e.problems().end());
    }
  };
  auto list = [&](const std::string& s) { return parse_number_list(s); };
  if (!f.thresholds.empty()) guarded([&] { f.v.thresholds = list(f.thresholds); });
  if (!f.t1_grid.empty()) guarded([&] { f.v.t1_grid = list(f.t1_grid); });
  if (!f.t2_grid.empty()) guarded([&] { f.v.t2_grid = list(f.t2_grid); });
  if (!f.phis.empty()) guarded([&] { f.v.phis = list(f.phis); });
  if (!f.curves.empty()) guarded([&] { f.v.curves = parse_curves(f.curves); });
  if (!f.mode.empty()) guarded([&] { f.v.mode = parse_mode(f.mode); });
  if (!f.format.empty()) guarded([&] { f.v.format = parse_format(f.format); });
  if (!f.quantities.empty()) {
    std::vector<std::string> q;
    std::stringstream ss(f.quantities);
    for (std::string item; std::getline(ss, item, ',');) q.push_back(item);
    f.v.quantities = q;
  }
  if (!bad.empty()) throw ValidationError(std::move(bad));
}

}  // namespace

int run_app(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const auto start = std::chrono::steady_clock::now();
  json manifest = {
      {"schema_version", kSchemaVersion},
      {"tool", "hybridmeas"},
      {"version", HYBRIDMEAS_VERSION},
      {"build", {{"compiler", __VERSION__}, {"cplusplus", __cplusplus}}},
      {"started_utc", utc_now()},
      {"argv", args},
      {"command", nullptr},
      {"config", nullptr},
      {"tolerances", tolerances(nullptr)},
      {"outputs", json::array()},
      {"status", "error"},
      {"failure_stage", nullptr},
      {"error", nullptr},
  };
  std::string stage = "parse";
  std::optional<std::string> manifest_dir;
  int code = kOk;

  CLI::App app{"Hybrid homodyne / photon-counting measurement protocol simulator"};
  app.name("hybridmeas");
  app.fallthrough();
  app.require_subcommand(1);
  Flags flags;
  add_options(app, flags);
  const std::vector<std::pair<Command, const char*>> commands = {
      {Command::State, "Moments, Wigner grid and Fock dump for one parameter point"},
      {Command::Fig2, "Wigner grids at each protocol stage"},
      {Command::Fig3, "Total time T(t1) per click-probability threshold"},
      {Command::Fig4, "Homodyne CFI with and without photon detection"},
      {Command::Fig5, "Homodyne CFI, phi-basis CFI and QFI of the post-click state"},
      {Command::Fig6, "Wigner functions of phi-basis states"},
      {Command::Sweep, "Fisher quantities over a (t1, t2) grid"},
      {Command::Selftest, "Quick invariant checks"},
  };
  for (const auto& [c, help] : commands) app.add_subcommand(to_string(c), help);

  auto fail = [&](const std::string& kind, const std::string& message,
                  const std::vector<std::string>& problems, int exit_code) {
    const json e = error_json(kind, stage, message, problems);
    manifest["failure_stage"] = stage;
    manifest["error"] = e;
    err << json{{"error", e}}.dump() << '\n';
    code = exit_code;
  };

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    const Command command = parse_command(app.get_subcommands().front()->get_name());
    manifest["command"] = to_string(command);
    finish_flags(flags);

    ConfigValues values;
    if (!flags.config.empty()) values = load_config_file(flags.config);
    values.merge(flags.v);
    manifest_dir = values.output_dir ? values.output_dir : env_output_dir();

    stage = "validate";
    const RunConfig config = resolve(command, values, env_output_dir());
    manifest["config"] = to_json(config);
    manifest["tolerances"] = tolerances(&config);
    manifest_dir = config.output_dir;

    stage = "prepare_output";
    std::error_code ec;
    fs::create_directories(config.output_dir, ec);
    if (ec || !fs::is_directory(config.output_dir)) {
      throw WriteError("cannot create output directory " + config.output_dir);
    }

    stage = "compute";
    const CommandOutput result = run_command(config);

    stage = "write";
    const fs::path dir(config.output_dir);
    const std::string ext = config.format == Format::Csv ? ".csv" : ".json";
    for (const Table& t : result.tables) {
      const fs::path path = dir / (t.name + ext);
      write_file(path, [&](std::ostream& os) {
        if (config.format == Format::Csv) {
          write_csv(os, t);
        } else {
          write_json(os, t);
        }
      });
      manifest["outputs"].push_back({{"dataset", t.name},
                                     {"file", path.filename().string()},
                                     {"format", to_string(config.format)},
                                     {"rows", t.rows.size()}});
      out << "wrote " << path.string() << '\n';
    }
    for (const RawJson& d : result.documents) {
      const fs::path path = dir / (d.name + ".json");
      write_file(path, [&](std::ostream& os) { os << d.text; });
      manifest["outputs"].push_back(
          {{"dataset", d.name}, {"file", path.filename().string()}, {"format", "json"}, {"rows", nullptr}});
      out << "wrote " << path.string() << '\n';
    }
    if (command == Command::Selftest) {
      for (const auto& row : result.tables.front().rows) {
        out << (std::get<double>(row[1]) != 0.0 ? "PASS " : "FAIL ") << std::get<std::string>(row[0])
            << ' ' << format_number(std::get<double>(row[2])) << " (tolerance "
            << format_number(std::get<double>(row[3])) << ")\n";
      }
    }
    if (result.passed) {
      manifest["status"] = "ok";
    } else {
      stage = "selftest";
      fail("selftest", "one or more selftest checks failed", {}, kSelftestFailed);
    }
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    fail("usage", e.what(), {}, kUsage);
  } catch (const ValidationError& e) {
    fail(e.kind(), e.what(), e.problems(), kUsage);
  } catch (const WriteError& e) {
    fail(e.kind(), e.what(), {}, kWrite);
  } catch (const Error& e) {
    fail(e.kind(), e.what(), {}, kComputation);
  } catch (const std::exception& e) {
    fail("internal", e.what(), {}, kComputation);
  }

  manifest["wall_time_s"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const std::string name =
      (manifest["command"].is_string() ? manifest["command"].get<std::string>() : std::string("run")) +
      ".manifest.json";
  // Failures before the config resolves fall back to the flag, then the
  // environment, then the working directory.
  if (!manifest_dir) manifest_dir = flags.v.output_dir ? flags.v.output_dir : env_output_dir();
  const fs::path dir = manifest_dir.value_or(".");
  try {
    std::error_code ec;
    fs::create_directories(dir, ec);
    write_file(dir / name, [&](std::ostream& os) { os << manifest.dump(2) << '\n'; });
  } catch (const WriteError& e) {
    err << json{{"error", error_json("write", "manifest", e.what(), {})}}.dump() << '\n';
    if (code == kOk) code = kWrite;
  }
  return code;
}

}  // namespace hybridmeas::cli
