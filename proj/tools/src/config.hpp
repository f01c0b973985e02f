#pragma once

// Run configuration: JSON file values, then command-line overrides, then
// per-command defaults. Unknown keys are rejected.

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hybridmeas/dynamics.hpp"
#include "hybridmeas/metrology.hpp"

namespace hybridmeas::cli {

inline constexpr const char* kSchemaVersion = "1.0";

enum class Command { State, Fig2, Fig3, Fig4, Fig5, Fig6, Sweep, Selftest };
enum class Format { Csv, Json };

std::string to_string(Command c);
Command parse_command(const std::string& s);
std::string to_string(Format f);
Format parse_format(const std::string& s);
PostSelection parse_mode(const std::string& s);

struct Fig4Curve {
  double kappa_over_gamma = 1.0;
  PostSelection mode = PostSelection::Immediate;
};

/// Everything a command may read. Unset optionals take the command default.
struct ConfigValues {
  std::optional<double> kappa;
  std::optional<double> kappa_over_gamma;
  std::optional<double> gamma;
  std::optional<int> n_atoms;
  std::optional<double> eta;
  std::optional<double> t1;
  std::optional<double> t2;
  std::optional<double> p_threshold;
  std::optional<std::vector<double>> thresholds;
  std::optional<std::vector<double>> t1_grid;
  std::optional<std::vector<double>> t2_grid;
  std::optional<std::vector<Fig4Curve>> curves;
  std::optional<bool> with_qfi;
  std::optional<PostSelection> mode;
  std::optional<std::vector<std::string>> quantities;
  std::optional<std::vector<double>> phis;
  std::optional<double> phi_extent;
  std::optional<double> phi_min;
  std::optional<double> phi_max;
  std::optional<int> phi_per_sign;
  std::optional<int> grid_points;
  std::optional<int> dump_points;
  std::optional<std::string> output_dir;
  std::optional<Format> format;
  std::optional<int> jobs;

  /// Values set in `over` replace ours.
  void merge(const ConfigValues& over);
};

/// Keys accepted in a config file (same names as the fields above).
const std::vector<std::string>& config_keys();

/// Parses a config object. Throws ValidationError listing every unknown key
/// and every value of the wrong type.
ConfigValues parse_config(const nlohmann::json& j);
ConfigValues load_config_file(const std::string& path);

/// "0,0.1,0.2" or "start:stop:step" (stop included within step/1e6).
std::vector<double> parse_number_list(const std::string& s);
/// "1:immediate,0.1:threshold".
std::vector<Fig4Curve> parse_curves(const std::string& s);

/// Fully resolved configuration for one command.
struct RunConfig {
  Command command = Command::State;
  ProtocolParams params;
  std::vector<double> thresholds;
  std::vector<double> t1_grid;
  std::vector<double> t2_grid;
  std::vector<Fig4Curve> curves;
  bool with_qfi = false;
  PostSelection mode = PostSelection::Immediate;
  std::vector<std::string> quantities;
  std::vector<double> phis;
  double phi_extent = 4.0;
  PhiOptions phi;
  GridOptions grid;
  int dump_points = 201;
  std::string output_dir = ".";
  Format format = Format::Csv;
  int jobs = 1;

  /// Throws ValidationError with every problem found; physical parameters
  /// go through ProtocolParams::validate.
  void validate() const;
};

/// Applies command defaults; `env_output_dir` is the environment fallback
/// for the output directory.
RunConfig resolve(Command command, const ConfigValues& v,
                  const std::optional<std::string>& env_output_dir);

nlohmann::json to_json(const RunConfig& c);

}  // namespace hybridmeas::cli
