#include "config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hybridmeas/errors.hpp"

namespace hybridmeas::cli {

using nlohmann::json;

namespace {

const std::vector<std::string> kQuantities = {"gaussian", "homodyne", "phi", "qfi"};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

double parse_double(const std::string& s) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ValidationError({"not a number: '" + s + "'"});
  }
  if (used != s.size()) throw ValidationError({"not a number: '" + s + "'"});
  return v;
}

// Collects type problems instead of stopping at the first.
class Reader {
 public:
  explicit Reader(const json& j) : j_(j) {}

  template <class T>
  void number(const char* key, std::optional<T>& out) {
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    if constexpr (std::is_same_v<T, int>) {
      if (!v.is_number_integer()) return bad(key, "an integer");
    } else {
      if (!v.is_number()) return bad(key, "a number");
    }
    out = v.get<T>();
  }

  void boolean(const char* key, std::optional<bool>& out) {
    if (!j_.contains(key)) return;
    if (!j_.at(key).is_boolean()) return bad(key, "a boolean");
    out = j_.at(key).get<bool>();
  }

  void string(const char* key, std::optional<std::string>& out) {
    if (!j_.contains(key)) return;
    if (!j_.at(key).is_string()) return bad(key, "a string");
    out = j_.at(key).get<std::string>();
  }

  // Array of numbers or a list string.
  void numbers(const char* key, std::optional<std::vector<double>>& out) {
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    try {
      if (v.is_string()) {
        out = parse_number_list(v.get<std::string>());
        return;
      }
      if (v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_number(); })) {
        out = v.get<std::vector<double>>();
        return;
      }
    } catch (const ValidationError& e) {
      for (const auto& p : e.problems()) problems.push_back(std::string(key) + ": " + p);
      return;
    }
    bad(key, "an array of numbers or a list string");
  }

  void strings(const char* key, std::optional<std::vector<std::string>>& out) {
    if (!j_.contains(key)) return;
    const json& v = j_.at(key);
    if (v.is_array() && std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_string(); })) {
      out = v.get<std::vector<std::string>>();
      return;
    }
    bad(key, "an array of strings");
  }

  void bad(const char* key, const char* what) {
    problems.push_back(std::string(key) + " must be " + what);
  }

  std::vector<std::string> problems;

 private:
  const json& j_;
};

template <class T>
void take(std::optional<T>& mine, const std::optional<T>& theirs) {
  if (theirs) mine = theirs;
}

void check_grid(const std::vector<double>& g, const char* name, bool increasing,
                std::vector<std::string>& bad) {
  if (g.empty()) {
    bad.push_back(std::string(name) + " is empty");
    return;
  }
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(std::isfinite(g[i]) && g[i] >= 0.0)) {
      bad.push_back(std::string(name) + " values must be finite and >= 0");
      return;
    }
    if (increasing && i > 0 && !(g[i] > g[i - 1])) {
      bad.push_back(std::string(name) + " must be strictly increasing");
      return;
    }
  }
}

}  // namespace

std::string to_string(Command c) {
  switch (c) {
    case Command::State: return "state";
    case Command::Fig2: return "fig2";
    case Command::Fig3: return "fig3";
    case Command::Fig4: return "fig4";
    case Command::Fig5: return "fig5";
    case Command::Fig6: return "fig6";
    case Command::Sweep: return "sweep";
    case Command::Selftest: return "selftest";
  }
  return "?";
}

Command parse_command(const std::string& s) {
  for (Command c : {Command::State, Command::Fig2, Command::Fig3, Command::Fig4, Command::Fig5,
                    Command::Fig6, Command::Sweep, Command::Selftest}) {
    if (to_string(c) == s) return c;
  }
  throw ValidationError({"unknown command '" + s + "'"});
}

std::string to_string(Format f) { return f == Format::Csv ? "csv" : "json"; }

Format parse_format(const std::string& s) {
  if (s == "csv") return Format::Csv;
  if (s == "json") return Format::Json;
  throw ValidationError({"format must be csv or json, got '" + s + "'"});
}

PostSelection parse_mode(const std::string& s) {
  if (s == "immediate") return PostSelection::Immediate;
  if (s == "threshold") return PostSelection::Threshold;
  throw ValidationError({"mode must be immediate or threshold, got '" + s + "'"});
}

void ConfigValues::merge(const ConfigValues& o) {
  take(kappa, o.kappa);
  take(kappa_over_gamma, o.kappa_over_gamma);
  take(gamma, o.gamma);
  take(n_atoms, o.n_atoms);
  take(eta, o.eta);
  take(t1, o.t1);
  take(t2, o.t2);
  take(p_threshold, o.p_threshold);
  take(thresholds, o.thresholds);
  take(t1_grid, o.t1_grid);
  take(t2_grid, o.t2_grid);
  take(curves, o.curves);
  take(with_qfi, o.with_qfi);
  take(mode, o.mode);
  take(quantities, o.quantities);
  take(phis, o.phis);
  take(phi_extent, o.phi_extent);
  take(phi_min, o.phi_min);
  take(phi_max, o.phi_max);
  take(phi_per_sign, o.phi_per_sign);
  take(grid_points, o.grid_points);
  take(dump_points, o.dump_points);
  take(output_dir, o.output_dir);
  take(format, o.format);
  take(jobs, o.jobs);
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "kappa",      "kappa_over_gamma", "gamma",       "n_atoms",      "eta",
      "t1",         "t2",               "p_threshold", "thresholds",   "t1_grid",
      "t2_grid",    "curves",           "with_qfi",    "mode",         "quantities",
      "phis",       "phi_extent",       "phi_min",     "phi_max",      "phi_per_sign",
      "grid_points", "dump_points",     "output_dir",  "format",       "jobs"};
  return keys;
}

ConfigValues parse_config(const json& j) {
  if (!j.is_object()) throw ValidationError({"config must be a JSON object"});
  std::vector<std::string> unknown;
  for (const auto& [key, value] : j.items()) {
    const auto& keys = config_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
      unknown.push_back("unknown config key '" + key + "'");
    }
  }
  if (!unknown.empty()) throw ValidationError(std::move(unknown));

  ConfigValues v;
  Reader r(j);
  r.number("kappa", v.kappa);
  r.number("kappa_over_gamma", v.kappa_over_gamma);
  r.number("gamma", v.gamma);
  r.number("n_atoms", v.n_atoms);
  r.number("eta", v.eta);
  r.number("t1", v.t1);
  r.number("t2", v.t2);
  r.number("p_threshold", v.p_threshold);
  r.numbers("thresholds", v.thresholds);
  r.numbers("t1_grid", v.t1_grid);
  r.numbers("t2_grid", v.t2_grid);
  r.boolean("with_qfi", v.with_qfi);
  r.strings("quantities", v.quantities);
  r.numbers("phis", v.phis);
  r.number("phi_extent", v.phi_extent);
  r.number("phi_min", v.phi_min);
  r.number("phi_max", v.phi_max);
  r.number("phi_per_sign", v.phi_per_sign);
  r.number("grid_points", v.grid_points);
  r.number("dump_points", v.dump_points);
  r.string("output_dir", v.output_dir);
  r.number("jobs", v.jobs);

  std::optional<std::string> s;
  r.string("mode", s);
  if (s) {
    try {
      v.mode = parse_mode(*s);
    } catch (const ValidationError& e) {
      r.problems.push_back(e.problems().front());
    }
  }
  s.reset();
  r.string("format", s);
  if (s) {
    try {
      v.format = parse_format(*s);
    } catch (const ValidationError& e) {
      r.problems.push_back(e.problems().front());
    }
  }

  if (j.contains("curves")) {
    const json& c = j.at("curves");
    try {
      if (c.is_string()) {
        v.curves = parse_curves(c.get<std::string>());
      } else if (c.is_array()) {
        std::vector<Fig4Curve> curves;
        for (const json& e : c) {
          if (!e.is_object()) throw ValidationError({"curves entries must be objects"});
          for (const auto& [key, value] : e.items()) {
            if (key != "kappa_over_gamma" && key != "mode") {
              throw ValidationError({"unknown curves key '" + key + "'"});
            }
          }
          if (!e.contains("kappa_over_gamma") || !e.at("kappa_over_gamma").is_number() ||
              !e.contains("mode") || !e.at("mode").is_string()) {
            throw ValidationError({"curves entries need kappa_over_gamma (number) and mode"});
          }
          curves.push_back({e.at("kappa_over_gamma").get<double>(),
                            parse_mode(e.at("mode").get<std::string>())});
        }
        v.curves = curves;
      } else {
        r.bad("curves", "an array of objects or a curve string");
      }
    } catch (const ValidationError& e) {
      for (const auto& p : e.problems()) r.problems.push_back("curves: " + p);
    }
  }
  if (!r.problems.empty()) throw ValidationError(std::move(r.problems));
  return v;
}

ConfigValues load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError({"cannot read config file '" + path + "'"});
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ValidationError({"config file '" + path + "' is not valid JSON: " + e.what()});
  }
  return parse_config(j);
}

std::vector<double> parse_number_list(const std::string& s) {
  const std::vector<std::string> range = split(s, ':');
  if (range.size() == 3) {
    const double a = parse_double(range[0]);
    const double b = parse_double(range[1]);
    const double h = parse_double(range[2]);
    if (!(h > 0.0) || !(b >= a)) {
      throw ValidationError({"range '" + s + "' needs step > 0 and stop >= start"});
    }
    const long n = std::lround(std::floor((b - a) / h + 1e-6));
    if (n > 1000000) throw ValidationError({"range '" + s + "' has too many points"});
    std::vector<double> out;
    for (long k = 0; k <= n; ++k) out.push_back(a + h * static_cast<double>(k));
    return out;
  }
  if (range.size() != 1) throw ValidationError({"list '" + s + "' is neither a:b:step nor a,b,..."});
  std::vector<double> out;
  for (const auto& item : split(s, ',')) out.push_back(parse_double(item));
  if (out.empty()) throw ValidationError({"empty list"});
  return out;
}

std::vector<Fig4Curve> parse_curves(const std::string& s) {
  std::vector<Fig4Curve> out;
  for (const auto& item : split(s, ',')) {
    const auto parts = split(item, ':');
    if (parts.size() != 2) {
      throw ValidationError({"curve '" + item + "' must be kappa_over_gamma:mode"});
    }
    out.push_back({parse_double(parts[0]), parse_mode(parts[1])});
  }
  return out;
}

void RunConfig::validate() const {
  std::vector<std::string> bad;
  try {
    params.validate();
  } catch (const ValidationError& e) {
    bad = e.problems();
  }
  switch (command) {
    case Command::Fig3:
      if (thresholds.empty()) bad.emplace_back("thresholds is empty");
      for (double p : thresholds) {
        if (!(p >= 0.0 && p < 1.0)) {
          bad.emplace_back("thresholds must lie in [0, 1)");
          break;
        }
      }
      check_grid(t1_grid, "t1_grid", true, bad);
      break;
    case Command::Fig4:
      check_grid(t1_grid, "t1_grid", true, bad);
      if (curves.empty()) bad.emplace_back("curves is empty");
      for (const auto& c : curves) {
        if (!(std::isfinite(c.kappa_over_gamma) && c.kappa_over_gamma > 0.0)) {
          bad.emplace_back("curve kappa_over_gamma must be > 0");
          break;
        }
      }
      if (!(params.gamma > 0.0)) bad.emplace_back("fig4 curves need gamma > 0");
      break;
    case Command::Fig5:
      check_grid(t1_grid, "t1_grid", true, bad);
      break;
    case Command::Sweep:
      check_grid(t1_grid, "t1_grid", false, bad);
      check_grid(t2_grid, "t2_grid", false, bad);
      if (quantities.empty()) bad.emplace_back("quantities is empty");
      for (const auto& q : quantities) {
        if (std::find(kQuantities.begin(), kQuantities.end(), q) == kQuantities.end()) {
          bad.push_back("unknown quantity '" + q + "' (gaussian, homodyne, phi, qfi)");
        }
      }
      break;
    case Command::Fig6:
      if (phis.empty()) bad.emplace_back("phis is empty");
      for (double phi : phis) {
        if (!(std::isfinite(phi) && phi != 0.0)) {
          bad.emplace_back("phis must be finite and nonzero");
          break;
        }
      }
      if (!(std::isfinite(phi_extent) && phi_extent > 0.0)) bad.emplace_back("phi_extent must be > 0");
      break;
    default:
      break;
  }
  if (!(phi.phi_min > 0.0 && phi.phi_max > phi.phi_min)) {
    bad.emplace_back("phi_min and phi_max need 0 < phi_min < phi_max");
  }
  if (phi.per_sign < 2) bad.emplace_back("phi_per_sign must be >= 2");
  if (grid.points < 16) bad.emplace_back("grid_points must be >= 16");
  if (dump_points < 2) bad.emplace_back("dump_points must be >= 2");
  if (jobs < 1) bad.emplace_back("jobs must be >= 1");
  if (output_dir.empty()) bad.emplace_back("output_dir is empty");
  if (!bad.empty()) throw ValidationError(std::move(bad));
}

RunConfig resolve(Command command, const ConfigValues& v,
                  const std::optional<std::string>& env_output_dir) {
  RunConfig c;
  c.command = command;
  std::vector<std::string> bad;

  ProtocolParams& p = c.params;
  if (command == Command::Fig2) p.t1 = 0.01;
  if (v.gamma) p.gamma = *v.gamma;
  if (v.kappa && v.kappa_over_gamma) bad.emplace_back("give kappa or kappa_over_gamma, not both");
  if (v.kappa) p.kappa = *v.kappa;
  if (v.kappa_over_gamma) p.kappa = *v.kappa_over_gamma * p.gamma;
  if (v.n_atoms) p.n_atoms = *v.n_atoms;
  if (v.eta) p.eta = *v.eta;
  if (v.t1) p.t1 = *v.t1;
  if (v.t2) p.t2 = *v.t2;
  if (v.p_threshold) p.p_threshold = *v.p_threshold;

  c.thresholds = v.thresholds.value_or(std::vector<double>{0.0, 0.1, 0.2});
  switch (command) {
    case Command::Fig3: c.t1_grid = default_fig3_t1_grid(); break;
    case Command::Fig4: c.t1_grid = default_fig4_t1_grid(); break;
    case Command::Fig5: c.t1_grid = default_fig5_t1_grid(); break;
    default: c.t1_grid = {0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0}; break;
  }
  if (v.t1_grid) c.t1_grid = *v.t1_grid;
  c.t2_grid = v.t2_grid.value_or(std::vector<double>{0.0});
  c.curves = v.curves.value_or(std::vector<Fig4Curve>{{1.0, PostSelection::Immediate},
                                                      {0.1, PostSelection::Immediate},
                                                      {1.0, PostSelection::Threshold},
                                                      {0.1, PostSelection::Threshold}});
  c.with_qfi = v.with_qfi.value_or(false);
  c.mode = v.mode.value_or(PostSelection::Immediate);
  if (command == Command::Sweep && c.mode == PostSelection::Threshold && v.t2_grid) {
    bad.emplace_back("t2_grid cannot be combined with threshold mode");
  }
  c.quantities = v.quantities.value_or(std::vector<std::string>{"homodyne"});
  c.phis = v.phis.value_or(std::vector<double>{0.125, 0.0625, -0.0625, -0.125});
  c.phi_extent = v.phi_extent.value_or(4.0);
  if (v.phi_min) c.phi.phi_min = *v.phi_min;
  if (v.phi_max) c.phi.phi_max = *v.phi_max;
  if (v.phi_per_sign) c.phi.per_sign = *v.phi_per_sign;
  if (v.grid_points) c.grid.points = *v.grid_points;
  c.dump_points = v.dump_points.value_or(201);
  if (v.output_dir) {
    c.output_dir = *v.output_dir;
  } else if (env_output_dir && !env_output_dir->empty()) {
    c.output_dir = *env_output_dir;
  }
  c.format = v.format.value_or(Format::Csv);
  c.jobs = v.jobs.value_or(1);
  c.phi.jobs = c.jobs;

  if (!bad.empty()) throw ValidationError(std::move(bad));
  c.validate();
  return c;
}

json to_json(const RunConfig& c) {
  json curves = json::array();
  for (const auto& k : c.curves) {
    curves.push_back({{"kappa_over_gamma", k.kappa_over_gamma}, {"mode", std::string(to_string(k.mode))}});
  }
  const ProtocolParams& p = c.params;
  return {
      {"command", to_string(c.command)},
      {"kappa", p.kappa},
      {"gamma", p.gamma},
      {"n_atoms", p.n_atoms},
      {"eta", p.eta},
      {"t1", p.t1},
      {"t2", p.t2},
      {"p_threshold", p.p_threshold},
      {"thresholds", c.thresholds},
      {"t1_grid", c.t1_grid},
      {"t2_grid", c.t2_grid},
      {"curves", curves},
      {"with_qfi", c.with_qfi},
      {"mode", std::string(to_string(c.mode))},
      {"quantities", c.quantities},
      {"phis", c.phis},
      {"phi_extent", c.phi_extent},
      {"phi_min", c.phi.phi_min},
      {"phi_max", c.phi.phi_max},
      {"phi_per_sign", c.phi.per_sign},
      {"grid_points", c.grid.points},
      {"dump_points", c.dump_points},
      {"output_dir", c.output_dir},
      {"format", to_string(c.format)},
      {"jobs", c.jobs},
  };
}

}  // namespace hybridmeas::cli
