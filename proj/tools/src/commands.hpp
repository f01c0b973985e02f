#pragma once

#include <string>
#include <vector>

#include "config.hpp"
#include "table.hpp"

namespace hybridmeas::cli {

/// A named JSON document written verbatim (the Fock dump).
struct RawJson {
  std::string name;
  std::string text;
};

struct CommandOutput {
  std::vector<Table> tables;
  std::vector<RawJson> documents;
  bool passed = true;  ///< false when selftest finds a failing check
};

/// Computes every dataset of the command; nothing is written here.
CommandOutput run_command(const RunConfig& c);

/// Column lists of the FisherReport tables (fig4, fig5).
const std::vector<std::string>& fisher_columns();

}  // namespace hybridmeas::cli
