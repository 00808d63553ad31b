#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace kfat {

enum ExitCode : int { kOk = 0, kUsageError = 2, kConfigError = 3, kRuntimeError = 4 };

/// Entry point of the `kfat` tool. `args[0]` is the program name. Errors are
/// reported on `err` as one JSON object and, when the output directory is
/// known, in <out>/error.json.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace kfat

#include "json.hpp"
#include "kfat/simulate.hpp"

namespace kfat {

/// Monte Carlo consistency report for the candidate in `scenario`: mean and
/// second moment of NEES and NIS, both J costs, χ² band checks at
/// `confidence`, and 2σ coverage per state component.
nlohmann::json validation_report(const ScenarioConfig& scenario, double confidence,
                                 const MonteCarloResult& mc);

}  // namespace kfat
