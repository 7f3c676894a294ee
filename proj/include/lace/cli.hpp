#pragma once

#include <string>
#include <vector>

#include "lace/io.hpp"

namespace lace {

const std::vector<std::string>& subcommands();

/// Runs one subcommand on a resolved config and writes <run.out>/<subcommand>.json
/// (always, with error records on failure) plus its CSV files.
/// Exit status: 0 ok, 1 module error, 2 ConfigInvalid.
int dispatch(const std::string& subcommand, const Config& cfg);

/// Command-line front end: `lace <subcommand> [--config file] [flags]`.
/// Flags override values read from the config file.
int run_cli(int argc, char** argv);

}  // namespace lace
