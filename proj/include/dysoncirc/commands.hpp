// Copyright 2026 The dysoncirc Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DYSONCIRC_COMMANDS_HPP
#define DYSONCIRC_COMMANDS_HPP

#include <json.hpp>
#include <ostream>
#include <string>
#include <vector>

#include "dysoncirc/config.hpp"

namespace dysoncirc {

enum class OutputFormat { Csv, Json };

struct CommandOptions {
  std::string out_dir = ".";
  OutputFormat format = OutputFormat::Csv;
};

// exit codes
inline constexpr int kExitOk = 0;
inline constexpr int kExitCheckFailed = 1;
inline constexpr int kExitUsage = 2;

struct CommandResult {
  int exit_code = kExitOk;
  nlohmann::json report;           // printed as JSON with --format json
  std::string table;               // printed with --format csv
  std::vector<std::string> files;  // written, in order
  std::vector<std::string> warnings;
};

CommandResult cmd_density(const RunConfig &cfg, const CommandOptions &opts);
CommandResult cmd_simulate(const RunConfig &cfg, const CommandOptions &opts);
CommandResult cmd_check(const RunConfig &cfg, const CommandOptions &opts);
CommandResult cmd_brown(const RunConfig &cfg, const CommandOptions &opts);

// Full front end: parses argv, runs the command, prints to out/err and
// returns the exit code. Errors go to err as {"error": {...}}.
int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

}  // namespace dysoncirc

#endif
