#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sbmai/serialize.hpp"

namespace sbmai {

struct Artifact {
  std::string suffix;  // appended to the output path; "" for the main file
  std::string content;
};

struct CommandResult {
  std::vector<Artifact> artifacts;  // artifacts[0] is the main output
  std::string console;              // text for standard output
  bool estimator_failure = false;   // artifacts hold partial results
  std::string failure_reason;
};

const std::vector<std::string>& command_names();
bool is_command(const std::string& name);

// Every option of `command` with defaults filled in and types checked.
// Unknown keys and conflicting model sources throw kParameter. The model
// keys kept are the ones of the source actually used (channel: lambda and
// sign, delta, or degrees: d_n and b_n).
Json resolve_settings(const std::string& command, const Json& settings);

CommandResult run_command(const std::string& command, const Json& settings);

// [{key, default, help}], "format" last with its "choices".
Json command_options(const std::string& command);

// Option list with defaults, and output columns, for --help.
std::string command_help(const std::string& command);

struct ConfigSource {
  std::optional<std::string> command;
  Json settings;
};
// A flat settings object, or the embedded config of a JSON or CSV output.
ConfigSource parse_config_text(const std::string& text);

}  // namespace sbmai
