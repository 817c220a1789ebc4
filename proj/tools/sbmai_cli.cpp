// Command-line front end over the C API.
//
// Exit codes: 0 success, 1 estimator failure (outputs written as .partial),
// 2 invalid parameters, 64 unknown command, 73 unwritable output.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sbmai/c_api.h"

namespace {

using nlohmann::json;

constexpr int kExitEstimator = 1;
constexpr int kExitUsage = 2;
constexpr int kExitUnknownCommand = 64;
constexpr int kExitCantCreate = 73;

struct Failure {
  int code;
  std::string kind;
  std::string message;
};

int exit_code(sbmai_status s) {
  switch (s) {
    case SBMAI_OK: return 0;
    case SBMAI_ERR_ESTIMATOR: return kExitEstimator;
    case SBMAI_ERR_UNKNOWN_COMMAND: return kExitUnknownCommand;
    case SBMAI_ERR_IO: return kExitCantCreate;
    case SBMAI_ERR_INTERNAL: return 70;
    default: return kExitUsage;
  }
}

void check(sbmai_status s) {
  if (s != SBMAI_OK) throw Failure{exit_code(s), sbmai_status_name(s), sbmai_last_error()};
}

std::string take(char* s) {
  std::string out = s ? s : "";
  sbmai_string_free(s);
  return out;
}

std::vector<std::string> split_words(const std::string& s) {
  std::istringstream is(s);
  std::vector<std::string> out;
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

// Turns flag text into the JSON value the option expects.
std::string to_json_value(const json& def, const std::string& text) {
  if (def.is_string()) return json(text).dump();
  if (def.is_array()) {
    if (!text.empty() && text.front() == '[') return text;
    json arr = json::array();
    std::istringstream is(text);
    for (std::string item; std::getline(is, item, ',');) arr.push_back(json::parse(item, nullptr, false));
    return arr.dump();
  }
  return text;
}

struct CommandFlags {
  json options;
  std::map<std::string, std::string> values;  // key -> raw text
  std::map<std::string, bool> switches;      // boolean keys
  std::string config_path;
  std::string output;
  std::string format;
  int threads = -1;
};

std::string dashed(std::string key) {
  for (char& c : key) {
    if (c == '_') c = '-';
  }
  return key;
}

void add_flags(CLI::App* sub, CommandFlags& f) {
  for (const json& o : f.options) {
    const std::string key = o.at("key").get<std::string>();
    if (key == "format") continue;
    std::string names = "--" + key;
    if (dashed(key) != key) names += ",--" + dashed(key);
    const std::string help = o.at("help").get<std::string>();
    if (o.at("default").is_boolean()) {
      f.switches[key] = false;
      sub->add_flag(names, f.switches[key], help);
    } else {
      std::string desc = help;
      if (!o.at("default").is_null()) desc += " [" + o.at("default").dump() + "]";
      sub->add_option(names, f.values[key], desc);
    }
  }
  const json& fmt = f.options.back();
  std::vector<std::string> choices = fmt.at("choices").get<std::vector<std::string>>();
  sub->add_option("--format", f.format, "output format [" + choices.front() + "]")
      ->check(CLI::IsMember(choices));
  sub->add_option("--config", f.config_path,
                  "settings file: a flat JSON object or a previous JSON/CSV output; flags override it");
  sub->add_option("-o,--output", f.output, "output path; standard output when omitted");
  sub->add_option("--threads", f.threads, "worker threads, 0 = all cores; results do not depend on it")
      ->check(CLI::NonNegativeNumber);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kExitCantCreate, "io", "cannot read '" + path + "'"};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const char* data, std::size_t size) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Failure{kExitCantCreate, "io", "cannot write '" + path + "'"};
  out.write(data, static_cast<std::streamsize>(size));
  out.flush();
  if (!out) throw Failure{kExitCantCreate, "io", "cannot write '" + path + "'"};
}

// Fails early, before any computation, when the output cannot be created.
void probe_output(const std::string& path) {
  const bool existed = std::filesystem::exists(path);
  {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw Failure{kExitCantCreate, "io", "cannot write '" + path + "'"};
  }
  if (!existed) std::filesystem::remove(path);
}

int run(const std::string& command, CommandFlags& f) {
  std::unique_ptr<sbmai_config, decltype(&sbmai_config_free)> cfg(nullptr, sbmai_config_free);
  std::string output = f.output;
  int threads = f.threads;
  if (!f.config_path.empty()) {
    sbmai_config* raw = nullptr;
    char* named = nullptr;
    check(sbmai_config_from_text(read_file(f.config_path).c_str(), &raw, &named));
    cfg.reset(raw);
    const std::string file_command = take(named);
    if (!file_command.empty() && file_command != command) {
      throw Failure{kExitUsage, "parameter",
                    "config file is for '" + file_command + "', not '" + command + "'"};
    }
    check(sbmai_config_remove(cfg.get(), "command"));
    // Run controls may sit in a flat settings file.
    char* text = nullptr;
    check(sbmai_config_to_json(cfg.get(), nullptr, 0, &text));
    const json given = json::parse(take(text));
    if (given.contains("threads") && threads < 0) threads = given.at("threads").get<int>();
    if (given.contains("output") && output.empty()) output = given.at("output").get<std::string>();
    check(sbmai_config_remove(cfg.get(), "threads"));
    check(sbmai_config_remove(cfg.get(), "output"));
  } else {
    cfg.reset(sbmai_config_new());
  }
  for (const auto& [key, text] : f.values) {
    if (!text.empty()) {
      const json def = [&] {
        for (const json& o : f.options) {
          if (o.at("key") == key) return o.at("default");
        }
        return json();
      }();
      check(sbmai_config_set(cfg.get(), key.c_str(), to_json_value(def, text).c_str()));
    }
  }
  for (const auto& [key, on] : f.switches) {
    if (on) check(sbmai_config_set(cfg.get(), key.c_str(), "true"));
  }
  if (!f.format.empty()) check(sbmai_config_set(cfg.get(), "format", json(f.format).dump().c_str()));
  if (threads >= 0) check(sbmai_set_threads(threads));

  // Resolve first so bad options fail before the output is touched.
  char* resolved = nullptr;
  check(sbmai_config_to_json(cfg.get(), command.c_str(), 1, &resolved));
  sbmai_string_free(resolved);
  if (!output.empty()) probe_output(output);

  sbmai_result* raw = nullptr;
  const sbmai_status st = sbmai_run(command.c_str(), cfg.get(), &raw);
  std::unique_ptr<sbmai_result, decltype(&sbmai_result_free)> res(raw, sbmai_result_free);
  if (st != SBMAI_OK && st != SBMAI_ERR_ESTIMATOR) check(st);
  const std::string reason = sbmai_last_error();

  const std::string console = sbmai_result_console(res.get());
  std::cout << console;
  const bool partial = sbmai_result_partial(res.get()) != 0;
  const std::size_t count = sbmai_result_artifact_count(res.get());
  if (output.empty()) {
    if (console.empty() && count > 0) {
      std::size_t size = 0;
      const char* data = sbmai_result_artifact_data(res.get(), 0, &size);
      std::cout.write(data, static_cast<std::streamsize>(size));
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      std::size_t size = 0;
      const char* data = sbmai_result_artifact_data(res.get(), i, &size);
      std::string path = output + sbmai_result_artifact_suffix(res.get(), i);
      if (partial) path += ".partial";
      write_file(path, data, size);
    }
  }
  std::cout.flush();
  if (st == SBMAI_ERR_ESTIMATOR) {
    throw Failure{kExitEstimator, "estimator", reason.empty() ? "estimator failure" : reason};
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> commands = split_words(sbmai_commands());
  try {
    if (argc >= 2 && argv[1][0] != '-') {
      const std::string first = argv[1];
      bool known = false;
      for (const auto& c : commands) known = known || c == first;
      if (!known) throw Failure{kExitUnknownCommand, "unknown_command", "unknown command '" + first + "'"};
    }

    CLI::App app{"Two-group stochastic block model: mutual information, replica and interpolation tools"};
    app.require_subcommand(1);
    app.set_version_flag("--version", sbmai_version());
    std::vector<std::unique_ptr<CommandFlags>> flags;
    std::vector<CLI::App*> subs;
    for (const std::string& c : commands) {
      auto f = std::make_unique<CommandFlags>();
      char* text = nullptr;
      check(sbmai_command_options(c.c_str(), &text));
      f->options = json::parse(take(text));
      char* help = nullptr;
      check(sbmai_command_help(c.c_str(), &help));
      const std::string full = take(help);
      CLI::App* sub = app.add_subcommand(c, full.substr(0, full.find('\n')));
      const auto out_pos = full.find("\nOutput:\n");
      if (out_pos != std::string::npos) sub->footer(full.substr(out_pos + 1));
      add_flags(sub, *f);
      flags.push_back(std::move(f));
      subs.push_back(sub);
    }
    try {
      app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
      return app.exit(e);
    } catch (const CLI::ParseError& e) {
      throw Failure{kExitUsage, "parameter", e.what()};
    }
    for (std::size_t k = 0; k < subs.size(); ++k) {
      if (subs[k]->parsed()) return run(commands[k], *flags[k]);
    }
    throw Failure{kExitUsage, "parameter", "no command given"};
  } catch (const Failure& f) {
    std::string msg = f.message;
    for (char& c : msg) {
      if (c == '\n') c = ' ';
    }
    std::cerr << "error: " << f.kind << ": " << msg << "\n";
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 70;
  }
}
