#include "sbmai/c_api.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>

#include "sbmai/commands.hpp"
#include "sbmai/error.hpp"
#include "sbmai/exact.hpp"
#include "sbmai/parallel.hpp"
#include "sbmai/replica.hpp"

struct sbmai_config {
  sbmai::Json settings = sbmai::Json::object();
};

struct sbmai_result {
  sbmai::CommandResult result;
};

struct sbmai_params {
  sbmai::ModelParams params;
};

namespace {

thread_local std::string g_last_error;

sbmai_status status_of(sbmai::ErrorKind kind) {
  switch (kind) {
    case sbmai::ErrorKind::kParameter: return SBMAI_ERR_PARAMETER;
    case sbmai::ErrorKind::kDomain: return SBMAI_ERR_DOMAIN;
    case sbmai::ErrorKind::kSize: return SBMAI_ERR_SIZE;
    case sbmai::ErrorKind::kIo: return SBMAI_ERR_IO;
    case sbmai::ErrorKind::kEstimator: return SBMAI_ERR_ESTIMATOR;
    case sbmai::ErrorKind::kUnknownCommand: return SBMAI_ERR_UNKNOWN_COMMAND;
  }
  return SBMAI_ERR_INTERNAL;
}

template <class F>
sbmai_status guard(F&& f) {
  g_last_error.clear();
  try {
    f();
    return SBMAI_OK;
  } catch (const sbmai::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown exception";
  }
  return SBMAI_ERR_INTERNAL;
}

void require(bool ok, const char* what) {
  if (!ok) sbmai::fail(sbmai::ErrorKind::kParameter, what);
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* sbmai_last_error(void) { return g_last_error.c_str(); }

const char* sbmai_status_name(sbmai_status status) {
  switch (status) {
    case SBMAI_OK: return "ok";
    case SBMAI_ERR_PARAMETER: return "parameter";
    case SBMAI_ERR_DOMAIN: return "domain";
    case SBMAI_ERR_SIZE: return "size";
    case SBMAI_ERR_IO: return "io";
    case SBMAI_ERR_ESTIMATOR: return "estimator";
    case SBMAI_ERR_UNKNOWN_COMMAND: return "unknown_command";
    case SBMAI_ERR_INTERNAL: return "internal";
  }
  return "internal";
}

const char* sbmai_version(void) { return "0.1.0"; }

const char* sbmai_commands(void) {
  static const std::string joined = [] {
    std::string s;
    for (const std::string& c : sbmai::command_names()) s += (s.empty() ? "" : " ") + c;
    return s;
  }();
  return joined.c_str();
}

sbmai_status sbmai_command_help(const char* command, char** out) {
  return guard([&] {
    require(command && out, "null argument");
    *out = nullptr;
    *out = copy_string(sbmai::command_help(command));
  });
}

sbmai_status sbmai_command_options(const char* command, char** out) {
  return guard([&] {
    require(command && out, "null argument");
    *out = nullptr;
    *out = copy_string(sbmai::dump_compact(sbmai::command_options(command)));
  });
}

sbmai_config* sbmai_config_new(void) { return new (std::nothrow) sbmai_config(); }

sbmai_status sbmai_config_from_text(const char* text, sbmai_config** out, char** command_out) {
  return guard([&] {
    require(text && out, "null argument");
    *out = nullptr;
    if (command_out) *command_out = nullptr;
    sbmai::ConfigSource src = sbmai::parse_config_text(text);
    require(src.settings.is_object(), "config must be a JSON object");
    auto cfg = std::make_unique<sbmai_config>();
    cfg->settings = std::move(src.settings);
    if (command_out && src.command) *command_out = copy_string(*src.command);
    *out = cfg.release();
  });
}

sbmai_status sbmai_config_set(sbmai_config* cfg, const char* key, const char* value_json) {
  return guard([&] {
    require(cfg && key && value_json, "null argument");
    cfg->settings[key] = sbmai::parse_json(value_json);
  });
}

sbmai_status sbmai_config_remove(sbmai_config* cfg, const char* key) {
  return guard([&] {
    require(cfg && key, "null argument");
    cfg->settings.erase(key);
  });
}

sbmai_status sbmai_config_to_json(const sbmai_config* cfg, const char* command, int resolved,
                                  char** out) {
  return guard([&] {
    require(cfg && out, "null argument");
    *out = nullptr;
    if (resolved) {
      require(command != nullptr, "resolving needs a command");
      *out = copy_string(sbmai::dump_json(sbmai::resolve_settings(command, cfg->settings)));
    } else {
      *out = copy_string(sbmai::dump_json(cfg->settings));
    }
  });
}

void sbmai_config_free(sbmai_config* cfg) { delete cfg; }

sbmai_status sbmai_run(const char* command, const sbmai_config* cfg, sbmai_result** out) {
  return guard([&] {
    require(command && out, "null argument");
    *out = nullptr;
    const sbmai::Json settings = cfg ? cfg->settings : sbmai::Json::object();
    auto res = std::make_unique<sbmai_result>();
    res->result = sbmai::run_command(command, settings);
    const bool partial = res->result.estimator_failure;
    const std::string reason = res->result.failure_reason;
    *out = res.release();
    if (partial) sbmai::fail(sbmai::ErrorKind::kEstimator, reason);
  });
}

size_t sbmai_result_artifact_count(const sbmai_result* res) {
  return res ? res->result.artifacts.size() : 0;
}

const char* sbmai_result_artifact_suffix(const sbmai_result* res, size_t i) {
  if (!res || i >= res->result.artifacts.size()) return nullptr;
  return res->result.artifacts[i].suffix.c_str();
}

const char* sbmai_result_artifact_data(const sbmai_result* res, size_t i, size_t* size) {
  if (!res || i >= res->result.artifacts.size()) {
    if (size) *size = 0;
    return nullptr;
  }
  const std::string& c = res->result.artifacts[i].content;
  if (size) *size = c.size();
  return c.c_str();
}

const char* sbmai_result_console(const sbmai_result* res) {
  return res ? res->result.console.c_str() : "";
}

int sbmai_result_partial(const sbmai_result* res) {
  return res && res->result.estimator_failure ? 1 : 0;
}

void sbmai_result_free(sbmai_result* res) { delete res; }

void sbmai_string_free(char* s) { std::free(s); }

sbmai_status sbmai_params_from_channel(int n, double r, double p_bar, double lambda, int sign,
                                       sbmai_params** out) {
  return guard([&] {
    require(out != nullptr, "null argument");
    *out = nullptr;
    *out = new sbmai_params{sbmai::params_from_channel(n, r, p_bar, lambda, sign)};
  });
}

sbmai_status sbmai_params_from_delta(int n, double r, double p_bar, double delta,
                                     sbmai_params** out) {
  return guard([&] {
    require(out != nullptr, "null argument");
    *out = nullptr;
    *out = new sbmai_params{sbmai::params_from_delta(n, r, p_bar, delta)};
  });
}

sbmai_status sbmai_params_from_degrees(int n, double r, double d_n, double b_n,
                                       sbmai_params** out) {
  return guard([&] {
    require(out != nullptr, "null argument");
    *out = nullptr;
    *out = new sbmai_params{sbmai::params_from_degrees(n, r, d_n, b_n)};
  });
}

void sbmai_params_free(sbmai_params* p) { delete p; }

sbmai_status sbmai_params_get(const sbmai_params* p, sbmai_params_record* out) {
  return guard([&] {
    require(p && out, "null argument");
    const sbmai::ModelParams& m = p->params;
    *out = sbmai_params_record{m.n, m.r, m.p_bar, m.delta, m.d_n, m.b_n, m.a_n, m.c_n, m.lambda_n};
  });
}

sbmai_status sbmai_psi(double q, double lambda, double r, int quad_order, double* out) {
  return guard([&] {
    require(out != nullptr, "null argument");
    sbmai::PsiQuadrature quad;
    if (quad_order > 0) quad.order = quad_order;
    *out = sbmai::psi(q, lambda, r, quad);
  });
}

sbmai_status sbmai_replica_minimize(double lambda, double r, double tol, double* q_star,
                                    double* psi_star) {
  return guard([&] {
    require(q_star && psi_star, "null argument");
    const sbmai::ReplicaSolution s = sbmai::minimize_psi(lambda, r, tol);
    *q_star = s.q_star;
    *psi_star = s.psi_star;
  });
}

sbmai_status sbmai_exact_mi(const sbmai_params* p, double t, double* out) {
  return guard([&] {
    require(p && out, "null argument");
    *out = sbmai::exact_mi_tiny(p->params, t);
  });
}

sbmai_status sbmai_mi_free_energy(const sbmai_params* p, size_t samples, uint64_t seed,
                                  double* mean, double* stderr_out) {
  return guard([&] {
    require(p && mean, "null argument");
    const sbmai::Estimate e = sbmai::mi_via_free_energy(p->params, samples, seed);
    *mean = e.mean;
    if (stderr_out) *stderr_out = e.stderr_;
  });
}

sbmai_status sbmai_set_threads(int threads) {
  return guard([&] {
    require(threads >= 0, "threads must be >= 0");
    sbmai::set_num_threads(threads);
  });
}

}  // extern "C"
