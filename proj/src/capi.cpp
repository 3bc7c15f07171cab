#include "filmctl/filmctl.h"

#include "filmctl/commands.hpp"
#include "filmctl/config.hpp"
#include "filmctl/errors.hpp"

#include <exception>
#include <new>
#include <string>

struct filmctl_config {
  filmctl::Config config;
  mutable std::string text, hash;
};

struct filmctl_result {
  filmctl::CommandResult result;
};

namespace {

thread_local std::string last_error;
thread_local int last_line = 0;

filmctl_status fail(filmctl_status status, const std::string& what, int line = 0) {
  last_error = what;
  last_line = line;
  return status;
}

// Runs `f`, translating exceptions into status codes.
template <class F>
filmctl_status guarded(F&& f) noexcept {
  try {
    last_error.clear();
    last_line = 0;
    f();
    return FILMCTL_OK;
  } catch (const filmctl::ConfigError& e) {
    return fail(FILMCTL_ERR_CONFIG, e.what(), e.line());
  } catch (const filmctl::InvalidArgument& e) {
    return fail(FILMCTL_ERR_ARGUMENT, e.what());
  } catch (const filmctl::SynthesisError& e) {
    return fail(FILMCTL_ERR_SYNTHESIS, std::string(filmctl::to_string(e.kind())) + ": " + e.what());
  } catch (const filmctl::StiffnessError& e) {
    return fail(FILMCTL_ERR_NUMERICAL, e.what());
  } catch (const filmctl::DomainError& e) {
    return fail(FILMCTL_ERR_NUMERICAL, e.what());
  } catch (const filmctl::StabilityError& e) {
    return fail(FILMCTL_ERR_NUMERICAL, e.what());
  } catch (const filmctl::Error& e) {
    return fail(FILMCTL_ERR_RUNTIME, e.what());
  } catch (const std::exception& e) {
    return fail(FILMCTL_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(FILMCTL_ERR_INTERNAL, "unknown exception");
  }
}

std::vector<filmctl::Override> overrides(const char* const* keys, const char* const* values, size_t count) {
  if (count && (!keys || !values)) throw filmctl::InvalidArgument("override arrays are null");
  std::vector<filmctl::Override> out;
  for (size_t i = 0; i < count; ++i) {
    if (!keys[i] || !values[i]) throw filmctl::InvalidArgument("override " + std::to_string(i) + " is null");
    out.emplace_back(keys[i], values[i]);
  }
  return out;
}

void require(const void* p, const char* what) {
  if (!p) throw filmctl::InvalidArgument(std::string(what) + " is null");
}

}  // namespace

extern "C" {

const char* filmctl_version(void) { return "1.0.0"; }
const char* filmctl_last_error(void) { return last_error.c_str(); }
int filmctl_last_error_line(void) { return last_line; }

filmctl_status filmctl_config_create(const char* path, const char* const* keys, const char* const* values,
                                     size_t count, filmctl_config** out) {
  return guarded([&] {
    require(out, "output handle");
    *out = nullptr;
    const auto ov = overrides(keys, values, count);
    *out = new filmctl_config{path ? filmctl::load_config(path, ov) : filmctl::parse_config("", ov), {}, {}};
  });
}

filmctl_status filmctl_config_parse(const char* text, const char* const* keys, const char* const* values,
                                    size_t count, filmctl_config** out) {
  return guarded([&] {
    require(out, "output handle");
    require(text, "config text");
    *out = nullptr;
    *out = new filmctl_config{filmctl::parse_config(text, overrides(keys, values, count)), {}, {}};
  });
}

filmctl_status filmctl_config_set(filmctl_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    filmctl::Config copy = config->config;  // leave the handle untouched on failure
    filmctl::apply_override(copy, key, value);
    config->config = std::move(copy);
  });
}

void filmctl_config_free(filmctl_config* config) { delete config; }

filmctl_status filmctl_config_text(const filmctl_config* config, const char** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "output");
    config->text = filmctl::to_text(config->config);
    *out = config->text.c_str();
  });
}

filmctl_status filmctl_config_hash(const filmctl_config* config, const char** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "output");
    config->hash = filmctl::config_hash(config->config);
    *out = config->hash.c_str();
  });
}

filmctl_status filmctl_config_out_dir(const filmctl_config* config, const char** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "output");
    *out = config->config.out_dir.c_str();
  });
}

filmctl_status filmctl_run(filmctl_command command, const filmctl_config* config, const char* out_dir,
                           filmctl_result** out) {
  return guarded([&] {
    require(config, "config");
    require(out, "output handle");
    *out = nullptr;
    const std::string dir = out_dir ? out_dir : config->config.out_dir;
    filmctl::CommandResult r;
    switch (command) {
      case FILMCTL_SIMULATE: r = filmctl::cmd_simulate(config->config, dir); break;
      case FILMCTL_SYNTHESIZE: r = filmctl::cmd_synthesize(config->config, dir); break;
      case FILMCTL_SPECTRUM: r = filmctl::cmd_spectrum(config->config, dir); break;
      case FILMCTL_SWEEP: r = filmctl::cmd_sweep(config->config, dir); break;
      default: throw filmctl::InvalidArgument("unknown command " + std::to_string(static_cast<int>(command)));
    }
    *out = new filmctl_result{std::move(r)};
  });
}

int filmctl_result_exit_code(const filmctl_result* result) {
  return result ? result->result.exit_code : FILMCTL_EXIT_USAGE;
}
const char* filmctl_result_message(const filmctl_result* result) {
  return result ? result->result.message.c_str() : "";
}
const char* filmctl_result_summary(const filmctl_result* result) {
  return result ? result->result.summary.c_str() : "";
}
size_t filmctl_result_file_count(const filmctl_result* result) { return result ? result->result.files.size() : 0; }
const char* filmctl_result_file(const filmctl_result* result, size_t index) {
  return result && index < result->result.files.size() ? result->result.files[index].c_str() : nullptr;
}
void filmctl_result_free(filmctl_result* result) { delete result; }

}  // extern "C"
