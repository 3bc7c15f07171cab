// Command-line front end; talks to the workbench only through the C API.
#include "filmctl/filmctl.h"

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

namespace {

struct Options {
  std::string config;
  std::optional<std::string> strategy, re, m, p, seed, out_dir, workers, snapshot_times;
  std::vector<std::string> sets;
};

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config,-c", o.config, "configuration file")->check(CLI::ExistingFile);
  sub->add_option("--strategy", o.strategy, "none, full_state, output_feedback or luenberger");
  sub->add_option("--re", o.re, "Reynolds number");
  sub->add_option("--m", o.m, "number of actuators");
  sub->add_option("--p", o.p, "number of observers");
  sub->add_option("--seed", o.seed, "master random seed");
  sub->add_option("--out-dir,-o", o.out_dir, "output directory (default: config [output] dir, then $FILMCTL_OUT_DIR, then .)");
  sub->add_option("--workers", o.workers, "sweep worker threads (0: all cores)");
  sub->add_option("--snapshot-times", o.snapshot_times, "comma-separated snapshot times");
  sub->add_option("--set", o.sets, "override any entry, section.key=value (repeatable)");
  sub->allow_extras();  // --section.key=value is accepted as an override too
}

int fail(const std::string& what) {
  std::fprintf(stderr, "filmctl: error: %s\n", what.c_str());
  return FILMCTL_EXIT_USAGE;
}

int execute(filmctl_command command, const Options& o, const std::vector<std::string>& extras) {
  std::vector<std::string> keys, values;
  auto add = [&](const std::string& k, const std::optional<std::string>& v) {
    if (v) keys.push_back(k), values.push_back(*v);
  };
  add("strategy", o.strategy);
  add("re", o.re);
  add("m", o.m);
  add("p", o.p);
  add("seed", o.seed);
  add("workers", o.workers);
  add("snapshot_times", o.snapshot_times);
  std::vector<std::string> pairs = o.sets;
  for (const std::string& e : extras) {
    if (e.rfind("--", 0) != 0 || e.find('=') == std::string::npos)
      return fail("unexpected argument '" + e + "' (overrides are --section.key=value)");
    pairs.push_back(e.substr(2));
  }
  for (const std::string& s : pairs) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) return fail("override '" + s + "' is not key=value");
    keys.push_back(s.substr(0, eq));
    values.push_back(s.substr(eq + 1));
  }

  std::vector<const char*> kp, vp;
  for (std::size_t i = 0; i < keys.size(); ++i) kp.push_back(keys[i].c_str()), vp.push_back(values[i].c_str());
  filmctl_config* config = nullptr;
  if (filmctl_config_create(o.config.empty() ? nullptr : o.config.c_str(), kp.data(), vp.data(), kp.size(),
                            &config) != FILMCTL_OK) {
    const std::string where = o.config.empty() ? "" : o.config + ": ";
    return fail(where + filmctl_last_error());
  }

  std::string dir;
  const char* config_dir = nullptr;
  filmctl_config_out_dir(config, &config_dir);
  if (o.out_dir) dir = *o.out_dir;
  else if (config_dir && *config_dir) dir = config_dir;
  else if (const char* env = std::getenv("FILMCTL_OUT_DIR"); env && *env) dir = env;
  else dir = ".";

  filmctl_result* result = nullptr;
  const filmctl_status status = filmctl_run(command, config, dir.c_str(), &result);
  filmctl_config_free(config);
  if (status != FILMCTL_OK) return fail(filmctl_last_error());
  std::printf("%s\n", filmctl_result_message(result));
  std::printf("wrote %zu files to %s\n", filmctl_result_file_count(result), dir.c_str());
  const int code = filmctl_result_exit_code(result);
  filmctl_result_free(result);
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Feedback control of falling liquid films on the weighted-residual model"};
  app.require_subcommand(1);
  app.set_version_flag("--version", filmctl_version());

  struct Sub {
    const char* name;
    const char* help;
    filmctl_command command;
  };
  const Sub subs[] = {
      {"simulate", "burn-in, synthesis and controlled run", FILMCTL_SIMULATE},
      {"synthesize", "synthesise a controller and write its gains", FILMCTL_SYNTHESIZE},
      {"spectrum", "open- and closed-loop eigenvalues", FILMCTL_SPECTRUM},
      {"sweep", "success/failure map over (Re, M, P)", FILMCTL_SWEEP},
  };
  Options options;
  std::vector<CLI::App*> apps;
  for (const Sub& s : subs) {
    apps.push_back(app.add_subcommand(s.name, s.help));
    add_common(apps.back(), options);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : FILMCTL_EXIT_USAGE;
  }
  for (std::size_t i = 0; i < apps.size(); ++i)
    if (apps[i]->parsed()) return execute(subs[i].command, options, apps[i]->remaining());
  return FILMCTL_EXIT_USAGE;
}
