#include "filmctl/config.hpp"
#include "filmctl/errors.hpp"

#include <doctest.h>

#include <cmath>
#include <string>

using namespace filmctl;

namespace {

int error_line(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

std::string error_text(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("minimal config takes documented defaults") {
  const Config c = parse_config("[physics]\nreynolds = 11.29\n");
  CHECK(c.run.params.reynolds == 11.29);
  CHECK(c.run.params.capillary == 0.05);
  CHECK(c.run.params.theta == doctest::Approx(M_PI / 3).epsilon(1e-15));
  CHECK(c.run.params.length == 30.0);
  CHECK(c.run.params.beta == 0.5);
  CHECK(c.run.nodes == 256);
  CHECK(c.run.actuators == 5);
  CHECK(c.run.observers == 5);
  CHECK(c.run.omega == 0.1);
  CHECK(!c.run.strategy);
  CHECK(c.run.burn_in_time == 300.0);
  CHECK(c.run.control_time == 100.0);
  CHECK(c.run.epsilon == 1e-3);
  CHECK(c.sweep.reynolds.size() == 12);
  CHECK(c.sweep.strategies.size() == 1);
}

TEST_CASE("comments, whitespace and values parse") {
  const Config c = parse_config(
      "# leading comment\n"
      "; another\n"
      "[physics]\n"
      "  reynolds =   20   # trailing\n"
      "beta = 0.99\n"
      "[control]\n"
      "strategy = luenberger\n"
      "actuators = 7\n"
      "[run]\n"
      "snapshot_times = 0, 30, 100\n"
      "seed = 42\n");
  CHECK(c.run.params.reynolds == 20.0);
  CHECK(c.run.params.beta == 0.99);
  REQUIRE(c.run.strategy);
  CHECK(*c.run.strategy == Strategy::Luenberger);
  CHECK(c.run.actuators == 7);
  CHECK(c.run.snapshot_times == std::vector<double>{0.0, 30.0, 100.0});
  CHECK(c.seed == 42);
  CHECK(c.run_config().perturbation.seed == 42);
}

TEST_CASE("missing reynolds is reported by name") {
  const std::string what = error_text("[grid]\nnodes = 64\n");
  CHECK(what.find("reynolds") != std::string::npos);
  CHECK(what.find("[physics]") != std::string::npos);
}

TEST_CASE("malformed entries carry their line number") {
  CHECK(error_line("[physics]\nreynolds = 5\nfoo = 1\n") == 3);
  CHECK(error_line("[physics]\nreynolds = 5\n\n[grid]\nnodes = many\n") == 5);
  CHECK(error_line("[physics]\nreynolds = 5\nreynolds = 6\n") == 3);
  CHECK(error_line("reynolds = 5\n") == 1);
  CHECK(error_line("[physics\nreynolds = 5\n") == 1);
  CHECK(error_line("[physics]\nreynolds 5\n") == 2);
  CHECK(error_line("[physics]\nreynolds = 5\n[control]\nstrategy = bogus\n") == 4);
  CHECK(error_text("[physics]\nreynolds = 5\n[grid]\nnodes = many\n").rfind("line 4:", 0) == 0);
}

TEST_CASE("invalid values are rejected") {
  CHECK_THROWS(parse_config("[physics]\nreynolds = -1\n"));
  CHECK_THROWS(parse_config("[physics]\nreynolds = 5\n[sweep]\nreynolds =\n"));
  CHECK_THROWS(parse_config("[physics]\nreynolds = 5\n[sweep]\nm_list = 0, 3\n"));
}

TEST_CASE("text form round-trips and the hash tracks content") {
  Config c = parse_config("[physics]\nreynolds = 11.29\n[control]\nstrategy = output_feedback\n");
  c.run.params.beta = 0.1 + 0.2;  // not exactly representable in short decimal
  c.run.snapshot_times = {0.0, 1.0 / 3.0};
  c.sweep.reynolds = {1.5, 2.5};
  c.seed = 0xdeadbeefcafeULL;
  const std::string text = to_text(c);
  const Config back = parse_config(text);
  CHECK(to_text(back) == text);
  CHECK(back.run.params.beta == c.run.params.beta);
  CHECK(back.run.snapshot_times == c.run.snapshot_times);
  CHECK(back.seed == c.seed);
  CHECK(config_hash(back) == config_hash(c));
  CHECK(config_hash(c).size() == 16);

  Config d = c;
  apply_override(d, "re", "11.3");
  CHECK(config_hash(d) != config_hash(c));
}

TEST_CASE("overrides accept aliases and full keys") {
  Config c = parse_config("[physics]\nreynolds = 5\n");
  apply_override(c, "re", "7.5");
  apply_override(c, "m", "3");
  apply_override(c, "p", "9");
  apply_override(c, "strategy", "full_state");
  apply_override(c, "seed", "17");
  apply_override(c, "out-dir", "somewhere");
  apply_override(c, "workers", "3");
  apply_override(c, "integrator.rtol", "1e-8");
  CHECK(c.run.params.reynolds == 7.5);
  CHECK(c.run.actuators == 3);
  CHECK(c.run.observers == 9);
  CHECK(*c.run.strategy == Strategy::FullState);
  CHECK(c.seed == 17);
  CHECK(c.out_dir == "somewhere");
  CHECK(c.sweep.workers == 3);
  CHECK(c.run.stepper.rtol == 1e-8);
  CHECK_THROWS_AS(apply_override(c, "nonsense", "1"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "re", "x"), ConfigError);
}

TEST_CASE("log spacing is geometric with exact endpoints") {
  const auto v = log_spaced(1.0, 100.0, 12);
  REQUIRE(v.size() == 12);
  CHECK(v.front() == 1.0);
  CHECK(v.back() == 100.0);
  const double ratio = std::pow(100.0, 1.0 / 11.0);
  for (std::size_t i = 1; i < v.size(); ++i) CHECK(v[i] / v[i - 1] == doctest::Approx(ratio).epsilon(1e-12));
}

TEST_CASE("overrides can supply required keys") {
  const Config c = parse_config("[grid]\nnodes = 64\n", {{"re", "3"}, {"--m", "7"}});
  CHECK(c.run.params.reynolds == 3.0);
  CHECK(c.run.actuators == 7);
  CHECK_THROWS_AS(parse_config("[grid]\nnodes = 64\n", {{"m", "7"}}), ConfigError);
}
