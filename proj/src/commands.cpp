#include "filmctl/commands.hpp"

#include "filmctl/errors.hpp"
#include "filmctl/io.hpp"
#include "filmctl/linsys.hpp"

#include <json.hpp>

#include <atomic>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <thread>

namespace filmctl {

namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string prepare(const std::string& out_dir) {
  const std::string dir = out_dir.empty() ? "." : out_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory '" + dir + "': " + ec.message());
  return dir;
}

ordered_json params_json(const Config& c) {
  const RunConfig& r = c.run;
  return {{"reynolds", r.params.reynolds},
          {"capillary", r.params.capillary},
          {"theta", r.params.theta},
          {"length", r.params.length},
          {"beta", r.params.beta},
          {"nodes", r.nodes},
          {"actuators", r.actuators},
          {"observers", r.observers},
          {"omega", r.omega},
          {"strategy", r.strategy ? to_string(*r.strategy) : "none"},
          {"burn_in_time", r.burn_in_time},
          {"control_time", r.control_time},
          {"epsilon", r.epsilon},
          {"rtol", r.stepper.rtol}};
}

ordered_json controller_json(const ControllerInfo& info) {
  ordered_json j{{"strategy", to_string(info.strategy)},
                 {"closed_loop_abscissa", info.closed_loop_abscissa},
                 {"unstable_real_dims", info.unstable_real_dims}};
  if (info.strategy == Strategy::OutputFeedback) {
    j["iterations"] = info.iterations;
    j["residual"] = info.residual;
    j["initialisation"] = info.initialisation;
  }
  if (info.strategy == Strategy::Luenberger) {
    j["retained_requested"] = info.retained_requested;
    j["retained_dim"] = info.retained_dim;
    j["retained_adjusted"] = info.retained_adjusted;
    j["regulator_abscissa"] = info.regulator_abscissa;
    j["observer_abscissa"] = info.observer_abscissa;
  }
  return j;
}

// Non-finite numbers are not JSON; store them as null.
ordered_json number(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

int exit_code_for(Verdict v) {
  switch (v) {
    case Verdict::Stabilised: return kExitOk;
    case Verdict::SynthesisFailed: return kExitSynthesisFailed;
    default: return kExitNotStabilised;
  }
}

std::string snapshot_name(double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "snapshot_t%g.dat", t);
  return buf;
}

void finish(CommandResult& r, const std::string& dir, ordered_json summary) {
  summary["files"] = r.files;
  summary["timestamp"] = timestamp();
  r.summary = summary.dump(2) + "\n";
  write_text(dir + "/summary.json", r.summary);
  r.files.push_back("summary.json");
}

void dump_system(const LinearSystem& sys, const std::string& dir, std::vector<std::string>& files) {
  const std::pair<const char*, const Matrix*> mats[] = {
      {"A.dat", &sys.a}, {"B.dat", &sys.b}, {"C.dat", &sys.c}, {"U.dat", &sys.u}, {"V.dat", &sys.v}};
  for (const auto& [name, m] : mats) {
    write_matrix(dir + "/" + name, *m);
    files.emplace_back(name);
  }
}

void dump_controller(const Controller& c, const std::string& dir, std::vector<std::string>& files) {
  auto put = [&](const char* name, const Matrix& m) {
    write_matrix(dir + "/" + name, m);
    files.emplace_back(name);
  };
  if (const auto* fs = std::get_if<FullStateLaw>(&c.law())) put("K.dat", fs->k);
  if (const auto* of = std::get_if<OutputFeedbackLaw>(&c.law())) put("K.dat", of->k);
  if (const auto* lb = std::get_if<LuenbergerLaw>(&c.law())) {
    put("K_tilde.dat", lb->k_tilde);
    put("L.dat", lb->l);
    put("A_cl.dat", lb->a_cl);
    put("sampling.dat", lb->sampling);
  }
}

}  // namespace

CommandResult cmd_simulate(const Config& config, const std::string& out_dir) {
  const std::string dir = prepare(out_dir);
  const std::string hash = config_hash(config);
  const RunConfig rc = config.run_config();
  const TrajectoryRecord rec = run(rc);

  CommandResult r;
  r.exit_code = exit_code_for(rec.verdict);
  write_text(dir + "/config.ini", to_text(config));
  r.files.push_back("config.ini");
  if (rec.verdict != Verdict::SynthesisFailed) {
    write_trajectory(dir + "/trajectory.dat", rec, rc.actuators, hash);
    r.files.push_back("trajectory.dat");
    for (const Snapshot& s : rec.snapshots) {
      const std::string name = snapshot_name(s.t);
      write_snapshot(dir + "/" + name, s, hash);
      r.files.push_back(name);
    }
  }
  if (rec.controller) {
    write_text(dir + "/controller.json", to_json(*rec.controller) + "\n");
    r.files.push_back("controller.json");
  }

  ordered_json s;
  s["command"] = "simulate";
  s["verdict"] = to_string(rec.verdict);
  s["cost"] = number(rec.final_cost);
  s["decay_rate"] = number(rec.decay.rate);
  s["decay_r2"] = number(rec.decay.r2);
  if (!rec.est_err.empty()) {
    s["estimator_decay_rate"] = number(rec.est_decay.rate);
    s["estimator_decay_r2"] = number(rec.est_decay.r2);
  }
  s["final_norm"] = number(rec.final_norm);
  s["epsilon"] = rc.epsilon;
  if (rec.controller) {
    s["linear_prediction"] = std::abs(rec.controller->info().closed_loop_abscissa);
    s["controller"] = controller_json(rec.controller->info());
  }
  s["mass_defect"] = number(rec.mass_defect);
  s["accepted_steps"] = rec.accepted_steps;
  s["rejected_steps"] = rec.rejected_steps;
  s["message"] = rec.message;
  s["params"] = params_json(config);
  s["seed"] = config.seed;
  s["config_hash"] = hash;

  r.message = std::string(to_string(rec.verdict)) + ": final ||h-1|| = " + format_number(rec.final_norm) +
              ", cost = " + format_number(rec.final_cost) + ", decay rate = " + format_number(rec.decay.rate) +
              (rec.message.empty() ? "" : " (" + rec.message + ")");
  finish(r, dir, std::move(s));
  return r;
}

CommandResult cmd_synthesize(const Config& config, const std::string& out_dir) {
  const std::string dir = prepare(out_dir);
  const std::string hash = config_hash(config);
  const RunConfig rc = config.run_config();
  CommandResult r;
  write_text(dir + "/config.ini", to_text(config));
  r.files.push_back("config.ini");

  const SynthesisContext ctx = run_context(rc);
  const LinearSystem sys = linearize(ctx.params, ctx.grid, ctx.actuators, ctx.observers);
  if (config.dump_matrices) dump_system(sys, dir, r.files);

  ordered_json s;
  s["command"] = "synthesize";
  s["params"] = params_json(config);
  s["config_hash"] = hash;
  if (!rc.strategy) {
    r.exit_code = kExitUsage;
    r.message = "no strategy selected (set control.strategy or --strategy)";
    s["error"] = r.message;
    finish(r, dir, std::move(s));
    return r;
  }
  try {
    const Controller c = [&] {
      switch (*rc.strategy) {
        case Strategy::FullState: return synth_full_state(sys, ctx, rc.synthesis);
        case Strategy::OutputFeedback: return synth_output_feedback(sys, ctx, rc.synthesis);
        case Strategy::Luenberger: return synth_luenberger(sys, ctx, rc.synthesis);
      }
      throw InvalidArgument("unknown strategy");
    }();
    write_text(dir + "/controller.json", to_json(c) + "\n");
    r.files.push_back("controller.json");
    if (config.dump_matrices) dump_controller(c, dir, r.files);
    s["status"] = "ok";
    s["controller"] = controller_json(c.info());
    r.message = std::string(to_string(*rc.strategy)) +
                " synthesised, closed-loop abscissa = " + format_number(c.info().closed_loop_abscissa);
  } catch (const SynthesisError& e) {
    r.exit_code = kExitSynthesisFailed;
    r.message = std::string("synthesis failed (") + to_string(e.kind()) + "): " + e.what();
    s["status"] = "synthesis_failed";
    s["failure_kind"] = to_string(e.kind());
    s["error"] = e.what();
  }
  finish(r, dir, std::move(s));
  return r;
}

CommandResult cmd_spectrum(const Config& config, const std::string& out_dir) {
  const std::string dir = prepare(out_dir);
  const std::string hash = config_hash(config);
  const RunConfig rc = config.run_config();
  CommandResult r;

  const SynthesisContext ctx = run_context(rc);
  const LinearSystem sys = linearize(ctx.params, ctx.grid, ctx.actuators, ctx.observers);
  const ModalDecomposition md = modal_spectrum(sys);
  write_spectrum(dir + "/spectrum_open.dat", block_eigenvalues(md), hash);
  r.files.push_back("spectrum_open.dat");

  ordered_json s;
  s["command"] = "spectrum";
  s["unstable_real_dims"] = md.unstable_real_dims;
  s["unstable_complex_modes"] = md.unstable_complex_modes;
  s["neutral_real_dims"] = md.neutral_real_dims;
  s["open_loop_abscissa"] = md.ranking.empty() ? 0.0 : md.ranking.front().value.real();
  r.message = "open loop: " + std::to_string(md.unstable_real_dims) + " unstable real dimensions";

  if (rc.strategy) {
    try {
      const Controller c = synthesise(*rc.strategy, ctx, rc.synthesis);
      const ComplexVector cl = eigenvalues(resolved_closed_loop_matrix(sys, c));
      write_spectrum(dir + "/spectrum_closed.dat", cl, hash);
      r.files.push_back("spectrum_closed.dat");
      s["closed_loop_abscissa"] = c.info().closed_loop_abscissa;
      s["closed_loop_unstable"] = count_unstable(cl);
      s["controller"] = controller_json(c.info());
      r.message += "; closed loop abscissa " + format_number(c.info().closed_loop_abscissa);
    } catch (const SynthesisError& e) {
      r.exit_code = kExitSynthesisFailed;
      s["synthesis_failed"] = std::string(to_string(e.kind())) + ": " + e.what();
      r.message += std::string("; synthesis failed: ") + e.what();
    }
  }
  s["params"] = params_json(config);
  s["config_hash"] = hash;
  finish(r, dir, std::move(s));
  return r;
}

CommandResult cmd_sweep(const Config& config, const std::string& out_dir) {
  config.sweep.validate();
  const std::string dir = prepare(out_dir);
  const std::string hash = config_hash(config);

  struct Point {
    Strategy strategy;
    double re;
    int m, p;
    Verdict verdict = Verdict::NotStabilised;
    double final_norm = 0.0, cost = 0.0;
    std::string message;
  };
  std::vector<Point> points;
  for (Strategy st : config.sweep.strategies)
    for (double re : config.sweep.reynolds)
      for (int m : config.sweep.m_list)
        for (int p : config.sweep.p_list) points.push_back({st, re, m, p, Verdict::NotStabilised, 0.0, 0.0, {}});

  const RunConfig base = config.run_config();
  auto evaluate = [&](std::size_t i) {
    Point& pt = points[i];
    RunConfig rc = base;
    rc.params.reynolds = pt.re;
    rc.actuators = pt.m;
    rc.observers = pt.p;
    rc.strategy = pt.strategy;
    rc.controller.reset();
    rc.snapshot_times.clear();
    rc.perturbation.seed = point_seed(config.seed, i);
    try {
      const TrajectoryRecord rec = run(rc);
      pt.verdict = rec.verdict;
      pt.final_norm = rec.final_norm;
      pt.cost = rec.final_cost;
      pt.message = rec.message;
    } catch (const std::exception& e) {
      pt.verdict = Verdict::NotStabilised;
      pt.final_norm = std::numeric_limits<double>::quiet_NaN();
      pt.message = e.what();
    }
  };

  int workers = config.sweep.workers > 0 ? config.sweep.workers
                                          : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  workers = std::min<int>(workers, static_cast<int>(points.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < points.size();) evaluate(i);
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  CommandResult r;
  ordered_json s;
  s["command"] = "sweep";
  ordered_json per = ordered_json::object();
  std::string table = "# filmctl sweep\n# config_hash = " + hash +
                      "\n# verdict codes: 0 stabilised, 1 not_stabilised, 2 blow_up, 3 synthesis_failed"
                      "\n# columns: R M P strategy verdict final_norm cost\n";
  for (std::size_t si = 0; si < config.sweep.strategies.size(); ++si) {
    const Strategy st = config.sweep.strategies[si];
    std::vector<SweepPoint> ok, bad, gaps;
    for (const Point& p : points) {
      if (p.strategy != st) continue;
      const SweepPoint row{p.re, double(p.m), double(p.p)};
      (p.verdict == Verdict::Stabilised ? ok : p.verdict == Verdict::SynthesisFailed ? gaps : bad).push_back(row);
    }
    const std::string name = to_string(st);
    for (const auto& [prefix, list] : {std::pair{"success_", &ok}, {"failure_", &bad}, {"gaps_", &gaps}}) {
      const std::string file = prefix + name + ".dat";
      write_points(dir + "/" + file, *list);
      r.files.push_back(file);
    }
    per[name] = {{"success", ok.size()}, {"failure", bad.size()}, {"synthesis_failed", gaps.size()}};
  }
  for (const Point& p : points) {
    const auto code = static_cast<int>(p.verdict);
    table += format_number(p.re) + " " + std::to_string(p.m) + " " + std::to_string(p.p) + " " +
             std::to_string(static_cast<int>(p.strategy)) + " " + std::to_string(code) + " " +
             format_number(p.final_norm) + " " + format_number(p.cost) + "\n";
  }
  write_text(dir + "/sweep_points.dat", table);
  r.files.push_back("sweep_points.dat");

  ordered_json failures = ordered_json::array();
  for (const Point& p : points)
    if (p.verdict != Verdict::Stabilised)
      failures.push_back({{"strategy", to_string(p.strategy)},
                          {"R", p.re},
                          {"M", p.m},
                          {"P", p.p},
                          {"verdict", to_string(p.verdict)},
                          {"message", p.message}});
  s["points"] = points.size();
  s["workers"] = workers;
  s["strategies"] = per;
  s["unsuccessful"] = failures;
  s["params"] = params_json(config);
  s["seed"] = config.seed;
  s["config_hash"] = hash;
  r.message = "sweep of " + std::to_string(points.size()) + " points finished";
  finish(r, dir, std::move(s));
  return r;
}

}  // namespace filmctl
