#include "filmctl/errors.hpp"
#include "filmctl/linsys.hpp"
#include "filmctl/sim.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace filmctl;

namespace {

RunConfig base(double re, int n) {
  RunConfig c;
  c.params.reynolds = re;
  c.nodes = n;
  return c;
}

FilmState single_mode(const Grid& grid, int mode, double amp) {
  FilmState s = nusselt_state(grid);
  for (int j = 0; j < grid.size(); ++j)
    s.h[j] += amp * std::cos(2.0 * std::numbers::pi * mode * grid.x(j) / grid.length());
  s.q = kNusseltFlux * s.h.array().cube();
  return s;
}

}  // namespace

TEST_CASE("log-linear fit recovers an exact exponential") {
  std::vector<double> t, y;
  for (int i = 0; i <= 50; ++i) {
    t.push_back(0.5 * i);
    y.push_back(3.0 * std::exp(-0.07 * t.back()));
  }
  const LogLinearFit f = fit_log_linear(t, y, 0.0, 25.0);
  CHECK(f.rate == doctest::Approx(0.07).epsilon(1e-12));
  CHECK(f.r2 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(f.points == 51);
  CHECK(fit_log_linear(t, y, 10.0, 12.0).points == 5);
}

TEST_CASE("flat film stays flat") {
  const Grid grid(64, 30.0);
  const Stepper stepper(grid, [] {
    PhysicalParams p;
    p.reynolds = 11.29;
    return p;
  }());
  FilmState s = nusselt_state(grid);
  for (int i = 0; i < 20; ++i) s = stepper.step(s, Vector::Zero(64), 0.05).state;
  CHECK((s.h.array() - 1.0).abs().maxCoeff() < 1e-12);
  CHECK((s.q.array() - kNusseltFlux).abs().maxCoeff() < 1e-12);
}

TEST_CASE("fixed-step scheme is second order") {
  PhysicalParams p;
  p.reynolds = 5.0;
  const Grid grid(32, p.length);
  const Stepper stepper(grid, p);
  const FilmState s0 = single_mode(grid, 1, 0.1);
  auto integrate = [&](double dt) {
    FilmState s = s0;
    const int steps = static_cast<int>(std::lround(2.0 / dt));
    for (int i = 0; i < steps; ++i) s = stepper.advance(s, Vector::Zero(32), dt);
    return s;
  };
  const FilmState ref = integrate(0.1 / 64);
  const double e1 = (integrate(0.1).h - ref.h).cwiseAbs().maxCoeff();
  const double e2 = (integrate(0.05).h - ref.h).cwiseAbs().maxCoeff();
  const double e3 = (integrate(0.025).h - ref.h).cwiseAbs().maxCoeff();
  CHECK(std::log2(e1 / e2) > 1.8);
  CHECK(std::log2(e2 / e3) > 1.8);
}

TEST_CASE("tighter tolerance reduces error against a reference run") {
  PhysicalParams p;
  p.reynolds = 11.29;
  const Grid grid(32, p.length);
  const FilmState s0 = single_mode(grid, 2, 0.2);
  auto integrate = [&](double rtol) {
    StepperOptions o;
    o.rtol = rtol;
    o.dt_max = 1.0;
    const Stepper stepper(grid, p, o);
    FilmState s = s0;
    double dt = 1e-3;
    while (s.t < 5.0 - 1e-12) {
      const auto r = stepper.step(s, Vector::Zero(32), std::min(dt, 5.0 - s.t));
      s = r.state;
      dt = r.dt_next;
    }
    return s;
  };
  const FilmState ref = integrate(1e-9);
  const double e4 = (integrate(1e-4).h - ref.h).cwiseAbs().maxCoeff();
  const double e6 = (integrate(1e-6).h - ref.h).cwiseAbs().maxCoeff();
  CHECK(e6 < e4);
  CHECK(e6 < 1e-4);
}

TEST_CASE("small perturbation grows at the eigenvalue rate") {
  RunConfig c = base(11.29, 64);
  c.burn_in_time = 0.0;
  c.control_time = 40.0;
  const Grid grid(64, c.params.length);
  c.initial_state = single_mode(grid, 2, 1e-6);
  const TrajectoryRecord r = run(c);
  const LogLinearFit f = fit_log_linear(r.t, r.norm, 10.0, 40.0);
  const LinearSystem sys = linearize(c.params, grid, ActuatorBank::evenly_spaced(5, 0.1, 30.0),
                                     ObserverBank::evenly_spaced(5, grid));
  double expected = 0.0;
  for (const ModeRef& m : modal_spectrum(sys).ranking)
    if (m.mode_number == 2) expected = std::max(expected, m.value.real());
  CHECK(std::abs(-f.rate - expected) < 0.01 * expected);
  CHECK(r.verdict == Verdict::NotStabilised);
}

TEST_CASE("controlled run: verdict, bookkeeping and record invariants") {
  RunConfig c = base(11.29, 64);
  c.burn_in_time = 20.0;
  c.control_time = 60.0;
  c.strategy = Strategy::FullState;
  c.snapshot_times = {30.0, -10.0, 0.0};
  const TrajectoryRecord r = run(c);
  CHECK(r.verdict == Verdict::Stabilised);
  CHECK(r.final_norm < c.epsilon);
  CHECK(r.mass_defect < 10.0 * c.stepper.rtol);
  CHECK(r.t.front() == doctest::Approx(-20.0));
  CHECK(r.t.back() == doctest::Approx(60.0));
  for (std::size_t i = 1; i < r.cost.size(); ++i) CHECK(r.cost[i] >= r.cost[i - 1]);
  for (std::size_t i = 1; i < r.t.size(); ++i) CHECK(r.t[i] - r.t[i - 1] == doctest::Approx(0.1).epsilon(1e-6));
  CHECK(r.decay.rate > 0.0);
  REQUIRE(r.snapshots.size() == 3);
  CHECK(r.snapshots[0].t == doctest::Approx(-10.0));
  CHECK(r.snapshots[1].t == 0.0);
  CHECK(r.snapshots[1].f.cwiseAbs().maxCoeff() > 0.0);
  CHECK(r.snapshots[0].f.cwiseAbs().maxCoeff() == 0.0);
  // Burn-in carries no cost and no control.
  for (std::size_t i = 0; i < r.t.size() && r.t[i] < -1e-9; ++i) {
    CHECK(r.cost[i] == 0.0);
    CHECK(r.eta[i].norm() == 0.0);
  }
}

TEST_CASE("estimator run records an error series") {
  RunConfig c = base(5.0, 32);
  c.burn_in_time = 20.0;
  c.control_time = 30.0;
  c.strategy = Strategy::Luenberger;
  c.snapshot_times = {10.0};
  const TrajectoryRecord r = run(c);
  CHECK(r.est_err.size() == r.t.size());
  REQUIRE(r.snapshots.size() == 1);
  CHECK(r.snapshots[0].h_est.has_value());
  CHECK(r.est_err.back() < r.est_err[r.est_err.size() / 2]);
}

TEST_CASE("height bounds end the run as blow-up") {
  RunConfig c = base(11.29, 32);
  c.burn_in_time = 50.0;
  c.h_max = 1.15;
  const TrajectoryRecord r = run(c);
  CHECK(r.verdict == Verdict::BlowUp);
  CHECK(r.message.find("left") != std::string::npos);
}

TEST_CASE("synthesis failure is a verdict, not an exception") {
  RunConfig c = base(11.29, 32);
  c.strategy = Strategy::Luenberger;
  c.synthesis.retain = 2;
  const TrajectoryRecord r = run(c);
  CHECK(r.verdict == Verdict::SynthesisFailed);
  CHECK(r.t.empty());
}

TEST_CASE("runs are deterministic and rotate with the hardware") {
  RunConfig c = base(11.29, 32);
  c.burn_in_time = 10.0;
  c.control_time = 10.0;
  c.strategy = Strategy::FullState;
  c.snapshot_times = {10.0};
  const TrajectoryRecord a = run(c);
  const TrajectoryRecord b = run(c);
  CHECK(a.norm == b.norm);
  CHECK(a.final_state.h == b.final_state.h);

  c.rotate_nodes = 1;
  const TrajectoryRecord s = run(c);
  CHECK((s.final_state.h - roll(a.final_state.h, 1)).cwiseAbs().maxCoeff() < 1e-8);
  REQUIRE(s.snapshots.size() == 1);
  CHECK((s.snapshots[0].h - roll(a.snapshots[0].h, 1)).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("run configuration validation") {
  RunConfig c = base(11.29, 32);
  c.nodes = 31;
  CHECK_THROWS_AS(run(c), InvalidArgument);
  c = base(0.0, 32);
  CHECK_THROWS_AS(run(c), InvalidArgument);
  c = base(1.0, 32);
  c.perturbation.modes = {16};
  CHECK_THROWS_AS(run(c), InvalidArgument);
}
