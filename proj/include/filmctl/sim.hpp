#pragma once

#include "filmctl/core.hpp"
#include "filmctl/synth.hpp"
#include "filmctl/wrmodel.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace filmctl {

enum class Verdict { Stabilised, NotStabilised, BlowUp, SynthesisFailed };

const char* to_string(Verdict v) noexcept;

struct StepperOptions {
  double rtol = 1e-6;
  double atol = 1e-10;
  double dt_init = 1e-3;
  double dt_min = 1e-10;
  /// Upper bound on the step; controls and observations are held over a step.
  double dt_max = 0.05;
};

/// Initial condition: h = 1 + amplitude sum_m cos(2 pi m x / L) + mean-free
/// seeded noise, q = (2/3) h^3 (locally slaved flux).
struct Perturbation {
  std::vector<int> modes{1, 2, 3};
  double amplitude = 0.1;
  double noise = 1e-3;
  std::uint64_t seed = 0;
};

struct RunConfig {
  PhysicalParams params;
  int nodes = 256;
  int actuators = 5;
  int observers = 5;
  double omega = 0.1;
  bool dealias = false;

  /// Controller design; nullopt runs uncontrolled throughout.
  std::optional<Strategy> strategy;
  SynthesisOptions synthesis;
  /// Pre-synthesised controller; skips synthesis when present.
  std::optional<Controller> controller;

  double burn_in_time = 300.0;
  double control_time = 100.0;
  StepperOptions stepper;
  Perturbation perturbation;
  /// Replaces the generated initial condition.
  std::optional<FilmState> initial_state;
  /// Rotates the initial state, actuators and observers by this many nodes.
  int rotate_nodes = 0;

  double epsilon = 1e-3;
  double h_min = 1e-3;
  double h_max = 10.0;

  double sample_interval = 0.1;
  std::vector<double> snapshot_times;

  /// Throws InvalidArgument naming the first bad field.
  void validate() const;
};

struct Snapshot {
  double t = 0.0;
  Vector x, h, f;
  std::optional<Vector> h_est;  ///< 1 + F_u^-1 z (Luenberger)
};

struct LogLinearFit {
  double rate = 0.0;  ///< -slope of log(y) against t
  double r2 = 0.0;
  int points = 0;
};

/// Least-squares line through (t, log y) for the samples with t in [t0, t1]
/// and y > 0.
LogLinearFit fit_log_linear(const std::vector<double>& t, const std::vector<double>& y, double t0, double t1);

struct TrajectoryRecord {
  std::vector<double> t;
  std::vector<double> norm;  ///< ||h - 1||_2 / sqrt(L)
  std::vector<double> cost;
  std::vector<Vector> eta;
  std::vector<double> est_err;  ///< ||h - 1 - F_u^-1 z||_2 / sqrt(L), Luenberger only
  std::vector<Snapshot> snapshots;

  Verdict verdict = Verdict::NotStabilised;
  std::string message;
  std::optional<Controller> controller;

  LogLinearFit decay;      ///< of norm over the controlled window
  LogLinearFit est_decay;  ///< of est_err over the controlled window
  double final_norm = 0.0;
  double final_cost = 0.0;
  /// Largest |mass(t) - mass(t0) - int int f dx dt| seen at any accepted step.
  double mass_defect = 0.0;
  long accepted_steps = 0;
  long rejected_steps = 0;
  FilmState final_state;
  double epsilon = 0.0;
};

/// Adaptive second-order IMEX integrator for the film model. The linear
/// operator about the flat film is implicit, the remainder explicit; steps are
/// controlled by step doubling.
class Stepper {
 public:
  Stepper(const Grid& grid, const PhysicalParams& params, StepperOptions opts = {}, bool dealias = false);

  struct Result {
    FilmState state;
    double dt_taken = 0.0;
    double dt_next = 0.0;
    double error = 0.0;
    int rejected = 0;
  };

  /// One accepted step of at most `dt` (reduced until the error test passes)
  /// with the injection `f` held fixed. Throws StiffnessError below dt_min.
  Result step(const FilmState& state, const Vector& f, double dt) const;

  /// A single IMEX step of exactly `dt`, no error control.
  FilmState advance(const FilmState& state, const Vector& f, double dt) const;

  const WrModel& model() const noexcept { return model_; }
  const StepperOptions& options() const noexcept { return opts_; }

 private:
  void solve_implicit(Vector& h, Vector& q, double scale) const;
  void apply_linear(const Vector& h, const Vector& q, Vector& ah, Vector& aq) const;
  void explicit_part(const Vector& h, const Vector& q, const Vector& f, Vector& nh, Vector& nq) const;

  WrModel model_;
  StepperOptions opts_;
  std::vector<Eigen::Matrix2cd> symbols_;
};

FilmState initial_state(const Grid& grid, const Perturbation& p);

/// Rotate a periodic field by `offset` nodes: out[(j + offset) mod N] = v[j].
Vector roll(const Vector& v, int offset);

/// Grid, banks and linear system exactly as `run` builds them.
SynthesisContext run_context(const RunConfig& config);

TrajectoryRecord run(const RunConfig& config);

}  // namespace filmctl
