#include "filmctl/sim.hpp"

#include "filmctl/errors.hpp"
#include "filmctl/linsys.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace filmctl {

const char* to_string(Verdict v) noexcept {
  switch (v) {
    case Verdict::Stabilised: return "stabilised";
    case Verdict::NotStabilised: return "not_stabilised";
    case Verdict::BlowUp: return "blow_up";
    case Verdict::SynthesisFailed: return "synthesis_failed";
  }
  return "unknown";
}

void RunConfig::validate() const {
  params.validate();
  if (nodes < 8 || nodes % 2 != 0) throw InvalidArgument("nodes must be an even number >= 8");
  if (actuators < 1) throw InvalidArgument("actuators must be positive");
  if (observers < 1 || observers > nodes) throw InvalidArgument("observers must lie in [1, nodes]");
  if (!(omega > 0.0)) throw InvalidArgument("omega must be positive");
  if (!(burn_in_time >= 0.0)) throw InvalidArgument("burn_in_time must be non-negative");
  if (!(control_time > 0.0)) throw InvalidArgument("control_time must be positive");
  if (!(stepper.rtol > 0.0) || !(stepper.atol > 0.0)) throw InvalidArgument("tolerances must be positive");
  if (!(stepper.dt_init > 0.0) || !(stepper.dt_min > 0.0) || !(stepper.dt_max >= stepper.dt_min))
    throw InvalidArgument("step bounds must be positive and ordered");
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be positive");
  if (!(h_min > 0.0) || !(h_max > h_min)) throw InvalidArgument("height bounds must satisfy 0 < h_min < h_max");
  if (!(sample_interval > 0.0)) throw InvalidArgument("sample_interval must be positive");
  if (!(perturbation.amplitude >= 0.0) || !(perturbation.noise >= 0.0))
    throw InvalidArgument("perturbation amplitudes must be non-negative");
  for (int m : perturbation.modes)
    if (m < 1 || m >= nodes / 2) throw InvalidArgument("perturbation mode numbers must lie in [1, nodes/2)");
  if (initial_state && (initial_state->size() != nodes || initial_state->q.size() != nodes))
    throw InvalidArgument("initial_state does not match nodes");
}

LogLinearFit fit_log_linear(const std::vector<double>& t, const std::vector<double>& y, double t0, double t1) {
  double st = 0, sy = 0, stt = 0, sty = 0, syy = 0;
  int n = 0;
  for (std::size_t i = 0; i < t.size() && i < y.size(); ++i) {
    if (t[i] < t0 || t[i] > t1 || !(y[i] > 0.0)) continue;
    const double ly = std::log(y[i]);
    st += t[i];
    sy += ly;
    stt += t[i] * t[i];
    sty += t[i] * ly;
    syy += ly * ly;
    ++n;
  }
  LogLinearFit fit;
  fit.points = n;
  if (n < 3) return fit;
  const double vt = stt - st * st / n, vy = syy - sy * sy / n, cty = sty - st * sy / n;
  if (!(vt > 0.0)) return fit;
  const double slope = cty / vt;
  fit.rate = -slope;
  fit.r2 = vy > 0.0 ? cty * cty / (vt * vy) : 1.0;
  return fit;
}

// ---------------------------------------------------------------------------
// Stepper

Stepper::Stepper(const Grid& grid, const PhysicalParams& params, StepperOptions opts, bool dealias)
    : model_(grid, params, dealias), opts_(opts) {
  const SpectralOps& ops = model_.spectral();
  symbols_.reserve(ops.size());
  for (int j = 0; j < ops.size(); ++j) symbols_.push_back(linear_symbol(params, ops, j));
}

void Stepper::apply_linear(const Vector& h, const Vector& q, Vector& ah, Vector& aq) const {
  const SpectralOps& ops = model_.spectral();
  const ComplexVector hh = ops.forward(h.array() - 1.0);
  const ComplexVector qh = ops.forward(q.array() - kNusseltFlux);
  ComplexVector oh(hh.size()), oq(qh.size());
  for (Eigen::Index j = 0; j < hh.size(); ++j) {
    const Eigen::Matrix2cd& m = symbols_[j];
    oh[j] = m(0, 0) * hh[j] + m(0, 1) * qh[j];
    oq[j] = m(1, 0) * hh[j] + m(1, 1) * qh[j];
  }
  ah = ops.inverse(oh);
  aq = ops.inverse(oq);
}

// Solve (I - scale A) xi = xi_rhs in place on the deviation from the flat film.
void Stepper::solve_implicit(Vector& h, Vector& q, double scale) const {
  const SpectralOps& ops = model_.spectral();
  ComplexVector hh = ops.forward(h.array() - 1.0);
  ComplexVector qh = ops.forward(q.array() - kNusseltFlux);
  for (Eigen::Index j = 0; j < hh.size(); ++j) {
    const Eigen::Matrix2cd& m = symbols_[j];
    const std::complex<double> a = 1.0 - scale * m(0, 0), b = -scale * m(0, 1);
    const std::complex<double> c = -scale * m(1, 0), d = 1.0 - scale * m(1, 1);
    const std::complex<double> det = a * d - b * c;
    const std::complex<double> x = (d * hh[j] - b * qh[j]) / det;
    const std::complex<double> y = (a * qh[j] - c * hh[j]) / det;
    hh[j] = x;
    qh[j] = y;
  }
  h = ops.inverse(hh).array() + 1.0;
  q = ops.inverse(qh).array() + kNusseltFlux;
}

void Stepper::explicit_part(const Vector& h, const Vector& q, const Vector& f, Vector& nh, Vector& nq) const {
  Vector ah, aq;
  model_.rhs(h, q, f, nh, nq);
  apply_linear(h, q, ah, aq);
  nh -= ah;
  nq -= aq;
}

// Ascher-Ruuth-Spiteri (2,2,2): L-stable, stiffly accurate.
FilmState Stepper::advance(const FilmState& s, const Vector& f, double dt) const {
  static const double gamma = 1.0 - 1.0 / std::numbers::sqrt2;
  static const double delta = 1.0 - 1.0 / (2.0 * gamma);
  const double gdt = gamma * dt;

  Vector n1h, n1q, n2h, n2q;
  explicit_part(s.h, s.q, f, n1h, n1q);

  Vector h2 = s.h + gdt * n1h, q2 = s.q + gdt * n1q;
  const Vector r2h = h2, r2q = q2;
  solve_implicit(h2, q2, gdt);
  // A xi_2 recovered from the stage equation.
  const Vector a2h = (h2 - r2h) / gdt, a2q = (q2 - r2q) / gdt;

  explicit_part(h2, q2, f, n2h, n2q);
  Vector h3 = s.h + dt * (delta * n1h + (1.0 - delta) * n2h) + (1.0 - gamma) * dt * a2h;
  Vector q3 = s.q + dt * (delta * n1q + (1.0 - delta) * n2q) + (1.0 - gamma) * dt * a2q;
  solve_implicit(h3, q3, gdt);
  return {std::move(h3), std::move(q3), s.t + dt};
}

Stepper::Result Stepper::step(const FilmState& state, const Vector& f, double dt) const {
  Result r;
  const Eigen::Index n = state.h.size();
  for (;;) {
    if (dt < opts_.dt_min)
      throw StiffnessError("step size " + std::to_string(dt) + " fell below the floor at t = " +
                           std::to_string(state.t));
    double err = 0.0;
    FilmState fine;
    bool ok = true;
    try {
      const FilmState coarse = advance(state, f, dt);
      const FilmState half = advance(state, f, 0.5 * dt);
      fine = advance(half, f, 0.5 * dt);
      double sum = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        const double sh = opts_.atol + opts_.rtol * std::max(std::abs(state.h[j]), std::abs(fine.h[j]));
        const double sq = opts_.atol + opts_.rtol * std::max(std::abs(state.q[j]), std::abs(fine.q[j]));
        const double eh = (fine.h[j] - coarse.h[j]) / (3.0 * sh);
        const double eq = (fine.q[j] - coarse.q[j]) / (3.0 * sq);
        sum += eh * eh + eq * eq;
      }
      err = std::sqrt(sum / (2.0 * n));
      if (!std::isfinite(err)) ok = false;
    } catch (const DomainError&) {
      ok = false;
    }
    if (ok && err <= 1.0) {
      fine.t = state.t + dt;
      r.state = std::move(fine);
      r.dt_taken = dt;
      r.error = err;
      const double factor = err > 0.0 ? 0.9 * std::pow(err, -1.0 / 3.0) : 2.0;
      r.dt_next = std::min(opts_.dt_max, dt * std::clamp(factor, 0.2, 2.0));
      return r;
    }
    ++r.rejected;
    dt *= ok ? std::clamp(0.9 * std::pow(err, -1.0 / 3.0), 0.2, 0.5) : 0.5;
  }
}

// ---------------------------------------------------------------------------
// Runs

FilmState initial_state(const Grid& grid, const Perturbation& p) {
  const int n = grid.size();
  const double L = grid.length();
  FilmState s = nusselt_state(grid);
  for (int m : p.modes)
    for (int j = 0; j < n; ++j) s.h[j] += p.amplitude * std::cos(2.0 * std::numbers::pi * m * grid.x(j) / L);
  if (p.noise > 0.0) {
    std::mt19937_64 rng(p.seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    Vector w(n);
    for (int j = 0; j < n; ++j) w[j] = nd(rng);
    // Mean-free and free of the Nyquist checkerboard, which is neutral and
    // out of reach of every actuator.
    w.array() -= w.mean();
    double nyq = 0.0;
    for (int j = 0; j < n; ++j) nyq += (j % 2 ? -w[j] : w[j]);
    nyq /= n;
    for (int j = 0; j < n; ++j) w[j] -= (j % 2 ? -nyq : nyq);
    s.h += p.noise * w;
  }
  s.q = kNusseltFlux * s.h.array().cube();
  return s;
}

Vector roll(const Vector& v, int offset) {
  const Eigen::Index n = v.size();
  Vector out(n);
  for (Eigen::Index j = 0; j < n; ++j) out[((j + offset) % n + n) % n] = v[j];
  return out;
}

SynthesisContext run_context(const RunConfig& config) {
  const Grid grid(config.nodes, config.params.length);
  ActuatorBank act = ActuatorBank::evenly_spaced(config.actuators, config.omega, config.params.length);
  ObserverBank obs = ObserverBank::evenly_spaced(config.observers, grid);
  if (config.rotate_nodes != 0) {
    act = act.shifted(config.rotate_nodes * grid.dx());
    obs = obs.shifted(config.rotate_nodes, config.nodes);
  }
  return {config.params, grid, std::move(act), std::move(obs)};
}

namespace {

double rms_deviation(const Vector& h) { return std::sqrt((h.array() - 1.0).square().mean()); }

class Runner {
 public:
  Runner(const RunConfig& cfg, const SynthesisContext& ctx)
      : cfg_(cfg),
        ctx_(ctx),
        stepper_(ctx.grid, cfg.params, cfg.stepper, cfg.dealias),
        dx_(ctx.grid.dx()),
        u_weight_(cfg.params.beta * cfg.params.length / cfg.nodes),
        v_weight_(1.0 - cfg.params.beta) {}

  TrajectoryRecord run(std::optional<Controller> controller);

 private:
  void sample(const FilmState& s, const Vector& eta, const Controller* c);
  void snapshot(const FilmState& s, const Vector& f, const Controller* c);
  bool integrate(FilmState& s, double t_end, Controller* c);

  const RunConfig& cfg_;
  const SynthesisContext& ctx_;
  Stepper stepper_;
  double dx_, u_weight_, v_weight_;

  TrajectoryRecord rec_;
  std::vector<double> stops_;
  std::size_t next_snapshot_ = 0;
  double dt_ = 0.0;
  double cost_ = 0.0;
  double mass0_ = 0.0;
  double injected_ = 0.0;
};

void Runner::sample(const FilmState& s, const Vector& eta, const Controller* c) {
  rec_.t.push_back(s.t);
  rec_.norm.push_back(rms_deviation(s.h));
  rec_.cost.push_back(cost_);
  rec_.eta.push_back(eta);
  if (c && c->strategy() == Strategy::Luenberger) {
    const Vector est = *c->estimated_height();
    rec_.est_err.push_back(std::sqrt((s.h.array() - 1.0 - est.array()).square().mean()));
  } else if (cfg_.strategy == Strategy::Luenberger || (cfg_.controller && cfg_.controller->strategy() == Strategy::Luenberger)) {
    rec_.est_err.push_back(rms_deviation(s.h));
  }
}

void Runner::snapshot(const FilmState& s, const Vector& f, const Controller* c) {
  Snapshot snap;
  snap.t = s.t;
  snap.x = ctx_.grid.coordinates();
  snap.h = s.h;
  snap.f = f;
  if (c && c->strategy() == Strategy::Luenberger) snap.h_est = Vector(c->estimated_height()->array() + 1.0);
  rec_.snapshots.push_back(std::move(snap));
}

// Integrate to t_end; control (if any) is sampled at each step start and held.
// Returns false on blow-up, with the verdict and message set.
bool Runner::integrate(FilmState& s, double t_end, Controller* c) {
  const int m = ctx_.actuators.size();
  const double tiny = 1e-9 * std::max(1.0, std::abs(t_end));
  double next_sample = rec_.t.empty() ? s.t : rec_.t.back() + cfg_.sample_interval;
  Vector eta = Vector::Zero(m);
  Vector f = Vector::Zero(cfg_.nodes);
  auto observe = [&]() {
    if (c) {
      const Vector xi = (Vector(2 * cfg_.nodes) << s.h.array() - 1.0, s.q.array() - kNusseltFlux).finished();
      const Vector zeta = ctx_.observers.sample(s.h.array() - 1.0);
      eta = c->control(xi, zeta);
      f = ctx_.actuators.field(ctx_.grid, eta);
      return zeta;
    }
    return Vector();
  };

  while (s.t < t_end - tiny) {
    const Vector zeta = observe();
    if (std::abs(s.t - next_sample) <= tiny) {
      sample(s, eta, c);
      next_sample += cfg_.sample_interval;
      // Guard against drift of the accumulated sample clock.
      next_sample = std::round(next_sample / cfg_.sample_interval) * cfg_.sample_interval;
    }
    while (next_snapshot_ < cfg_.snapshot_times.size() && cfg_.snapshot_times[next_snapshot_] <= s.t + tiny) {
      if (std::abs(cfg_.snapshot_times[next_snapshot_] - s.t) <= tiny) snapshot(s, f, c);
      ++next_snapshot_;
    }

    double stop = std::min(t_end, next_sample);
    if (next_snapshot_ < cfg_.snapshot_times.size()) stop = std::min(stop, cfg_.snapshot_times[next_snapshot_]);
    const double dt = std::min(dt_, stop - s.t);

    Stepper::Result r;
    try {
      r = stepper_.step(s, f, dt);
    } catch (const StiffnessError& e) {
      rec_.verdict = Verdict::BlowUp;
      rec_.message = e.what();
      return false;
    }
    rec_.rejected_steps += r.rejected;
    ++rec_.accepted_steps;
    // Only shrink the proposal when the step was cut short by a rejection, not
    // when it was trimmed to land on an output time.
    dt_ = r.rejected > 0 || dt >= dt_ ? r.dt_next : std::max(dt_, r.dt_next);

    const double h_dev0 = (s.h.array() - 1.0).square().sum();
    const double h_dev1 = (r.state.h.array() - 1.0).square().sum();
    if (c) {
      cost_ += r.dt_taken * (0.5 * u_weight_ * (h_dev0 + h_dev1) + v_weight_ * eta.squaredNorm());
      c->advance(zeta, r.dt_taken);
    }
    injected_ += r.dt_taken * f.sum() * dx_;
    // Land exactly on the output clock when the step was trimmed to it.
    if (std::abs(r.state.t - stop) <= tiny) r.state.t = stop;
    s = std::move(r.state);

    rec_.mass_defect = std::max(rec_.mass_defect, std::abs(mass(s, cfg_.params.length) - mass0_ - injected_));
    const double hmin = s.h.minCoeff(), hmax = s.h.maxCoeff();
    if (hmin < cfg_.h_min || hmax > cfg_.h_max) {
      rec_.verdict = Verdict::BlowUp;
      rec_.message = "film height left [" + std::to_string(cfg_.h_min) + ", " + std::to_string(cfg_.h_max) +
                     "] at t = " + std::to_string(s.t);
      sample(s, eta, c);
      return false;
    }
  }
  s.t = t_end;
  observe();
  if (rec_.t.empty() || std::abs(rec_.t.back() - s.t) > tiny) sample(s, eta, c);
  while (next_snapshot_ < cfg_.snapshot_times.size() && cfg_.snapshot_times[next_snapshot_] <= s.t + tiny) {
    if (std::abs(cfg_.snapshot_times[next_snapshot_] - s.t) <= tiny) snapshot(s, f, c);
    ++next_snapshot_;
  }
  return true;
}

TrajectoryRecord Runner::run(std::optional<Controller> controller) {
  rec_.epsilon = cfg_.epsilon;

  FilmState s = cfg_.initial_state ? *cfg_.initial_state : initial_state(ctx_.grid, cfg_.perturbation);
  if (cfg_.rotate_nodes != 0) {
    s.h = roll(s.h, cfg_.rotate_nodes);
    s.q = roll(s.q, cfg_.rotate_nodes);
  }
  s.t = -cfg_.burn_in_time;
  mass0_ = mass(s, cfg_.params.length);
  dt_ = std::min(cfg_.stepper.dt_init, cfg_.stepper.dt_max);

  if (cfg_.burn_in_time > 0.0 && !integrate(s, 0.0, nullptr)) {
    rec_.final_state = s;
    rec_.final_norm = rms_deviation(s.h);
    return std::move(rec_);
  }

  Controller* c = controller ? &*controller : nullptr;
  if (c) c->reset();
  // The switch-on sample replaces the last uncontrolled one so t = 0 carries
  // the first control amplitudes.
  if (!rec_.t.empty() && std::abs(rec_.t.back()) < 1e-9) {
    rec_.t.pop_back();
    rec_.norm.pop_back();
    rec_.cost.pop_back();
    rec_.eta.pop_back();
    if (!rec_.est_err.empty()) rec_.est_err.pop_back();
    if (!rec_.snapshots.empty() && std::abs(rec_.snapshots.back().t) < 1e-9) {
      rec_.snapshots.pop_back();
      next_snapshot_ = 0;
      while (next_snapshot_ < cfg_.snapshot_times.size() && cfg_.snapshot_times[next_snapshot_] < -1e-9)
        ++next_snapshot_;
    }
  }
  const bool ok = integrate(s, cfg_.control_time, c);

  rec_.final_state = s;
  rec_.final_norm = rms_deviation(s.h);
  rec_.final_cost = cost_;
  rec_.decay = fit_log_linear(rec_.t, rec_.norm, 0.0, cfg_.control_time);
  if (!rec_.est_err.empty()) rec_.est_decay = fit_log_linear(rec_.t, rec_.est_err, 0.0, cfg_.control_time);
  if (controller) rec_.controller = std::move(controller);
  if (!ok) return std::move(rec_);

  const LogLinearFit tail = fit_log_linear(rec_.t, rec_.norm, 0.75 * cfg_.control_time, cfg_.control_time);
  const bool decreasing = tail.rate > 0.0 || rec_.final_norm < 1e-12;
  if (rec_.final_norm < cfg_.epsilon && decreasing) {
    rec_.verdict = Verdict::Stabilised;
  } else {
    rec_.verdict = Verdict::NotStabilised;
    rec_.message = "final deviation " + std::to_string(rec_.final_norm) + (decreasing ? "" : " (not decreasing)") +
                   " vs epsilon " + std::to_string(cfg_.epsilon);
  }
  return std::move(rec_);
}

}  // namespace

TrajectoryRecord run(const RunConfig& config) {
  config.validate();
  const SynthesisContext ctx = run_context(config);

  std::optional<Controller> controller = config.controller;
  if (!controller && config.strategy) {
    try {
      controller = synthesise(*config.strategy, ctx, config.synthesis);
    } catch (const SynthesisError& e) {
      TrajectoryRecord rec;
      rec.verdict = Verdict::SynthesisFailed;
      rec.message = std::string(to_string(e.kind())) + ": " + e.what();
      rec.epsilon = config.epsilon;
      return rec;
    }
  }
  RunConfig local = config;
  std::sort(local.snapshot_times.begin(), local.snapshot_times.end());
  Runner runner(local, ctx);
  return runner.run(std::move(controller));
}

}  // namespace filmctl
