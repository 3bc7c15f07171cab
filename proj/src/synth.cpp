#include "filmctl/synth.hpp"

#include "filmctl/errors.hpp"

#include <json.hpp>
#include <unsupported/Eigen/MatrixFunctions>

#include <Eigen/SVD>

#include <algorithm>
#include <limits>
#include <cmath>
#include <sstream>

namespace filmctl {

const char* to_string(Strategy s) noexcept {
  switch (s) {
    case Strategy::FullState: return "full_state";
    case Strategy::OutputFeedback: return "output_feedback";
    case Strategy::Luenberger: return "luenberger";
  }
  return "unknown";
}

Strategy strategy_from_string(const std::string& name) {
  if (name == "full_state" || name == "lqr" || name == "full") return Strategy::FullState;
  if (name == "output_feedback" || name == "sof") return Strategy::OutputFeedback;
  if (name == "luenberger" || name == "observer") return Strategy::Luenberger;
  throw InvalidArgument("unknown strategy '" + name + "'");
}

Controller::Controller(Law law, ControllerInfo info) : law_(std::move(law)), info_(std::move(info)) {}

int Controller::actuators() const noexcept {
  return std::visit(
      [](const auto& l) -> int {
        if constexpr (std::is_same_v<std::decay_t<decltype(l)>, LuenbergerLaw>)
          return static_cast<int>(l.k_tilde.rows());
        else
          return static_cast<int>(l.k.rows());
      },
      law_);
}

Vector Controller::control(const Vector& xi, const Vector& zeta) const {
  if (const auto* fs = std::get_if<FullStateLaw>(&law_)) return fs->k * xi;
  if (const auto* of = std::get_if<OutputFeedbackLaw>(&law_)) return of->k * zeta;
  const auto& lb = std::get<LuenbergerLaw>(law_);
  return lb.k_tilde * lb.z;
}

void Controller::advance(const Vector& zeta, double dt) {
  auto* lb = std::get_if<LuenbergerLaw>(&law_);
  if (!lb) return;
  const Eigen::Index nz = lb->a_cl.rows(), p = lb->l.cols();
  if (dt != cached_dt_) {
    // exp([[a_cl, L], [0, 0]] dt) = [[phi, gamma], [0, I]]: exact for zeta held
    // fixed over the step.
    Matrix aug = Matrix::Zero(nz + p, nz + p);
    aug.topLeftCorner(nz, nz) = lb->a_cl * dt;
    aug.topRightCorner(nz, p) = lb->l * dt;
    const Matrix e = aug.exp();
    phi_ = e.topLeftCorner(nz, nz);
    gamma_ = e.topRightCorner(nz, p);
    cached_dt_ = dt;
  }
  lb->z = phi_ * lb->z + gamma_ * zeta;
}

void Controller::reset() {
  if (auto* lb = std::get_if<LuenbergerLaw>(&law_)) lb->z.setZero(lb->a_cl.rows());
}

std::optional<Vector> Controller::estimated_height() const {
  const auto* lb = std::get_if<LuenbergerLaw>(&law_);
  if (!lb) return std::nullopt;
  const Eigen::Index n = lb->prolong.rows() / 2;
  return Vector(lb->prolong.topRows(n) * lb->z);
}

std::vector<int> uncontrollable_modes(const Matrix& a, const Matrix& b, double tolerance) {
  const ComplexVector values = eigenvalues(a);
  const Eigen::Index n = a.rows();
  const double scale = std::max(1.0, a.norm() + b.norm());
  std::vector<int> out;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values[i].real() < -tolerance) continue;
    Eigen::MatrixXcd pbh(n, n + b.cols());
    pbh.leftCols(n) = values[i] * Eigen::MatrixXcd::Identity(n, n) - a.cast<std::complex<double>>();
    pbh.rightCols(b.cols()) = b.cast<std::complex<double>>();
    const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pbh);
    if (svd.singularValues()[n - 1] < 1e-9 * scale) out.push_back(static_cast<int>(i));
  }
  return out;
}

namespace {

ControllerInfo base_info(Strategy s, const LinearSystem& sys, const SynthesisContext& ctx) {
  ControllerInfo info;
  info.strategy = s;
  info.params = ctx.params;
  info.nodes = sys.nodes;
  info.omega = ctx.actuators.omega();
  info.actuator_positions = ctx.actuators.positions();
  info.observer_nodes = ctx.observers.nodes();
  return info;
}

std::string describe(const ComplexVector& values, const std::vector<int>& idx) {
  std::ostringstream os;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (i) os << ", ";
    os << "#" << idx[i] << " (" << values[idx[i]].real() << (values[idx[i]].imag() < 0 ? "" : "+")
       << values[idx[i]].imag() << "i)";
  }
  return os.str();
}

}  // namespace

Controller synth_full_state(const LinearSystem& sys, const SynthesisContext& ctx, const SynthesisOptions&) {
  const ResolvedSystem r = resolve(sys);
  const Matrix kr = lqr_gain(r.a, r.b, r.u, r.v);
  ControllerInfo info = base_info(Strategy::FullState, sys, ctx);
  info.closed_loop_abscissa = spectral_abscissa(r.a + r.b * kr);
  info.unstable_real_dims = modal_spectrum(sys).unstable_real_dims;
  if (!(info.closed_loop_abscissa < -kHurwitzMargin))
    throw SynthesisError(SynthesisError::Kind::NotStabilisable, "full-state closed loop is not Hurwitz");
  return Controller(FullStateLaw{kr * r.basis.transpose()}, std::move(info));
}

Controller synth_output_feedback(const LinearSystem& sys, const SynthesisContext& ctx,
                                 const SynthesisOptions& opts) {
  const ResolvedSystem r = resolve(sys);
  const SofSolution sol = solve_sof(r.a, r.b, r.c, r.u, r.v, opts.sof_initial, opts.sof);
  ControllerInfo info = base_info(Strategy::OutputFeedback, sys, ctx);
  info.closed_loop_abscissa = spectral_abscissa(r.a + r.b * sol.k * r.c);
  info.iterations = sol.iterations;
  info.residual = sol.residual;
  info.initialisation = sol.initialisation;
  info.unstable_real_dims = modal_spectrum(sys).unstable_real_dims;
  if (!(info.closed_loop_abscissa < -kHurwitzMargin))
    throw SynthesisError(SynthesisError::Kind::FailToConverge, "output-feedback closed loop is not Hurwitz");
  return Controller(OutputFeedbackLaw{sol.k}, std::move(info));
}

namespace {

// One estimator design on exactly the `requested` leading modes (plus a
// conjugate partner if needed); no check of the coupled loop.
Controller design_luenberger(const LinearSystem& sys, const SynthesisContext& ctx, const SynthesisOptions& opts,
                             int requested) {
  const ModalDecomposition md = modal_decompose(sys, requested);
  const int nz = md.retained_dim;

  const std::vector<int> bad = uncontrollable_modes(md.a_u, md.b_u);
  if (!bad.empty())
    throw SynthesisError(SynthesisError::Kind::Uncontrollable,
                         "retained modes not controllable: " + describe(eigenvalues(md.a_u), bad));
  const std::vector<int> blind = uncontrollable_modes(md.a_u.transpose(), md.sampling.transpose());
  if (!blind.empty())
    throw SynthesisError(SynthesisError::Kind::Unobservable,
                         "retained modes not observable: " + describe(eigenvalues(md.a_u), blind));

  const Matrix k_tilde = lqr_gain(md.a_u, md.b_u, md.u_u, sys.v);
  const int p = sys.outputs();
  const Matrix kt = lqr_gain(md.a_u.transpose(), md.sampling.transpose(),
                             opts.observer_weight * Matrix::Identity(nz, nz), Matrix::Identity(p, p));
  const Matrix l = -kt.transpose();

  LuenbergerLaw law;
  law.k_tilde = k_tilde;
  law.l = l;
  law.sampling = md.sampling;
  law.a_cl = md.a_u + md.b_u * k_tilde - l * md.sampling;
  law.prolong = md.prolong;
  law.z = Vector::Zero(nz);

  ControllerInfo info = base_info(Strategy::Luenberger, sys, ctx);
  info.retained_requested = md.requested_dim;
  info.retained_dim = nz;
  info.retained_adjusted = md.adjusted;
  info.unstable_real_dims = md.unstable_real_dims;
  info.observer_weight = opts.observer_weight;
  info.regulator_abscissa = spectral_abscissa(md.a_u + md.b_u * k_tilde);
  info.observer_abscissa = spectral_abscissa(md.a_u - l * md.sampling);
  if (!(info.regulator_abscissa < -kHurwitzMargin) || !(info.observer_abscissa < -kHurwitzMargin))
    throw SynthesisError(SynthesisError::Kind::NotStabilisable, "estimator design matrices are not Hurwitz");
  Controller controller(std::move(law), info);
  info.closed_loop_abscissa = spectral_abscissa(resolved_closed_loop_matrix(sys, controller));
  return Controller(std::move(controller.law()), std::move(info));
}

}  // namespace

Controller synth_luenberger(const LinearSystem& sys, const SynthesisContext& ctx, const SynthesisOptions& opts) {
  if (opts.retain) {
    Controller c = design_luenberger(sys, ctx, opts, *opts.retain);
    if (!(c.info().closed_loop_abscissa < -kHurwitzMargin))
      throw SynthesisError(SynthesisError::Kind::NotStabilisable,
                           "coupled plant/estimator loop is not Hurwitz with " +
                               std::to_string(c.info().retained_dim) + " retained dimensions");
    return c;
  }
  // Default: the larger of M and the unstable plus neutral dimensions. The
  // neutral mass mode is kept because injection with non-zero mean moves it.
  // If spillover from the unmodelled modes still destabilises the coupled
  // loop, the next slowest mode is retained as well.
  const ModalDecomposition spectrum = modal_spectrum(sys);
  const int first = std::max(sys.inputs(), spectrum.unstable_real_dims + spectrum.neutral_real_dims);
  const int last = std::min(sys.state_dim() - 3, first + kRetainGrowth);
  double best = std::numeric_limits<double>::infinity();
  for (int requested = first; requested <= last;) {
    Controller c = design_luenberger(sys, ctx, opts, requested);
    best = std::min(best, c.info().closed_loop_abscissa);
    if (c.info().closed_loop_abscissa < -kHurwitzMargin) {
      ControllerInfo info = c.info();
      info.retained_adjusted = info.retained_dim != first;
      info.retained_requested = first;
      return Controller(std::move(c.law()), std::move(info));
    }
    requested = c.info().retained_dim + 1;
  }
  throw SynthesisError(SynthesisError::Kind::NotStabilisable,
                       "coupled plant/estimator loop is not Hurwitz for retained dimensions " + std::to_string(first) +
                           ".." + std::to_string(last) + " (best abscissa " + std::to_string(best) + ")");
}

Controller synthesise(Strategy strategy, const SynthesisContext& ctx, const SynthesisOptions& opts) {
  const LinearSystem sys = linearize(ctx.params, ctx.grid, ctx.actuators, ctx.observers);
  switch (strategy) {
    case Strategy::FullState: return synth_full_state(sys, ctx, opts);
    case Strategy::OutputFeedback: return synth_output_feedback(sys, ctx, opts);
    case Strategy::Luenberger: return synth_luenberger(sys, ctx, opts);
  }
  throw InvalidArgument("unknown strategy");
}

namespace {

Matrix coupled(const Matrix& a, const Matrix& b, const Matrix& c, const Controller& controller,
               const Matrix* full_to_state) {
  if (const auto* fs = std::get_if<FullStateLaw>(&controller.law())) {
    const Matrix k = full_to_state ? Matrix(fs->k * *full_to_state) : fs->k;
    return a + b * k;
  }
  if (const auto* of = std::get_if<OutputFeedbackLaw>(&controller.law())) return a + b * of->k * c;
  const auto& lb = std::get<LuenbergerLaw>(controller.law());
  const Eigen::Index n = a.rows(), nz = lb.a_cl.rows();
  Matrix out(n + nz, n + nz);
  out.topLeftCorner(n, n) = a;
  out.topRightCorner(n, nz) = b * lb.k_tilde;
  out.bottomLeftCorner(nz, n) = lb.l * c;
  out.bottomRightCorner(nz, nz) = lb.a_cl;
  return out;
}

}  // namespace

Matrix closed_loop_matrix(const LinearSystem& sys, const Controller& controller) {
  return coupled(sys.a, sys.b, sys.c, controller, nullptr);
}

Matrix resolved_closed_loop_matrix(const LinearSystem& sys, const Controller& controller) {
  const ResolvedSystem r = resolve(sys);
  return coupled(r.a, r.b, r.c, controller, &r.basis);
}

// ---------------------------------------------------------------------------
// JSON

namespace {

using nlohmann::json;

json matrix_json(const Matrix& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

Matrix matrix_from(const json& j) {
  const Eigen::Index r = j.at("rows").get<Eigen::Index>(), c = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != r * c) throw InvalidArgument("matrix payload has wrong length");
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index k = 0; k < c; ++k) m(i, k) = data[i * c + k].get<double>();
  return m;
}

}  // namespace

std::string to_json(const Controller& controller) {
  const ControllerInfo& info = controller.info();
  json j;
  j["variant"] = to_string(info.strategy);
  j["parameters"] = {{"reynolds", info.params.reynolds}, {"capillary", info.params.capillary},
                     {"theta", info.params.theta},       {"length", info.params.length},
                     {"beta", info.params.beta},         {"nodes", info.nodes},
                     {"omega", info.omega},              {"actuator_positions", info.actuator_positions},
                     {"observer_nodes", info.observer_nodes}, {"observer_weight", info.observer_weight},
                     {"retained_requested", info.retained_requested}};
  j["diagnostics"] = {{"closed_loop_abscissa", info.closed_loop_abscissa},
                      {"regulator_abscissa", info.regulator_abscissa},
                      {"observer_abscissa", info.observer_abscissa},
                      {"retained_dim", info.retained_dim},
                      {"retained_adjusted", info.retained_adjusted},
                      {"unstable_real_dims", info.unstable_real_dims},
                      {"iterations", info.iterations},
                      {"residual", info.residual},
                      {"initialisation", info.initialisation}};
  json m;
  if (const auto* fs = std::get_if<FullStateLaw>(&controller.law())) {
    m["k"] = matrix_json(fs->k);
  } else if (const auto* of = std::get_if<OutputFeedbackLaw>(&controller.law())) {
    m["k"] = matrix_json(of->k);
  } else {
    const auto& lb = std::get<LuenbergerLaw>(controller.law());
    m["k_tilde"] = matrix_json(lb.k_tilde);
    m["l"] = matrix_json(lb.l);
    m["a_cl"] = matrix_json(lb.a_cl);
    m["sampling"] = matrix_json(lb.sampling);
    m["prolong"] = matrix_json(lb.prolong);
    m["z"] = matrix_json(lb.z);
  }
  j["matrices"] = m;
  return j.dump(2);
}

Controller controller_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("controller json: ") + e.what());
  }
  try {
    ControllerInfo info;
    info.strategy = strategy_from_string(j.at("variant").get<std::string>());
    const auto& p = j.at("parameters");
    info.params.reynolds = p.at("reynolds").get<double>();
    info.params.capillary = p.at("capillary").get<double>();
    info.params.theta = p.at("theta").get<double>();
    info.params.length = p.at("length").get<double>();
    info.params.beta = p.at("beta").get<double>();
    info.nodes = p.at("nodes").get<int>();
    info.omega = p.at("omega").get<double>();
    info.actuator_positions = p.at("actuator_positions").get<std::vector<double>>();
    info.observer_nodes = p.at("observer_nodes").get<std::vector<int>>();
    info.observer_weight = p.at("observer_weight").get<double>();
    info.retained_requested = p.at("retained_requested").get<int>();
    const auto& d = j.at("diagnostics");
    info.closed_loop_abscissa = d.at("closed_loop_abscissa").get<double>();
    info.regulator_abscissa = d.at("regulator_abscissa").get<double>();
    info.observer_abscissa = d.at("observer_abscissa").get<double>();
    info.retained_dim = d.at("retained_dim").get<int>();
    info.retained_adjusted = d.at("retained_adjusted").get<bool>();
    info.unstable_real_dims = d.at("unstable_real_dims").get<int>();
    info.iterations = d.at("iterations").get<int>();
    info.residual = d.at("residual").get<double>();
    info.initialisation = d.at("initialisation").get<std::string>();
    const auto& m = j.at("matrices");
    switch (info.strategy) {
      case Strategy::FullState: return Controller(FullStateLaw{matrix_from(m.at("k"))}, std::move(info));
      case Strategy::OutputFeedback: return Controller(OutputFeedbackLaw{matrix_from(m.at("k"))}, std::move(info));
      case Strategy::Luenberger: {
        LuenbergerLaw lb;
        lb.k_tilde = matrix_from(m.at("k_tilde"));
        lb.l = matrix_from(m.at("l"));
        lb.a_cl = matrix_from(m.at("a_cl"));
        lb.sampling = matrix_from(m.at("sampling"));
        lb.prolong = matrix_from(m.at("prolong"));
        lb.z = matrix_from(m.at("z"));
        return Controller(std::move(lb), std::move(info));
      }
    }
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("controller json: ") + e.what());
  }
  throw InvalidArgument("controller json: unknown variant");
}

}  // namespace filmctl
