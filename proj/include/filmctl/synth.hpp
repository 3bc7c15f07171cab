#pragma once

#include "filmctl/core.hpp"
#include "filmctl/linsys.hpp"
#include "filmctl/matreq.hpp"

#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace filmctl {

enum class Strategy { FullState, OutputFeedback, Luenberger };

const char* to_string(Strategy s) noexcept;
/// Accepts "full_state"/"lqr", "output_feedback"/"sof" and "luenberger".
Strategy strategy_from_string(const std::string& name);

/// eta = K xi on the full (h - 1, q - 2/3) state.
struct FullStateLaw {
  Matrix k;  ///< M x 2N
};

/// eta = K zeta with zeta the P interface samples.
struct OutputFeedbackLaw {
  Matrix k;  ///< M x P
};

/// eta = K~ z with z_t = a_cl z + L zeta, a_cl = A~_u + B~_u K~ - L (C F_u^-1).
struct LuenbergerLaw {
  Matrix k_tilde;   ///< M x M_z
  Matrix l;         ///< M_z x P
  Matrix a_cl;      ///< M_z x M_z
  Matrix sampling;  ///< P x M_z, C F_u^-1
  Matrix prolong;   ///< 2N x M_z, F_u^-1 on the full state
  Vector z;         ///< estimator state, zero at switch-on
};

/// Synthesis parameters and diagnostics carried alongside a gain.
struct ControllerInfo {
  Strategy strategy = Strategy::FullState;
  PhysicalParams params;
  int nodes = 0;
  double omega = 0.1;
  std::vector<double> actuator_positions;
  std::vector<int> observer_nodes;

  /// Spectral abscissa of the design closed loop: A + BK, A + BKC, or the
  /// coupled plant/estimator matrix, all on the Nyquist-free subspace.
  double closed_loop_abscissa = 0.0;
  double regulator_abscissa = 0.0;  ///< Luenberger: A~_u + B~_u K~
  double observer_abscissa = 0.0;   ///< Luenberger: A~_u - L C F_u^-1

  int retained_requested = 0;
  int retained_dim = 0;
  bool retained_adjusted = false;
  int unstable_real_dims = 0;

  int iterations = 0;
  double residual = 0.0;
  std::string initialisation;
  double observer_weight = 1.0;
};

class Controller {
 public:
  using Law = std::variant<FullStateLaw, OutputFeedbackLaw, LuenbergerLaw>;

  Controller(Law law, ControllerInfo info);

  Strategy strategy() const noexcept { return info_.strategy; }
  const Law& law() const noexcept { return law_; }
  Law& law() noexcept { return law_; }
  const ControllerInfo& info() const noexcept { return info_; }
  int actuators() const noexcept;

  /// Amplitudes from the current deviation xi (2N) and observations zeta (P).
  Vector control(const Vector& xi, const Vector& zeta) const;

  /// Advance the estimator (Luenberger only) over dt with zeta held fixed.
  void advance(const Vector& zeta, double dt);
  /// Zero the estimator state.
  void reset();

  /// Estimated height deviation F_u^-1 z on the grid (Luenberger only).
  std::optional<Vector> estimated_height() const;

 private:
  Law law_;
  ControllerInfo info_;
  // Cached exact propagator for the last dt: z <- phi z + gamma zeta.
  mutable double cached_dt_ = -1.0;
  mutable Matrix phi_, gamma_;
};

inline constexpr int kRetainGrowth = 16;

struct SynthesisOptions {
  SofOptions sof;
  std::optional<Matrix> sof_initial;
  /// Retained estimator dimension. When unset: max(M, unstable + neutral real
  /// dims), grown mode by mode (up to kRetainGrowth) until the coupled
  /// plant/estimator loop is Hurwitz.
  std::optional<int> retain;
  /// Scalar weight w for the observer design lqr(A~^T, (C F^-1)^T, wI, I).
  double observer_weight = 1.0;
};

struct SynthesisContext {
  PhysicalParams params;
  Grid grid;
  ActuatorBank actuators;
  ObserverBank observers;
};

Controller synth_full_state(const LinearSystem& sys, const SynthesisContext& ctx, const SynthesisOptions& opts = {});
Controller synth_output_feedback(const LinearSystem& sys, const SynthesisContext& ctx,
                                 const SynthesisOptions& opts = {});
Controller synth_luenberger(const LinearSystem& sys, const SynthesisContext& ctx, const SynthesisOptions& opts = {});

Controller synthesise(Strategy strategy, const SynthesisContext& ctx, const SynthesisOptions& opts = {});

/// Closed-loop matrix on the full 2N state (plus estimator for Luenberger).
Matrix closed_loop_matrix(const LinearSystem& sys, const Controller& controller);
/// The same restricted to the Nyquist-free subspace, where it is Hurwitz.
Matrix resolved_closed_loop_matrix(const LinearSystem& sys, const Controller& controller);

/// PBH test of (a, b) at each eigenvalue with real part >= -tolerance;
/// returns the indices (into `values`) of deficient eigenvalues.
std::vector<int> uncontrollable_modes(const Matrix& a, const Matrix& b, double tolerance = kModeTolerance);

std::string to_json(const Controller& controller);
Controller controller_from_json(const std::string& text);

}  // namespace filmctl
