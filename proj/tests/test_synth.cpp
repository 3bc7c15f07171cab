#include "filmctl/errors.hpp"
#include "filmctl/synth.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace filmctl;

namespace {

SynthesisContext context(double re, int n, double offset = 0.0, int node_offset = 0) {
  PhysicalParams params;
  params.reynolds = re;
  const Grid grid(n, params.length);
  ActuatorBank act = ActuatorBank::evenly_spaced(5, 0.1, params.length);
  ObserverBank obs = ObserverBank::evenly_spaced(5, grid);
  if (offset != 0.0) act = act.shifted(offset);
  if (node_offset != 0) obs = obs.shifted(node_offset, n);
  return {params, grid, act, obs};
}

LinearSystem system_of(const SynthesisContext& ctx) {
  return linearize(ctx.params, ctx.grid, ctx.actuators, ctx.observers);
}

double set_distance(const ComplexVector& x, const ComplexVector& y) {
  std::vector<std::complex<double>> pool(y.data(), y.data() + y.size());
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    auto best = std::min_element(pool.begin(), pool.end(), [&](auto a, auto b) {
      return std::abs(a - x[i]) < std::abs(b - x[i]);
    });
    worst = std::max(worst, std::abs(*best - x[i]));
    pool.erase(best);
  }
  return worst;
}

ComplexVector concat(const ComplexVector& a, const ComplexVector& b) {
  ComplexVector out(a.size() + b.size());
  out << a, b;
  return out;
}

}  // namespace

TEST_CASE("strategy names") {
  CHECK(strategy_from_string("lqr") == Strategy::FullState);
  CHECK(strategy_from_string("sof") == Strategy::OutputFeedback);
  CHECK(strategy_from_string("luenberger") == Strategy::Luenberger);
  CHECK(std::string(to_string(Strategy::OutputFeedback)) == "output_feedback");
  CHECK_THROWS_AS(strategy_from_string("pid"), InvalidArgument);
}

TEST_CASE("pbh test flags exactly the unreachable mode") {
  Matrix a = Matrix::Zero(3, 3);
  a.diagonal() << 1.0, 0.5, -2.0;
  Matrix b(3, 1);
  b << 1.0, 0.0, 1.0;
  const std::vector<int> bad = uncontrollable_modes(a, b);
  REQUIRE(bad.size() == 1);
  CHECK(eigenvalues(a)[bad[0]].real() == doctest::Approx(0.5));
  b(1, 0) = 1.0;
  CHECK(uncontrollable_modes(a, b).empty());
}

TEST_CASE("full-state design stabilises the resolved dynamics") {
  const SynthesisContext ctx = context(11.29, 64);
  const LinearSystem sys = system_of(ctx);
  const Controller c = synth_full_state(sys, ctx);
  const auto& k = std::get<FullStateLaw>(c.law()).k;
  CHECK(k.rows() == 5);
  CHECK(k.cols() == 128);
  CHECK(c.info().closed_loop_abscissa < 0.0);
  CHECK(is_hurwitz(resolved_closed_loop_matrix(sys, c)));
  // On the full state the only non-decaying direction left is the neutral
  // Nyquist checkerboard, which no smooth actuator reaches.
  const ComplexVector full = eigenvalues(closed_loop_matrix(sys, c));
  CHECK(count_unstable(full) == 0);
  // The gain annihilates the Nyquist direction.
  Vector nyq(128);
  for (int j = 0; j < 64; ++j) nyq[j] = nyq[64 + j] = (j % 2 ? -1.0 : 1.0);
  CHECK((k * nyq).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(c.control(nyq, Vector::Zero(5)).size() == 5);
}

TEST_CASE("reduced-order estimator obeys separation on the retained model") {
  const SynthesisContext ctx = context(11.29, 64);
  const LinearSystem sys = system_of(ctx);
  const Controller c = synth_luenberger(sys, ctx);
  const auto& lb = std::get<LuenbergerLaw>(c.law());
  const ModalDecomposition md = modal_decompose(sys, c.info().retained_dim);
  CHECK(c.info().retained_dim >= 8);
  CHECK(c.info().regulator_abscissa < 0.0);
  CHECK(c.info().observer_abscissa < 0.0);

  const int nz = c.info().retained_dim;
  Matrix reduced(2 * nz, 2 * nz);
  reduced << md.a_u, md.b_u * lb.k_tilde, lb.l * md.sampling, lb.a_cl;
  const ComplexVector expected =
      concat(eigenvalues(md.a_u + md.b_u * lb.k_tilde), eigenvalues(md.a_u - lb.l * md.sampling));
  CHECK(set_distance(eigenvalues(reduced), expected) < 1e-8);

  const Matrix coupled = resolved_closed_loop_matrix(sys, c);
  CHECK(coupled.rows() == 126 + nz);
  CHECK(is_hurwitz(coupled));
  CHECK(closed_loop_matrix(sys, c).rows() == 128 + nz);
}

TEST_CASE("estimator propagation is exact for held observations") {
  const SynthesisContext ctx = context(11.29, 32);
  Controller c = synth_luenberger(system_of(ctx), ctx);
  const auto& lb = std::get<LuenbergerLaw>(c.law());
  const Vector zeta = Vector::LinSpaced(5, -0.01, 0.02);
  c.advance(zeta, 0.05);
  c.advance(zeta, 0.05);
  const Vector two = lb.z;
  c.reset();
  CHECK(lb.z.norm() == 0.0);
  c.advance(zeta, 0.1);
  CHECK((lb.z - two).cwiseAbs().maxCoeff() < 1e-13);

  // Fixed-step RK4 on the same linear ODE.
  Vector z = Vector::Zero(lb.a_cl.rows());
  const int steps = 2000;
  const double h = 0.1 / steps;
  auto f = [&](const Vector& y) -> Vector { return lb.a_cl * y + lb.l * zeta; };
  for (int i = 0; i < steps; ++i) {
    const Vector k1 = f(z), k2 = f(z + 0.5 * h * k1), k3 = f(z + 0.5 * h * k2), k4 = f(z + h * k3);
    z += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  CHECK((z - lb.z).cwiseAbs().maxCoeff() < 1e-10 * std::max(1.0, z.cwiseAbs().maxCoeff()));
  CHECK((c.control(Vector(), zeta) - lb.k_tilde * lb.z).norm() == 0.0);
  REQUIRE(c.estimated_height());
  CHECK(c.estimated_height()->size() == 32);
}

TEST_CASE("estimator retain below the unstable count is refused") {
  const SynthesisContext ctx = context(11.29, 64);
  SynthesisOptions opts;
  opts.retain = 5;
  try {
    synth_luenberger(system_of(ctx), ctx, opts);
    FAIL("expected a precondition error");
  } catch (const SynthesisError& e) {
    CHECK(e.kind() == SynthesisError::Kind::Precondition);
  }
}

TEST_CASE("gains transform covariantly under a one-node shift") {
  const int n = 64;
  const SynthesisContext base = context(11.29, n);
  const SynthesisContext moved = context(11.29, n, base.grid.dx(), 1);
  const LinearSystem s0 = system_of(base), s1 = system_of(moved);
  const Matrix shift = blockwise_shift(n);
  CHECK((s1.a - shift * s0.a * shift.transpose()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((s1.b - shift * s0.b).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((s1.c - s0.c * shift.transpose()).cwiseAbs().maxCoeff() == 0.0);

  const Controller f0 = synth_full_state(s0, base), f1 = synth_full_state(s1, moved);
  const Matrix& k0 = std::get<FullStateLaw>(f0.law()).k;
  const Matrix& k1 = std::get<FullStateLaw>(f1.law()).k;
  CHECK((k1 - k0 * shift.transpose()).cwiseAbs().maxCoeff() < 1e-8 * k0.cwiseAbs().maxCoeff());

  const Controller l0 = synth_luenberger(s0, base), l1 = synth_luenberger(s1, moved);
  CHECK(set_distance(eigenvalues(resolved_closed_loop_matrix(s0, l0)),
                     eigenvalues(resolved_closed_loop_matrix(s1, l1))) < 1e-8);
}

TEST_CASE("controllers survive a json round trip bit for bit") {
  const SynthesisContext ctx = context(11.29, 32);
  const LinearSystem sys = system_of(ctx);
  std::vector<Controller> all{synth_full_state(sys, ctx), synth_output_feedback(sys, ctx), synth_luenberger(sys, ctx)};
  for (Controller& c : all) {
    if (c.strategy() == Strategy::Luenberger) c.advance(Vector::Constant(5, 0.01), 0.3);
    const std::string text = to_json(c);
    const Controller back = controller_from_json(text);
    CHECK(back.strategy() == c.strategy());
    CHECK(to_json(back) == text);
    CHECK(back.info().closed_loop_abscissa == c.info().closed_loop_abscissa);
    std::visit(
        [&](const auto& law) {
          using T = std::decay_t<decltype(law)>;
          const T& other = std::get<T>(back.law());
          if constexpr (std::is_same_v<T, LuenbergerLaw>) {
            CHECK(other.k_tilde == law.k_tilde);
            CHECK(other.l == law.l);
            CHECK(other.a_cl == law.a_cl);
            CHECK(other.z == law.z);
          } else {
            CHECK(other.k == law.k);
          }
        },
        c.law());
  }
  CHECK_THROWS_AS(controller_from_json("{\"variant\": 3}"), InvalidArgument);
  CHECK_THROWS_AS(controller_from_json("not json"), InvalidArgument);
}

TEST_CASE("output feedback design at the reference point") {
  const SynthesisContext ctx = context(11.29, 64);
  const LinearSystem sys = system_of(ctx);
  const Controller c = synth_output_feedback(sys, ctx);
  CHECK(c.info().closed_loop_abscissa < 0.0);
  CHECK(c.info().residual < 1e-8);
  CHECK(std::get<OutputFeedbackLaw>(c.law()).k.rows() == 5);
  CHECK(std::get<OutputFeedbackLaw>(c.law()).k.cols() == 5);
}

TEST_CASE("output feedback with one observer at high Reynolds number fails to start") {
  PhysicalParams params;
  params.reynolds = 100.0;
  const Grid grid(32, params.length);
  const SynthesisContext ctx{params, grid, ActuatorBank::evenly_spaced(5, 0.1, params.length),
                             ObserverBank::evenly_spaced(1, grid)};
  try {
    synthesise(Strategy::OutputFeedback, ctx);
    FAIL("expected a synthesis error");
  } catch (const SynthesisError& e) {
    CHECK(e.kind() == SynthesisError::Kind::FailToStart);
  }
}
