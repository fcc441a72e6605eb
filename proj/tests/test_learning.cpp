#include <doctest.h>

#include "deepssm/learning.hpp"
#include "oracles/shumway_stoffer.hpp"
#include "support.hpp"

using namespace deepssm;
using namespace testing_support;

namespace {

double max_abs(const Matrix<double>& a, const Matrix<double>& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

SufficientStats<double> stats_for(const ModelParameters<double>& p, const Sequence& seq) {
  const auto filt = kalman_filter(p, seq.obs, seq.controls);
  return compute_sufficient_stats(rts_smooth(p, filt), seq.obs, seq.controls);
}

}  // namespace

TEST_CASE("sufficient statistics agree with the lag-one covariance recursion") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    const auto p = random_model(3, 2, 1, rng);
    const auto seq = random_sequence(p, 15, 40 + trial);
    const auto s = stats_for(p, seq);
    const auto e = oracle::e_step(to_lds(p), seq.obs, seq.controls);

    Matrix<double> s11 = Matrix<double>::Zero(3, 3), s10 = s11, s00 = s11;
    for (int t = 1; t <= 15; ++t) {
      s11 += e.mean[t] * e.mean[t].transpose() + e.cov[t];
      s10 += e.mean[t] * e.mean[t - 1].transpose() + e.lag_one[t - 1];
      s00 += e.mean[t - 1] * e.mean[t - 1].transpose() + e.cov[t - 1];
    }
    CHECK(max_abs(s.sigma, s11 / 15) < 1e-10);
    CHECK(max_abs(s.c, s10 / 15) < 1e-10);
    CHECK(max_abs(s.phi, s00 / 15) < 1e-10);
    CHECK(s.steps == 15);
  }
}

TEST_CASE("single-layer sweep without inputs reproduces the classical EM update") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const Index n_z = 1 + trial % 3, n_x = 1 + (trial + 1) % 3;
    const auto p = random_model(n_z, n_x, 1, rng);
    const auto seq = random_sequence(p, 20, 70 + trial, /*zero_controls=*/true);
    const auto step = m_step(p, stats_for(p, seq), UpdateOptions{false, 1e-10});
    const auto lds = to_lds(p);
    const auto ref = oracle::m_step(oracle::e_step(lds, seq.obs, seq.controls), seq.obs, seq.controls);
    CHECK(max_abs(step.params.transition(), ref.a) < 1e-10);
    CHECK(max_abs(step.params.emission(), ref.c) < 1e-10);
  }
}

TEST_CASE("iterated sweeps with inputs converge to the joint classical update") {
  std::mt19937_64 rng(9);
  const auto p = random_model(2, 3, 1, rng);
  const auto seq = random_sequence(p, 30, 12);
  const auto stats = stats_for(p, seq);
  auto params = p;
  for (int i = 0; i < 2000; ++i) params = m_step(params, stats, UpdateOptions{false, 1e-10}).params;
  const auto ref = oracle::m_step(oracle::e_step(to_lds(p), seq.obs, seq.controls), seq.obs,
                                  seq.controls);
  CHECK(max_abs(params.transition(), ref.a) < 1e-8);
  CHECK(max_abs(params.control_gain(), ref.b) < 1e-8);
  CHECK(max_abs(params.emission(), ref.c) < 1e-10);
}

TEST_CASE("factor updates match the black-box QP minimizer") {
  std::mt19937_64 rng(123);
  for (int layers = 1; layers <= 3; ++layers) {
    for (const auto slot : kSweepOrder) {
      if (slot.position >= layers) continue;
      QpInstance in;
      QpSolution sol;
      do {
        in = qp_instance(slot, 3, 4, 1, layers, rng);
        sol = solve_slot_qp(in.params, in.stats, slot);
      } while ((sol.unconstrained.array() < 0).any());
      const auto update = update_factor(slot, in.params, in.stats);
      CAPTURE(layers);
      CAPTURE(slot.position);
      CAPTURE(static_cast<int>(slot.op));
      CAPTURE(sol.identifiable);
      CHECK_FALSE(update.clamped);
      CHECK(max_abs(update.value, sol.unconstrained) < 1e-6);
      const Eigen::VectorXd flat = Eigen::Map<const Eigen::VectorXd>(update.value.data(),
                                                                     update.value.size());
      CHECK(oracle::evaluate(sol.quadratic, flat) <=
            sol.constrained_value + 1e-9 * std::abs(sol.constrained_value));
      if (sol.identifiable) {
        CHECK(max_abs(update.value, sol.constrained) < 1e-6);
        CHECK(max_abs(update.value, in.optimum) < 1e-6);
      }
    }
  }
}

TEST_CASE("single-layer emission update without inputs is ReLU(B pinv(Sigma))") {
  std::mt19937_64 rng(4);
  const auto p = random_nonnegative_model(3, 2, 1, 1, rng);
  SufficientStats<double> s;
  s.steps = 1;
  s.sigma = random_spd(3, rng);
  s.b = random_matrix(2, 3, rng);
  s.phi = random_spd(3, rng);
  s.c = random_matrix(3, 3, rng);
  s.a = Matrix<double>::Zero(3, 1);
  s.f = Matrix<double>::Zero(3, 1);
  s.i_mat = Matrix<double>::Zero(1, 1);
  s.delta = random_spd(2, rng);
  Matrix<double> expected = s.b * pseudo_inverse(s.sigma);
  expected = expected.cwiseMax(0.0);
  const auto update = update_factor({Operator::Observation, 0}, p, s);
  CHECK(max_abs(update.value, expected) < 1e-12);
}

TEST_CASE("an update from the generating factors stays at them") {
  ModelConfig c;
  c.n_z = 2;
  c.n_x = 3;
  c.layers = 1;
  c.sigma_q = 1e-7;
  c.sigma_r = 1e-7;
  c.sigma_p = 1;
  auto truth = random_ground_truth(c, 17, 0.8);
  std::mt19937_64 rng(2);
  truth.z0_mean = random_matrix(2, 1, rng, 0, 1);
  Sequence seq;
  seq.controls = random_matrix(1, 200, rng);
  seq.obs = sample_trajectory(truth, seq.controls, 5).obs;
  const auto stats = stats_for(truth, seq);
  const auto step = m_step(truth, stats);
  CHECK(max_abs(step.params.transition(), truth.transition()) < 1e-6);
  CHECK(max_abs(step.params.control_gain(), truth.control_gain()) < 1e-6);
  CHECK(max_abs(step.params.emission(), truth.emission()) < 1e-6);
}

TEST_CASE("a sweep never increases the objective when nothing is clamped") {
  std::mt19937_64 rng(55);
  for (int trial = 0; trial < 10; ++trial) {
    const int layers = 1 + trial % 3;
    const auto p = random_model(3, 3, 1, rng, layers);
    const auto seq = random_sequence(p, 25, 300 + trial);
    const auto stats = stats_for(p, seq);
    const auto step = m_step(p, stats, UpdateOptions{false, 1e-10});
    CHECK(q_objective(step.params, stats) <= q_objective(p, stats) + 1e-9);
    CHECK(step.solves == 3 * layers);
  }
}

TEST_CASE("projected sweeps keep every factor nonnegative and keep fixed factors") {
  std::mt19937_64 rng(77);
  for (int layers = 1; layers <= 3; ++layers) {
    const auto p = random_nonnegative_model(3, 3, 1, layers, rng);
    const auto seq = random_sequence(random_model(3, 3, 1, rng), 25, layers);
    const auto step = m_step(p, stats_for(p, seq));
    for (auto op : {Operator::State, Operator::Control, Operator::Observation}) {
      for (int pos = 0; pos < kStackDepth; ++pos) {
        const auto& f = step.params.stack(op).factors[pos];
        CHECK((f.array() >= 0).all());
        if (pos >= layers) CHECK(f == p.stack(op).factors[pos]);
      }
    }
  }
}

TEST_CASE("a zero Gram matrix yields a zero factor flagged as degenerate") {
  std::mt19937_64 rng(6);
  const auto p = random_nonnegative_model(2, 2, 1, 1, rng);
  const auto seq = random_sequence(p, 10, 1, /*zero_controls=*/true);
  const auto step = m_step(p, stats_for(p, seq));
  REQUIRE(step.degenerate.size() == 1);
  CHECK(step.degenerate[0] == FactorSlot{Operator::Control, 0});
  CHECK(step.params.control_gain().isZero());
}

TEST_CASE("EM log-likelihood never drops across unclamped iterations") {
  for (int run = 0; run < 6; ++run) {
    ModelConfig truth_cfg;
    truth_cfg.n_z = 2;
    truth_cfg.n_x = 3;
    truth_cfg.layers = 1 + run % 3;
    truth_cfg.sigma_q = 0.1;
    truth_cfg.sigma_r = 0.1;
    const auto truth = random_ground_truth(truth_cfg, 100 + run);
    const auto seq = random_sequence(truth, 60, 200 + run);
    auto model_cfg = truth_cfg;
    model_cfg.seed = run;
    EmOptions opts;
    opts.max_iters = 30;
    opts.loglik_tol = 0;
    const auto fit = em_fit(init_parameters<double>(model_cfg), seq.obs, seq.controls, opts);
    const auto& ll = fit.report.log_likelihood;
    REQUIRE(ll.size() == static_cast<std::size_t>(fit.report.iterations_run));
    for (std::size_t i = 0; i + 1 < ll.size(); ++i) {
      if (!fit.report.clamped[i]) CHECK(ll[i + 1] >= ll[i] - 1e-9 * std::abs(ll[i]));
    }
    CHECK(fit.report.final_log_likelihood == doctest::Approx(fit.filter.log_likelihood));
  }
}

TEST_CASE("EM honors the iteration cap and the parameter tolerance") {
  std::mt19937_64 rng(3);
  const auto p = random_nonnegative_model(2, 2, 1, 1, rng);
  const auto seq = random_sequence(p, 30, 3);
  EmOptions opts;
  opts.max_iters = 3;
  opts.loglik_tol = 0;
  opts.param_tol = 0;
  auto fit = em_fit(p, seq.obs, seq.controls, opts);
  CHECK(fit.report.iterations_run == 3);
  CHECK_FALSE(fit.report.converged);
  CHECK(fit.report.reason == StopReason::MaxIterations);

  opts.max_iters = 500;
  opts.param_tol = 1e-3;
  fit = em_fit(p, seq.obs, seq.controls, opts);
  CHECK(fit.report.converged);
  CHECK(fit.report.reason == StopReason::ParameterChange);
  CHECK(fit.report.final_param_change < 1e-3);

  opts.max_iters = 0;
  CHECK_THROWS_AS(em_fit(p, seq.obs, seq.controls, opts), ConfigError);
}

TEST_CASE("EM reports the iteration at which inference broke down") {
  std::mt19937_64 rng(3);
  auto p = random_nonnegative_model(2, 2, 1, 1, rng);
  const auto seq = random_sequence(p, 10, 3);
  p.r_cov = -Matrix<double>::Identity(2, 2);
  p.p0_cov.setZero();
  p.q_cov = 1e-8 * Matrix<double>::Identity(2, 2);
  try {
    em_fit(p, seq.obs, seq.controls, EmOptions{});
    FAIL("expected InferenceError");
  } catch (const InferenceError& e) {
    CHECK(e.iteration() == 1);
    CHECK(e.step() == 1);
  }
}
