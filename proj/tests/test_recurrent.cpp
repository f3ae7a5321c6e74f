#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pann/recurrent.hpp"
#include "pann/signals.hpp"

using namespace pann;

namespace {
constexpr double kDt = dab::kTimeStep;
}

TEST(Step, AppliesTransition) {
  const DiscreteTransition w = dab_transition(dab::reference_params(), kDt);
  Vector z(3);
  z << 1.5, 200.0, -200.0;
  const Vector x = step(w, z);
  const double expected = w.w(0, 0) * 1.5 + w.w(0, 1) * 200.0 + w.w(0, 2) * -200.0;
  EXPECT_DOUBLE_EQ(x(0), expected);
  StepInput in{Vector::Constant(1, 1.5), (Vector(2) << 200.0, -200.0).finished()};
  EXPECT_EQ(step(w, in), x);
}

TEST(Step, RejectsWrongShapes) {
  const DiscreteTransition w = dab_transition(dab::reference_params(), kDt);
  EXPECT_THROW(step(w, Vector::Zero(2)), ShapeMismatch);
  EXPECT_THROW(step(w, StepInput{Vector::Zero(2), Vector::Zero(1)}), ShapeMismatch);
}

TEST(Step, IdentityTransitionKeepsState) {
  DiscreteTransition w;
  w.w = Matrix::Zero(2, 3);
  w.w.leftCols(2) = Matrix::Identity(2, 2);
  w.dt = 1.0;
  Vector z(3);
  z << 4.0, -2.0, 9.0;
  EXPECT_EQ(step(w, z), z.head(2));
}

TEST(Rollout, MatchesScalarLoop) {
  const ParamVector p = dab::reference_params();
  ModulationSpec spec;
  spec.phase_shift = 0.2;
  const Matrix u = dab_next_inputs(spec, 500);
  const Trajectory t = rollout_free(dab_transition(p, kDt), Vector::Constant(1, 0.3), u);
  const std::vector<double> ref = oracle::dab_rollout(p.values(), kDt, 0.3, u);
  ASSERT_EQ(t.states.cols(), 501);
  for (Eigen::Index k = 0; k <= 500; ++k) EXPECT_NEAR(t.states(0, k), ref[static_cast<std::size_t>(k)], 1e-12);
  EXPECT_DOUBLE_EQ(t.times(500), 500 * kDt);
}

TEST(Rollout, DivergentModelRaises) {
  DiscreteTransition w;
  w.w = Matrix(1, 2);
  w.w << 2.0, 0.0;
  w.dt = 1.0;
  EXPECT_THROW(rollout_free(w, Vector::Ones(1), Matrix::Zero(1, 100)), NonFinite);
}

TEST(Rollout, RejectsEmptyInput) {
  const DiscreteTransition w = dab_transition(dab::reference_params(), kDt);
  EXPECT_THROW(rollout_free(w, Vector::Zero(1), Matrix::Zero(2, 0)), ShapeMismatch);
  EXPECT_THROW(rollout_free(w, Vector::Zero(2), Matrix::Zero(2, 3)), ShapeMismatch);
}

TEST(TeacherForcing, ReproducesTargetsAtGroundTruth) {
  const ParamVector p = dab::reference_params();
  const WaveformDataset d = synthesize_dataset(p, {ModulationSpec{200, 200, 50e3, 0.3, kDt, 2}}, 0.0, 1);
  const std::vector<Matrix> pred = rollout_teacher_forced(dab_transition(p, kDt), d);
  ASSERT_EQ(pred.size(), 1u);
  EXPECT_EQ(pred[0], d.segments[0].targets);  // bit-for-bit
}

TEST(TeacherForcing, UsesMeasuredStateNotPrediction) {
  const ParamVector p = dab::reference_params();
  WaveformDataset d = synthesize_dataset(p, {ModulationSpec{}}, 0.0, 1);
  d.segments[0].z(0, 10) += 1.0;
  const DiscreteTransition w = dab_transition(p, kDt);
  const Matrix pred = rollout_teacher_forced(w, d)[0];
  EXPECT_NEAR(pred(0, 10) - d.segments[0].targets(0, 10), w.w(0, 0), 1e-12);
  EXPECT_EQ(pred(0, 11), d.segments[0].targets(0, 11));
}

TEST(TeacherForcing, EmptyDatasetRaises) {
  const DiscreteTransition w = dab_transition(dab::reference_params(), kDt);
  EXPECT_THROW(rollout_teacher_forced(w, WaveformDataset{}), EmptyDataset);
  WaveformDataset d;
  d.segments.push_back(WaveformSegment{Vector(0), Matrix(3, 0), Matrix(1, 0), {}, 0.0, true});
  EXPECT_THROW(rollout_teacher_forced(w, d), EmptyDataset);
}

TEST(Settle, ReachesPeriodicSteadyState) {
  ModulationSpec spec;
  spec.phase_shift = 0.25;
  const DiscreteTransition w = dab_transition(dab::reference_params(), kDt);
  const SettleResult r = settle_to_steady_state(w, dab_next_inputs(spec, 250), Vector::Zero(1), 500, 1e-12);
  ASSERT_TRUE(r.converged);
  // One more period from the end lands on the same trajectory.
  const Trajectory again = rollout_free(w, r.period.states.col(250), dab_next_inputs(spec, 250));
  const double scale = r.period.states.cwiseAbs().maxCoeff();
  EXPECT_LE((again.states - r.period.states).cwiseAbs().maxCoeff(), 1e-10 * scale);
  // Half-wave symmetry of the square-wave response.
  EXPECT_NEAR(r.period.states(0, 0), -r.period.states(0, 125), 1e-8 * scale);
}

TEST(Settle, ZeroToleranceNeverConverges) {
  const DiscreteTransition w = dab_transition(dab::reference_params(), kDt);
  const SettleResult r = settle_to_steady_state(w, dab_next_inputs(ModulationSpec{}, 250), Vector::Zero(1), 3, 0.0);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.cycles, 3u);
}
