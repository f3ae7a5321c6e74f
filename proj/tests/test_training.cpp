#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "pann/lipschitz.hpp"
#include "pann/signals.hpp"
#include "pann/training.hpp"

using namespace pann;

namespace {

constexpr double kDt = dab::kTimeStep;

WaveformDataset reference_data(std::size_t segments = 2, double noise = 0.0) {
  return synthesize_splits(dab::reference_params(), ModulationSpec{}, {segments, 0, 0}, 0.05, 0.45, noise, 1).train;
}

TrainingTrace scripted_trace(const std::vector<double>& values, double lower = -10.0, double upper = 10.0) {
  TrainingTrace t;
  t.names = {"a"};
  t.lower = Vector::Constant(1, lower);
  t.upper = Vector::Constant(1, upper);
  for (std::size_t i = 0; i < values.size(); ++i) {
    EpochRecord r;
    r.epoch = i + 1;
    r.theta = Vector::Constant(1, values[i]);
    r.grad = Vector::Constant(1, 0.0);
    t.epochs.push_back(r);
  }
  t.final_theta = t.epochs.back().theta;
  return t;
}

}  // namespace

TEST(Loss, ZeroAtGroundTruth) {
  const WaveformDataset d = reference_data();
  const LossEvaluation e = evaluate_loss(dab::reference_params().values(), d, dab_model(), kDt, Order::hessian);
  EXPECT_EQ(e.loss, 0.0);
  EXPECT_LE(e.gradient.cwiseAbs().maxCoeff(), 1e-15);
  // Gauss-Newton term only: positive semidefinite.
  Eigen::SelfAdjointEigenSolver<Matrix> eig(e.hessian);
  EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-9 * eig.eigenvalues().maxCoeff());
  EXPECT_EQ(e.hessian, e.hessian.transpose());
}

TEST(Loss, ScalarSingleStep) {
  // W = [1, 0, 0], z = (3, 0, 0), target 1: residual 2, loss 0.5 * 4.
  WaveformDataset d;
  WaveformSegment seg;
  seg.times = Vector::Zero(1);
  seg.z = Matrix::Zero(3, 1);
  seg.z(0, 0) = 3.0;
  seg.targets = Matrix::Constant(1, 1, 1.0);
  d.segments.push_back(seg);
  ContinuousModel m = affine_model(Matrix::Zero(1, 1), {Matrix::Zero(1, 1)}, Matrix::Zero(1, 2), {Matrix::Zero(1, 2)});
  EXPECT_DOUBLE_EQ(loss(Vector::Zero(1), d, m, 1.0), 2.0);
  EXPECT_DOUBLE_EQ(evaluate_loss(Vector::Zero(1), d, m, 1.0).rmse(), 2.0);
}

TEST(Loss, MatchesStraightLineOracle) {
  const WaveformDataset d = reference_data();
  Vector th = dab::reference_params().values();
  th(0) *= 1.1;
  const double l = loss(th, d, dab_model(), kDt);
  EXPECT_GT(l, 0.0);
  EXPECT_NEAR(l, oracle::straight_line_loss(th, d, kDt), 1e-12 * l);
}

TEST(Loss, EmptyDatasetRaises) {
  EXPECT_THROW(loss(dab::reference_params(), WaveformDataset{}, dab_model(), kDt), EmptyDataset);
}

TEST(Loss, GradientNeedsDerivatives) {
  ContinuousModel m = dab_model();
  m.closed_form = nullptr;
  m.da = nullptr;
  EXPECT_THROW(gradient(dab::reference_params(), reference_data(), m, kDt), MissingDerivatives);
  ContinuousModel m2 = dab_model();
  m2.closed_form = nullptr;
  m2.d2a = nullptr;
  EXPECT_THROW(hessian(dab::reference_params(), reference_data(), m2, kDt), MissingDerivatives);
  EXPECT_NO_THROW(gradient(dab::reference_params(), reference_data(), m2, kDt));
}

TEST(Gradient, MatchesFiniteDifferences) {
  const ParamVector box = dab::reference_params();
  Stream s(21, StreamTag::test, 0);
  for (int k = 0; k < 20; ++k) {
    const WaveformDataset d = oracle::random_dab_dataset(s, box, 2, 0.01, 100 + static_cast<std::uint64_t>(k));
    const Vector th = oracle::random_theta(s, box);
    const Vector g = gradient(th, d, dab_model(), kDt);
    const Vector fd = oracle::fd_gradient([&](const Vector& t) { return oracle::straight_line_loss(t, d, kDt); }, th);
    EXPECT_LE(oracle::scaled_rel_error(g, fd, box.ranges()), 1e-6);
  }
}

TEST(Hessian, MatchesFiniteDifferencesAndIsSymmetric) {
  const ParamVector box = dab::reference_params();
  Stream s(22, StreamTag::test, 0);
  for (int k = 0; k < 20; ++k) {
    const WaveformDataset d = oracle::random_dab_dataset(s, box, 2, 0.01, 200 + static_cast<std::uint64_t>(k));
    const Vector th = oracle::random_theta(s, box);
    const Matrix h = hessian(th, d, dab_model(), kDt);
    EXPECT_EQ(h, h.transpose());
    const Matrix fd = oracle::fd_jacobian([&](const Vector& t) { return gradient(t, d, dab_model(), kDt); }, th);
    EXPECT_LE(oracle::scaled_rel_error(h, fd, box.ranges()), 1e-5);
  }
}

TEST(Rates, UniformRangesGiveUniformRates) {
  const Vector r = lipschitz_aware_rates(2.0, Vector::Constant(3, 0.5), 4.0);
  EXPECT_DOUBLE_EQ(r(0), 0.25);
  EXPECT_EQ(r(0), r(1));
  EXPECT_EQ(r(1), r(2));
}

TEST(Rates, LinearInRangeAndClamped) {
  Vector ranges(2);
  ranges << 1e-3, 2e-3;
  const Vector r = lipschitz_aware_rates(1.0, ranges, 1.0);
  EXPECT_DOUBLE_EQ(r(1), 2.0 * r(0));
  ranges << 1e-12, 1e6;
  const Vector c = lipschitz_aware_rates(1.0, ranges, 1.0);
  EXPECT_EQ(c(0), 1e-7);
  EXPECT_EQ(c(1), 10.0);
}

TEST(Rates, RejectsNonPositiveInputs) {
  EXPECT_THROW(lipschitz_aware_rates(0.0, Vector::Ones(2), 1.0), NonPositiveBound);
  EXPECT_THROW(lipschitz_aware_rates(1.0, Vector::Ones(2), -1.0), NonPositiveBound);
  EXPECT_THROW(lipschitz_aware_rates(1.0, Vector::Zero(2), 1.0), NonPositiveBound);
}

TEST(Rates, StrategyTable) {
  Vector ranges(3);
  ranges << 190e-6, 2.99, 0.4;
  const Vector s3 = strategy_rates(Strategy::s3, 1000.0, ranges, 1e6);
  EXPECT_NEAR(strategy_rates(Strategy::s1, 1000.0, ranges, 1e6)(1), 0.01 * s3(1), 1e-18);
  EXPECT_NEAR(strategy_rates(Strategy::s5, 1000.0, ranges, 1e6)(1), 100.0 * s3(1), 1e-12);
  const Vector s6 = strategy_rates(Strategy::s6, 1000.0, ranges, 1e6);
  EXPECT_DOUBLE_EQ(s6(0), s3.mean());
  EXPECT_EQ(s6(0), s6(2));
  EXPECT_EQ(strategy_from_string("s4"), Strategy::s4);
  EXPECT_THROW(strategy_from_string("S7"), ConfigError);
}

TEST(Adam, ConfigValidation) {
  AdamConfig c;
  c.alpha = Vector::Ones(2);
  EXPECT_NO_THROW(c.validate(2));
  EXPECT_THROW(c.validate(3), ConfigError);
  c.beta1 = 0.99;
  c.beta2 = 0.5;  // gamma = 0.98 / 0.707 > 1
  EXPECT_THROW(c.validate(2), ConfigError);
}

TEST(Adam, QuadraticConvergesToMinimum) {
  const ParamVector start({"a"}, Vector::Constant(1, 0.0), Vector::Constant(1, -5.0), Vector::Constant(1, 5.0));
  AdamConfig c;
  c.alpha = Vector::Constant(1, 1e-2);
  c.max_epochs = 3000;
  const double target = 1.5;
  const TrainingTrace t = adam_optimize(
      [&](const Vector& th) {
        return LossGradient{0.5 * (th(0) - target) * (th(0) - target), Vector::Constant(1, th(0) - target)};
      },
      start, c, "quad");
  ASSERT_EQ(t.size(), 3000u);
  double peak = 0.0;
  for (const auto& e : t.epochs) peak = std::max(peak, e.theta(0));
  EXPECT_LE(peak, target + 0.1);  // momentum may overshoot, but only by a few steps
  EXPECT_NEAR(t.final_theta(0), target, 1e-3);
}

TEST(Adam, FirstStepIsAlphaTimesSign) {
  const ParamVector start({"a"}, Vector::Constant(1, 0.0), Vector::Constant(1, -5.0), Vector::Constant(1, 5.0));
  AdamConfig c;
  c.alpha = Vector::Constant(1, 0.1);
  c.max_epochs = 1;
  const TrainingTrace t =
      adam_optimize([](const Vector&) { return LossGradient{1.0, Vector::Constant(1, -3.0)}; }, start, c, "one");
  ASSERT_EQ(t.size(), 1u);
  EXPECT_NEAR(t.final_theta(0), 0.1, 1e-8);
}

TEST(Adam, ProjectsOntoTheBox) {
  const ParamVector start({"a"}, Vector::Constant(1, 0.0), Vector::Constant(1, -1.0), Vector::Constant(1, 1.0));
  AdamConfig c;
  c.alpha = Vector::Constant(1, 0.5);
  c.max_epochs = 20;
  const TrainingTrace t =
      adam_optimize([](const Vector&) { return LossGradient{1.0, Vector::Constant(1, -1.0)}; }, start, c, "wall");
  for (const auto& r : t.epochs) EXPECT_LE(r.theta(0), 1.0);
  EXPECT_EQ(t.final_theta(0), 1.0);
}

TEST(Adam, NonFiniteGradientStopsWithFailure) {
  const ParamVector start({"a"}, Vector::Constant(1, 0.0), Vector::Constant(1, -1.0), Vector::Constant(1, 1.0));
  AdamConfig c;
  c.alpha = Vector::Constant(1, 0.1);
  c.max_epochs = 10;
  int calls = 0;
  const TrainingTrace t = adam_optimize(
      [&](const Vector&) {
        ++calls;
        return LossGradient{calls < 4 ? 1.0 : std::nan(""), Vector::Constant(1, 1.0)};
      },
      start, c, "nan");
  EXPECT_TRUE(t.failed);
  EXPECT_EQ(t.size(), 3u);
}

TEST(AdamTrain, StaysPutAtGroundTruth) {
  const ParamVector p = dab::reference_params();
  AdamConfig c;
  c.alpha = Vector::Constant(3, 1e-3);
  c.max_epochs = 20;
  const TrainingTrace t = adam_train(reference_data(), dab_model(), kDt, p, c, "S3");
  for (const auto& r : t.epochs) EXPECT_EQ(r.theta, p.values());
}

TEST(AdamTrain, IteratesStayInsideTheBox) {
  const ParamVector p = dab::reference_params();
  AdamConfig c;
  c.alpha = Vector(3);
  c.alpha << 1e-4, 1.0, 0.1;  // deliberately aggressive
  c.max_epochs = 200;
  const TrainingTrace t = adam_train(reference_data(), dab_model(), kDt, p.with_values((p.lower() + p.upper()) / 2), c, "hot");
  for (const auto& r : t.epochs) EXPECT_TRUE(p.contains(r.theta));
  EXPECT_TRUE(p.contains(t.final_theta));
}

TEST(Regret, ZeroWhenIteratesSitOnOptimum) {
  const ParamVector p = dab::reference_params();
  AdamConfig c;
  c.alpha = Vector::Constant(3, 1e-3);
  c.max_epochs = 5;
  const WaveformDataset d = reference_data();
  const TrainingTrace t = adam_train(d, dab_model(), kDt, p, c, "S3");
  const RegretLedger l = regret_ledger(t, d, dab_model(), kDt, ThetaStarPolicy::ground_truth, p.values());
  EXPECT_EQ(l.regret_t(), 0.0);
  EXPECT_EQ(l.avg(), 0.0);
}

TEST(Regret, NondecreasingOnNoiselessData) {
  const ParamVector p = dab::reference_params();
  AdamConfig c;
  c.alpha = Vector(3);
  c.alpha << 3e-6, 0.05, 0.007;
  c.max_epochs = 100;
  const WaveformDataset d = reference_data();
  const TrainingTrace t = adam_train(d, dab_model(), kDt, p.with_values((p.lower() + p.upper()) / 2), c, "S3");
  const RegretLedger l = regret_ledger(t, d, dab_model(), kDt, ThetaStarPolicy::ground_truth, p.values());
  for (std::size_t i = 1; i < l.regret.size(); ++i) EXPECT_GE(l.regret[i], l.regret[i - 1]);
  EXPECT_DOUBLE_EQ(l.avg_regret[9], l.regret[9] / 10.0);
  const RegretLedger best = regret_ledger(t, d, dab_model(), kDt, ThetaStarPolicy::best_seen);
  EXPECT_GE(best.loss_star, 0.0);
  EXPECT_LE(best.regret_t(), l.regret_t());
}

TEST(Regret, LedgerNeedsEpochsAndThetaStar) {
  const WaveformDataset d = reference_data();
  EXPECT_THROW(regret_ledger(TrainingTrace{}, d, dab_model(), kDt, ThetaStarPolicy::best_seen), EmptyTrace);
  const TrainingTrace t = scripted_trace({1.0});
  EXPECT_THROW(regret_ledger(t, d, dab_model(), kDt, ThetaStarPolicy::ground_truth), ConfigError);
}

TEST(RegretBound, ConstantAtTZeroAndSqrtScaling) {
  AdamConfig c;
  c.alpha = Vector::Constant(3, 0.01);
  c.lambda = 0.5;  // keeps the constant term small enough to subtract exactly
  const RegretBoundTerms terms = regret_bound_terms(c, 3, 2.0, 1.5, 4.0);
  EXPECT_EQ(regret_bound(c, 3, 2.0, 1.5, 4.0, 0.0), terms.constant);
  const double t = 100.0;
  const double ratio = (regret_bound(c, 3, 2.0, 1.5, 4.0, 4 * t) - terms.constant) /
                       (regret_bound(c, 3, 2.0, 1.5, 4.0, t) - terms.constant);
  EXPECT_NEAR(ratio, 2.0, 1e-10);
}

TEST(RegretBound, MatchesScalarFormula) {
  AdamConfig c;
  c.alpha = Vector::Constant(2, 0.02);
  c.lambda = 0.99;
  const double d = 2, big_d = 3, dinf = 2, g = 5, t = 49;
  const double b1 = c.beta1, b2 = c.beta2, a = 0.02, gam = b1 * b1 / std::sqrt(b2);
  const double expected = d * dinf * dinf * g * std::sqrt(1 - b2) / (2 * a * (1 - b1) * (1 - 0.99) * (1 - 0.99)) +
                          d * big_d * big_d * g * std::sqrt(t) / (2 * a * (1 - b1)) +
                          a * (1 + b1) * d * g * g * std::sqrt(t) / ((1 - b1) * std::sqrt(1 - b2) * (1 - gam) * (1 - gam));
  EXPECT_NEAR(regret_bound(c, 2, big_d, dinf, g, t), expected, 1e-12 * expected);
}

TEST(RegretBound, DivergentConstants) {
  AdamConfig c;
  c.alpha = Vector::Constant(1, 0.1);
  c.lambda = 1.0;
  EXPECT_THROW(regret_bound_terms(c, 1, 1, 1, 1), DivergentBound);
  c.lambda = 0.9;
  c.beta1 = 0.99;
  c.beta2 = 0.5;
  EXPECT_THROW(regret_bound_terms(c, 1, 1, 1, 1), DivergentBound);
}

TEST(LogLogSlope, RecoversPowerLaw) {
  std::vector<double> r;
  for (int t = 1; t <= 400; ++t) r.push_back(3.0 * std::sqrt(static_cast<double>(t)));
  EXPECT_NEAR(*loglog_slope(r, 1, 400), 0.5, 1e-12);
  EXPECT_FALSE(loglog_slope(r, 5, 5).has_value());
  std::vector<double> zeros(10, 0.0);
  EXPECT_FALSE(loglog_slope(zeros, 1, 10).has_value());
}

TEST(Diagnostics, MonotoneApproachHasNoOvershoot) {
  const TrainingTrace t = scripted_trace({0.0, 0.5, 0.9, 0.995, 1.0, 1.0});
  const TrainingDiagnostics d = training_diagnostics(t, Vector::Constant(1, 1.0));
  EXPECT_EQ(d.overshoot_pct(0), 0.0);
  EXPECT_EQ(d.oscillation_count, 0);
  EXPECT_EQ(*d.convergence_epoch, 4u);
}

TEST(Diagnostics, EightySevenPercentOvershoot) {
  const double th0 = 2.0, star = 10.0;
  const TrainingTrace t = scripted_trace({th0, 1.87 * star - 0.87 * th0, star});
  const TrainingDiagnostics d = training_diagnostics(t, Vector::Constant(1, star));
  EXPECT_NEAR(d.overshoot_pct(0), 87.0, 1e-9);
  EXPECT_EQ(d.oscillation_count, 0);  // the first crossing is not an oscillation
  const TrainingTrace back = scripted_trace({th0, 12.0, 9.0, 11.0, star});
  EXPECT_EQ(training_diagnostics(back, Vector::Constant(1, star)).oscillation_count, 2);
}

TEST(Diagnostics, ConvergenceRequiresStayingInBand) {
  const TrainingTrace t = scripted_trace({0.0, 1.0, 1.5, 1.0, 1.005});
  const TrainingDiagnostics d = training_diagnostics(t, Vector::Constant(1, 1.0));
  EXPECT_EQ(*d.convergence_epoch, 4u);
  const TrainingTrace never = scripted_trace({0.0, 0.5});
  EXPECT_FALSE(training_diagnostics(never, Vector::Constant(1, 1.0)).convergence_epoch.has_value());
}

TEST(Diagnostics, ZeroInitialGapMeansZeroOvershoot) {
  const TrainingTrace t = scripted_trace({1.0, 1.2, 1.0});
  EXPECT_EQ(training_diagnostics(t, Vector::Constant(1, 1.0)).overshoot_pct(0), 0.0);
}

TEST(Diagnostics, EmptyTraceRaises) {
  EXPECT_THROW(training_diagnostics(TrainingTrace{}, Vector::Ones(1)), EmptyTrace);
}
