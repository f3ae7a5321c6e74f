#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "oracles.hpp"
#include "pann/dataset_io.hpp"
#include "pann/signals.hpp"

using namespace pann;

namespace {
constexpr double kDt = dab::kTimeStep;

std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("pann_test_" + name);
  std::filesystem::remove_all(p);
  return p;
}
}  // namespace

TEST(Pwm, ZeroPhaseIsInPhase) {
  ModulationSpec spec;
  const Matrix u = dab_pwm(spec);
  ASSERT_EQ(u.cols(), 250);
  for (Eigen::Index k = 0; k < 250; ++k) {
    EXPECT_EQ(u(0, k), k < 125 ? 200.0 : -200.0);
    EXPECT_EQ(u(1, k), u(0, k));
  }
}

TEST(Pwm, HalfPeriodShiftInverts) {
  ModulationSpec spec;
  spec.phase_shift = 0.5;
  const Matrix u = dab_pwm(spec);
  for (Eigen::Index k = 0; k < 250; ++k) EXPECT_EQ(u(1, k), -u(0, k));
}

TEST(Pwm, QuarterShiftDelaysSecondary) {
  ModulationSpec spec;
  spec.phase_shift = 0.25;
  spec.v_out = 150.0;
  const Matrix u = dab_pwm(spec);
  int changes = 0;
  for (Eigen::Index k = 1; k < 250; ++k) changes += u(1, k) != u(1, k - 1);
  EXPECT_EQ(changes, 2);
  EXPECT_EQ(u(1, 62), -150.0);
  EXPECT_EQ(u(1, 63), 150.0);
  EXPECT_EQ(u(1, 187), 150.0);
  EXPECT_EQ(u(1, 188), -150.0);
}

TEST(Modulation, RejectsNonIntegralPeriod) {
  ModulationSpec spec;
  spec.dt = 77e-9;
  EXPECT_THROW(spec.validate(), InvalidSpec);
  spec.dt = 80e-9;
  spec.phase_shift = 0.7;
  EXPECT_THROW(spec.validate(), InvalidSpec);
  spec.phase_shift = 0.0;
  EXPECT_NO_THROW(spec.validate());
  EXPECT_EQ(spec.steps_per_period(), 250u);
}

TEST(Synthesis, NoiselessTargetsFollowTheRecurrence) {
  const ParamVector p = dab::reference_params();
  ModulationSpec spec;
  spec.phase_shift = 0.2;
  spec.n_periods = 2;
  const WaveformDataset d = synthesize_dataset(p, {spec}, 0.0, 3);
  const auto& s = d.segments[0];
  ASSERT_EQ(s.steps(), 500);
  EXPECT_TRUE(s.settled);
  const Matrix w = oracle::dab_w(p[0], p[1], p[2], kDt);
  for (Eigen::Index k = 0; k < s.steps(); ++k) {
    const double pred = w(0, 0) * s.z(0, k) + w(0, 1) * s.z(1, k) + w(0, 2) * s.z(2, k);
    EXPECT_NEAR(pred, s.targets(0, k), 1e-12);
    if (k + 1 < s.steps()) EXPECT_EQ(s.z(0, k + 1), s.targets(0, k));
  }
  // Periodic steady state: the second period repeats the first.
  for (Eigen::Index k = 0; k < 250; ++k) EXPECT_NEAR(s.z(0, k), s.z(0, k + 250), 1e-8);
}

TEST(Synthesis, NoiseOnlyTouchesMeasuredState) {
  const ParamVector p = dab::reference_params();
  ModulationSpec spec;
  spec.phase_shift = 0.1;
  const WaveformDataset clean = synthesize_dataset(p, {spec}, 0.0, 5);
  const WaveformDataset noisy = synthesize_dataset(p, {spec}, 0.05, 5);
  EXPECT_EQ(clean.segments[0].targets, noisy.segments[0].targets);
  EXPECT_EQ(clean.segments[0].z.bottomRows(2), noisy.segments[0].z.bottomRows(2));
  const Vector diff = (noisy.segments[0].z.row(0) - clean.segments[0].z.row(0)).transpose();
  EXPECT_GT(diff.cwiseAbs().maxCoeff(), 0.0);
  const double sd = std::sqrt(diff.squaredNorm() / static_cast<double>(diff.size()));
  EXPECT_NEAR(sd, 0.05, 0.015);
}

TEST(Synthesis, DeterministicPerSeed) {
  const ParamVector p = dab::reference_params();
  const DatasetSplits a = synthesize_splits(p, ModulationSpec{}, {2, 3, 3}, 0.05, 0.45, 0.01, 42);
  const DatasetSplits b = synthesize_splits(p, ModulationSpec{}, {2, 3, 3}, 0.05, 0.45, 0.01, 42);
  const DatasetSplits c = synthesize_splits(p, ModulationSpec{}, {2, 3, 3}, 0.05, 0.45, 0.01, 43);
  EXPECT_EQ(a.test.segments[2].z, b.test.segments[2].z);
  EXPECT_NE(a.train.segments[0].spec.phase_shift, c.train.segments[0].spec.phase_shift);
}

TEST(Synthesis, SplitsUseDistinctPhaseShifts) {
  const DatasetSplits s = synthesize_splits(dab::reference_params(), ModulationSpec{}, {2, 50, 50}, 0.05, 0.45, 0.0, 1);
  EXPECT_EQ(s.train.segments.size(), 2u);
  EXPECT_EQ(s.test.segments.size(), 50u);
  EXPECT_EQ(s.validation.segments.size(), 50u);
  std::set<double> phases;
  for (const auto* d : {&s.train, &s.test, &s.validation}) {
    for (const auto& seg : d->segments) {
      EXPECT_GE(seg.spec.phase_shift, 0.05);
      EXPECT_LE(seg.spec.phase_shift, 0.45);
      phases.insert(seg.spec.phase_shift);
    }
  }
  EXPECT_EQ(phases.size(), 102u);
}

TEST(Synthesis, RejectsBadInputs) {
  const ParamVector p = dab::reference_params();
  EXPECT_THROW(synthesize_dataset(p, {}, 0.0, 1), InvalidSpec);
  EXPECT_THROW(synthesize_dataset(p, {ModulationSpec{}}, -1.0, 1), InvalidSpec);
  EXPECT_THROW(draw_phase_shifts(3, 0.4, 0.1, 1), InvalidSpec);
}

TEST(DatasetIo, RoundTripIsExact) {
  const DatasetSplits s = synthesize_splits(dab::reference_params(), ModulationSpec{}, {2, 1, 1}, 0.05, 0.45, 0.02, 9);
  const auto dir = temp_dir("io");
  const auto manifest = save_datasets(dir, {&s.train, &s.test, &s.validation}, {9, 0.02, {}});
  const WaveformDataset back = load_dataset(manifest, DatasetRole::train);
  ASSERT_EQ(back.segments.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back.segments[i].z, s.train.segments[i].z);
    EXPECT_EQ(back.segments[i].targets, s.train.segments[i].targets);
    EXPECT_EQ(back.segments[i].times, s.train.segments[i].times);
    EXPECT_EQ(back.segments[i].spec.phase_shift, s.train.segments[i].spec.phase_shift);
  }
  EXPECT_EQ(load_dataset(manifest, DatasetRole::validation).segments.size(), 1u);
  std::filesystem::remove_all(dir);
}

TEST(DatasetIo, RejectsMalformedCsv) {
  WaveformSegment seg;
  EXPECT_THROW(parse_segment_csv("a,b\n1,2\n", seg), ConfigError);
  EXPECT_THROW(parse_segment_csv("time,i_L,v_p,v_s,target\n1,2,3\n", seg), ConfigError);
  EXPECT_THROW(parse_segment_csv("time,i_L,v_p,v_s,target\n1,2,3,x,5\n", seg), ConfigError);
}
