#pragma once

// DAB excitation waveforms and ground-truth dataset synthesis.

#include <cmath>
#include <cstdint>
#include <set>
#include <utility>
#include <vector>

#include "pann/dataset.hpp"
#include "pann/random.hpp"
#include "pann/recurrent.hpp"
#include "pann/statespace.hpp"

namespace pann {

// Bridge voltages (v_p, v_s) at sample k (time k*dt). The primary square
// wave is +v_in on the first half of each period; the secondary is the same
// square wave scaled to v_out and delayed by phase_shift * period.
inline std::pair<double, double> dab_pwm_sample(const ModulationSpec& spec, long long k) {
  const auto p = static_cast<double>(spec.steps_per_period());
  auto positive_half = [p](double pos) {
    const double frac = pos - p * std::floor(pos / p);
    return 2.0 * frac < p;
  };
  const auto kd = static_cast<double>(k);
  const double vp = positive_half(kd) ? spec.v_in : -spec.v_in;
  const double vs = positive_half(kd - spec.phase_shift * p) ? spec.v_out : -spec.v_out;
  return {vp, vs};
}

// 2 x K matrix of (v_p, v_s), K = n_periods * steps_per_period.
inline Matrix dab_pwm(const ModulationSpec& spec) {
  spec.validate();
  const auto k_total = static_cast<Eigen::Index>(spec.n_periods * spec.steps_per_period());
  Matrix out(2, k_total);
  for (Eigen::Index k = 0; k < k_total; ++k) {
    const auto [vp, vs] = dab_pwm_sample(spec, k);
    out(0, k) = vp;
    out(1, k) = vs;
  }
  return out;
}

// Inputs aligned with the recurrence: column k holds u(t_{k+1}).
inline Matrix dab_next_inputs(const ModulationSpec& spec, std::size_t n_steps) {
  Matrix out(2, static_cast<Eigen::Index>(n_steps));
  for (Eigen::Index k = 0; k < out.cols(); ++k) {
    const auto [vp, vs] = dab_pwm_sample(spec, k + 1);
    out(0, k) = vp;
    out(1, k) = vs;
  }
  return out;
}

struct SynthesisOptions {
  std::size_t max_cycles = 200;
  double settle_tol = 1e-9;
};

// Segment streams are keyed by role and index so the train/test/validation
// draws never overlap.
inline std::uint64_t segment_stream_index(DatasetRole role, std::size_t index) {
  return (static_cast<std::uint64_t>(role) << 32) | static_cast<std::uint64_t>(index);
}

// Settles the true-parameter model for each spec and emits n_periods of
// teacher-forcing pairs. Measured states in z carry N(0, noise_sigma^2)
// noise; targets stay noiseless.
inline WaveformDataset synthesize_dataset(const ParamVector& theta_true, const std::vector<ModulationSpec>& specs,
                                          double noise_sigma, std::uint64_t seed,
                                          DatasetRole role = DatasetRole::train,
                                          const SynthesisOptions& opts = {}) {
  if (specs.empty()) throw InvalidSpec("synthesize_dataset: need at least one modulation spec");
  if (!(noise_sigma >= 0.0)) throw InvalidSpec("noise_sigma must be non-negative");

  WaveformDataset data;
  data.role = role;
  data.segments.reserve(specs.size());
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const ModulationSpec& spec = specs[i];
    spec.validate();
    const DiscreteTransition w = dab_transition(theta_true, spec.dt);
    const std::size_t p = spec.steps_per_period();
    const SettleResult settled =
        settle_to_steady_state(w, dab_next_inputs(spec, p), Vector::Zero(1), opts.max_cycles, opts.settle_tol);

    const std::size_t k_total = p * spec.n_periods;
    const Matrix inputs = dab_next_inputs(spec, k_total);
    const Trajectory traj = rollout_free(w, settled.period.states.col(0), inputs);

    WaveformSegment seg;
    seg.spec = spec;
    seg.noise_sigma = noise_sigma;
    seg.settled = settled.converged;
    const auto k = static_cast<Eigen::Index>(k_total);
    seg.times = traj.times.head(k);
    seg.z.resize(3, k);
    seg.targets = traj.states.rightCols(k);
    Stream noise(seed, StreamTag::noise, segment_stream_index(role, i));
    for (Eigen::Index c = 0; c < k; ++c) {
      const double measured = traj.states(0, c) + (noise_sigma > 0.0 ? noise_sigma * noise.normal() : 0.0);
      seg.z(0, c) = measured;
      seg.z(1, c) = inputs(0, c);
      seg.z(2, c) = inputs(1, c);
    }
    data.segments.push_back(std::move(seg));
  }
  return data;
}

// `count` pairwise-distinct phase shifts, uniform on [lo, hi].
inline std::vector<double> draw_phase_shifts(std::size_t count, double lo, double hi, std::uint64_t seed) {
  if (!(lo < hi) || !(lo > -0.5) || !(hi <= 0.5)) throw InvalidSpec("phase-shift range must lie in (-0.5, 0.5]");
  std::vector<double> out;
  std::set<double> seen;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::uint64_t attempt = 0;; ++attempt) {
      Stream s(seed, StreamTag::phase_shift, (attempt << 32) | i);
      const double phi = s.uniform(lo, hi);
      if (seen.insert(phi).second) {
        out.push_back(phi);
        break;
      }
    }
  }
  return out;
}

struct SplitCounts {
  std::size_t train = 2;
  std::size_t test = 50;
  std::size_t validation = 50;

  std::size_t total() const { return train + test + validation; }
};

struct DatasetSplits {
  WaveformDataset train;
  WaveformDataset test;
  WaveformDataset validation;
};

// Train/test/validation segments at distinct operating points: one phase
// shift per segment, drawn in that order from a single seeded sequence.
inline DatasetSplits synthesize_splits(const ParamVector& theta_true, const ModulationSpec& base,
                                       const SplitCounts& counts, double phase_lo, double phase_hi,
                                       double noise_sigma, std::uint64_t seed, const SynthesisOptions& opts = {}) {
  const std::vector<double> phases = draw_phase_shifts(counts.total(), phase_lo, phase_hi, seed);
  auto specs_for = [&](std::size_t first, std::size_t n) {
    std::vector<ModulationSpec> specs;
    for (std::size_t i = 0; i < n; ++i) {
      ModulationSpec s = base;
      s.phase_shift = phases[first + i];
      specs.push_back(s);
    }
    return specs;
  };
  DatasetSplits out;
  auto make = [&](std::size_t first, std::size_t n, DatasetRole role) {
    WaveformDataset d;
    d.role = role;
    if (n > 0) d = synthesize_dataset(theta_true, specs_for(first, n), noise_sigma, seed, role, opts);
    return d;
  };
  out.train = make(0, counts.train, DatasetRole::train);
  out.test = make(counts.train, counts.test, DatasetRole::test);
  out.validation = make(counts.train + counts.test, counts.validation, DatasetRole::validation);
  return out;
}

}  // namespace pann
