#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "pann/error.hpp"
#include "pann/linalg.hpp"

namespace pann {

// Single-phase-shift excitation of one DAB operating point.
struct ModulationSpec {
  double v_in = 200.0;         // primary bridge amplitude, V
  double v_out = 200.0;        // secondary bridge amplitude, V
  double f_s = 50e3;           // switching frequency, Hz
  double phase_shift = 0.0;    // secondary delay as a fraction of the switching period, (-0.5, 0.5]
  double dt = 80e-9;           // s
  std::size_t n_periods = 1;

  double period() const { return 1.0 / f_s; }

  std::size_t steps_per_period() const { return static_cast<std::size_t>(std::llround(period() / dt)); }

  void validate() const {
    if (!(f_s > 0.0) || !std::isfinite(f_s)) throw InvalidSpec("switching frequency must be positive");
    if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidSpec("dt must be positive");
    if (dt > 0.5 * period()) throw InvalidSpec("dt must not exceed half a switching period");
    const double steps = period() / dt;
    if (std::abs(steps - std::round(steps)) > 1e-9 * steps) {
      throw InvalidSpec("switching period / dt = " + std::to_string(steps) +
                        " is not an integer number of steps");
    }
    if (!(phase_shift > -0.5 && phase_shift <= 0.5)) throw InvalidSpec("phase_shift must lie in (-0.5, 0.5]");
    if (n_periods < 1) throw InvalidSpec("n_periods must be at least 1");
    if (!std::isfinite(v_in) || !std::isfinite(v_out)) throw InvalidSpec("amplitudes must be finite");
  }
};

enum class DatasetRole { train, test, validation };

inline std::string_view to_string(DatasetRole role) {
  switch (role) {
    case DatasetRole::train: return "train";
    case DatasetRole::test: return "test";
    case DatasetRole::validation: return "validation";
  }
  return "train";
}

inline DatasetRole dataset_role_from_string(std::string_view s) {
  if (s == "train") return DatasetRole::train;
  if (s == "test") return DatasetRole::test;
  if (s == "validation") return DatasetRole::validation;
  throw ConfigError("unknown dataset role '" + std::string(s) + "'");
}

// One teacher-forcing segment: column k of `z` is [x(t_k) measured; u(t_{k+1})]
// and column k of `targets` is x*(t_{k+1}).
struct WaveformSegment {
  Vector times;      // t_k, length K
  Matrix z;          // (D_x + D_u) x K
  Matrix targets;    // D_x x K
  ModulationSpec spec;
  double noise_sigma = 0.0;
  bool settled = true;

  Eigen::Index steps() const { return z.cols(); }
};

struct WaveformDataset {
  DatasetRole role = DatasetRole::train;
  std::vector<WaveformSegment> segments;

  bool empty() const { return segments.empty(); }

  Eigen::Index total_steps() const {
    Eigen::Index n = 0;
    for (const auto& s : segments) n += s.steps();
    return n;
  }

  // Largest |z_j| per component over all segments.
  Vector z_bounds() const {
    if (segments.empty()) throw EmptyDataset("dataset has no segments");
    Vector b = Vector::Zero(segments.front().z.rows());
    for (const auto& s : segments) {
      if (s.steps() > 0) b = b.cwiseMax(s.z.cwiseAbs().rowwise().maxCoeff());
    }
    return b;
  }
};

}  // namespace pann
