#pragma once

// Recurrent execution of the discretized model: one-step prediction,
// teacher-forced prediction over a dataset, and free-running rollout.

#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

#include "pann/dataset.hpp"
#include "pann/error.hpp"
#include "pann/linalg.hpp"
#include "pann/statespace.hpp"

namespace pann {

// States beyond this magnitude are treated as a diverging model.
inline constexpr double kStateOverflow = 1e12;

struct StepInput {
  Vector x_prev;  // x(t_k)
  Vector u_next;  // u(t_{k+1})

  Vector z() const {
    Vector out(x_prev.size() + u_next.size());
    out << x_prev, u_next;
    return out;
  }
};

struct Trajectory {
  Vector times;   // K + 1 samples, uniform spacing dt
  Matrix states;  // D_x x (K + 1), column 0 is the initial condition
  Matrix inputs;  // D_u x K, column k drives the transition k -> k + 1

  Eigen::Index steps() const { return inputs.cols(); }
};

namespace detail {

// out = W z with a fixed summation order, so every prediction path
// (rollout, teacher forcing, single step) rounds identically.
inline void apply_transition(const Matrix& w, const double* z, double* out) {
  for (Eigen::Index r = 0; r < w.rows(); ++r) {
    double acc = 0.0;
    for (Eigen::Index c = 0; c < w.cols(); ++c) acc += w(r, c) * z[c];
    out[r] = acc;
  }
}

}  // namespace detail

inline Vector step(const DiscreteTransition& w, const Vector& z) {
  if (z.size() != w.dim_z()) {
    throw ShapeMismatch("step: z has length " + std::to_string(z.size()) + ", W expects " +
                        std::to_string(w.dim_z()));
  }
  Vector out(w.dim_x());
  detail::apply_transition(w.w, z.data(), out.data());
  return out;
}

inline Vector step(const DiscreteTransition& w, const StepInput& in) {
  if (in.x_prev.size() != w.dim_x() || in.u_next.size() != w.dim_u()) {
    throw ShapeMismatch("step: state/input sizes do not match W");
  }
  return step(w, in.z());
}

namespace detail {

inline void check_state(const Vector& x, Eigen::Index k) {
  if (!x.allFinite() || (x.size() > 0 && x.cwiseAbs().maxCoeff() > kStateOverflow)) {
    throw NonFinite("state diverged at step " + std::to_string(k) +
                    " (check the inference-stability bound of W)");
  }
}

}  // namespace detail

inline Trajectory rollout_free(const DiscreteTransition& w, const Vector& x0, const Matrix& inputs) {
  if (x0.size() != w.dim_x()) throw ShapeMismatch("rollout: x0 has the wrong length");
  if (inputs.rows() != w.dim_u()) throw ShapeMismatch("rollout: inputs must have D_u rows");
  if (inputs.cols() < 1) throw ShapeMismatch("rollout: need at least one input column");
  const auto k_steps = inputs.cols();
  const auto nx = w.dim_x();

  Trajectory out;
  out.inputs = inputs;
  out.states.resize(nx, k_steps + 1);
  out.times.resize(k_steps + 1);
  out.states.col(0) = x0;
  Vector z(w.dim_z());
  for (Eigen::Index k = 0; k < k_steps; ++k) {
    out.times(k) = static_cast<double>(k) * w.dt;
    z << out.states.col(k), inputs.col(k);
    detail::apply_transition(w.w, z.data(), out.states.col(k + 1).data());
    detail::check_state(out.states.col(k + 1), k + 1);
  }
  out.times(k_steps) = static_cast<double>(k_steps) * w.dt;
  return out;
}

// One prediction matrix (D_x x K) per segment, each column W z_k computed
// from the measured z_k; predictions are never fed back.
inline std::vector<Matrix> rollout_teacher_forced(const DiscreteTransition& w, const WaveformDataset& data) {
  if (data.empty()) throw EmptyDataset("teacher-forced rollout: dataset has no segments");
  std::vector<Matrix> out;
  out.reserve(data.segments.size());
  for (const auto& seg : data.segments) {
    if (seg.steps() == 0) throw EmptyDataset("teacher-forced rollout: segment has no steps");
    if (seg.z.rows() != w.dim_z()) throw ShapeMismatch("teacher-forced rollout: z rows do not match W");
    Matrix pred(w.dim_x(), seg.steps());
    for (Eigen::Index k = 0; k < seg.steps(); ++k) {
      detail::apply_transition(w.w, seg.z.col(k).data(), pred.col(k).data());
    }
    out.push_back(std::move(pred));
  }
  return out;
}

struct SettleResult {
  Trajectory period;  // last simulated period, states has P + 1 columns
  bool converged = false;
  std::size_t cycles = 0;
  double last_change = 0.0;
};

// Repeat one input period until the state sequence stops changing from one
// cycle to the next (max change <= tol * max |state|). A non-positive tol is
// unreachable and yields converged = false after max_cycles.
inline SettleResult settle_to_steady_state(const DiscreteTransition& w, const Matrix& inputs_one_period,
                                           const Vector& x0, std::size_t max_cycles, double tol) {
  if (inputs_one_period.cols() < 1) throw ShapeMismatch("settle: period must contain at least one step");
  if (max_cycles < 1) throw ConfigError("settle: max_cycles must be at least 1");
  const auto p = inputs_one_period.cols();

  SettleResult out;
  Matrix previous = x0.replicate(1, p + 1);
  Vector start = x0;
  for (std::size_t cycle = 1; cycle <= max_cycles; ++cycle) {
    out.period = rollout_free(w, start, inputs_one_period);
    out.cycles = cycle;
    const double change = (out.period.states - previous).cwiseAbs().maxCoeff();
    const double scale = out.period.states.cwiseAbs().maxCoeff();
    out.last_change = change;
    if (tol > 0.0 && change <= tol * scale) {
      out.converged = true;
      return out;
    }
    previous = out.period.states;
    start = out.period.states.col(p);
  }
  return out;
}

}  // namespace pann
