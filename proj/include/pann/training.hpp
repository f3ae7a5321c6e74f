#pragma once

// Parameter identification for the recurrent model: the teacher-forced
// squared-error loss with its analytic gradient and Hessian, box-projected
// Adam, Lipschitz-aware learning rates, the regret ledger with Adam's regret
// bound, and convergence diagnostics.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pann/dataset.hpp"
#include "pann/error.hpp"
#include "pann/linalg.hpp"
#include "pann/recurrent.hpp"
#include "pann/statespace.hpp"
#include "pann/trace.hpp"

namespace pann {

// ---------------------------------------------------------------------------
// Loss, gradient, Hessian
// ---------------------------------------------------------------------------

enum class Order { value = 0, gradient = 1, hessian = 2 };

struct LossEvaluation {
  double loss = 0.0;
  Vector gradient;  // empty unless requested
  Matrix hessian;   // empty unless requested
  Eigen::Index steps = 0;

  double rmse() const { return std::sqrt(2.0 * loss); }
};

// Mean over all steps and segments of 0.5 |x_hat_k - x*_k|^2, with
// x_hat_k = W(theta) z_k (teacher forcing, z treated as data). Per step:
//   grad_i = r^T (dW_i z),   H_ij = (dW_i z)^T (dW_j z) + r^T (d2W_ij z).
inline LossEvaluation evaluate_loss(const Vector& theta, const WaveformDataset& data, const ContinuousModel& model,
                                    double dt, Order order = Order::value) {
  if (data.empty() || data.total_steps() == 0) throw EmptyDataset("loss: dataset has no steps");
  if (order >= Order::gradient && !model.has_first_derivatives() && !model.closed_form) {
    throw MissingDerivatives("gradient requires dW/dtheta");
  }
  const DiscreteTransition w = discretize_values(model, theta, dt);
  if (order >= Order::gradient && !w.dw) throw MissingDerivatives("model does not provide dW/dtheta");
  if (order == Order::hessian && !w.d2w) throw MissingDerivatives("model does not provide d2W/dtheta2");

  const auto nt = static_cast<Eigen::Index>(w.dim_theta());
  const auto uth = static_cast<std::size_t>(nt);
  LossEvaluation out;
  double sum = 0.0;
  Vector grad_sum = Vector::Zero(order >= Order::gradient ? nt : 0);
  Matrix hess_sum = Matrix::Zero(order == Order::hessian ? nt : 0, order == Order::hessian ? nt : 0);

  const std::vector<Matrix> predictions = rollout_teacher_forced(w, data);
  for (std::size_t s = 0; s < data.segments.size(); ++s) {
    const WaveformSegment& seg = data.segments[s];
    if (seg.targets.rows() != w.dim_x() || seg.targets.cols() != seg.steps()) {
      throw ShapeMismatch("loss: targets do not match z");
    }
    const Matrix residual = predictions[s] - seg.targets;
    for (Eigen::Index k = 0; k < seg.steps(); ++k) sum += 0.5 * residual.col(k).squaredNorm();
    out.steps += seg.steps();
    if (order == Order::value) continue;

    // a[i] = dW_i Z (D_x x K)
    std::vector<Matrix> a(uth);
    for (std::size_t i = 0; i < uth; ++i) a[i] = (*w.dw)[i] * seg.z;
    for (std::size_t i = 0; i < uth; ++i) {
      grad_sum(static_cast<Eigen::Index>(i)) += (residual.cwiseProduct(a[i])).sum();
    }
    if (order != Order::hessian) continue;
    for (std::size_t i = 0; i < uth; ++i) {
      for (std::size_t j = i; j < uth; ++j) {
        const Matrix c = (*w.d2w)[i][j] * seg.z;
        const double h = a[i].cwiseProduct(a[j]).sum() + residual.cwiseProduct(c).sum();
        const auto ii = static_cast<Eigen::Index>(i);
        const auto jj = static_cast<Eigen::Index>(j);
        hess_sum(ii, jj) += h;
        if (ii != jj) hess_sum(jj, ii) += h;
      }
    }
  }
  const double n = static_cast<double>(out.steps);
  out.loss = sum / n;
  if (order >= Order::gradient) out.gradient = grad_sum / n;
  if (order == Order::hessian) out.hessian = hess_sum / n;
  return out;
}

inline double loss(const Vector& theta, const WaveformDataset& data, const ContinuousModel& model, double dt) {
  return evaluate_loss(theta, data, model, dt, Order::value).loss;
}
inline double loss(const ParamVector& theta, const WaveformDataset& data, const ContinuousModel& model, double dt) {
  return loss(theta.values(), data, model, dt);
}

inline Vector gradient(const Vector& theta, const WaveformDataset& data, const ContinuousModel& model, double dt) {
  return evaluate_loss(theta, data, model, dt, Order::gradient).gradient;
}
inline Vector gradient(const ParamVector& theta, const WaveformDataset& data, const ContinuousModel& model,
                       double dt) {
  return gradient(theta.values(), data, model, dt);
}

inline Matrix hessian(const Vector& theta, const WaveformDataset& data, const ContinuousModel& model, double dt) {
  return evaluate_loss(theta, data, model, dt, Order::hessian).hessian;
}
inline Matrix hessian(const ParamVector& theta, const WaveformDataset& data, const ContinuousModel& model,
                      double dt) {
  return hessian(theta.values(), data, model, dt);
}

// ---------------------------------------------------------------------------
// Learning rates
// ---------------------------------------------------------------------------

struct RateLimits {
  double min = 1e-7;
  double max = 1e1;
};

// alpha_i = scale_c * G_inf * (theta_i,max - theta_i,min) / L2theta, clamped.
inline Vector lipschitz_aware_rates(double g_inf, const Vector& ranges, double l2theta, double scale_c = 1.0,
                                    const RateLimits& limits = {}) {
  if (!(g_inf > 0.0) || !(l2theta > 0.0) || !std::isfinite(g_inf) || !std::isfinite(l2theta)) {
    throw NonPositiveBound("Lipschitz-aware rates need positive, finite G_inf and L2theta");
  }
  if (!(scale_c > 0.0)) throw NonPositiveBound("scale_c must be positive");
  if (ranges.size() == 0 || (ranges.array() <= 0.0).any()) throw NonPositiveBound("parameter ranges must be positive");
  const Vector raw = (scale_c * g_inf / l2theta) * ranges;
  return raw.cwiseMax(limits.min).cwiseMin(limits.max);
}

// Learning-rate strategies: S1..S5 scale the Lipschitz-aware rates by
// 0.01, 0.1, 1, 10, 100; S6 applies one uniform rate (the mean of S3's)
// to every parameter.
enum class Strategy { s1 = 1, s2, s3, s4, s5, s6 };

inline std::string strategy_label(Strategy s) { return "S" + std::to_string(static_cast<int>(s)); }

inline Strategy strategy_from_string(std::string_view s) {
  if (s.size() == 2 && (s[0] == 'S' || s[0] == 's') && s[1] >= '1' && s[1] <= '6') {
    return static_cast<Strategy>(s[1] - '0');
  }
  throw ConfigError("unknown strategy '" + std::string(s) + "' (expected S1..S6)");
}

inline double strategy_multiplier(Strategy s) {
  switch (s) {
    case Strategy::s1: return 0.01;
    case Strategy::s2: return 0.1;
    case Strategy::s3: return 1.0;
    case Strategy::s4: return 10.0;
    case Strategy::s5: return 100.0;
    case Strategy::s6: return 1.0;
  }
  return 1.0;
}

inline Vector strategy_rates(Strategy s, double g_inf, const Vector& ranges, double l2theta,
                             const RateLimits& limits = {}, double scale_c = 1.0) {
  if (s == Strategy::s6) {
    const Vector base = lipschitz_aware_rates(g_inf, ranges, l2theta, scale_c, limits);
    return Vector::Constant(ranges.size(), base.mean());
  }
  return lipschitz_aware_rates(g_inf, ranges, l2theta, scale_c * strategy_multiplier(s), limits);
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamConfig {
  Vector alpha;  // per-parameter step sizes
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double lambda = 1.0 - 1e-8;  // beta1_t = beta1 * lambda^(t-1)
  std::size_t max_epochs = 500;

  double gamma() const { return beta1 * beta1 / std::sqrt(beta2); }

  void validate(std::size_t dim) const {
    if (static_cast<std::size_t>(alpha.size()) != dim) throw ConfigError("Adam: alpha needs one rate per parameter");
    if (!alpha.allFinite() || (alpha.array() <= 0.0).any()) throw ConfigError("Adam: rates must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("Adam: beta1 must lie in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("Adam: beta2 must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw ConfigError("Adam: epsilon must be positive");
    if (!(lambda > 0.0 && lambda <= 1.0)) throw ConfigError("Adam: lambda must lie in (0, 1]");
    if (!(gamma() < 1.0)) throw ConfigError("Adam: beta1^2 / sqrt(beta2) must be < 1");
    if (max_epochs < 1) throw ConfigError("Adam: max_epochs must be at least 1");
  }
};

struct LossGradient {
  double loss = 0.0;
  Vector gradient;
};

template <typename F>
concept Objective = requires(const F& f, const Vector& theta) {
  { f(theta) } -> std::convertible_to<LossGradient>;
};

// Full-batch Adam with bias correction, per-parameter step sizes and
// projection onto the parameter box after every update. Epoch t logs the
// loss and gradient at theta_t before it is updated.
template <Objective F>
TrainingTrace adam_optimize(const F& objective, const ParamVector& theta0, const AdamConfig& config,
                            std::string label) {
  config.validate(theta0.size());
  const auto n = static_cast<Eigen::Index>(theta0.size());
  TrainingTrace trace;
  trace.label = std::move(label);
  trace.names = theta0.names();
  trace.lower = theta0.lower();
  trace.upper = theta0.upper();
  trace.alpha = config.alpha;
  trace.epochs.reserve(config.max_epochs);

  Vector theta = theta0.values();
  Vector m = Vector::Zero(n);
  Vector v = Vector::Zero(n);
  for (std::size_t t = 1; t <= config.max_epochs; ++t) {
    const LossGradient eval = objective(theta);
    if (!std::isfinite(eval.loss) || !eval.gradient.allFinite()) {
      trace.failed = true;
      trace.failure = "non-finite loss or gradient at epoch " + std::to_string(t);
      break;
    }
    EpochRecord rec;
    rec.epoch = t;
    rec.loss = eval.loss;
    rec.theta = theta;
    rec.grad = eval.gradient;
    rec.grad_norm2 = eval.gradient.norm();
    rec.grad_norm_inf = eval.gradient.cwiseAbs().maxCoeff();
    trace.epochs.push_back(std::move(rec));

    const double td = static_cast<double>(t);
    const double beta1_t = config.beta1 * std::pow(config.lambda, td - 1.0);
    const Vector& g = eval.gradient;
    m = beta1_t * m + (1.0 - beta1_t) * g;
    v = config.beta2 * v + (1.0 - config.beta2) * g.cwiseProduct(g);
    const Vector m_hat = m / (1.0 - std::pow(config.beta1, td));
    const Vector v_hat = v / (1.0 - std::pow(config.beta2, td));
    const Vector update =
        config.alpha.cwiseProduct(m_hat).cwiseQuotient((v_hat.cwiseSqrt().array() + config.epsilon).matrix());
    theta = theta0.clamp(theta - update);
  }
  trace.final_theta = theta;
  return trace;
}

inline TrainingTrace adam_train(const WaveformDataset& data, const ContinuousModel& model, double dt,
                                const ParamVector& theta0, const AdamConfig& config, std::string label) {
  if (data.empty()) throw EmptyDataset("adam_train: dataset has no segments");
  auto objective = [&](const Vector& theta) {
    try {
      const LossEvaluation e = evaluate_loss(theta, data, model, dt, Order::gradient);
      return LossGradient{e.loss, e.gradient};
    } catch (const NumericalError&) {
      return LossGradient{std::numeric_limits<double>::quiet_NaN(), Vector::Zero(theta.size())};
    }
  };
  return adam_optimize(objective, theta0, config, std::move(label));
}

// ---------------------------------------------------------------------------
// Regret
// ---------------------------------------------------------------------------

enum class ThetaStarPolicy { ground_truth, best_seen };

inline std::string_view to_string(ThetaStarPolicy p) {
  return p == ThetaStarPolicy::ground_truth ? "ground-truth" : "best-seen";
}

struct RegretLedger {
  ThetaStarPolicy policy = ThetaStarPolicy::ground_truth;
  Vector theta_star;
  double loss_star = 0.0;
  std::vector<double> regret;      // Regret(T), T = 1..size
  std::vector<double> avg_regret;  // Regret(T) / T

  double regret_t() const { return regret.empty() ? 0.0 : regret.back(); }
  double avg() const { return avg_regret.empty() ? 0.0 : avg_regret.back(); }
};

// Regret(T) = sum_{t<=T} [f_t(theta_t) - f_t(theta*)] with the full-batch
// loss as every f_t. Under ground-truth policy theta* must be supplied;
// best-seen uses the logged iterate with the lowest loss.
inline RegretLedger regret_ledger(const TrainingTrace& trace, const WaveformDataset& data,
                                  const ContinuousModel& model, double dt, ThetaStarPolicy policy,
                                  const std::optional<Vector>& theta_star = std::nullopt) {
  if (trace.empty()) throw EmptyTrace("regret_ledger: trace has no epochs");
  RegretLedger out;
  out.policy = policy;
  if (policy == ThetaStarPolicy::ground_truth) {
    if (!theta_star) throw ConfigError("regret_ledger: ground-truth policy needs theta*");
    out.theta_star = *theta_star;
    out.loss_star = loss(*theta_star, data, model, dt);
  } else {
    const auto best = std::min_element(trace.epochs.begin(), trace.epochs.end(),
                                       [](const EpochRecord& a, const EpochRecord& b) { return a.loss < b.loss; });
    out.theta_star = best->theta;
    out.loss_star = best->loss;
  }
  double cumulative = 0.0;
  for (const auto& rec : trace.epochs) {
    cumulative += rec.loss - out.loss_star;
    out.regret.push_back(cumulative);
    out.avg_regret.push_back(cumulative / static_cast<double>(rec.epoch));
  }
  return out;
}

struct RegretBoundTerms {
  double constant = 0.0;          // T-independent term
  double sqrt_coefficient = 0.0;  // multiplies sqrt(T)

  double at(double t) const { return constant + sqrt_coefficient * std::sqrt(t); }
};

// Adam's regret bound
//   d Dinf^2 Ginf sqrt(1-b2) / (2 a (1-b1) (1-lambda)^2)
//   + d D^2 Ginf / (2 a (1-b1)) sqrt(T)
//   + a (1+b1) d Ginf^2 / ((1-b1) sqrt(1-b2) (1-gamma)^2) sqrt(T).
// With per-parameter rates the 1/a terms use min(alpha) and the a term uses
// max(alpha), which reduces to the scalar form when all rates agree.
inline RegretBoundTerms regret_bound_terms(const AdamConfig& config, std::size_t d, double big_d, double big_d_inf,
                                           double g_inf) {
  const double gamma = config.gamma();
  if (!(gamma < 1.0)) throw DivergentBound("regret bound needs beta1^2/sqrt(beta2) < 1");
  if (!(config.lambda < 1.0)) throw DivergentBound("regret bound needs lambda < 1");
  if (config.alpha.size() == 0 || (config.alpha.array() <= 0.0).any()) {
    throw ConfigError("regret bound needs positive step sizes");
  }
  const double a_min = config.alpha.minCoeff();
  const double a_max = config.alpha.maxCoeff();
  const double b1 = config.beta1;
  const double b2 = config.beta2;
  const double dd = static_cast<double>(d);
  RegretBoundTerms t;
  t.constant = dd * big_d_inf * big_d_inf * g_inf * std::sqrt(1.0 - b2) /
               (2.0 * a_min * (1.0 - b1) * (1.0 - config.lambda) * (1.0 - config.lambda));
  t.sqrt_coefficient = dd * big_d * big_d * g_inf / (2.0 * a_min * (1.0 - b1)) +
                       a_max * (1.0 + b1) * dd * g_inf * g_inf /
                           ((1.0 - b1) * std::sqrt(1.0 - b2) * (1.0 - gamma) * (1.0 - gamma));
  return t;
}

inline double regret_bound(const AdamConfig& config, std::size_t d, double big_d, double big_d_inf, double g_inf,
                           double t) {
  return regret_bound_terms(config, d, big_d, big_d_inf, g_inf).at(t);
}

// Least-squares slope of log Regret(T) against log T over epochs
// [first, last] (1-based, inclusive). Non-positive regrets are skipped.
inline std::optional<double> loglog_slope(const std::vector<double>& regret, std::size_t first, std::size_t last) {
  last = std::min(last, regret.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t n = 0;
  for (std::size_t t = std::max<std::size_t>(first, 1); t <= last; ++t) {
    const double r = regret[t - 1];
    if (!(r > 0.0)) continue;
    const double x = std::log(static_cast<double>(t));
    const double y = std::log(r);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) return std::nullopt;
  const double nd = static_cast<double>(n);
  const double denom = nd * sxx - sx * sx;
  if (denom <= 0.0) return std::nullopt;
  return (nd * sxy - sx * sy) / denom;
}

// ---------------------------------------------------------------------------
// Diagnostics
// ---------------------------------------------------------------------------

struct TrainingDiagnostics {
  Vector overshoot_pct;                         // per parameter
  std::optional<std::size_t> convergence_epoch; // absent when never settled in the band
  std::vector<int> oscillations;                // per parameter
  int oscillation_count = 0;                    // sum over parameters
  Vector final_relative_error;
};

// overshoot_i: largest excursion of theta_i beyond theta*_i (on the far side
// from theta_i,0) as a percentage of |theta*_i - theta_i,0|; zero when the
// initial gap is zero. convergence_epoch: first epoch from which every logged
// iterate stays within `band` relative error of theta* for all parameters.
// oscillations_i: sign changes of theta_i - theta*_i after the first crossing.
inline TrainingDiagnostics training_diagnostics(const TrainingTrace& trace, const Vector& theta_star,
                                                double band = 0.01) {
  if (trace.empty()) throw EmptyTrace("training_diagnostics: trace has no epochs");
  const auto n = theta_star.size();
  const Vector& theta0 = trace.epochs.front().theta;
  if (theta0.size() != n) throw ShapeMismatch("training_diagnostics: theta* has the wrong length");

  TrainingDiagnostics out;
  out.overshoot_pct = Vector::Zero(n);
  out.oscillations.assign(static_cast<std::size_t>(n), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double gap = theta_star(i) - theta0(i);
    if (gap != 0.0) {
      const double dir = gap > 0.0 ? 1.0 : -1.0;
      double worst = 0.0;
      for (const auto& rec : trace.epochs) worst = std::max(worst, dir * (rec.theta(i) - theta_star(i)));
      out.overshoot_pct(i) = worst / std::abs(gap) * 100.0;
    }
    int last_sign = 0;
    int changes = 0;
    for (const auto& rec : trace.epochs) {
      const double diff = rec.theta(i) - theta_star(i);
      const int sign = diff > 0.0 ? 1 : (diff < 0.0 ? -1 : 0);
      if (sign == 0) continue;
      if (last_sign != 0 && sign != last_sign) ++changes;
      last_sign = sign;
    }
    out.oscillations[static_cast<std::size_t>(i)] = std::max(0, changes - 1);
    out.oscillation_count += out.oscillations[static_cast<std::size_t>(i)];
  }

  auto within = [&](const Vector& theta) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(theta(i) - theta_star(i)) > band * std::abs(theta_star(i))) return false;
    }
    return true;
  };
  std::optional<std::size_t> since;
  for (const auto& rec : trace.epochs) {
    if (within(rec.theta)) {
      if (!since) since = rec.epoch;
    } else {
      since.reset();
    }
  }
  out.convergence_epoch = since;
  const Vector& last = trace.final_theta.size() == n ? trace.final_theta : trace.epochs.back().theta;
  out.final_relative_error = ((last - theta_star).cwiseAbs().array() / theta_star.cwiseAbs().array()).matrix();
  return out;
}

}  // namespace pann
