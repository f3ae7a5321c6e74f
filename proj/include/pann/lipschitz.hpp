#pragma once

// Lipschitz constants of the recurrent model: closed-form bounds (step map
// in z, loss gradient and Hessian in theta), Monte-Carlo ratio estimates that
// check them, and the Adam convergence-condition monitor.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "pann/error.hpp"
#include "pann/linalg.hpp"
#include "pann/random.hpp"
#include "pann/statespace.hpp"
#include "pann/trace.hpp"

namespace pann {

// ---------------------------------------------------------------------------
// Step map
// ---------------------------------------------------------------------------

// |W z1 - W z2| <= |W| |z1 - z2| in the induced norm.
inline double theoretical_L1z(const DiscreteTransition& w, NormKind norm = NormKind::infinity) {
  return induced_norm(w.w, norm);
}

inline double max_entry_L1z(const DiscreteTransition& w) { return max_entry_norm(w.w); }

// ---------------------------------------------------------------------------
// Loss bounds in theta
// ---------------------------------------------------------------------------

// Region over which the theta bounds are taken. lower == upper collapses a
// coordinate. z_bound holds per-component magnitude bounds of the step input.
// coordinate_scale (optional) measures theta_i in units of scale_i, so the
// bounds apply to the loss as a function of theta_i / scale_i.
struct LipschitzDomain {
  Vector lower;
  Vector upper;
  Vector theta_star;
  Vector z_bound;
  Vector coordinate_scale;
  std::size_t theta_samples = 10000;
  std::uint64_t seed = 1;

  void validate() const {
    const auto n = theta_star.size();
    if (n == 0 || lower.size() != n || upper.size() != n) throw ShapeMismatch("domain: theta vectors differ in length");
    if ((upper.array() < lower.array()).any()) throw ConfigError("domain: upper < lower");
    if (coordinate_scale.size() != 0 && coordinate_scale.size() != n) {
      throw ShapeMismatch("domain: coordinate_scale has the wrong length");
    }
    if (coordinate_scale.size() != 0 && (coordinate_scale.array() <= 0.0).any()) {
      throw ConfigError("domain: coordinate_scale must be positive");
    }
    if (z_bound.size() == 0 || (z_bound.array() < 0.0).any()) throw ConfigError("domain: z_bound must be non-negative");
  }

  // Box corners, theta*, then theta_samples uniform draws.
  std::vector<Vector> sample_points() const {
    validate();
    const auto n = theta_star.size();
    std::vector<Vector> pts;
    const std::size_t corners = n < 20 ? (std::size_t{1} << n) : 0;
    pts.reserve(corners + 1 + theta_samples);
    for (std::size_t c = 0; c < corners; ++c) {
      Vector v(n);
      for (Eigen::Index i = 0; i < n; ++i) v(i) = ((c >> i) & 1U) ? upper(i) : lower(i);
      pts.push_back(v);
    }
    pts.push_back(theta_star);
    for (std::size_t k = 0; k < theta_samples; ++k) {
      Stream s(seed, StreamTag::theta_sample, k);
      Vector v(n);
      for (Eigen::Index i = 0; i < n; ++i) v(i) = lower(i) < upper(i) ? s.uniform(lower(i), upper(i)) : lower(i);
      pts.push_back(v);
    }
    return pts;
  }
};

namespace detail {

inline MatrixStack scaled_first(const MatrixStack& dw, const Vector& scale) {
  if (scale.size() == 0) return dw;
  MatrixStack out = dw;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= scale(static_cast<Eigen::Index>(i));
  return out;
}

inline MatrixGrid scaled_second(const MatrixGrid& d2w, const Vector& scale) {
  if (scale.size() == 0) return d2w;
  MatrixGrid out = d2w;
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t j = 0; j < out[i].size(); ++j) {
      out[i][j] *= scale(static_cast<Eigen::Index>(i)) * scale(static_cast<Eigen::Index>(j));
    }
  }
  return out;
}

// Entrywise products of vectors collapse norms by D_x under the infinity
// norm (|a^T b| <= D_x |a|_inf |b|_inf); the 2-norm chain needs no factor.
inline double inner_product_factor(Eigen::Index dim_x, NormKind norm) {
  return norm == NormKind::infinity ? static_cast<double>(dim_x) : 1.0;
}

template <typename Term>
double sup_over_domain(const LipschitzDomain& domain, const ContinuousModel& model, double dt, bool need_second,
                       Term term) {
  if (!model.closed_form && !model.has_first_derivatives()) throw MissingDerivatives("bound needs dW/dtheta");
  if (need_second && !model.closed_form && !model.has_second_derivatives()) {
    throw MissingDerivatives("bound needs d2W/dtheta2");
  }
  const DiscreteTransition star = discretize_values(model, domain.theta_star, dt);
  if (star.dim_z() != domain.z_bound.size()) throw ShapeMismatch("domain: z_bound length differs from D_z");
  double best = 0.0;
  for (const Vector& theta : domain.sample_points()) {
    const DiscreteTransition w = discretize_values(model, theta, dt);
    if (!w.dw) throw MissingDerivatives("model does not provide dW/dtheta");
    if (need_second && !w.d2w) throw MissingDerivatives("model does not provide d2W/dtheta2");
    const double v = term(w, star);
    if (!std::isfinite(v)) throw NonFinite("bound evaluated to a non-finite value");
    best = std::max(best, v);
  }
  return best;
}

}  // namespace detail

// sup_theta |W - W*| |z|^2 |dW/dtheta|: bounds |grad f| for the mean
// teacher-forced loss on data generated by theta*. Serves as G (two) or
// G_inf (infinity).
inline double theoretical_L1theta(const LipschitzDomain& domain, const ContinuousModel& model, double dt,
                                  NormKind norm) {
  domain.validate();
  const double z2 = std::pow(vector_norm(domain.z_bound, norm), 2);
  return detail::sup_over_domain(domain, model, dt, false, [&](const DiscreteTransition& w, const DiscreteTransition& s) {
    const double factor = detail::inner_product_factor(w.dim_x(), norm);
    return factor * induced_norm(w.w - s.w, norm) * z2 *
           derivative_norm(detail::scaled_first(*w.dw, domain.coordinate_scale), norm);
  });
}

// sup_theta |z|^2 |dW|^2 + |W - W*| |z|^2 |d2W|: bounds the loss Hessian.
inline double theoretical_L2theta(const LipschitzDomain& domain, const ContinuousModel& model, double dt,
                                  NormKind norm) {
  domain.validate();
  const double z2 = std::pow(vector_norm(domain.z_bound, norm), 2);
  return detail::sup_over_domain(domain, model, dt, true, [&](const DiscreteTransition& w, const DiscreteTransition& s) {
    const double factor = detail::inner_product_factor(w.dim_x(), norm);
    const double d1 = derivative_norm(detail::scaled_first(*w.dw, domain.coordinate_scale), norm);
    const double d2 = second_derivative_norm(detail::scaled_second(*w.d2w, domain.coordinate_scale), norm);
    return factor * (z2 * d1 * d1 + induced_norm(w.w - s.w, norm) * z2 * d2);
  });
}

// ---------------------------------------------------------------------------
// Monte-Carlo estimates
// ---------------------------------------------------------------------------

struct LipschitzReport {
  std::string constant_name;
  NormKind norm = NormKind::infinity;
  double theoretical = 0.0;
  double empirical_max = 0.0;
  std::size_t n_samples = 0;
  std::size_t n_degenerate = 0;  // coincident pairs, skipped
  Vector argmax_a;
  Vector argmax_b;
  std::uint64_t seed = 0;
  double tol_report = 1e-9;

  bool dominated() const { return empirical_max <= theoretical * (1.0 + tol_report); }
  double ratio() const { return theoretical > 0.0 ? empirical_max / theoretical : 0.0; }
};

inline nlohmann::ordered_json to_json(const LipschitzReport& r) {
  auto vec = [](const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); };
  return nlohmann::ordered_json{{"constant_name", r.constant_name},
                                {"norm", std::string(to_string(r.norm))},
                                {"theoretical", r.theoretical},
                                {"empirical_max", r.empirical_max},
                                {"ratio", r.ratio()},
                                {"dominated", r.dominated()},
                                {"tol_report", r.tol_report},
                                {"n_samples", r.n_samples},
                                {"n_degenerate", r.n_degenerate},
                                {"seed", r.seed},
                                {"argmax_pair", {vec(r.argmax_a), vec(r.argmax_b)}}};
}

using VectorFunction = std::function<Vector(const Vector&)>;
using DomainSampler = std::function<Vector(Stream&)>;

// Pair construction. Random pairs draw both points from the sampler. Local
// pairs perturb a sampled point by delta * scale_i along a random direction:
// a sign vertex under the infinity norm, a Gaussian direction under the
// 2-norm. Mixed alternates the two, starting with a random pair.
struct Pairing {
  enum class Mode { random, local, mixed };
  Mode mode = Mode::mixed;
  double delta = 1e-6;
  Vector scale;  // per-coordinate domain scale; empty means 1
};

inline LipschitzReport mc_estimate_lipschitz(const VectorFunction& f, const DomainSampler& sampler,
                                             const Pairing& pairing, std::size_t n_samples, std::uint64_t seed,
                                             NormKind norm, std::string constant_name = "L", double theoretical = 0.0) {
  if (n_samples < 2) throw ConfigError("mc_estimate_lipschitz: need at least 2 samples");
  if (pairing.mode != Pairing::Mode::random && !(pairing.delta > 0.0)) {
    throw ConfigError("mc_estimate_lipschitz: local pairing needs delta > 0");
  }
  LipschitzReport rep;
  rep.constant_name = std::move(constant_name);
  rep.norm = norm;
  rep.theoretical = theoretical;
  rep.n_samples = n_samples;
  rep.seed = seed;
  rep.empirical_max = 0.0;
  for (std::size_t k = 0; k < n_samples; ++k) {
    Stream s(seed, StreamTag::mc_sample, k);
    const bool local = pairing.mode == Pairing::Mode::local || (pairing.mode == Pairing::Mode::mixed && (k % 2) == 1);
    Vector a = sampler(s);
    Vector b;
    if (local) {
      Vector d(a.size());
      if (norm == NormKind::infinity) {
        for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = s.sign();
      } else {
        for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = s.normal();
        const double len = d.norm();
        if (len > 0.0) d /= len;
      }
      if (pairing.scale.size() == a.size()) d = d.cwiseProduct(pairing.scale);
      b = a + pairing.delta * d;
    } else {
      b = sampler(s);
    }
    const double dist = vector_norm(a - b, norm);
    if (!(dist >= 1e-300)) {
      ++rep.n_degenerate;
      continue;
    }
    const double ratio = vector_norm(f(a) - f(b), norm) / dist;
    if (!std::isfinite(ratio)) throw NonFinite("mc_estimate_lipschitz: non-finite ratio");
    if (ratio > rep.empirical_max || rep.argmax_a.size() == 0) {
      rep.empirical_max = std::max(rep.empirical_max, ratio);
      rep.argmax_a = a;
      rep.argmax_b = b;
    }
  }
  return rep;
}

// Uniform sampler over an axis-aligned box [lower, upper].
inline DomainSampler box_sampler(Vector lower, Vector upper) {
  if (lower.size() != upper.size()) throw ShapeMismatch("box sampler: bounds differ in length");
  return [lower = std::move(lower), upper = std::move(upper)](Stream& s) {
    Vector v(lower.size());
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = lower(i) < upper(i) ? s.uniform(lower(i), upper(i)) : lower(i);
    return v;
  };
}

// ---------------------------------------------------------------------------
// Adam convergence conditions
// ---------------------------------------------------------------------------

struct AssumptionMonitor {
  double g_hat = 0.0;     // max_t |grad_t|_2
  double ginf_hat = 0.0;  // max_t |grad_t|_inf
  double d_hat = 0.0;     // max_{n,m} |theta_n - theta_m|_2
  double dinf_hat = 0.0;  // max_{n,m} |theta_n - theta_m|_inf
  bool satisfied = false;
};

inline nlohmann::ordered_json to_json(const AssumptionMonitor& m) {
  return nlohmann::ordered_json{{"G_hat", m.g_hat},
                                {"Ginf_hat", m.ginf_hat},
                                {"D_hat", m.d_hat},
                                {"Dinf_hat", m.dinf_hat},
                                {"satisfied", m.satisfied}};
}

// satisfied: every logged quantity finite and the iterate spread within the
// box diameter (2-norm and infinity norm) recorded in the trace.
inline AssumptionMonitor assumption_monitor(const TrainingTrace& trace) {
  if (trace.empty()) throw EmptyTrace("assumption_monitor: trace has no epochs");
  AssumptionMonitor m;
  bool finite = true;
  for (const auto& rec : trace.epochs) {
    finite = finite && rec.grad.allFinite() && rec.theta.allFinite();
    m.g_hat = std::max(m.g_hat, rec.grad.norm());
    m.ginf_hat = std::max(m.ginf_hat, rec.grad.size() ? rec.grad.cwiseAbs().maxCoeff() : 0.0);
  }
  const auto& e = trace.epochs;
  for (std::size_t a = 0; a < e.size(); ++a) {
    for (std::size_t b = a + 1; b < e.size(); ++b) {
      const Vector d = e[a].theta - e[b].theta;
      m.d_hat = std::max(m.d_hat, d.norm());
      m.dinf_hat = std::max(m.dinf_hat, d.cwiseAbs().maxCoeff());
    }
  }
  finite = finite && std::isfinite(m.g_hat) && std::isfinite(m.ginf_hat) && std::isfinite(m.d_hat) &&
           std::isfinite(m.dinf_hat);
  bool within = true;
  if (trace.lower.size() == trace.upper.size() && trace.lower.size() > 0) {
    const Vector width = trace.upper - trace.lower;
    within = m.d_hat <= width.norm() && m.dinf_hat <= width.cwiseAbs().maxCoeff();
  }
  m.satisfied = finite && within;
  return m;
}

}  // namespace pann
