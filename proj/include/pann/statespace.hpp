#pragma once

// Continuous-time LTI converter models and their implicit-Euler
// discretization into the recurrent transition matrix
//
//   x[k+1] = W(theta) [x[k]; u[k+1]],   W = [M^-1 | M^-1 B dt],  M = I - A dt,
//
// together with the first and second derivatives of W with respect to the
// circuit parameters theta.

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pann/error.hpp"
#include "pann/linalg.hpp"

namespace pann {

// Circuit parameters with per-component physical bounds.
class ParamVector {
 public:
  ParamVector() = default;

  ParamVector(std::vector<std::string> names, Vector values, Vector lower, Vector upper)
      : names_(std::move(names)),
        values_(std::move(values)),
        lower_(std::move(lower)),
        upper_(std::move(upper)) {
    const auto n = static_cast<std::size_t>(values_.size());
    if (names_.size() != n || static_cast<std::size_t>(lower_.size()) != n ||
        static_cast<std::size_t>(upper_.size()) != n) {
      throw ShapeMismatch("ParamVector: names/values/lower/upper must have equal length");
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto k = static_cast<Eigen::Index>(i);
      if (!std::isfinite(lower_(k)) || !std::isfinite(upper_(k)) || !(lower_(k) < upper_(k))) {
        throw ConfigError("ParamVector: bounds of '" + names_[i] + "' must satisfy lower < upper");
      }
    }
    check_inside(values_);
  }

  std::size_t size() const { return static_cast<std::size_t>(values_.size()); }
  const Vector& values() const { return values_; }
  const Vector& lower() const { return lower_; }
  const Vector& upper() const { return upper_; }
  const std::vector<std::string>& names() const { return names_; }
  Vector ranges() const { return upper_ - lower_; }

  double operator[](std::size_t i) const { return values_(static_cast<Eigen::Index>(i)); }

  bool contains(const Vector& v) const {
    if (v.size() != values_.size()) return false;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (!std::isfinite(v(i)) || v(i) < lower_(i) || v(i) > upper_(i)) return false;
    }
    return true;
  }

  // Same box, new values; throws OutOfBounds if v leaves the box.
  ParamVector with_values(Vector v) const {
    check_inside(v);
    ParamVector out = *this;
    out.values_ = std::move(v);
    return out;
  }

  // Componentwise projection onto the box.
  Vector clamp(const Vector& v) const { return v.cwiseMax(lower_).cwiseMin(upper_); }

 private:
  void check_inside(const Vector& v) const {
    if (v.size() != values_.size() && values_.size() != 0) {
      throw ShapeMismatch("ParamVector: value vector has wrong length");
    }
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      if (!std::isfinite(v(i)) || v(i) < lower_(i) || v(i) > upper_(i)) {
        std::ostringstream os;
        os.precision(17);
        os << "parameter '" << names_[static_cast<std::size_t>(i)] << "' = " << v(i)
           << " outside [" << lower_(i) << ", " << upper_(i) << "]";
        throw OutOfBounds(os.str());
      }
    }
  }

  std::vector<std::string> names_;
  Vector values_;
  Vector lower_;
  Vector upper_;
};

struct DiscreteTransition {
  Matrix w;                         // D_x x (D_x + D_u)
  std::optional<MatrixStack> dw;    // [i]: dW/dtheta_i
  std::optional<MatrixGrid> d2w;    // [i][j]: d2W/dtheta_i dtheta_j, symmetric in (i, j)
  double dt = 0.0;
  Vector theta;

  Eigen::Index dim_x() const { return w.rows(); }
  Eigen::Index dim_u() const { return w.cols() - w.rows(); }
  Eigen::Index dim_z() const { return w.cols(); }
  Eigen::Index dim_theta() const { return theta.size(); }
};

// dx/dt = A(theta) x + B(theta) u. Derivative callbacks are optional; models
// that are trained need at least `da`/`db`.
struct ContinuousModel {
  std::size_t dim_x = 0;
  std::size_t dim_u = 0;
  std::size_t dim_theta = 0;
  std::function<Matrix(const Vector&)> a_of;
  std::function<Matrix(const Vector&)> b_of;
  std::function<MatrixStack(const Vector&)> da;
  std::function<MatrixStack(const Vector&)> db;
  std::function<MatrixGrid(const Vector&)> d2a;
  std::function<MatrixGrid(const Vector&)> d2b;
  // Optional exact implicit-Euler transition (with derivatives) for models
  // that have one in closed form.
  std::function<DiscreteTransition(const Vector&, double)> closed_form;

  bool has_first_derivatives() const { return static_cast<bool>(da) && static_cast<bool>(db); }
  bool has_second_derivatives() const {
    return has_first_derivatives() && static_cast<bool>(d2a) && static_cast<bool>(d2b);
  }
};

struct DiscretizeOptions {
  // Reject (I - A dt) when its reciprocal condition estimate falls below this.
  double min_rcond = 1e-12;
  // Use the model's closed form when it provides one.
  bool prefer_closed_form = true;
};

namespace detail {

inline void check_model_shapes(const ContinuousModel& model, const Vector& theta) {
  if (static_cast<std::size_t>(theta.size()) != model.dim_theta) {
    throw ShapeMismatch("theta has length " + std::to_string(theta.size()) + ", model expects " +
                        std::to_string(model.dim_theta));
  }
}

inline void check_dt(double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("time step dt must be positive and finite");
}

}  // namespace detail

// Dense implicit-Euler discretization without any box check; callers that
// hold a ParamVector should use `discretize`.
inline DiscreteTransition discretize_values(const ContinuousModel& model, const Vector& theta,
                                            double dt, const DiscretizeOptions& opts = {}) {
  detail::check_dt(dt);
  detail::check_model_shapes(model, theta);
  if (opts.prefer_closed_form && model.closed_form) return model.closed_form(theta, dt);

  const auto nx = static_cast<Eigen::Index>(model.dim_x);
  const auto nu = static_cast<Eigen::Index>(model.dim_u);
  const auto nt = model.dim_theta;
  const Matrix a = model.a_of(theta);
  const Matrix b = model.b_of(theta);
  if (a.rows() != nx || a.cols() != nx || b.rows() != nx || b.cols() != nu) {
    throw ShapeMismatch("model A/B shapes disagree with dim_x/dim_u");
  }
  if (!a.allFinite() || !b.allFinite()) throw NonFinite("model A/B has non-finite entries");

  const Matrix m = Matrix::Identity(nx, nx) - a * dt;
  const Eigen::PartialPivLU<Matrix> lu(m);
  const double rcond = lu.rcond();
  if (!(rcond >= opts.min_rcond)) {
    std::ostringstream os;
    os << "I - A*dt is numerically singular (rcond " << rcond << " < " << opts.min_rcond << ")";
    throw SingularDiscretization(os.str(), rcond);
  }
  const Matrix m_inv = lu.solve(Matrix::Identity(nx, nx));
  const Matrix w_u = lu.solve(b * dt);

  DiscreteTransition out;
  out.dt = dt;
  out.theta = theta;
  out.w.resize(nx, nx + nu);
  out.w << m_inv, w_u;

  if (!model.has_first_derivatives()) return out;

  const MatrixStack da = model.da(theta);
  const MatrixStack db = model.db(theta);
  if (da.size() != nt || db.size() != nt) throw ShapeMismatch("derivative stacks must have D_theta entries");

  // d(M^-1)/dtheta_i = M^-1 (dA_i dt) M^-1
  MatrixStack dm_inv(nt);
  MatrixStack dw(nt);
  for (std::size_t i = 0; i < nt; ++i) {
    dm_inv[i] = m_inv * (da[i] * dt) * m_inv;
    dw[i].resize(nx, nx + nu);
    dw[i] << dm_inv[i], dm_inv[i] * b * dt + m_inv * db[i] * dt;
  }
  out.dw = std::move(dw);

  if (!model.has_second_derivatives()) return out;

  const MatrixGrid d2a = model.d2a(theta);
  const MatrixGrid d2b = model.d2b(theta);
  MatrixGrid d2w(nt, MatrixStack(nt));
  for (std::size_t i = 0; i < nt; ++i) {
    for (std::size_t j = i; j < nt; ++j) {
      const Matrix d2m_inv = dm_inv[j] * (da[i] * dt) * m_inv + m_inv * (d2a[i][j] * dt) * m_inv +
                             m_inv * (da[i] * dt) * dm_inv[j];
      Matrix block(nx, nx + nu);
      block << d2m_inv, d2m_inv * b * dt + dm_inv[i] * db[j] * dt + dm_inv[j] * db[i] * dt +
                            m_inv * d2b[i][j] * dt;
      d2w[i][j] = block;
      d2w[j][i] = block;
    }
  }
  out.d2w = std::move(d2w);
  return out;
}

inline DiscreteTransition discretize(const ContinuousModel& model, const ParamVector& theta, double dt,
                                     const DiscretizeOptions& opts = {}) {
  if (!theta.contains(theta.values())) throw OutOfBounds("theta outside its box");
  return discretize_values(model, theta.values(), dt, opts);
}

// ---------------------------------------------------------------------------
// Dual-active-bridge converter, single inductor-current state:
//
//   L_k di_L/dt = -R_L i_L + v_p - n v_s,   theta = (L_k, R_L, n),  u = (v_p, v_s)
//
// Implicit Euler gives W = [L_k, dt, -n dt] / (L_k + R_L dt).
// ---------------------------------------------------------------------------

namespace dab {

inline constexpr std::size_t kInductance = 0;
inline constexpr std::size_t kResistance = 1;
inline constexpr std::size_t kTurnsRatio = 2;

// Ground truth and parameter box of the reference DAB setup.
inline constexpr double kTrueInductance = 63e-6;
inline constexpr double kTrueResistance = 1.8;
inline constexpr double kTrueTurnsRatio = 1.0;
inline constexpr double kSwitchingFrequency = 50e3;
inline constexpr double kTimeStep = 80e-9;

inline ParamVector reference_params() {
  Vector values(3), lower(3), upper(3);
  values << kTrueInductance, kTrueResistance, kTrueTurnsRatio;
  lower << 10e-6, 10e-3, 0.8;
  upper << 200e-6, 3.0, 1.2;
  return ParamVector({"L_k", "R_L", "n"}, values, lower, upper);
}

}  // namespace dab

inline DiscreteTransition dab_transition_values(const Vector& theta, double dt) {
  detail::check_dt(dt);
  if (theta.size() != 3) throw ShapeMismatch("DAB theta must be (L_k, R_L, n)");
  const double l = theta(0);
  const double r = theta(1);
  const double n = theta(2);
  const double s = l + r * dt;
  if (!(s > 0.0)) throw NumericalError("DAB transition requires L_k + R_L*dt > 0");
  const double s2 = s * s;
  const double s3 = s2 * s;
  const double dt2 = dt * dt;
  const double dt3 = dt2 * dt;

  auto row = [](double a, double b, double c) {
    Matrix m(1, 3);
    m << a, b, c;
    return m;
  };

  DiscreteTransition out;
  out.dt = dt;
  out.theta = theta;
  out.w = row(l / s, dt / s, -n * dt / s);

  const double g = dt / s2;
  out.dw = MatrixStack{
      row(g * r, -g, g * n),            // d/dL_k
      row(-g * l, -g * dt, g * n * dt),  // d/dR_L
      row(0.0, 0.0, -dt / s),           // d/dn
  };

  const Matrix ll = row(-2.0 * r * dt / s3, 2.0 * dt / s3, -2.0 * n * dt / s3);
  const Matrix lr = row(dt * (l - r * dt) / s3, 2.0 * dt2 / s3, -2.0 * n * dt2 / s3);
  const Matrix ln = row(0.0, 0.0, dt / s2);
  const Matrix rr = row(2.0 * l * dt2 / s3, 2.0 * dt3 / s3, -2.0 * n * dt3 / s3);
  const Matrix rn = row(0.0, 0.0, dt2 / s2);
  const Matrix nn = Matrix::Zero(1, 3);
  out.d2w = MatrixGrid{{ll, lr, ln}, {lr, rr, rn}, {ln, rn, nn}};
  return out;
}

inline DiscreteTransition dab_transition(const ParamVector& theta, double dt) {
  if (theta.size() != 3) throw ShapeMismatch("DAB theta must be (L_k, R_L, n)");
  if (!theta.contains(theta.values())) throw OutOfBounds("DAB theta outside its box");
  return dab_transition_values(theta.values(), dt);
}

// Continuous DAB model with analytic dA/dB derivatives; its closed form is
// dab_transition.
inline ContinuousModel dab_model() {
  ContinuousModel m;
  m.dim_x = 1;
  m.dim_u = 2;
  m.dim_theta = 3;
  m.a_of = [](const Vector& t) { return Matrix::Constant(1, 1, -t(1) / t(0)); };
  m.b_of = [](const Vector& t) {
    Matrix b(1, 2);
    b << 1.0 / t(0), -t(2) / t(0);
    return b;
  };
  m.da = [](const Vector& t) {
    const double l = t(0);
    return MatrixStack{Matrix::Constant(1, 1, t(1) / (l * l)), Matrix::Constant(1, 1, -1.0 / l),
                       Matrix::Zero(1, 1)};
  };
  m.db = [](const Vector& t) {
    const double l = t(0);
    Matrix dl(1, 2), dn(1, 2);
    dl << -1.0 / (l * l), t(2) / (l * l);
    dn << 0.0, -1.0 / l;
    return MatrixStack{dl, Matrix::Zero(1, 2), dn};
  };
  m.d2a = [](const Vector& t) {
    const double l = t(0);
    const Matrix z = Matrix::Zero(1, 1);
    const Matrix ll = Matrix::Constant(1, 1, -2.0 * t(1) / (l * l * l));
    const Matrix lr = Matrix::Constant(1, 1, 1.0 / (l * l));
    return MatrixGrid{{ll, lr, z}, {lr, z, z}, {z, z, z}};
  };
  m.d2b = [](const Vector& t) {
    const double l = t(0);
    const Matrix z = Matrix::Zero(1, 2);
    Matrix ll(1, 2), ln(1, 2);
    ll << 2.0 / (l * l * l), -2.0 * t(2) / (l * l * l);
    ln << 0.0, 1.0 / (l * l);
    return MatrixGrid{{ll, z, ln}, {z, z, z}, {ln, z, z}};
  };
  m.closed_form = [](const Vector& t, double dt) { return dab_transition_values(t, dt); };
  return m;
}

// A(theta) = A0 + sum_i theta_i A_i, B(theta) = B0 + sum_i theta_i B_i.
// Second derivatives vanish identically.
inline ContinuousModel affine_model(Matrix a0, MatrixStack a_terms, Matrix b0, MatrixStack b_terms) {
  if (a0.rows() != a0.cols() || b0.rows() != a0.rows() || a_terms.size() != b_terms.size()) {
    throw ShapeMismatch("affine model: inconsistent A/B shapes");
  }
  for (std::size_t i = 0; i < a_terms.size(); ++i) {
    if (a_terms[i].rows() != a0.rows() || a_terms[i].cols() != a0.cols() ||
        b_terms[i].rows() != b0.rows() || b_terms[i].cols() != b0.cols()) {
      throw ShapeMismatch("affine model: term " + std::to_string(i) + " has the wrong shape");
    }
  }
  ContinuousModel m;
  m.dim_x = static_cast<std::size_t>(a0.rows());
  m.dim_u = static_cast<std::size_t>(b0.cols());
  m.dim_theta = a_terms.size();
  m.a_of = [a0, a_terms](const Vector& t) {
    Matrix a = a0;
    for (std::size_t i = 0; i < a_terms.size(); ++i) a += t(static_cast<Eigen::Index>(i)) * a_terms[i];
    return a;
  };
  m.b_of = [b0, b_terms](const Vector& t) {
    Matrix b = b0;
    for (std::size_t i = 0; i < b_terms.size(); ++i) b += t(static_cast<Eigen::Index>(i)) * b_terms[i];
    return b;
  };
  m.da = [a_terms](const Vector&) { return a_terms; };
  m.db = [b_terms](const Vector&) { return b_terms; };
  const auto nt = a_terms.size();
  const Matrix za = Matrix::Zero(a0.rows(), a0.cols());
  const Matrix zb = Matrix::Zero(b0.rows(), b0.cols());
  m.d2a = [nt, za](const Vector&) { return MatrixGrid(nt, MatrixStack(nt, za)); };
  m.d2b = [nt, zb](const Vector&) { return MatrixGrid(nt, MatrixStack(nt, zb)); };
  return m;
}

struct NeumannBound {
  double bound = 1.0;         // 1 / (1 - |A dt|)
  double inverse_norm = 1.0;  // actual |(I - A dt)^-1|
  double step_norm = 0.0;     // |A dt|
  NormKind norm = NormKind::infinity;
};

// Runtime form of the Neumann-series argument: |(I - A dt)^-1| <= 1/(1 - |A dt|)
// whenever |A dt| < 1.
inline NeumannBound neumann_bound(const ContinuousModel& model, const Vector& theta, double dt,
                                  NormKind norm = NormKind::infinity) {
  detail::check_dt(dt);
  detail::check_model_shapes(model, theta);
  const Matrix a = model.a_of(theta);
  const double a_norm = induced_norm(a, norm);
  NeumannBound out;
  out.norm = norm;
  out.step_norm = a_norm * dt;
  if (!(out.step_norm < 1.0)) {
    const double max_dt = 1.0 / a_norm;
    std::ostringstream os;
    os.precision(6);
    os << "|A dt| = " << out.step_norm << " >= 1; the Neumann bound needs dt < " << max_dt;
    throw StepTooLarge(os.str(), max_dt);
  }
  out.bound = 1.0 / (1.0 - out.step_norm);
  const auto nx = a.rows();
  const Matrix m = Matrix::Identity(nx, nx) - a * dt;
  out.inverse_norm = induced_norm(m.partialPivLu().inverse(), norm);
  if (out.inverse_norm > out.bound * (1.0 + 1e-12)) {
    throw std::logic_error("Neumann bound violated: inverse norm exceeds 1/(1-|A dt|)");
  }
  return out;
}

inline NeumannBound neumann_bound(const ContinuousModel& model, const ParamVector& theta, double dt,
                                  NormKind norm = NormKind::infinity) {
  return neumann_bound(model, theta.values(), dt, norm);
}

}  // namespace pann
