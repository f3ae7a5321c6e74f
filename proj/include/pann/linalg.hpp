#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "pann/error.hpp"

namespace pann {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// First-order derivative tensor: one matrix per parameter, dW/dtheta_i.
using MatrixStack = std::vector<Matrix>;
// Second-order derivative tensor: grid[i][j] = d2W/dtheta_i dtheta_j.
using MatrixGrid = std::vector<MatrixStack>;

enum class NormKind { two, infinity };

inline std::string_view to_string(NormKind kind) {
  return kind == NormKind::two ? "two" : "infinity";
}

inline NormKind norm_kind_from_string(std::string_view s) {
  if (s == "two" || s == "2") return NormKind::two;
  if (s == "infinity" || s == "inf") return NormKind::infinity;
  throw ConfigError("unknown norm kind '" + std::string(s) + "' (expected two|infinity)");
}

inline double vector_norm(const Vector& v, NormKind kind) {
  if (v.size() == 0) return 0.0;
  return kind == NormKind::two ? v.norm() : v.cwiseAbs().maxCoeff();
}

inline double spectral_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

// Induced operator norm: largest singular value, or max absolute row sum.
inline double induced_norm(const Matrix& m, NormKind kind) {
  if (m.size() == 0) return 0.0;
  if (kind == NormKind::two) return spectral_norm(m);
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

inline double max_entry_norm(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

inline Matrix stack_rows(const MatrixStack& stack) {
  if (stack.empty()) return Matrix{};
  const auto rows = stack.front().rows();
  const auto cols = stack.front().cols();
  Matrix out(rows * static_cast<Eigen::Index>(stack.size()), cols);
  for (std::size_t i = 0; i < stack.size(); ++i) {
    out.middleRows(static_cast<Eigen::Index>(i) * rows, rows) = stack[i];
  }
  return out;
}

// Norm of dW/dtheta viewed as the linear map z -> (dW_i z)_i.
//   two:      spectral norm of the vertically stacked blocks, so that
//             sum_i |dW_i z|_2^2 <= norm^2 |z|_2^2.
//   infinity: sum_i |dW_i|_inf, which bounds every row sum of the
//             Hessian Gauss-Newton term as well as the gradient.
inline double derivative_norm(const MatrixStack& dw, NormKind kind) {
  if (kind == NormKind::two) return spectral_norm(stack_rows(dw));
  double total = 0.0;
  for (const auto& m : dw) total += induced_norm(m, NormKind::infinity);
  return total;
}

// Norm of d2W/dtheta dtheta^T.
//   two:      spectral norm of all D_theta^2 blocks stacked (Frobenius chain).
//   infinity: max_i sum_j |d2W_ij|_inf (row-sum of the block norm matrix).
inline double second_derivative_norm(const MatrixGrid& d2w, NormKind kind) {
  if (kind == NormKind::two) {
    MatrixStack all;
    for (const auto& row : d2w) all.insert(all.end(), row.begin(), row.end());
    return spectral_norm(stack_rows(all));
  }
  double best = 0.0;
  for (const auto& row : d2w) {
    double sum = 0.0;
    for (const auto& m : row) sum += induced_norm(m, NormKind::infinity);
    best = std::max(best, sum);
  }
  return best;
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace pann
