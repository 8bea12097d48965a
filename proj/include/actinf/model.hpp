#pragma once

/**
 * @file
 * @brief Linear Gaussian state-space model and quadratic goal prior.
 */

#include "actinf/gaussian.hpp"

#include <cmath>
#include <optional>
#include <string>

namespace actinf {

/// State, control and observation dimensions.
struct Dims
{
  Index nx{0};
  Index nu{0};
  Index ny{0};
};

/**
 * @brief x_{t+1} ~ N(A x_t + B u_t, W_w⁻¹),  y_t ~ N(C x_t, W_v⁻¹),  x_0 ~ prior.
 *
 * W_w and W_v are precisions.
 */
struct LinearGaussianModel
{
  Matrix A;
  Matrix B;
  Matrix C;
  Matrix W_w;
  Matrix W_v;
  std::optional<Gaussian> prior;

  Dims dims() const { return {A.rows(), B.cols(), C.rows()}; }

  /// Returns the name of the first offending field, or nothing when the model is valid.
  std::optional<std::string> invalid_field() const
  {
    const Index nx = A.rows();
    if (nx <= 0 || A.cols() != nx) { return "A"; }
    if (B.rows() != nx || B.cols() <= 0) { return "B"; }
    if (C.cols() != nx || C.rows() <= 0) { return "C"; }
    if (W_w.rows() != nx || W_w.cols() != nx || !is_symmetric(W_w) || !is_positive_definite(W_w)) {
      return "W_w";
    }
    if (W_v.rows() != C.rows() || W_v.cols() != C.rows() || !is_symmetric(W_v)
        || !is_positive_definite(W_v)) { return "W_v"; }
    if (!A.allFinite()) { return "A"; }
    if (!B.allFinite()) { return "B"; }
    if (!C.allFinite()) { return "C"; }
    if (prior && prior->dim() != nx) { return "prior"; }
    return std::nullopt;
  }

  void validate() const
  {
    if (auto field = invalid_field()) { throw DimensionError("invalid model field " + *field); }
  }

  /// Process-noise covariance W_w⁻¹.
  Matrix process_covariance() const { return symmetric_inverse(W_w, "W_w"); }

  /// Observation-noise covariance W_v⁻¹.
  Matrix observation_covariance() const { return symmetric_inverse(W_v, "W_v"); }
};

/// Uninformative initial-state prior N_W(0, 1e-8 I).
inline constexpr double kVaguePrecision = 1e-8;

inline Gaussian vague_prior(Index nx)
{
  return Gaussian::from_precision(Vector::Zero(nx), kVaguePrecision * Matrix::Identity(nx, nx));
}

/**
 * @brief Quadratic cost ℓ(x, u) = ½ xᵀQx + ½ uᵀRu and the goal prior ∝ exp(−λ Σ ℓ).
 *
 * λQ and λR act as goal precisions on states and controls.
 */
struct GoalPrior
{
  Matrix Q;
  Matrix R;
  double lambda{1.0};

  std::optional<std::string> invalid_field(const Dims & dims) const
  {
    if (Q.rows() != dims.nx || Q.cols() != dims.nx || !is_symmetric(Q) || !is_psd(Q)) { return "Q"; }
    if (R.rows() != dims.nu || R.cols() != dims.nu || !is_symmetric(R) || !is_positive_definite(R)) { return "R"; }
    if (!(lambda > 0.0) || !std::isfinite(lambda)) { return "lambda"; }
    return std::nullopt;
  }

  void validate(const Dims & dims) const
  {
    if (auto field = invalid_field(dims)) { throw DimensionError("invalid goal prior field " + *field); }
  }

  Matrix state_precision() const { return lambda * Q; }
  Matrix control_precision() const { return lambda * R; }

  /// ℓ(x, u) without the λ scale.
  double cost(const Vector & x, const Vector & u) const
  {
    return 0.5 * x.dot(Q * x) + 0.5 * u.dot(R * u);
  }

  GoalPrior with_lambda(double l) const { return {Q, R, l}; }
};

}  // namespace actinf
