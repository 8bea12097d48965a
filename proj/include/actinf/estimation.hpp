#pragma once

/**
 * @file
 * @brief Forward filtering pass: the current-state estimate p_e and the
 * accumulated log evidence of past observations (a Kalman filter).
 */

#include "actinf/model.hpp"

namespace actinf::estimation {

struct FilterState
{
  Gaussian estimate;        ///< normalized p_e(x_t)
  double log_evidence{0.0}; ///< log C_e, log p(y_1..y_t | u_0..u_{t-1})
  Index t{0};
};

inline FilterState init(const Gaussian & prior, const LinearGaussianModel & model)
{
  require(prior.dim() == model.A.rows(), "filter prior dimension does not match the state dimension");
  return {prior.normalized(), 0.0, 0};
}

inline FilterState init(const LinearGaussianModel & model)
{
  return init(model.prior ? *model.prior : vague_prior(model.A.rows()), model);
}

/// Predicted state N(A x̂ + B u, A V̂ Aᵀ + W_w⁻¹), in covariance form.
inline Gaussian predict(const Gaussian & estimate, const Vector & u_prev, const LinearGaussianModel & model)
{
  require(u_prev.size() == model.B.cols(), "control dimension mismatch");
  const Gaussian pushed = affine_push(estimate, model.A, model.B * u_prev);
  return convolve(pushed, Gaussian::from_precision(Vector::Zero(model.A.rows()), model.W_w));
}

/**
 * @brief One predict/update cycle with the previous control and the new observation.
 *
 * The observation likelihood N(y | C x, W_v⁻¹), seen as a function of x, is
 * multiplied onto the prediction in precision form. The mass of that product is
 * the predictive density of y, which is added to log_evidence.
 */
inline FilterState step(const FilterState & fs, const Vector & u_prev, const Vector & y,
  const LinearGaussianModel & model)
{
  require(y.size() == model.C.rows(), "observation dimension mismatch");
  if (!u_prev.allFinite() || !y.allFinite()) { throw NumericalError("filter step received non-finite input"); }

  const Gaussian predicted  = predict(fs.estimate, u_prev, model);
  const Gaussian likelihood = affine_pull(Gaussian::from_precision(y, model.W_v), model.C);
  const Gaussian posterior  = multiply(predicted, likelihood);

  const double increment = posterior.log_weight() - predicted.log_weight();
  if (!std::isfinite(increment)) { throw NumericalError("filter evidence is not finite"); }
  return {posterior.normalized(), fs.log_evidence + increment, fs.t + 1};
}

}  // namespace actinf::estimation
