#pragma once

/**
 * @file
 * @brief Closed-form gain schedules for the free-energy (active inference)
 * regulator and the classical finite-horizon LQG regulator.
 *
 * Both controllers act on the filtered mean: u_t = −K_t x̂_t. The backward
 * precisions P_k are indexed so that schedule.P[0] = P_{t+1} and
 * schedule.P[T−1] = P_{t+T} = λQ.
 */

#include "actinf/model.hpp"

#include <Eigen/SVD>

#include <vector>

namespace actinf::control {

struct GainSchedule
{
  std::vector<Matrix> P;  ///< P_{t+1} … P_{t+T}
  Matrix R_prime;         ///< augmented control weight (λR for LQG)
  Index horizon{0};

  const Matrix & next() const { return P.front(); }
  const Matrix & terminal() const { return P.back(); }
};

struct Gain
{
  Matrix K;
  Vector u;
  Matrix V_prime;  ///< (Ŵ_t + λQ)⁻¹; empty for LQG
};

namespace detail {

inline void check_conformance(const Matrix & p, const LinearGaussianModel & model, const GoalPrior & goal)
{
  const Index nx = model.A.rows();
  require(p.rows() == nx && p.cols() == nx, "backward precision must be n_x x n_x");
  require(model.B.rows() == nx, "B must have n_x rows");
  require(goal.Q.rows() == nx && goal.R.rows() == model.B.cols(), "goal prior does not conform to the model");
  if (!(goal.lambda > 0.0)) { throw DimensionError("lambda must be > 0"); }
}

/// B square with smallest singular value well away from zero.
inline bool is_invertible_actuation(const Matrix & b)
{
  if (b.rows() != b.cols() || b.size() == 0) { return false; }
  Eigen::JacobiSVD<Matrix> svd(b);
  const auto & s = svd.singularValues();
  return s(0) > 0.0 && s(s.size() - 1) > 1e-8 * s(0);
}

}  // namespace detail

/// R' = ([λR]⁻¹ + [Bᵀ W_w B]⁻¹)⁻¹, evaluated without inverting either term.
inline Matrix augmented_control_weight(const LinearGaussianModel & model, const GoalPrior & goal)
{
  return searle_combine(goal.control_precision(), model.B.transpose() * model.W_w * model.B);
}

/**
 * @brief Riccati-type step P_{k−1} = AᵀP A − AᵀP B (R' + BᵀP B)⁻¹ BᵀP A + λQ.
 *
 * Equals the message-passing recursion only when B is square and invertible.
 */
inline Matrix actinf_backward_step_riccati(const Matrix & p, const LinearGaussianModel & model, const GoalPrior & goal)
{
  detail::check_conformance(p, model, goal);
  const Matrix & a = model.A;
  const Matrix & b = model.B;
  const Matrix r_prime = augmented_control_weight(model, goal);
  const Matrix pb      = p * b;
  const Matrix inner   = r_prime + b.transpose() * pb;
  Eigen::FullPivLU<Matrix> lu(inner);
  if (!lu.isInvertible()) { throw SingularityError("R' + BᵀPB is singular"); }
  const Matrix correction = a.transpose() * pb * lu.solve(pb.transpose() * a);
  return symmetrize(a.transpose() * p * a - correction + goal.state_precision());
}

/**
 * @brief P_{k−1} = Aᵀ (P⁻¹ + B(λR)⁻¹Bᵀ + W_w⁻¹)⁻¹ A + λQ, never inverting P.
 *
 * The inner inverse is formed as P (P + S⁻¹)⁻¹ S⁻¹ with S = B(λR)⁻¹Bᵀ + W_w⁻¹.
 */
inline Matrix actinf_backward_step_covariance(const Matrix & p, const LinearGaussianModel & model,
  const GoalPrior & goal)
{
  detail::check_conformance(p, model, goal);
  const Matrix & a = model.A;
  const Matrix & b = model.B;
  const Matrix s = b * symmetric_inverse(goal.control_precision(), "λR") * b.transpose() + model.process_covariance();
  const Matrix propagated = searle_combine(p, symmetric_inverse(s, "B(λR)⁻¹Bᵀ + W_w⁻¹"));
  return symmetrize(a.transpose() * propagated * a + goal.state_precision());
}

/// One backward step of the free-energy regulator's precision recursion.
inline Matrix actinf_backward_step(const Matrix & p, const LinearGaussianModel & model, const GoalPrior & goal)
{
  if (detail::is_invertible_actuation(model.B)) { return actinf_backward_step_riccati(p, model, goal); }
  return actinf_backward_step_covariance(p, model, goal);
}

/// P_{t+T} = λQ followed by T − 1 backward steps down to P_{t+1}.
inline GainSchedule actinf_schedule(const LinearGaussianModel & model, const GoalPrior & goal, Index horizon)
{
  require(horizon >= 1, "horizon must be >= 1");
  std::vector<Matrix> reversed;
  reversed.reserve(static_cast<std::size_t>(horizon));
  reversed.push_back(symmetrize(goal.state_precision()));
  for (Index k = 1; k < horizon; ++k) { reversed.push_back(actinf_backward_step(reversed.back(), model, goal)); }

  GainSchedule schedule;
  schedule.P.assign(reversed.rbegin(), reversed.rend());
  schedule.R_prime = augmented_control_weight(model, goal);
  schedule.horizon = horizon;
  return schedule;
}

/**
 * @brief Free-energy regulator gain for the current estimate p_e = N_W(x̂_t, Ŵ_t).
 *
 * K_t = [Bᵀ G B + λR]⁻¹ Bᵀ G A V̂' Ŵ_t with G = (A V̂' Aᵀ + P_{t+1}⁻¹ + W_w⁻¹)⁻¹
 * and V̂' = (Ŵ_t + λQ)⁻¹. G is formed as P (P + M⁻¹)⁻¹ M⁻¹, so a singular
 * P_{t+1} is fine.
 */
inline Gain actinf_gain(const GainSchedule & schedule, const Gaussian & estimate, const LinearGaussianModel & model,
  const GoalPrior & goal)
{
  require(!schedule.P.empty(), "empty gain schedule");
  detail::check_conformance(schedule.next(), model, goal);
  require(estimate.dim() == model.A.rows(), "estimate dimension mismatch");

  const Matrix & a     = model.A;
  const Matrix & b     = model.B;
  const Matrix w_hat   = estimate.precision();
  const Vector x_hat   = estimate.mean();
  const Matrix v_prime = symmetric_inverse(w_hat + goal.state_precision(), "Ŵ_t + λQ");
  const Matrix m       = symmetrize(a * v_prime * a.transpose()) + model.process_covariance();
  const Matrix g       = searle_combine(schedule.next(), symmetric_inverse(m, "A V̂' Aᵀ + W_w⁻¹"));

  const Matrix outer = b.transpose() * g * b + goal.control_precision();
  Eigen::LLT<Matrix> llt(symmetrize(outer));
  if (llt.info() != Eigen::Success) { throw SingularityError("Bᵀ G B + λR is not positive definite"); }
  Gain gain;
  gain.K       = llt.solve(b.transpose() * g * a * v_prime * w_hat);
  gain.u       = -gain.K * x_hat;
  gain.V_prime = v_prime;
  return gain;
}

/// Standard Riccati step P_{k−1} = AᵀPA − AᵀPB (λR + BᵀPB)⁻¹ BᵀPA + λQ.
inline Matrix lqg_backward_step(const Matrix & p, const LinearGaussianModel & model, const GoalPrior & cost)
{
  detail::check_conformance(p, model, cost);
  const Matrix & a = model.A;
  const Matrix & b = model.B;
  const Matrix pb    = p * b;
  const Matrix inner = cost.control_precision() + b.transpose() * pb;
  Eigen::LLT<Matrix> llt(symmetrize(inner));
  if (llt.info() != Eigen::Success) { throw SingularityError("λR + BᵀPB is not positive definite"); }
  return symmetrize(a.transpose() * p * a - a.transpose() * pb * llt.solve(pb.transpose() * a) + cost.state_precision());
}

inline GainSchedule lqg_schedule(const LinearGaussianModel & model, const GoalPrior & cost, Index horizon)
{
  require(horizon >= 1, "horizon must be >= 1");
  std::vector<Matrix> reversed;
  reversed.reserve(static_cast<std::size_t>(horizon));
  reversed.push_back(symmetrize(cost.state_precision()));
  for (Index k = 1; k < horizon; ++k) { reversed.push_back(lqg_backward_step(reversed.back(), model, cost)); }

  GainSchedule schedule;
  schedule.P.assign(reversed.rbegin(), reversed.rend());
  schedule.R_prime = cost.control_precision();
  schedule.horizon = horizon;
  return schedule;
}

/// K_t = [BᵀP_{t+1}B + λR]⁻¹ BᵀP_{t+1}A and u = −K_t x̂.
inline Gain lqg_gain(const GainSchedule & schedule, const Vector & x_hat, const LinearGaussianModel & model,
  const GoalPrior & cost)
{
  require(!schedule.P.empty(), "empty gain schedule");
  detail::check_conformance(schedule.next(), model, cost);
  require(x_hat.size() == model.A.rows(), "state estimate dimension mismatch");
  const Matrix & p = schedule.next();
  const Matrix & b = model.B;
  const Matrix outer = b.transpose() * p * b + cost.control_precision();
  Eigen::LLT<Matrix> llt(symmetrize(outer));
  if (llt.info() != Eigen::Success) { throw SingularityError("BᵀPB + λR is not positive definite"); }
  Gain gain;
  gain.K = llt.solve(b.transpose() * p * model.A);
  gain.u = -gain.K * x_hat;
  return gain;
}

/// ‖K_actinf(λ) − K_lqg‖∞ for each λ, with the LQG gain of the unscaled (Q, R).
inline std::vector<double> limit_check_lambda(const LinearGaussianModel & model, const GoalPrior & goal_family,
  Index horizon, const std::vector<double> & lambdas, const Matrix & estimate_precision)
{
  const Index nx = model.A.rows();
  const Gaussian estimate = Gaussian::from_precision(Vector::Zero(nx), estimate_precision);
  const GoalPrior unscaled = goal_family.with_lambda(1.0);
  const Matrix k_lqg = lqg_gain(lqg_schedule(model, unscaled, horizon), Vector::Zero(nx), model, unscaled).K;

  std::vector<double> gaps;
  gaps.reserve(lambdas.size());
  for (double lambda : lambdas) {
    const GoalPrior goal = goal_family.with_lambda(lambda);
    const Matrix k = actinf_gain(actinf_schedule(model, goal, horizon), estimate, model, goal).K;
    gaps.push_back(induced_inf_norm(k - k_lqg));
  }
  return gaps;
}

inline std::vector<double> limit_check_lambda(const LinearGaussianModel & model, const GoalPrior & goal_family,
  Index horizon, const std::vector<double> & lambdas)
{
  const Index nx = model.A.rows();
  return limit_check_lambda(model, goal_family, horizon, lambdas, Matrix::Identity(nx, nx));
}

}  // namespace actinf::control
