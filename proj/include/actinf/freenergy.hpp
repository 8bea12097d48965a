#pragma once

/**
 * @file
 * @brief Free energy of the goal-constrained model at its exact posterior.
 *
 * At the exact posterior the divergence term vanishes and the free energy is
 * the surprise −log Z. Z factors into the evidence of past observations C_e
 * and the mass of
 *
 *   p_e(x_t) · Π_k N(x_{k+1} | A x_k + B u_k, W_w⁻¹) N(y_{k+1} | C x_{k+1}, W_v⁻¹)
 *           · Π_k N(x_k | 0, (λQ)⁻¹) · Π_k N(u_k | 0, (λR)⁻¹),
 *
 * integrated over the current state and every future variable. Goal factors
 * are normalized Gaussians; the terminal one constrains x_{t+T} only.
 */

#include "actinf/estimation.hpp"

namespace actinf::freenergy {

enum class EliminationOrder { forward, backward };

struct FreeEnergyReport
{
  double total{0.0};
  double future_part{0.0};
  double past_part{0.0};
};

namespace detail {

inline void check_goal(const Gaussian & estimate, const LinearGaussianModel & model, const GoalPrior & goal, Index horizon)
{
  require(horizon >= 1, "horizon must be >= 1");
  require(estimate.dim() == model.A.rows(), "estimate dimension mismatch");
  if (!(goal.lambda > 0.0)) {
    throw SingularityError("future free energy is undefined without a proper control prior (lambda must be > 0)");
  }
  if (!is_positive_definite(goal.Q)) {
    throw SingularityError("future free energy needs a positive-definite Q for a normalizable state goal");
  }
}

inline Gaussian goal_factor(const Matrix & precision)
{
  return Gaussian::from_precision(Vector::Zero(precision.rows()), precision);
}

/// Multiplies in the observation branch; y is integrated out, so the factor is ∝ 1.
inline Gaussian absorb_unobserved(const Gaussian & g, const LinearGaussianModel & model)
{
  return multiply(g, affine_pull(Gaussian::uninformative(model.C.rows()), model.C));
}

inline double forward_elimination(const Gaussian & estimate, const LinearGaussianModel & model,
  const GoalPrior & goal, Index horizon)
{
  const Index nx = model.A.rows();
  Matrix transition(nx, nx + model.B.cols());
  transition << model.A, model.B;
  const Gaussian state_goal   = goal_factor(goal.state_precision());
  const Gaussian control_goal = goal_factor(goal.control_precision());
  const Gaussian noise        = goal_factor(model.W_w);

  Gaussian alpha = multiply(estimate, state_goal);
  for (Index k = 0; k < horizon; ++k) {
    const Gaussian joint     = join(alpha.to_covariance_form(), control_goal);
    const Gaussian predicted = convolve(affine_push(joint, transition), noise);
    alpha = multiply(absorb_unobserved(predicted, model), state_goal);
  }
  return -log_partition(alpha);
}

inline double backward_elimination(const Gaussian & estimate, const LinearGaussianModel & model,
  const GoalPrior & goal, Index horizon)
{
  const Index nx = model.A.rows();
  const Index nu = model.B.cols();
  Matrix transition(nx, nx + nu);
  transition << model.A, model.B;
  const Gaussian state_goal = goal_factor(goal.state_precision());
  const Gaussian noise      = goal_factor(model.W_w);
  // Goal on u_k as a factor over (x_k, u_k), leaving x_k unconstrained.
  const Gaussian control_goal = join(Gaussian::uninformative(nx), goal_factor(goal.control_precision()));

  Gaussian beta = absorb_unobserved(state_goal, model);
  for (Index k = horizon; k-- > 0;) {
    const Gaussian pre_noise = convolve(beta, noise);
    const Gaussian over_xu   = multiply(affine_pull(pre_noise, transition), control_goal);
    beta = multiply(marginalize(over_xu, nx), state_goal);
    if (k > 0) { beta = absorb_unobserved(beta, model); }
  }
  return -log_partition(multiply(beta, estimate));
}

}  // namespace detail

/**
 * @brief −log of the mass of p_e times the future model and goal factors over a
 * horizon of T steps, computed by sequential elimination.
 */
inline double future_free_energy(const Gaussian & estimate, const LinearGaussianModel & model, const GoalPrior & goal,
  Index horizon, EliminationOrder order = EliminationOrder::forward)
{
  detail::check_goal(estimate, model, goal, horizon);
  const Gaussian p_e = estimate.normalized();
  return order == EliminationOrder::forward ? detail::forward_elimination(p_e, model, goal, horizon)
                                            : detail::backward_elimination(p_e, model, goal, horizon);
}

/// past_part = −log C_e, future_part from future_free_energy, total = their sum.
inline FreeEnergyReport step_report(const estimation::FilterState & filter, const LinearGaussianModel & model,
  const GoalPrior & goal, Index horizon)
{
  FreeEnergyReport report;
  report.past_part   = -filter.log_evidence;
  report.future_part = future_free_energy(filter.estimate, model, goal, horizon);
  report.total       = report.past_part + report.future_part;
  return report;
}

}  // namespace actinf::freenergy
