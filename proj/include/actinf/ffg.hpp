#pragma once

/**
 * @file
 * @brief Explicit Gaussian belief propagation over one time slice of the
 * goal-constrained state-space model.
 *
 * Two fixed schedules are executed message by message:
 *
 *  - backward slice: from the backward message N_W(0, P_k) on x_k to the
 *    backward message N_W(0, P_{k−1}) on x_{k−1} (messages 1–11);
 *  - control slice: from N_W(0, P_{t+1}) on x_{t+1} and the estimate
 *    p_e = N_W(x̂_t, Ŵ_t) to the control posterior q(u_t) ∝ m6 · m12 (messages 1–12).
 *
 * Node layout of a slice, left to right:
 *
 *   x_{k-1} ─[=]─ A ─[+]─ N(·, W_w⁻¹) ─[=]─ x_k
 *             |        |                 |
 *        N_W(0,λQ)     B                 C
 *                      |                 |
 *                  N_W(0,λR)        N(·, W_v⁻¹) ─ y_k (unobserved)
 *
 * Every message is materialized so tests can pin each one. The results serve
 * as an oracle for the closed forms in control.hpp and share no algebra with
 * them beyond the gaussian-core primitives.
 */

#include "actinf/model.hpp"

#include <map>

namespace actinf::ffg {

/// Parameters of one slice.
struct SliceSpec
{
  Matrix A;
  Matrix B;
  Matrix C;
  Matrix W_w;
  Matrix W_v;
  double lambda{1.0};
  Matrix Q;
  Matrix R;

  static SliceSpec from(const LinearGaussianModel & model, const GoalPrior & goal)
  {
    return {model.A, model.B, model.C, model.W_w, model.W_v, goal.lambda, goal.Q, goal.R};
  }

  void validate() const
  {
    const Index nx = A.rows();
    require(A.cols() == nx && B.rows() == nx && C.cols() == nx, "slice matrices do not conform");
    require(W_w.rows() == nx && W_w.cols() == nx, "W_w must be n_x x n_x");
    require(W_v.rows() == C.rows() && W_v.cols() == C.rows(), "W_v must be n_y x n_y");
    require(Q.rows() == nx && Q.cols() == nx, "Q must be n_x x n_x");
    require(R.rows() == B.cols() && R.cols() == B.cols(), "R must be n_u x n_u");
    require(lambda >= 0.0, "lambda must be >= 0");
  }
};

/// Message label (1..12) to message.
using MessageSet = std::map<int, Gaussian>;

struct SliceOptions
{
  /// Build the (uninformative) observation branch, messages 2 and 3.
  bool observation_branch{true};
};

struct BackwardResult
{
  Matrix P_prev;
  MessageSet messages;
};

struct ControlResult
{
  Vector u_mode;
  Gaussian q_u;
  MessageSet messages;
};

namespace detail {

inline Gaussian zero_mean_precision(const Matrix & w)
{
  return Gaussian::from_precision(Vector::Zero(w.rows()), w);
}

/// Messages 1–6, shared by both schedules.
inline void future_branch(const SliceSpec & spec, const Matrix & p_next, const SliceOptions & options, MessageSet & msgs)
{
  const Index ny = spec.C.rows();

  msgs.emplace(1, zero_mean_precision(p_next));
  if (options.observation_branch) {
    // y is unobserved: the observation node integrates to one.
    msgs.emplace(2, Gaussian::uninformative(ny));
    msgs.emplace(3, affine_pull(msgs.at(2), spec.C));
    msgs.emplace(4, multiply(msgs.at(1), msgs.at(3)));
  } else {
    msgs.emplace(4, msgs.at(1));
  }
  // Transition node x_k = x'' + w: the backward message over x'' absorbs the noise.
  msgs.emplace(5, convolve(msgs.at(4), zero_mean_precision(spec.W_w)));
  msgs.emplace(6, zero_mean_precision(spec.lambda * spec.R));
}

}  // namespace detail

/// One backward step of the message recursion; returns P_{k−1} = precision of message 11.
inline BackwardResult backward_slice(const SliceSpec & spec, const Matrix & p_k, const SliceOptions & options = {})
{
  spec.validate();
  require(p_k.rows() == spec.A.rows() && p_k.cols() == spec.A.rows(), "P_k must be n_x x n_x");
  if (!(spec.lambda > 0.0)) { throw SingularityError("backward_slice: control prior λR is improper for λ = 0"); }

  const Index nx = spec.A.rows();
  MessageSet msgs;
  detail::future_branch(spec, p_k, options, msgs);

  // Control branch seen from the sum node: B u with u ~ N_W(0, λR).
  msgs.emplace(7, affine_push(msgs.at(6), spec.B));
  // Sum node x'' = A x + B u: backward message over A x.
  msgs.emplace(8, convolve(msgs.at(5), affine_push(msgs.at(7), -Matrix::Identity(nx, nx))));
  msgs.emplace(9, affine_pull(msgs.at(8), spec.A));
  msgs.emplace(10, detail::zero_mean_precision(spec.lambda * spec.Q));
  msgs.emplace(11, multiply(msgs.at(9), msgs.at(10)));

  Matrix p_prev = msgs.at(11).precision();
  return {symmetrize(p_prev), std::move(msgs)};
}

/// The control posterior q(u_t) ∝ m6 · m12 and its mode.
inline ControlResult control_slice(const SliceSpec & spec, const Matrix & p_next, const Gaussian & estimate,
  const SliceOptions & options = {})
{
  spec.validate();
  const Index nx = spec.A.rows();
  require(p_next.rows() == nx && p_next.cols() == nx, "P_{t+1} must be n_x x n_x");
  require(estimate.dim() == nx, "estimate dimension mismatch");

  MessageSet msgs;
  detail::future_branch(spec, p_next, options, msgs);

  msgs.emplace(7, estimate.to_precision_form());
  msgs.emplace(8, detail::zero_mean_precision(spec.lambda * spec.Q));
  msgs.emplace(9, multiply(msgs.at(7), msgs.at(8)).to_covariance_form());
  msgs.emplace(10, affine_push(msgs.at(9), spec.A));
  // Sum node x'' = A x + B u: backward message over B u is m5 convolved with −m10.
  msgs.emplace(11, convolve(msgs.at(5), affine_push(msgs.at(10), -Matrix::Identity(nx, nx))));
  msgs.emplace(12, affine_pull(msgs.at(11), spec.B));

  Gaussian q_u = multiply(msgs.at(6), msgs.at(12));
  if (!q_u.has_finite_covariance()) {
    throw SingularityError("control_slice: m6 x m12 has singular precision, mode undefined");
  }
  Vector u = q_u.mean();
  return {std::move(u), std::move(q_u), std::move(msgs)};
}

}  // namespace actinf::ffg
