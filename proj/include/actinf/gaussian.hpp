#pragma once

/**
 * @file
 * @brief Multivariate Gaussian messages in mean–covariance or mean–precision form.
 *
 * A Gaussian here is an unnormalized function f(z) over R^n. When its
 * covariance is finite, f(z) = exp(log_weight) · N(z | m, V), so log_weight is
 * the log of the total mass and is 0 for a normalized density. Improper
 * messages (singular precision, e.g. the uninformative "∝ 1" message) only have
 * a precision form; for those log_weight is the canonical constant, i.e. the
 * value of log f at z = 0 in
 *
 *   log f(z) = c − ½ zᵀ W z + hᵀ z.
 *
 * All operations return new values with re-symmetrized matrices.
 */

#include "actinf/linalg.hpp"

#include <numbers>
#include <string>

namespace actinf {

/// Which parameterization is authoritative.
enum class Form { covariance, precision };

/// Canonical (information) parameters of log f(z) = constant − ½ zᵀ W z + hᵀ z.
struct Canonical
{
  Matrix precision;
  Vector information;
  double constant{0.0};
};

class Gaussian
{
public:
  /// exp(log_weight) · N(z | mean, covariance). The covariance may be singular (degenerate).
  static Gaussian from_covariance(Vector mean, Matrix covariance, double log_weight = 0.0)
  {
    require_square(covariance, "covariance");
    require(mean.size() == covariance.rows(), "mean and covariance dimensions differ");
    Gaussian g;
    g.form_       = Form::covariance;
    g.vec_        = std::move(mean);
    g.mat_        = symmetrize(covariance);
    g.log_weight_ = log_weight;
    return g;
  }

  /**
   * @brief exp(log_weight) · N(z | mean, precision⁻¹) for a nonsingular precision.
   *
   * For a singular precision the result is the kernel exp(log_weight − ½ (z − m)ᵀ W (z − m)).
   */
  static Gaussian from_precision(const Vector & mean, const Matrix & precision, double log_weight = 0.0)
  {
    require_square(precision, "precision");
    require(mean.size() == precision.rows(), "mean and precision dimensions differ");
    Gaussian g;
    g.form_       = Form::precision;
    g.mat_        = symmetrize(precision);
    g.vec_        = g.mat_ * mean;
    g.log_weight_ = g.has_finite_covariance() ? log_weight : log_weight - 0.5 * mean.dot(g.vec_);
    return g;
  }

  /// Builds the message from canonical parameters; log_weight follows the class convention.
  static Gaussian from_canonical(const Matrix & precision, const Vector & information, double constant)
  {
    require_square(precision, "precision");
    require(information.size() == precision.rows(), "information and precision dimensions differ");
    Gaussian g;
    g.form_ = Form::precision;
    g.mat_  = symmetrize(precision);
    g.vec_  = information;
    if (g.has_finite_covariance()) {
      const double n = static_cast<double>(g.dim());
      const Vector m = g.mat_.llt().solve(g.vec_);
      g.log_weight_  = constant + 0.5 * n * std::log(2.0 * std::numbers::pi)
                    - 0.5 * log_det_spd(g.mat_, "precision") + 0.5 * g.vec_.dot(m);
    } else {
      g.log_weight_ = constant;
    }
    return g;
  }

  /// The constant function 1 over R^n (zero precision).
  static Gaussian uninformative(Index n)
  {
    return from_canonical(Matrix::Zero(n, n), Vector::Zero(n), 0.0);
  }

  Index dim() const { return mat_.rows(); }
  Form form() const { return form_; }
  double log_weight() const { return log_weight_; }

  /// Covariance form, or precision form with a positive-definite precision.
  bool has_finite_covariance() const
  {
    return form_ == Form::covariance || is_positive_definite(mat_);
  }

  /// Precision form, or covariance form with a positive-definite covariance.
  bool has_finite_precision() const
  {
    return form_ == Form::precision || is_positive_definite(mat_);
  }

  /// Both parameterizations exist: a proper, non-degenerate Gaussian.
  bool is_proper() const { return has_finite_covariance() && has_finite_precision(); }

  Vector mean() const
  {
    if (form_ == Form::covariance) { return vec_; }
    if (!has_finite_covariance()) { throw SingularityError("mean of an improper Gaussian is undefined"); }
    return mat_.llt().solve(vec_);
  }

  Matrix covariance() const
  {
    if (form_ == Form::covariance) { return mat_; }
    if (!has_finite_covariance()) { throw SingularityError("covariance of an improper Gaussian is undefined"); }
    return symmetric_inverse(mat_, "precision");
  }

  Matrix precision() const
  {
    if (form_ == Form::precision) { return mat_; }
    if (!has_finite_precision()) { throw SingularityError("precision of a degenerate Gaussian is undefined"); }
    return symmetric_inverse(mat_, "covariance");
  }

  /// W m, the weighted mean.
  Vector information() const
  {
    if (form_ == Form::precision) { return vec_; }
    return precision() * vec_;
  }

  Canonical canonical() const
  {
    const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
    const double n = static_cast<double>(dim());
    if (form_ == Form::precision) {
      if (!has_finite_covariance()) { return {mat_, vec_, log_weight_}; }
      const Vector m = mat_.llt().solve(vec_);
      return {mat_, vec_,
        log_weight_ + 0.5 * log_det_spd(mat_, "precision") - n * half_log_2pi - 0.5 * vec_.dot(m)};
    }
    if (!has_finite_precision()) {
      throw SingularityError("degenerate covariance-form Gaussian has no canonical form");
    }
    const Matrix w = precision();
    const Vector h = w * vec_;
    return {w, h, log_weight_ - n * half_log_2pi - 0.5 * log_det_spd(mat_, "covariance") - 0.5 * vec_.dot(h)};
  }

  Gaussian to_covariance_form() const
  {
    if (form_ == Form::covariance) { return *this; }
    return from_covariance(mean(), covariance(), log_weight_);
  }

  Gaussian to_precision_form() const
  {
    if (form_ == Form::precision) { return *this; }
    const Canonical c = canonical();
    return from_canonical(c.precision, c.information, c.constant);
  }

  Gaussian with_log_weight(double log_weight) const
  {
    if (!has_finite_covariance()) {
      throw SingularityError("cannot assign a mass to an improper Gaussian");
    }
    Gaussian g    = *this;
    g.log_weight_ = log_weight;
    return g;
  }

  /// Same distribution with unit mass.
  Gaussian normalized() const { return with_log_weight(0.0); }

private:
  Gaussian() = default;

  Form form_{Form::precision};
  Vector vec_;  // mean (covariance form) or information W m (precision form)
  Matrix mat_;  // covariance or precision
  double log_weight_{0.0};
};

/**
 * @brief Pointwise product a(z) b(z) ("equality node").
 *
 * Precisions and weighted means add; log_weight picks up the log of the
 * product normalizer. The result stays improper when both factors leave a
 * common direction unconstrained; asking it for a mean then throws.
 */
inline Gaussian multiply(const Gaussian & a, const Gaussian & b)
{
  require(a.dim() == b.dim(), "multiply: dimension mismatch");
  const Canonical ca = a.canonical();
  const Canonical cb = b.canonical();
  return Gaussian::from_canonical(ca.precision + cb.precision, ca.information + cb.information,
    ca.constant + cb.constant);
}

/**
 * @brief Message over s = a + b for independent a and b ("sum node").
 *
 * With finite covariances this is plain covariance addition. When one side is
 * only known in precision form S (possibly singular) the result has precision
 * (I + S V)⁻¹ S, which never inverts S.
 */
inline Gaussian convolve(const Gaussian & a, const Gaussian & b)
{
  require(a.dim() == b.dim(), "convolve: dimension mismatch");
  const Index n = a.dim();

  if (a.has_finite_covariance() && b.has_finite_covariance()) {
    const Gaussian ga = a.to_covariance_form();
    const Gaussian gb = b.to_covariance_form();
    return Gaussian::from_covariance(ga.mean() + gb.mean(), ga.covariance() + gb.covariance(),
      a.log_weight() + b.log_weight());
  }

  if (a.has_finite_covariance() || b.has_finite_covariance()) {
    const Gaussian & improper = a.has_finite_covariance() ? b : a;
    const Gaussian   proper   = (a.has_finite_covariance() ? a : b).to_covariance_form();
    const Canonical  ci       = improper.canonical();
    const Matrix & s  = ci.precision;
    const Vector & xi = ci.information;
    const Vector m    = proper.mean();
    const Matrix v    = proper.covariance();

    const Matrix id = Matrix::Identity(n, n);
    Eigen::FullPivLU<Matrix> lu(id + s * v);
    if (!lu.isInvertible()) { throw SingularityError("convolve: I + S V is singular"); }
    const Matrix w = lu.solve(s);
    const Vector h = lu.solve(xi + s * m);

    // log f at s = 0: shift by the proper mean, then integrate the residual.
    const Vector s0 = -m;
    const Vector g  = s * s0 - xi;
    const Matrix vg = v * lu.inverse();  // V (I + S V)⁻¹, symmetric
    const double log_det_term = std::log(std::abs(lu.determinant()));
    const double constant = ci.constant - 0.5 * s0.dot(s * s0) + xi.dot(s0) - 0.5 * log_det_term
                          + 0.5 * g.dot(symmetrize(vg) * g) + proper.log_weight();
    return Gaussian::from_canonical(w, h, constant);
  }

  const Canonical ca = a.canonical();
  const Canonical cb = b.canonical();
  const Matrix joint = ca.precision + cb.precision;
  Eigen::FullPivLU<Matrix> lu(joint);
  if (!lu.isInvertible()) { throw SingularityError("convolve: Wa + Wb is singular"); }
  const Matrix w   = ca.precision * lu.solve(cb.precision);
  const Vector h   = cb.precision * lu.solve(ca.information) + ca.precision * lu.solve(cb.information);
  const Vector hb  = cb.information - ca.information;
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  const double constant = ca.constant + cb.constant + 0.5 * hb.dot(lu.solve(hb))
                        + static_cast<double>(n) * half_log_2pi - 0.5 * log_abs_det(joint, "Wa + Wb");
  return Gaussian::from_canonical(w, h, constant);
}

/// Distribution of M z + offset; mass is preserved. Requires a finite covariance.
inline Gaussian affine_push(const Gaussian & g, const Matrix & m, const Vector & offset)
{
  require(m.cols() == g.dim(), "affine_push: M has " + std::to_string(m.cols()) + " columns, Gaussian has dimension "
                                   + std::to_string(g.dim()));
  require(offset.size() == m.rows(), "affine_push: offset dimension mismatch");
  if (!g.has_finite_covariance()) { throw SingularityError("affine_push: improper input has no covariance"); }
  return Gaussian::from_covariance(m * g.mean() + offset, m * g.covariance() * m.transpose(), g.log_weight());
}

inline Gaussian affine_push(const Gaussian & g, const Matrix & m)
{
  return affine_push(g, m, Vector::Zero(m.rows()));
}

/**
 * @brief The function z ↦ g(M z), i.e. a message pulled backward through a gain node.
 *
 * Precision becomes Mᵀ W M and the weighted mean Mᵀ W m. For a wide or rank
 * deficient M the result is improper.
 */
inline Gaussian affine_pull(const Gaussian & g, const Matrix & m)
{
  require(m.rows() == g.dim(), "affine_pull: M has " + std::to_string(m.rows()) + " rows, Gaussian has dimension "
                                   + std::to_string(g.dim()));
  const Canonical c = g.canonical();
  return Gaussian::from_canonical(m.transpose() * c.precision * m, m.transpose() * c.information, c.constant);
}

/// Product of factors over disjoint variables, stacked as (a, b).
inline Gaussian join(const Gaussian & a, const Gaussian & b)
{
  const Index na = a.dim();
  const Index nb = b.dim();
  if (a.has_finite_covariance() && b.has_finite_covariance()) {
    Vector m(na + nb);
    m << a.mean(), b.mean();
    return Gaussian::from_covariance(m, block_diagonal(a.covariance(), b.covariance()),
      a.log_weight() + b.log_weight());
  }
  const Canonical ca = a.canonical();
  const Canonical cb = b.canonical();
  Vector h(na + nb);
  h << ca.information, cb.information;
  return Gaussian::from_canonical(block_diagonal(ca.precision, cb.precision), h, ca.constant + cb.constant);
}

/// Integrates out every coordinate after the first `keep`.
inline Gaussian marginalize(const Gaussian & g, Index keep)
{
  require(keep >= 0 && keep <= g.dim(), "marginalize: keep out of range");
  const Index drop = g.dim() - keep;
  if (g.form() == Form::covariance) {
    return Gaussian::from_covariance(g.mean().head(keep), g.covariance().topLeftCorner(keep, keep), g.log_weight());
  }
  const Canonical c = g.canonical();
  const Matrix w_kk = c.precision.topLeftCorner(keep, keep);
  const Matrix w_kd = c.precision.topRightCorner(keep, drop);
  const Matrix w_dd = c.precision.bottomRightCorner(drop, drop);
  const Vector h_k  = c.information.head(keep);
  const Vector h_d  = c.information.tail(drop);

  Eigen::LLT<Matrix> llt(symmetrize(w_dd));
  if (llt.info() != Eigen::Success || !is_positive_definite(w_dd)) {
    throw SingularityError("marginalize: integrated block is not normalizable");
  }
  const double half_log_2pi = 0.5 * std::log(2.0 * std::numbers::pi);
  const double constant = c.constant + 0.5 * h_d.dot(llt.solve(h_d)) + static_cast<double>(drop) * half_log_2pi
                        - 0.5 * log_det_spd(w_dd, "marginalized precision block");
  return Gaussian::from_canonical(w_kk - w_kd * llt.solve(w_kd.transpose()), h_k - w_kd * llt.solve(h_d), constant);
}

/// log ∫ f(z) dz. Requires a full-rank covariance.
inline double log_partition(const Gaussian & g)
{
  if (!g.is_proper()) { throw SingularityError("log_partition: covariance is not full rank"); }
  return g.log_weight();
}

}  // namespace actinf
