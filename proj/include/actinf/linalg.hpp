#pragma once

/**
 * @file
 * @brief Dense linear-algebra helpers shared by the estimator, the controllers
 * and the message-passing oracle.
 */

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>
#include <stdexcept>
#include <string>

namespace actinf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index  = Eigen::Index;

/// Operand shapes do not conform.
class DimensionError : public std::invalid_argument
{
public:
  using std::invalid_argument::invalid_argument;
};

/// A matrix that must be inverted (or a distribution that must be normalized) is singular.
class SingularityError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Non-finite values or violated numerical preconditions.
class NumericalError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Relative eigenvalue slack used by the PSD check.
inline constexpr double kPsdTolerance = 1e-10;

/// Relative eigenvalue threshold below which a precision matrix is treated as singular.
inline constexpr double kRankTolerance = 1e-12;

inline void require(bool condition, const std::string & message)
{
  if (!condition) { throw DimensionError(message); }
}

inline void require_square(const Matrix & m, const std::string & what)
{
  require(m.rows() == m.cols(),
    what + " must be square, got " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

/// (M + Mᵀ) / 2. The result is exactly symmetric because IEEE addition commutes.
inline Matrix symmetrize(const Matrix & m)
{
  require_square(m, "symmetrize operand");
  return (m + m.transpose()) * 0.5;
}

inline bool is_exactly_symmetric(const Matrix & m)
{
  return m.rows() == m.cols() && m == m.transpose();
}

/// ‖M − Mᵀ‖ <= tolerance · ‖M‖ (max-abs norms).
inline bool is_symmetric(const Matrix & m, double tolerance = 1e-10)
{
  if (m.rows() != m.cols()) { return false; }
  if (m.size() == 0) { return true; }
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tolerance * m.cwiseAbs().maxCoeff();
}

inline bool all_finite(const Matrix & m) { return m.allFinite(); }

/// Spectral norm of a symmetric matrix (largest absolute eigenvalue).
inline double symmetric_norm(const Matrix & m)
{
  if (m.size() == 0) { return 0.0; }
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

/// Smallest eigenvalue >= -kPsdTolerance * ||M||_2.
inline bool is_psd(const Matrix & m, double tolerance = kPsdTolerance)
{
  if (m.rows() != m.cols() || !m.allFinite()) { return false; }
  if (m.size() == 0) { return true; }
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
  const auto & ev = es.eigenvalues();
  const double norm = ev.cwiseAbs().maxCoeff();
  return ev.minCoeff() >= -tolerance * norm;
}

/// Positive definite with a margin relative to the spectral norm.
inline bool is_positive_definite(const Matrix & m, double tolerance = kRankTolerance)
{
  if (m.rows() != m.cols() || !m.allFinite() || m.size() == 0) { return false; }
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
  const auto & ev = es.eigenvalues();
  const double norm = ev.cwiseAbs().maxCoeff();
  return norm > 0.0 && ev.minCoeff() > tolerance * norm;
}

/// Inverse of a general square matrix; throws when it is numerically singular.
inline Matrix inverse(const Matrix & m, const std::string & what = "matrix")
{
  require_square(m, what);
  if (!m.allFinite()) { throw NumericalError(what + " has non-finite entries"); }
  Eigen::FullPivLU<Matrix> lu(m);
  if (!lu.isInvertible()) { throw SingularityError(what + " is singular"); }
  return lu.inverse();
}

/// Inverse of a symmetric matrix, re-symmetrized.
inline Matrix symmetric_inverse(const Matrix & m, const std::string & what = "matrix")
{
  return symmetrize(inverse(symmetrize(m), what));
}

/// log det of a symmetric positive-definite matrix.
inline double log_det_spd(const Matrix & m, const std::string & what = "matrix")
{
  Eigen::LLT<Matrix> llt(symmetrize(m));
  if (llt.info() != Eigen::Success) { throw SingularityError(what + " is not positive definite"); }
  const Matrix & l = llt.matrixL();
  return 2.0 * l.diagonal().array().log().sum();
}

/// log |det M| for a general square matrix.
inline double log_abs_det(const Matrix & m, const std::string & what = "matrix")
{
  require_square(m, what);
  Eigen::FullPivLU<Matrix> lu(m);
  if (!lu.isInvertible()) { throw SingularityError(what + " is singular"); }
  return lu.matrixLU().diagonal().array().abs().log().sum();
}

/// Induced infinity norm (maximum absolute row sum).
inline double induced_inf_norm(const Matrix & m)
{
  if (m.size() == 0) { return 0.0; }
  return m.cwiseAbs().rowwise().sum().maxCoeff();
}

/// Block-diagonal [a 0; 0 b].
inline Matrix block_diagonal(const Matrix & a, const Matrix & b)
{
  Matrix out = Matrix::Zero(a.rows() + b.rows(), a.cols() + b.cols());
  out.topLeftCorner(a.rows(), a.cols())         = a;
  out.bottomRightCorner(b.rows(), b.cols())     = b;
  return out;
}

/**
 * @brief (W + U C V)⁻¹ evaluated through the Woodbury form
 * W⁻¹ − W⁻¹U (C⁻¹ + V W⁻¹ U)⁻¹ V W⁻¹.
 *
 * W is n×n, U is n×k, C is k×k and V is k×n. W and C must be invertible, as
 * must the inner k×k term.
 */
inline Matrix woodbury_inverse(const Matrix & w, const Matrix & u, const Matrix & c, const Matrix & v)
{
  require_square(w, "woodbury W");
  require_square(c, "woodbury C");
  require(u.rows() == w.rows() && u.cols() == c.rows(), "woodbury U must be n x k");
  require(v.rows() == c.rows() && v.cols() == w.cols(), "woodbury V must be k x n");

  const Matrix w_inv = inverse(w, "woodbury W");
  if (c.size() == 0) { return w_inv; }
  const Matrix c_inv = inverse(c, "woodbury C");
  const Matrix inner = c_inv + v * w_inv * u;
  const Matrix inner_inv = inverse(inner, "woodbury inner term C⁻¹ + V W⁻¹ U");
  return w_inv - w_inv * u * inner_inv * v * w_inv;
}

/**
 * @brief (Pa⁻¹ + Pb⁻¹)⁻¹ = Pa (Pa + Pb)⁻¹ Pb.
 *
 * Neither input is inverted, so either may be singular as long as Pa + Pb is
 * invertible. Combining two precisions this way yields the precision of the sum
 * of two independent variables.
 */
inline Matrix searle_combine(const Matrix & pa, const Matrix & pb)
{
  require_square(pa, "searle Pa");
  require(pa.rows() == pb.rows() && pa.cols() == pb.cols(), "searle operands must have equal shape");
  const Matrix sum = pa + pb;
  Eigen::FullPivLU<Matrix> lu(sum);
  if (!lu.isInvertible()) { throw SingularityError("searle_combine: Pa + Pb is singular"); }
  return symmetrize(pa * lu.solve(pb));
}

}  // namespace actinf
