#pragma once

#include <Eigen/Dense>

#include <limits>

namespace oed {

/// Extended reals use IEEE infinity directly.
inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Singular values at or below this fraction of the largest one count as zero.
inline constexpr double kDefaultRankTol = 1e-12;

/// Jacobian of an m-output map with respect to n parameters.
///
/// Construction enforces the preconditions shared by every criterion:
/// all entries finite and 1 <= m <= n. Outputs beyond the parameter
/// dimension are redundant and must be reduced before they get here.
class JacobianMatrix
{
public:
  JacobianMatrix() = default;
  explicit JacobianMatrix(Eigen::MatrixXd entries);

  const Eigen::MatrixXd& entries() const { return entries_; }
  Eigen::Index rows() const { return entries_.rows(); }
  Eigen::Index cols() const { return entries_.cols(); }

  /// Copy of this matrix with row k removed.
  JacobianMatrix without_row(Eigen::Index k) const;

private:
  Eigen::MatrixXd entries_;
};

/// Pointwise scaling and skewness of one Jacobian.
struct LocalCriterion
{
  double scaling = kInfinity;       // SE, +inf when rank deficient
  double skewness = kInfinity;      // SK = max of skewness_vector
  Eigen::VectorXd skewness_vector;  // per-row ||j_k|| / ||j_k perp||
  Eigen::VectorXd singular_values;  // descending, length m
  bool rank_deficient = true;
};

/// Singular values of J, descending.
Eigen::VectorXd singular_values(const JacobianMatrix& jacobian);

/// m-dimensional volume of the parallelepiped spanned by the rows of J,
/// i.e. the product of its singular values.
double parallelepiped_measure(const JacobianMatrix& jacobian);

/// m-dimensional volume of the cross-section of the pre-image of a unit cube
/// under J: the reciprocal of the product of singular values, or +inf when J
/// is rank deficient under rank_tol.
double cross_section_measure(const JacobianMatrix& jacobian,
                             double rank_tol = kDefaultRankTol);

/// Local scaling effect SE. Same value as cross_section_measure.
double local_scaling(const JacobianMatrix& jacobian,
                     double rank_tol = kDefaultRankTol);

/// Scaling and skewness from singular values of J and of each row-deleted
/// submatrix:
///
///   SK_k = ||j_k|| * prod(sigma(J without row k)) / prod(sigma(J))
///
/// A single row has skewness 1. When J is rank deficient every component is
/// +inf: the ratio above is either a division by zero or 0/0.
LocalCriterion local_skewness_svd(const JacobianMatrix& jacobian,
                                  double rank_tol = kDefaultRankTol);

/// Skewness by explicit orthogonal decomposition j_k = j_k0 + j_k_perp, with
/// j_k0 the least-squares projection of j_k onto the span of the other rows.
/// Reference path for testing; components whose orthogonal part vanishes
/// (relative to ||j_k||) are +inf.
LocalCriterion local_skewness_oracle(const JacobianMatrix& jacobian,
                                     double rank_tol = kDefaultRankTol);

/// Skewness as the incremental change in scaling when a row is added:
///
///   SK = SE(J) * max_k ( ||j_k|| / SE(J without row k) )
///
/// Evaluated through independent local_scaling calls on J and its m
/// row-deleted submatrices. Requires m >= 2.
double skewness_as_scaling_ratio(const JacobianMatrix& jacobian,
                                 double rank_tol = kDefaultRankTol);

} // namespace oed
