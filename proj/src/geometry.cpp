#include "oed/geometry.hpp"

#include "oed/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace oed {

JacobianMatrix::JacobianMatrix(Eigen::MatrixXd entries)
  : entries_(std::move(entries))
{
  if (entries_.rows() < 1 || entries_.cols() < 1)
    throw InputError("Jacobian must have at least one row and one column");
  if (entries_.rows() > entries_.cols())
    throw InputError("Jacobian has more outputs (" +
                     std::to_string(entries_.rows()) + ") than parameters (" +
                     std::to_string(entries_.cols()) + ")");
  if (!entries_.allFinite())
    throw InputError("Jacobian has non-finite entries");
}

JacobianMatrix JacobianMatrix::without_row(Eigen::Index k) const
{
  const Eigen::Index m = rows();
  Eigen::MatrixXd sub(m - 1, cols());
  for (Eigen::Index i = 0, r = 0; i < m; ++i)
    if (i != k)
      sub.row(r++) = entries_.row(i);
  return JacobianMatrix(std::move(sub));
}

namespace {

// Singular values of a raw m x n block with m <= n, descending.
Eigen::VectorXd raw_singular_values(const Eigen::MatrixXd& a)
{
  if (a.rows() == 1)
    return Eigen::VectorXd::Constant(1, a.row(0).norm());
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
  return svd.singularValues();
}

bool is_rank_deficient(const Eigen::VectorXd& sigma, double rank_tol)
{
  const double cutoff = rank_tol * sigma(0);
  return (sigma.array() <= cutoff).any();
}

} // namespace

Eigen::VectorXd singular_values(const JacobianMatrix& jacobian)
{
  return raw_singular_values(jacobian.entries());
}

double parallelepiped_measure(const JacobianMatrix& jacobian)
{
  return singular_values(jacobian).prod();
}

double cross_section_measure(const JacobianMatrix& jacobian, double rank_tol)
{
  const Eigen::VectorXd sigma = singular_values(jacobian);
  if (is_rank_deficient(sigma, rank_tol))
    return kInfinity;
  return 1.0 / sigma.prod();
}

double local_scaling(const JacobianMatrix& jacobian, double rank_tol)
{
  if (!(rank_tol > 0.0))
    throw InputError("rank tolerance must be positive");
  return cross_section_measure(jacobian, rank_tol);
}

LocalCriterion local_skewness_svd(const JacobianMatrix& jacobian,
                                  double rank_tol)
{
  const Eigen::MatrixXd& j = jacobian.entries();
  const Eigen::Index m = j.rows();

  LocalCriterion out;
  out.singular_values = raw_singular_values(j);
  out.rank_deficient = is_rank_deficient(out.singular_values, rank_tol);
  out.skewness_vector = Eigen::VectorXd::Constant(m, kInfinity);
  if (out.rank_deficient)
    return out;

  const double volume = out.singular_values.prod();
  out.scaling = 1.0 / volume;
  if (m == 1) {
    out.skewness_vector(0) = 1.0;
    out.skewness = 1.0;
    return out;
  }

  Eigen::MatrixXd sub(m - 1, j.cols());
  for (Eigen::Index k = 0; k < m; ++k) {
    for (Eigen::Index i = 0, r = 0; i < m; ++i)
      if (i != k)
        sub.row(r++) = j.row(i);
    const double face = raw_singular_values(sub).prod();
    out.skewness_vector(k) = j.row(k).norm() * face / volume;
  }
  out.skewness = out.skewness_vector.maxCoeff();
  return out;
}

LocalCriterion local_skewness_oracle(const JacobianMatrix& jacobian,
                                     double rank_tol)
{
  const Eigen::MatrixXd& j = jacobian.entries();
  const Eigen::Index m = j.rows();

  LocalCriterion out;
  out.skewness_vector.resize(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    const Eigen::VectorXd row = j.row(k).transpose();
    const double length = row.norm();
    Eigen::VectorXd perp = row;
    if (m > 1) {
      // Columns of `others` span the remaining rows; least-squares fit gives
      // the projection j_k0.
      const Eigen::MatrixXd others = jacobian.without_row(k).entries().transpose();
      const Eigen::VectorXd coeffs = others.colPivHouseholderQr().solve(row);
      perp = row - others * coeffs;
    }
    const double perp_norm = perp.norm();
    out.skewness_vector(k) =
      (length == 0.0 || perp_norm <= rank_tol * length) ? kInfinity
                                                        : length / perp_norm;
  }
  out.skewness = out.skewness_vector.maxCoeff();
  out.rank_deficient = std::isinf(out.skewness);

  // Volume by repeated peeling of the first row (Gram-Schmidt on the rows).
  if (!out.rank_deficient) {
    Eigen::MatrixXd basis(j.cols(), 0);
    double volume = 1.0;
    for (Eigen::Index k = m - 1; k >= 0; --k) {
      Eigen::VectorXd v = j.row(k).transpose();
      for (Eigen::Index b = 0; b < basis.cols(); ++b)
        v -= basis.col(b).dot(v) * basis.col(b);
      const double h = v.norm();
      volume *= h;
      basis.conservativeResize(Eigen::NoChange, basis.cols() + 1);
      basis.col(basis.cols() - 1) = v / h;
    }
    out.scaling = 1.0 / volume;
  }
  return out;
}

double skewness_as_scaling_ratio(const JacobianMatrix& jacobian,
                                 double rank_tol)
{
  const Eigen::Index m = jacobian.rows();
  if (m < 2)
    throw InputError("skewness_as_scaling_ratio needs at least two rows");

  const double scaling = local_scaling(jacobian, rank_tol);
  if (std::isinf(scaling))
    return kInfinity;

  double worst = 0.0;
  for (Eigen::Index k = 0; k < m; ++k) {
    const double face_scaling = local_scaling(jacobian.without_row(k), rank_tol);
    const double length = jacobian.entries().row(k).norm();
    worst = std::max(worst, length / face_scaling);
  }
  return scaling * worst;
}

} // namespace oed
