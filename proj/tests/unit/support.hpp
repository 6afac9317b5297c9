#pragma once

#include "oed/geometry.hpp"
#include "oed/models/forward_model.hpp"

#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <random>

namespace oed::testing {

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index m, Eigen::Index n)
{
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd a(m, n);
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      a(i, j) = u(rng);
  return a;
}

/// Random m x n matrix whose rows are comfortably independent, so relative
/// comparisons at 1e-8 are meaningful.
inline Eigen::MatrixXd random_full_rank(std::mt19937_64& rng, Eigen::Index m,
                                        Eigen::Index n, double max_cond = 1e3)
{
  for (;;) {
    Eigen::MatrixXd a = random_matrix(rng, m, n);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const auto& s = svd.singularValues();
    if (s(m - 1) > 0.0 && s(0) / s(m - 1) < max_cond)
      return a;
  }
}

inline Eigen::MatrixXd random_orthogonal(std::mt19937_64& rng, Eigen::Index n)
{
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(random_matrix(rng, n, n));
  return qr.householderQ();
}

/// Determinant by Gaussian elimination with partial pivoting; kept separate
/// from any SVD code path.
inline double elimination_det(Eigen::MatrixXd a)
{
  const Eigen::Index n = a.rows();
  double det = 1.0;
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index piv = k;
    for (Eigen::Index i = k + 1; i < n; ++i)
      if (std::abs(a(i, k)) > std::abs(a(piv, k)))
        piv = i;
    if (a(piv, k) == 0.0)
      return 0.0;
    if (piv != k) {
      a.row(k).swap(a.row(piv));
      det = -det;
    }
    det *= a(k, k);
    for (Eigen::Index i = k + 1; i < n; ++i) {
      const double f = a(i, k) / a(k, k);
      for (Eigen::Index j = k; j < n; ++j)
        a(i, j) -= f * a(k, j);
    }
  }
  return det;
}

/// sqrt(det(J J^T)).
inline double gram_volume(const Eigen::MatrixXd& j)
{
  return std::sqrt(std::max(0.0, elimination_det(j * j.transpose())));
}

inline bool rel_close(double a, double b, double tol)
{
  if (std::isinf(a) || std::isinf(b))
    return a == b;
  return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

/// Wraps a model and counts evaluate() calls.
class CountingModel : public ForwardModel
{
public:
  explicit CountingModel(const ForwardModel& inner) : inner_(inner) {}
  std::string id() const override { return "counting-" + inner_.id(); }
  Eigen::Index parameter_dim() const override { return inner_.parameter_dim(); }
  Eigen::Index field_size() const override { return inner_.field_size(); }
  Eigen::VectorXd evaluate(std::span<const double> lambda) const override
  {
    ++calls;
    return inner_.evaluate(lambda);
  }
  using ForwardModel::evaluate;
  const Eigen::MatrixXd& coordinates() const override { return inner_.coordinates(); }

  mutable std::atomic<long> calls{0};

private:
  const ForwardModel& inner_;
};

} // namespace oed::testing
