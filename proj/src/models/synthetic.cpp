#include "oed/models/synthetic.hpp"

#include "oed/error.hpp"

#include <cmath>

namespace oed {

namespace {

void check_size(std::span<const double> lambda, Eigen::Index n)
{
  if (static_cast<Eigen::Index>(lambda.size()) != n)
    throw InputError("expected " + std::to_string(n) + " parameters, got " +
                     std::to_string(lambda.size()));
}

} // namespace

void SyntheticModel::set_index_coordinates(Eigen::Index size)
{
  coordinates_.resize(size, 1);
  for (Eigen::Index k = 0; k < size; ++k)
    coordinates_(k, 0) = static_cast<double>(k);
}

LinearModel::LinearModel(Eigen::MatrixXd a, std::string name)
  : a_(std::move(a))
  , name_(std::move(name))
{
  if (a_.size() == 0 || !a_.allFinite())
    throw InputError("linear model needs a non-empty finite matrix");
  set_index_coordinates(a_.rows());
}

Eigen::VectorXd LinearModel::evaluate(std::span<const double> lambda) const
{
  check_size(lambda, a_.cols());
  return a_ * Eigen::Map<const Eigen::VectorXd>(lambda.data(), a_.cols());
}

Eigen::MatrixXd LinearModel::jacobian(std::span<const double> lambda) const
{
  check_size(lambda, a_.cols());
  return a_;
}

QuadraticModel::QuadraticModel()
{
  set_index_coordinates(2);
}

Eigen::VectorXd QuadraticModel::evaluate(std::span<const double> lambda) const
{
  check_size(lambda, 2);
  return Eigen::Vector2d(lambda[0] * lambda[0], lambda[0] * lambda[1]);
}

Eigen::MatrixXd QuadraticModel::jacobian(std::span<const double> lambda) const
{
  check_size(lambda, 2);
  Eigen::Matrix2d j;
  j << 2.0 * lambda[0], 0.0, lambda[1], lambda[0];
  return j;
}

Eigen::MatrixXd plane_rotation(Eigen::Index n, Eigen::Index i, Eigen::Index j,
                               double theta)
{
  if (i == j || i < 0 || j < 0 || i >= n || j >= n)
    throw InputError("rotation plane must name two distinct axes");
  Eigen::MatrixXd r = Eigen::MatrixXd::Identity(n, n);
  r(i, i) = std::cos(theta);
  r(j, j) = std::cos(theta);
  r(i, j) = -std::sin(theta);
  r(j, i) = std::sin(theta);
  return r;
}

LinearModel rotated_linear(const Eigen::MatrixXd& a, double theta)
{
  return LinearModel(a * plane_rotation(a.cols(), 0, 1, theta), "rotated-linear");
}

std::vector<std::string> synthetic_model_names()
{
  return {"identity2", "quadratic", "linear-demo"};
}

std::unique_ptr<SyntheticModel> make_synthetic_model(const std::string& name)
{
  if (name == "identity2")
    return std::make_unique<LinearModel>(Eigen::Matrix2d::Identity(), "identity2");
  if (name == "quadratic")
    return std::make_unique<QuadraticModel>();
  if (name == "linear-demo") {
    Eigen::MatrixXd a(3, 2);
    a << 2.0, 0.0, 0.0, 1.0, 1.0, 0.0;
    return std::make_unique<LinearModel>(std::move(a), "linear-demo");
  }
  throw InputError("unknown synthetic model '" + name + "'");
}

} // namespace oed
