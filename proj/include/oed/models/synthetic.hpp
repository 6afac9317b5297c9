#pragma once

#include "oed/models/forward_model.hpp"

#include <memory>
#include <string>
#include <vector>

namespace oed {

/// Analytic test map that also knows its exact Jacobian.
class SyntheticModel : public ForwardModel
{
public:
  virtual Eigen::MatrixXd jacobian(std::span<const double> lambda) const = 0;
  const Eigen::MatrixXd& coordinates() const override { return coordinates_; }

protected:
  // Field index k sits at coordinate k.
  void set_index_coordinates(Eigen::Index size);

  Eigen::MatrixXd coordinates_;
};

/// Q(lambda) = A lambda.
class LinearModel : public SyntheticModel
{
public:
  explicit LinearModel(Eigen::MatrixXd a, std::string name = "linear");

  std::string id() const override { return name_; }
  Eigen::Index parameter_dim() const override { return a_.cols(); }
  Eigen::Index field_size() const override { return a_.rows(); }
  Eigen::VectorXd evaluate(std::span<const double> lambda) const override;
  Eigen::MatrixXd jacobian(std::span<const double> lambda) const override;
  using ForwardModel::evaluate;

  const Eigen::MatrixXd& matrix() const { return a_; }

private:
  Eigen::MatrixXd a_;
  std::string name_;
};

/// Q(lambda) = (lambda_1^2, lambda_1 lambda_2).
class QuadraticModel : public SyntheticModel
{
public:
  QuadraticModel();

  std::string id() const override { return "quadratic"; }
  Eigen::Index parameter_dim() const override { return 2; }
  Eigen::Index field_size() const override { return 2; }
  Eigen::VectorXd evaluate(std::span<const double> lambda) const override;
  Eigen::MatrixXd jacobian(std::span<const double> lambda) const override;
  using ForwardModel::evaluate;
};

/// Givens rotation by theta in the (i, j) coordinate plane of R^n.
Eigen::MatrixXd plane_rotation(Eigen::Index n, Eigen::Index i, Eigen::Index j,
                               double theta);

/// Linear map with its input rotated: Q(lambda) = A R(theta) lambda.
/// Singular values, scaling, and skewness do not depend on theta.
LinearModel rotated_linear(const Eigen::MatrixXd& a, double theta);

/// Test fixtures by name: "identity2", "quadratic", "linear-demo" (3 x 2).
std::vector<std::string> synthetic_model_names();
std::unique_ptr<SyntheticModel> make_synthetic_model(const std::string& name);

} // namespace oed
