#pragma once

#include <Eigen/Dense>

#include <span>
#include <string>

namespace oed {

/// A deterministic map from n parameters to P observable field values.
///
/// Implementations are immutable after construction; evaluate() must be safe
/// to call concurrently from several threads.
class ForwardModel
{
public:
  virtual ~ForwardModel() = default;

  virtual std::string id() const = 0;
  virtual Eigen::Index parameter_dim() const = 0;
  virtual Eigen::Index field_size() const = 0;

  /// Field values at the observation time.
  virtual Eigen::VectorXd evaluate(std::span<const double> lambda) const = 0;

  /// Physical coordinates of each field index, one row per index.
  virtual const Eigen::MatrixXd& coordinates() const = 0;

  Eigen::VectorXd evaluate(const Eigen::VectorXd& lambda) const
  {
    return evaluate(std::span<const double>(lambda.data(), lambda.size()));
  }
};

} // namespace oed
