#pragma once

#include "oed/models/forward_model.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <vector>

namespace oed {

/// Transient heat equation rho*c*u_t = div(kappa grad u) + S on the unit
/// interval or unit square, insulated boundary, zero initial state.
///
/// kappa is piecewise constant over regions_per_axis^dim equal blocks, one
/// parameter per block, numbered row-major (x fastest). The source is
/// amplitude * exp(-|x - center|^2 / width) with center at 0.5 on each axis.
struct HeatModelConfig
{
  int dimension = 1;
  int elements_per_axis = 40;
  int time_steps = 20;
  double t_final = 1.0;
  double rho = 1.5;
  double c = 1.5;
  double source_amplitude = 50.0;
  double source_width = 0.05;
  int regions_per_axis = 2;

  /// Welded rod: 40 linear elements, 20 midpoint steps to t = 1, two halves.
  static HeatModelConfig rod();
  /// Nine-plate square: 3x3 regions, 40 steps to t = 2.
  static HeatModelConfig plate(int elements_per_axis = 30);

  void validate() const;
};

/// Lagrange finite elements (linear in 1D, bilinear on squares in 2D) with
/// consistent mass, advanced by the implicit midpoint rule
///
///   (M + dt/2 K) u_{n+1} = (M - dt/2 K) u_n + dt b.
///
/// Observations are the nodal values at t_final.
class HeatModel : public ForwardModel
{
public:
  explicit HeatModel(HeatModelConfig config);

  std::string id() const override;
  Eigen::Index parameter_dim() const override { return region_stiffness_.size(); }
  Eigen::Index field_size() const override { return coordinates_.rows(); }
  Eigen::VectorXd evaluate(std::span<const double> lambda) const override;
  using ForwardModel::evaluate;
  const Eigen::MatrixXd& coordinates() const override { return coordinates_; }

  /// Nodal temperatures after each step; entry 0 is the initial state.
  std::vector<Eigen::VectorXd> trajectory(std::span<const double> lambda) const;

  const HeatModelConfig& config() const { return config_; }
  const Eigen::SparseMatrix<double>& mass() const { return mass_; }
  const Eigen::VectorXd& load() const { return load_; }
  /// Stiffness for kappa = lambda.
  Eigen::SparseMatrix<double> stiffness(std::span<const double> lambda) const;

  /// Region (parameter index) owning a point; interfaces belong to the
  /// upper region, matching kappa = lambda_2 for x >= 0.5 on the rod.
  int region_of(std::span<const double> point) const;

  /// Index of the node closest to a point.
  Eigen::Index nearest_node(std::span<const double> point) const;

private:
  void march(std::span<const double> lambda,
             const std::function<void(const Eigen::VectorXd&)>& on_step) const;

  HeatModelConfig config_;
  Eigen::MatrixXd coordinates_;
  Eigen::SparseMatrix<double> mass_;
  std::vector<Eigen::SparseMatrix<double>> region_stiffness_;
  Eigen::VectorXd load_;
};

} // namespace oed
