#pragma once

#include "oed/geometry.hpp"
#include "oed/models/forward_model.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace oed {

/// Axis-aligned parameter domain, lower[i] < upper[i].
struct ParameterBox
{
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  /// [lo, hi]^n
  static ParameterBox cube(Eigen::Index n, double lo, double hi);

  void validate() const;
  Eigen::Index dim() const { return lower.size(); }
  Eigen::VectorXd midpoint() const { return 0.5 * (lower + upper); }
  double volume() const { return (upper - lower).prod(); }
  bool contains(const Eigen::VectorXd& point) const;
};

enum class SamplingScheme
{
  UniformRandom,
  TensorGrid,
  Custom,
};

const char* to_string(SamplingScheme scheme);

/// Parameter points, one per row.
struct SampleSet
{
  Eigen::MatrixXd points;
  std::uint64_t seed = 0;
  SamplingScheme scheme = SamplingScheme::UniformRandom;

  Eigen::Index size() const { return points.rows(); }
  Eigen::Index dim() const { return points.cols(); }
};

/// Field values and finite-difference Jacobians of every field index at each
/// sample. jacobians[i] is P x n; outputs row i is the field at points row i.
struct FieldJacobianBatch
{
  std::string model_id;
  std::uint64_t seed = 0;
  double fd_step = 0.0;
  Eigen::MatrixXd points;
  Eigen::MatrixXd outputs;
  std::vector<Eigen::MatrixXd> jacobians;

  Eigen::Index sample_count() const { return points.rows(); }
  Eigen::Index field_size() const { return outputs.cols(); }
  Eigen::Index parameter_dim() const { return points.cols(); }
};

/// Per-sample m x n Jacobians of one design.
struct JacobianBatch
{
  std::vector<JacobianMatrix> matrices;
  /// Samples dropped during assembly because their rows were not finite.
  std::vector<Eigen::Index> excluded;

  bool empty() const { return matrices.empty(); }
  std::size_t size() const { return matrices.size(); }
};

/// Uniform pseudo-random points in the box. Same seed, same points.
SampleSet draw_samples(const ParameterBox& box, Eigen::Index count,
                       std::uint64_t seed);

/// Tensor grid with `per_axis` nodes per axis, endpoints included
/// (a single node sits at the midpoint).
SampleSet tensor_grid(const ParameterBox& box, Eigen::Index per_axis);

/// One-sided finite differences
///
///   J[i](p, j) = (u_p(lambda_i + h e_j) - u_p(lambda_i)) / h
///
/// with n + 1 model evaluations per sample. Samples are processed in
/// parallel (`workers` = 0 uses all cores); the result does not depend on the
/// worker count. A model failure is rethrown as NumericalError naming the
/// sample index and parameter value.
FieldJacobianBatch estimate_field_jacobians(const ForwardModel& model,
                                            const SampleSet& samples,
                                            double fd_step,
                                            unsigned workers = 0);

/// Select rows of every field Jacobian. Repeated indices are legal and give
/// rank-deficient designs. No model evaluations.
JacobianBatch assemble_design_jacobian(const FieldJacobianBatch& batch,
                                       std::span<const Eigen::Index> rows);

/// Binary batch cache: magic "OEDBATCH", format version, then a header
/// {model_id, seed, fd_step, N, P, n} followed by points, outputs and
/// Jacobians as little-endian doubles.
void save_batch(const FieldJacobianBatch& batch, const std::filesystem::path& path);
FieldJacobianBatch load_batch(const std::filesystem::path& path);

/// CSV with header lambda_1..lambda_n.
void write_samples_csv(std::ostream& out, const SampleSet& samples);

} // namespace oed
