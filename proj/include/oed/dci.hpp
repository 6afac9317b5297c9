#pragma once

#include "oed/design.hpp"
#include "oed/models/forward_model.hpp"
#include "oed/sampling.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <variant>
#include <vector>

namespace oed {

/// Multivariate normal with symmetric positive definite covariance.
class GaussianDensity
{
public:
  GaussianDensity(Eigen::VectorXd mean, Eigen::MatrixXd covariance);
  /// mean with covariance variance * I.
  static GaussianDensity isotropic(Eigen::VectorXd mean, double variance);

  Eigen::Index dim() const { return mean_.size(); }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return covariance_; }
  double pdf(std::span<const double> x) const;
  Eigen::VectorXd sample(std::mt19937_64& rng) const;

private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd covariance_;
  Eigen::MatrixXd chol_;
  double log_norm_ = 0.0;
};

/// Uniform on a parameter box.
struct UniformBoxDensity
{
  ParameterBox box;

  Eigen::Index dim() const { return box.dim(); }
  double pdf(std::span<const double> x) const;
};

enum class BandwidthRule
{
  Silverman,
  Scott,
};

const char* to_string(BandwidthRule rule);

/// Product-Gaussian kernel density estimate, one bandwidth per dimension.
struct KdeDensity
{
  Eigen::MatrixXd samples;    // N x m
  Eigen::VectorXd bandwidth;  // m
  Eigen::VectorXd weights;    // empty for equal weights, else sums to 1

  Eigen::Index dim() const { return samples.cols(); }
  double pdf(std::span<const double> x) const;
};

using DensitySpec = std::variant<GaussianDensity, UniformBoxDensity, KdeDensity>;

Eigen::Index density_dim(const DensitySpec& density);
double density_pdf(const DensitySpec& density, std::span<const double> x);
inline double density_pdf(const DensitySpec& density, const Eigen::VectorXd& x)
{
  return density_pdf(density, std::span<const double>(x.data(), x.size()));
}
/// count draws, one per row.
Eigen::MatrixXd sample_density(const DensitySpec& density, Eigen::Index count,
                               std::uint64_t seed);

/// Per-dimension bandwidth sigma_k * factor(N, m):
///   Silverman: (4 / ((m + 2) N))^(1 / (m + 4))
///   Scott:     N^(-1 / (m + 4))
Eigen::VectorXd kde_bandwidth(const Eigen::MatrixXd& samples, BandwidthRule rule);

/// KDE of predicted QoI samples (the push-forward of the initial density).
/// Throws InputError for fewer than 2 samples or a constant output dimension.
KdeDensity push_forward_density(const Eigen::MatrixXd& qoi_samples,
                                BandwidthRule rule = BandwidthRule::Silverman);

/// Predicted density values below this are treated as underflow.
inline constexpr double kDensityFloor = 1e-300;

/// Initial samples re-weighted into the updated density.
struct WeightedEnsemble
{
  Eigen::MatrixXd points;   // N x n, may be empty when built from QoI alone
  Eigen::MatrixXd qoi;      // N x m
  Eigen::VectorXd weights;  // r = pi_obs(q) / pi_pred(q)
  double mean_ratio = 0.0;
  double stderr_ratio = 0.0;
  /// Samples whose predicted density underflowed; their weight is 0.
  std::vector<Eigen::Index> excluded;
  /// |mean_ratio - 1| exceeds both 3 standard errors and kPredictabilitySlack.
  bool predictability_warning = false;
  /// Set by rejection_sample.
  std::optional<std::vector<bool>> accepted;

  Eigen::Index size() const { return weights.size(); }
  double max_weight() const { return weights.size() ? weights.maxCoeff() : 0.0; }
  double acceptance_rate() const;
  /// Accepted points (or QoI when `qoi_space`), one per row.
  Eigen::MatrixXd accepted_rows(bool qoi_space = false) const;
};

inline constexpr double kPredictabilitySlack = 0.1;

/// r_i = pi_obs(q_i) / pi_pred(q_i) and its sample mean (which should be
/// close to 1 when the observed density is predictable).
WeightedEnsemble update_weights(const Eigen::MatrixXd& qoi_samples,
                                const DensitySpec& observed,
                                const DensitySpec& predicted);

/// Accept sample i iff u_i <= w_i / max_j w_j, u_i ~ U(0,1) iid.
WeightedEnsemble rejection_sample(WeightedEnsemble ensemble, std::uint64_t seed);

struct DciProblem
{
  RowTuple rows;
  DensitySpec initial;
  DensitySpec observed;
  Eigen::Index count = 10000;
  std::uint64_t seed = 0;
  BandwidthRule bandwidth = BandwidthRule::Silverman;
};

struct DciSolution
{
  WeightedEnsemble ensemble;
  KdeDensity predicted;
};

/// Draws initial samples, evaluates the design's QoI, estimates the
/// predicted density and weights every sample.
DciSolution dci_solve(const ForwardModel& model, const DciProblem& problem,
                      unsigned workers = 0);

/// Updated density pi_init(lambda) * r(lambda) evaluated directly at each
/// row of `points` (one model solve per point).
Eigen::VectorXd updated_density_at(const ForwardModel& model,
                                   const DciProblem& problem,
                                   const KdeDensity& predicted,
                                   const Eigen::MatrixXd& points,
                                   unsigned workers = 0);

/// Weighted KDE of the ensemble in parameter space, evaluated at `points`.
Eigen::VectorXd weighted_parameter_density(const WeightedEnsemble& ensemble,
                                           const Eigen::MatrixXd& points,
                                           BandwidthRule rule = BandwidthRule::Silverman);

/// Local maxima of a density sampled on an nx-by-ny grid (index iy*nx + ix)
/// whose value is at least `fraction` of the global maximum.
std::vector<std::size_t> grid_modes(std::span<const double> values, Eigen::Index nx,
                                    Eigen::Index ny, double fraction = 0.5);

struct Moments
{
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

/// Sample mean and unbiased covariance of the rows.
Moments sample_moments(const Eigen::MatrixXd& rows);

} // namespace oed
