#include "oed/dci.hpp"

#include "oed/criteria.hpp"
#include "oed/error.hpp"
#include "oed/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace oed {

GaussianDensity::GaussianDensity(Eigen::VectorXd mean, Eigen::MatrixXd covariance)
  : mean_(std::move(mean))
  , covariance_(std::move(covariance))
{
  const Eigen::Index m = mean_.size();
  if (m < 1 || covariance_.rows() != m || covariance_.cols() != m)
    throw InputError("Gaussian mean and covariance dimensions disagree");
  if (!mean_.allFinite() || !covariance_.allFinite())
    throw InputError("Gaussian parameters must be finite");
  const double scale = covariance_.cwiseAbs().maxCoeff();
  if ((covariance_ - covariance_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw InputError("Gaussian covariance must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(covariance_);
  if (llt.info() != Eigen::Success)
    throw InputError("Gaussian covariance must be positive definite");
  chol_ = llt.matrixL();
  const double log_det = 2.0 * chol_.diagonal().array().log().sum();
  log_norm_ = -0.5 * (static_cast<double>(m) * std::log(2.0 * std::numbers::pi) + log_det);
}

GaussianDensity GaussianDensity::isotropic(Eigen::VectorXd mean, double variance)
{
  const Eigen::Index m = mean.size();
  return GaussianDensity(std::move(mean), variance * Eigen::MatrixXd::Identity(m, m));
}

double GaussianDensity::pdf(std::span<const double> x) const
{
  if (static_cast<Eigen::Index>(x.size()) != dim())
    throw InputError("Gaussian pdf evaluated at a point of the wrong dimension");
  const Eigen::VectorXd diff =
    Eigen::Map<const Eigen::VectorXd>(x.data(), dim()) - mean_;
  const Eigen::VectorXd z = chol_.triangularView<Eigen::Lower>().solve(diff);
  return std::exp(log_norm_ - 0.5 * z.squaredNorm());
}

Eigen::VectorXd GaussianDensity::sample(std::mt19937_64& rng) const
{
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd z(dim());
  for (Eigen::Index k = 0; k < dim(); ++k)
    z(k) = normal(rng);
  return mean_ + chol_ * z;
}

double UniformBoxDensity::pdf(std::span<const double> x) const
{
  if (static_cast<Eigen::Index>(x.size()) != dim())
    throw InputError("uniform pdf evaluated at a point of the wrong dimension");
  for (Eigen::Index k = 0; k < dim(); ++k)
    if (x[k] < box.lower(k) || x[k] > box.upper(k))
      return 0.0;
  return 1.0 / box.volume();
}

const char* to_string(BandwidthRule rule)
{
  return rule == BandwidthRule::Silverman ? "silverman" : "scott";
}

double KdeDensity::pdf(std::span<const double> x) const
{
  const Eigen::Index m = dim();
  if (static_cast<Eigen::Index>(x.size()) != m)
    throw InputError("KDE evaluated at a point of the wrong dimension");
  const Eigen::Index count = samples.rows();
  Eigen::VectorXd inv_h = bandwidth.cwiseInverse();
  const double norm =
    std::pow(2.0 * std::numbers::pi, -0.5 * static_cast<double>(m)) * inv_h.prod();

  double sum = 0.0;
  for (Eigen::Index i = 0; i < count; ++i) {
    double r2 = 0.0;
    for (Eigen::Index k = 0; k < m; ++k) {
      const double z = (x[k] - samples(i, k)) * inv_h(k);
      r2 += z * z;
    }
    const double kernel = std::exp(-0.5 * r2);
    sum += weights.size() ? weights(i) * kernel : kernel;
  }
  if (weights.size() == 0)
    sum /= static_cast<double>(count);
  return norm * sum;
}

Eigen::Index density_dim(const DensitySpec& density)
{
  return std::visit([](const auto& d) { return d.dim(); }, density);
}

double density_pdf(const DensitySpec& density, std::span<const double> x)
{
  return std::visit([&](const auto& d) { return d.pdf(x); }, density);
}

Eigen::MatrixXd sample_density(const DensitySpec& density, Eigen::Index count,
                               std::uint64_t seed)
{
  if (count < 1)
    throw InputError("sample count must be at least 1");
  std::mt19937_64 rng(seed);
  const Eigen::Index m = density_dim(density);
  Eigen::MatrixXd out(count, m);

  if (const auto* g = std::get_if<GaussianDensity>(&density)) {
    for (Eigen::Index i = 0; i < count; ++i)
      out.row(i) = g->sample(rng).transpose();
  } else if (const auto* u = std::get_if<UniformBoxDensity>(&density)) {
    out = draw_samples(u->box, count, seed).points;
  } else {
    const auto& kde = std::get<KdeDensity>(density);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> w(static_cast<std::size_t>(kde.samples.rows()), 1.0);
    if (kde.weights.size())
      w.assign(kde.weights.data(), kde.weights.data() + kde.weights.size());
    std::discrete_distribution<Eigen::Index> pick(w.begin(), w.end());
    for (Eigen::Index i = 0; i < count; ++i) {
      const Eigen::Index src = pick(rng);
      for (Eigen::Index k = 0; k < m; ++k)
        out(i, k) = kde.samples(src, k) + kde.bandwidth(k) * normal(rng);
    }
  }
  return out;
}

Eigen::VectorXd kde_bandwidth(const Eigen::MatrixXd& samples, BandwidthRule rule)
{
  const auto count = static_cast<double>(samples.rows());
  const auto m = static_cast<double>(samples.cols());
  const double factor = rule == BandwidthRule::Silverman
                          ? std::pow(4.0 / ((m + 2.0) * count), 1.0 / (m + 4.0))
                          : std::pow(count, -1.0 / (m + 4.0));
  const Moments mom = sample_moments(samples);
  return factor * mom.covariance.diagonal().cwiseSqrt();
}

KdeDensity push_forward_density(const Eigen::MatrixXd& qoi_samples, BandwidthRule rule)
{
  if (qoi_samples.rows() < 2)
    throw InputError("push-forward density needs at least 2 samples");
  if (qoi_samples.cols() < 1)
    throw InputError("push-forward density needs at least one output");
  if (!qoi_samples.allFinite())
    throw InputError("push-forward samples must be finite");
  KdeDensity kde;
  kde.samples = qoi_samples;
  kde.bandwidth = kde_bandwidth(qoi_samples, rule);
  for (Eigen::Index k = 0; k < kde.bandwidth.size(); ++k)
    if (!(kde.bandwidth(k) > 0.0))
      throw InputError("predicted output dimension " + std::to_string(k) +
                       " has zero variance; its density is degenerate");
  return kde;
}

double WeightedEnsemble::acceptance_rate() const
{
  if (!accepted || accepted->empty())
    return 0.0;
  const auto hits = std::count(accepted->begin(), accepted->end(), true);
  return static_cast<double>(hits) / static_cast<double>(accepted->size());
}

Eigen::MatrixXd WeightedEnsemble::accepted_rows(bool qoi_space) const
{
  if (!accepted)
    throw InputError("ensemble has not been rejection sampled");
  const Eigen::MatrixXd& src = qoi_space ? qoi : points;
  const auto hits = std::count(accepted->begin(), accepted->end(), true);
  Eigen::MatrixXd out(hits, src.cols());
  for (Eigen::Index i = 0, r = 0; i < src.rows(); ++i)
    if ((*accepted)[i])
      out.row(r++) = src.row(i);
  return out;
}

WeightedEnsemble update_weights(const Eigen::MatrixXd& qoi_samples,
                                const DensitySpec& observed,
                                const DensitySpec& predicted)
{
  const Eigen::Index count = qoi_samples.rows();
  if (count < 1)
    throw InputError("update needs at least one sample");
  if (density_dim(observed) != qoi_samples.cols() ||
      density_dim(predicted) != qoi_samples.cols())
    throw InputError("observed/predicted densities do not match the QoI dimension");

  WeightedEnsemble ens;
  ens.qoi = qoi_samples;
  ens.weights.resize(count);
  for (Eigen::Index i = 0; i < count; ++i) {
    const Eigen::VectorXd q = qoi_samples.row(i).transpose();
    const double pred = density_pdf(predicted, q);
    if (!(pred >= kDensityFloor) || !std::isfinite(pred)) {
      ens.weights(i) = 0.0;
      ens.excluded.push_back(i);
      continue;
    }
    ens.weights(i) = density_pdf(observed, q) / pred;
  }

  const std::span<const double> w(ens.weights.data(), static_cast<std::size_t>(count));
  ens.mean_ratio = pairwise_sum(w) / static_cast<double>(count);
  if (count > 1) {
    const double var = (ens.weights.array() - ens.mean_ratio).square().sum() /
                       static_cast<double>(count - 1);
    ens.stderr_ratio = std::sqrt(var / static_cast<double>(count));
  }
  const double gap = std::abs(ens.mean_ratio - 1.0);
  ens.predictability_warning =
    gap > 3.0 * ens.stderr_ratio && gap > kPredictabilitySlack;
  return ens;
}

WeightedEnsemble rejection_sample(WeightedEnsemble ensemble, std::uint64_t seed)
{
  const double cmax = ensemble.max_weight();
  if (!(cmax > 0.0))
    throw InputError("rejection sampling needs at least one positive weight");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<bool> accepted(static_cast<std::size_t>(ensemble.size()));
  for (Eigen::Index i = 0; i < ensemble.size(); ++i)
    accepted[i] = unit(rng) <= ensemble.weights(i) / cmax;
  ensemble.accepted = std::move(accepted);
  return ensemble;
}

namespace {

Eigen::MatrixXd evaluate_rows(const ForwardModel& model, const Eigen::MatrixXd& points,
                              const RowTuple& rows, unsigned workers)
{
  for (Eigen::Index r : rows)
    if (r < 0 || r >= model.field_size())
      throw InputError("design index " + std::to_string(r) + " out of range");
  Eigen::MatrixXd qoi(points.rows(), static_cast<Eigen::Index>(rows.size()));
  parallel_for(static_cast<std::size_t>(points.rows()), workers, [&](std::size_t s) {
    const auto i = static_cast<Eigen::Index>(s);
    const Eigen::VectorXd u = model.evaluate(Eigen::VectorXd(points.row(i).transpose()));
    for (std::size_t k = 0; k < rows.size(); ++k)
      qoi(i, static_cast<Eigen::Index>(k)) = u(rows[k]);
  });
  return qoi;
}

void check_problem(const ForwardModel& model, const DciProblem& problem)
{
  if (problem.rows.empty())
    throw InputError("DCI design has no outputs");
  if (static_cast<Eigen::Index>(problem.rows.size()) > model.parameter_dim())
    throw InputError("DCI design has more outputs than parameters");
  if (density_dim(problem.initial) != model.parameter_dim())
    throw InputError("initial density dimension does not match the model");
  if (density_dim(problem.observed) != static_cast<Eigen::Index>(problem.rows.size()))
    throw InputError("observed density dimension does not match the design");
}

} // namespace

DciSolution dci_solve(const ForwardModel& model, const DciProblem& problem,
                      unsigned workers)
{
  check_problem(model, problem);
  const Eigen::MatrixXd points = sample_density(problem.initial, problem.count, problem.seed);
  const Eigen::MatrixXd qoi = evaluate_rows(model, points, problem.rows, workers);

  DciSolution sol{{}, push_forward_density(qoi, problem.bandwidth)};
  sol.ensemble = update_weights(qoi, problem.observed, sol.predicted);
  sol.ensemble.points = points;
  return sol;
}

Eigen::VectorXd updated_density_at(const ForwardModel& model, const DciProblem& problem,
                                   const KdeDensity& predicted,
                                   const Eigen::MatrixXd& points, unsigned workers)
{
  check_problem(model, problem);
  const Eigen::MatrixXd qoi = evaluate_rows(model, points, problem.rows, workers);
  Eigen::VectorXd density(points.rows());
  parallel_for(static_cast<std::size_t>(points.rows()), workers, [&](std::size_t s) {
    const auto i = static_cast<Eigen::Index>(s);
    const Eigen::VectorXd q = qoi.row(i).transpose();
    const double pred = predicted.pdf(std::span<const double>(q.data(), q.size()));
    if (!(pred >= kDensityFloor)) {
      density(i) = 0.0;
      return;
    }
    const Eigen::VectorXd lambda = points.row(i).transpose();
    density(i) = density_pdf(problem.initial, lambda) *
                 density_pdf(problem.observed, q) / pred;
  });
  return density;
}

Eigen::VectorXd weighted_parameter_density(const WeightedEnsemble& ensemble,
                                           const Eigen::MatrixXd& points,
                                           BandwidthRule rule)
{
  if (ensemble.points.rows() != ensemble.size())
    throw InputError("ensemble has no parameter points");
  const double total = ensemble.weights.sum();
  if (!(total > 0.0))
    throw InputError("ensemble weights are all zero");

  KdeDensity kde;
  kde.samples = ensemble.points;
  kde.weights = ensemble.weights / total;
  // Effective sample size sets the bandwidth factor.
  const double ess = total * total / ensemble.weights.squaredNorm();
  const double m = static_cast<double>(ensemble.points.cols());
  const double factor = rule == BandwidthRule::Silverman
                          ? std::pow(4.0 / ((m + 2.0) * ess), 1.0 / (m + 4.0))
                          : std::pow(ess, -1.0 / (m + 4.0));
  const Eigen::RowVectorXd mean = kde.weights.transpose() * ensemble.points;
  Eigen::VectorXd var(ensemble.points.cols());
  for (Eigen::Index k = 0; k < var.size(); ++k)
    var(k) = kde.weights.dot(
      (ensemble.points.col(k).array() - mean(k)).square().matrix());
  kde.bandwidth = factor * var.cwiseSqrt();

  Eigen::VectorXd out(points.rows());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    const Eigen::VectorXd x = points.row(i).transpose();
    out(i) = kde.pdf(std::span<const double>(x.data(), x.size()));
  }
  return out;
}

std::vector<std::size_t> grid_modes(std::span<const double> values, Eigen::Index nx,
                                    Eigen::Index ny, double fraction)
{
  if (static_cast<Eigen::Index>(values.size()) != nx * ny)
    throw InputError("grid values do not match the grid shape");
  const double peak = *std::max_element(values.begin(), values.end());
  std::vector<std::size_t> modes;
  for (std::size_t i : local_maxima(values, grid_adjacency(nx, ny)))
    if (values[i] >= fraction * peak)
      modes.push_back(i);
  return modes;
}

Moments sample_moments(const Eigen::MatrixXd& rows)
{
  if (rows.rows() < 2)
    throw InputError("moments need at least two rows");
  Moments mom;
  mom.mean = rows.colwise().mean().transpose();
  const Eigen::MatrixXd centered = rows.rowwise() - mom.mean.transpose();
  mom.covariance = centered.transpose() * centered / static_cast<double>(rows.rows() - 1);
  return mom;
}

} // namespace oed
