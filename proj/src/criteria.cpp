#include "oed/criteria.hpp"

#include "oed/error.hpp"

#include <cmath>
#include <vector>

namespace oed {

const char* to_string(HarmonicMeasure measure)
{
  return measure == HarmonicMeasure::Volume ? "volume" : "initial";
}

double pairwise_sum(std::span<const double> values)
{
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values)
      s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double harmonic_mean(std::span<const double> values)
{
  if (values.empty())
    throw InputError("harmonic mean of an empty list");
  std::vector<double> reciprocals;
  reciprocals.reserve(values.size());
  for (double v : values) {
    if (std::isnan(v) || !(v > 0.0))
      throw InputError("harmonic mean needs strictly positive values");
    reciprocals.push_back(std::isinf(v) ? 0.0 : 1.0 / v);
  }
  const double mean = pairwise_sum(reciprocals) / static_cast<double>(values.size());
  return mean == 0.0 ? kInfinity : 1.0 / mean;
}

namespace {

void mean_and_stderr(const std::vector<double>& values, double& mean, double& err)
{
  const auto count = static_cast<double>(values.size());
  mean = pairwise_sum(values) / count;
  if (values.size() < 2) {
    err = 0.0;
    return;
  }
  std::vector<double> sq(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    sq[i] = (values[i] - mean) * (values[i] - mean);
  err = std::sqrt(pairwise_sum(sq) / (count - 1.0) / count);
}

} // namespace

CriterionReport expected_criteria(const JacobianBatch& batch, double rank_tol,
                                  HarmonicMeasure measure)
{
  if (!(rank_tol > 0.0))
    throw InputError("rank tolerance must be positive");
  CriterionReport report;
  report.measure = measure;
  report.excluded_count = static_cast<Eigen::Index>(batch.excluded.size());
  report.sample_count = static_cast<Eigen::Index>(batch.size());
  if (batch.empty())
    throw InputError("criteria need at least one usable sample");

  std::vector<double> inv_scaling(batch.size());
  std::vector<double> inv_skewness(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const LocalCriterion local = local_skewness_svd(batch.matrices[i], rank_tol);
    if (local.rank_deficient)
      ++report.infinite_count;
    inv_scaling[i] = std::isinf(local.scaling) ? 0.0 : 1.0 / local.scaling;
    inv_skewness[i] = std::isinf(local.skewness) ? 0.0 : 1.0 / local.skewness;
  }
  mean_and_stderr(inv_scaling, report.ese_inverse, report.stderr_ese);
  mean_and_stderr(inv_skewness, report.esk_inverse, report.stderr_esk);
  return report;
}

} // namespace oed
