#pragma once

#include "oed/geometry.hpp"
#include "oed/sampling.hpp"

#include <span>
#include <string>

namespace oed {

/// Measure the Monte Carlo samples were drawn from: uniform on the box, or
/// the initial density.
enum class HarmonicMeasure
{
  Volume,
  Initial,
};

const char* to_string(HarmonicMeasure measure);

/// Expected-criterion utilities of one design.
///
/// The utilities are reported directly as means of reciprocals
/// (ESE^-1 = mean of 1/SE, ESK^-1 = mean of 1/SK); rank-deficient samples
/// contribute 0 and are tallied in infinite_count.
struct CriterionReport
{
  std::string design_id;
  double ese_inverse = 0.0;
  double esk_inverse = 0.0;
  double stderr_ese = 0.0;
  double stderr_esk = 0.0;
  Eigen::Index sample_count = 0;
  Eigen::Index infinite_count = 0;
  Eigen::Index excluded_count = 0;
  HarmonicMeasure measure = HarmonicMeasure::Volume;
};

/// Sum with pairwise splitting; result depends only on the order of values.
double pairwise_sum(std::span<const double> values);

/// (mean of 1/v)^-1 with 1/inf = 0. +inf iff every value is +inf.
/// Throws InputError on an empty list or a value <= 0.
double harmonic_mean(std::span<const double> values);

/// Monte Carlo ESE^-1 and ESK^-1 over the batch, with standard errors
/// (sample standard deviation of the reciprocals over sqrt(N)).
CriterionReport expected_criteria(const JacobianBatch& batch,
                                  double rank_tol = kDefaultRankTol,
                                  HarmonicMeasure measure = HarmonicMeasure::Volume);

} // namespace oed
