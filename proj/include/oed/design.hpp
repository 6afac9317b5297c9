#pragma once

#include "oed/criteria.hpp"
#include "oed/sampling.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace oed {

using RowTuple = std::vector<Eigen::Index>;

/// Finite set of candidate designs, each a tuple of field indices selected
/// from a FieldJacobianBatch.
struct DesignSpace
{
  std::vector<RowTuple> candidates;
  /// Coordinates of each field index (one row per index); optional, used for
  /// labels and reports.
  Eigen::MatrixXd field_coordinates;
  /// Tuples are unordered sets stored in canonical (descending) order.
  bool unordered = false;

  /// Every field index as a one-row design.
  static DesignSpace scalar(Eigen::Index field_size,
                            Eigen::MatrixXd coordinates = {});
  /// Every unordered pair {p, q} with p != q, stored as (p, q) with p > q and
  /// enumerated p = 1..P-1, q = 0..p-1. P(P-1)/2 candidates.
  static DesignSpace unordered_pairs(Eigen::Index field_size,
                                     Eigen::MatrixXd coordinates = {});

  std::size_t size() const { return candidates.size(); }
  Eigen::Index arity() const;
  /// Throws unless every tuple has the same arity and indices < field_size.
  void validate(Eigen::Index field_size) const;
  /// Coordinates of each member of a candidate, concatenated.
  std::vector<double> coordinates_of(std::size_t candidate) const;
  std::string label(std::size_t candidate) const;
  /// Candidate index holding this tuple (canonicalized when unordered).
  std::optional<std::size_t> find(RowTuple tuple) const;
};

enum class Utility
{
  EseInverse,
  EskInverse,
};

const char* to_string(Utility utility);
double utility_value(const CriterionReport& report, Utility utility);

struct ExhaustiveResult
{
  Utility utility = Utility::EseInverse;
  /// One report per candidate, in candidate order.
  std::vector<CriterionReport> reports;
  /// Candidate indices by utility, descending; ties keep the lower index first.
  std::vector<std::size_t> ranking;

  std::size_t argmax() const { return ranking.front(); }
  std::vector<double> scores() const;
};

/// Evaluates every candidate by row assembly and ranks them.
ExhaustiveResult exhaustive_oed(const DesignSpace& space,
                                const FieldJacobianBatch& batch, Utility utility,
                                double rank_tol = kDefaultRankTol,
                                unsigned workers = 0);

/// Neighbor lists over candidate indices.
using Adjacency = std::vector<std::vector<std::size_t>>;

/// Neighbors of the unordered-pair space: (p, q) touches the canonical forms
/// of its 8 grid neighbors (p +- 1, q +- 1); diagonal cells are absent.
Adjacency pair_grid_adjacency(Eigen::Index field_size);
/// 8-neighborhood of an nx-by-ny node grid indexed iy * nx + ix.
Adjacency grid_adjacency(Eigen::Index nx, Eigen::Index ny);

/// Candidates whose score is >= every neighbor's score. A constant field
/// reports every candidate.
std::vector<std::size_t> local_maxima(std::span<const double> scores,
                                      const Adjacency& neighbors);

enum class StopReason
{
  ReachedTarget,
  BelowTolerance,
};

const char* to_string(StopReason reason);

struct GreedyRound
{
  int round = 0;
  Utility utility = Utility::EseInverse;
  std::size_t chosen = 0;
  double chosen_utility = 0.0;
  /// Utility of every scalar candidate appended to the previous tuple.
  std::vector<double> scores;
};

struct GreedyTrace
{
  std::vector<GreedyRound> rounds;
  /// Score table of the round that fell entirely below tol, if any. Its
  /// argmax is not part of the design.
  std::optional<GreedyRound> rejected;
  StopReason stop_reason = StopReason::ReachedTarget;
  double tol = 0.0;
  int m_target = 0;
  /// m_target exceeds the parameter dimension.
  bool target_exceeds_parameters = false;

  /// Field indices of the selected design, in selection order.
  RowTuple design(const DesignSpace& scalar_space) const;
};

/// Builds a design one component per round: round 1 maximizes ESE^-1 over the
/// scalar candidates; round d >= 2 maximizes ESK^-1 over the current tuple
/// extended by each scalar candidate (already selected rows stay in the pool
/// and score 0). Stops after m_target rounds, or when no candidate in a round
/// reaches tol. Ties go to the lowest candidate index.
GreedyTrace greedy_oed(const DesignSpace& scalar_space,
                       const FieldJacobianBatch& batch, int m_target,
                       double tol = 1e-3, double rank_tol = kDefaultRankTol,
                       unsigned workers = 0);

} // namespace oed
