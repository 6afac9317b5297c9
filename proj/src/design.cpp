#include "oed/design.hpp"

#include "oed/error.hpp"
#include "oed/parallel.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace oed {

DesignSpace DesignSpace::scalar(Eigen::Index field_size, Eigen::MatrixXd coordinates)
{
  DesignSpace space;
  space.field_coordinates = std::move(coordinates);
  space.candidates.reserve(field_size);
  for (Eigen::Index p = 0; p < field_size; ++p)
    space.candidates.push_back({p});
  return space;
}

DesignSpace DesignSpace::unordered_pairs(Eigen::Index field_size,
                                         Eigen::MatrixXd coordinates)
{
  DesignSpace space;
  space.field_coordinates = std::move(coordinates);
  space.unordered = true;
  for (Eigen::Index p = 1; p < field_size; ++p)
    for (Eigen::Index q = 0; q < p; ++q)
      space.candidates.push_back({p, q});
  return space;
}

Eigen::Index DesignSpace::arity() const
{
  return candidates.empty() ? 0 : static_cast<Eigen::Index>(candidates.front().size());
}

void DesignSpace::validate(Eigen::Index field_size) const
{
  if (candidates.empty())
    throw InputError("design space is empty");
  const std::size_t m = candidates.front().size();
  if (m == 0)
    throw InputError("design tuples must not be empty");
  for (const auto& tuple : candidates) {
    if (tuple.size() != m)
      throw InputError("design tuples must all have the same arity");
    for (Eigen::Index r : tuple)
      if (r < 0 || r >= field_size)
        throw InputError("design index " + std::to_string(r) +
                         " out of range for field of size " +
                         std::to_string(field_size));
  }
}

std::vector<double> DesignSpace::coordinates_of(std::size_t candidate) const
{
  std::vector<double> out;
  if (field_coordinates.size() == 0)
    return out;
  for (Eigen::Index r : candidates.at(candidate))
    for (Eigen::Index d = 0; d < field_coordinates.cols(); ++d)
      out.push_back(field_coordinates(r, d));
  return out;
}

std::string DesignSpace::label(std::size_t candidate) const
{
  std::ostringstream os;
  const auto& tuple = candidates.at(candidate);
  os << '(';
  for (std::size_t k = 0; k < tuple.size(); ++k) {
    if (k)
      os << ", ";
    if (field_coordinates.size() == 0) {
      os << tuple[k];
      continue;
    }
    if (field_coordinates.cols() > 1)
      os << '(';
    for (Eigen::Index d = 0; d < field_coordinates.cols(); ++d)
      os << (d ? ", " : "") << field_coordinates(tuple[k], d);
    if (field_coordinates.cols() > 1)
      os << ')';
  }
  os << ')';
  return os.str();
}

std::optional<std::size_t> DesignSpace::find(RowTuple tuple) const
{
  if (unordered)
    std::sort(tuple.begin(), tuple.end(), std::greater<>());
  const auto it = std::find(candidates.begin(), candidates.end(), tuple);
  if (it == candidates.end())
    return std::nullopt;
  return static_cast<std::size_t>(it - candidates.begin());
}

const char* to_string(Utility utility)
{
  return utility == Utility::EseInverse ? "ese_inverse" : "esk_inverse";
}

double utility_value(const CriterionReport& report, Utility utility)
{
  return utility == Utility::EseInverse ? report.ese_inverse : report.esk_inverse;
}

std::vector<double> ExhaustiveResult::scores() const
{
  std::vector<double> out;
  out.reserve(reports.size());
  for (const auto& r : reports)
    out.push_back(utility_value(r, utility));
  return out;
}

namespace {

// Highest score wins; ties go to the lowest index.
std::size_t best_index(const std::vector<double>& scores)
{
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[best])
      best = i;
  return best;
}

} // namespace

ExhaustiveResult exhaustive_oed(const DesignSpace& space,
                                const FieldJacobianBatch& batch, Utility utility,
                                double rank_tol, unsigned workers)
{
  space.validate(batch.field_size());
  ExhaustiveResult result;
  result.utility = utility;
  result.reports.resize(space.size());
  parallel_for(space.size(), workers, [&](std::size_t c) {
    const JacobianBatch jb = assemble_design_jacobian(batch, space.candidates[c]);
    result.reports[c] = expected_criteria(jb, rank_tol);
    result.reports[c].design_id = space.label(c);
  });

  const std::vector<double> scores = result.scores();
  result.ranking.resize(space.size());
  std::iota(result.ranking.begin(), result.ranking.end(), std::size_t{0});
  std::stable_sort(result.ranking.begin(), result.ranking.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return result;
}

Adjacency pair_grid_adjacency(Eigen::Index field_size)
{
  const auto index_of = [](Eigen::Index p, Eigen::Index q) {
    return static_cast<std::size_t>(p * (p - 1) / 2 + q);
  };
  Adjacency adj(static_cast<std::size_t>(field_size * (field_size - 1) / 2));
  for (Eigen::Index p = 1; p < field_size; ++p)
    for (Eigen::Index q = 0; q < p; ++q) {
      auto& list = adj[index_of(p, q)];
      for (Eigen::Index dp = -1; dp <= 1; ++dp)
        for (Eigen::Index dq = -1; dq <= 1; ++dq) {
          if (dp == 0 && dq == 0)
            continue;
          Eigen::Index a = p + dp;
          Eigen::Index b = q + dq;
          if (a < 0 || b < 0 || a >= field_size || b >= field_size || a == b)
            continue;
          if (a < b)
            std::swap(a, b);
          const std::size_t k = index_of(a, b);
          if (k != index_of(p, q) && std::find(list.begin(), list.end(), k) == list.end())
            list.push_back(k);
        }
    }
  return adj;
}

Adjacency grid_adjacency(Eigen::Index nx, Eigen::Index ny)
{
  Adjacency adj(static_cast<std::size_t>(nx * ny));
  for (Eigen::Index iy = 0; iy < ny; ++iy)
    for (Eigen::Index ix = 0; ix < nx; ++ix)
      for (Eigen::Index dy = -1; dy <= 1; ++dy)
        for (Eigen::Index dx = -1; dx <= 1; ++dx) {
          const Eigen::Index x = ix + dx;
          const Eigen::Index y = iy + dy;
          if ((dx == 0 && dy == 0) || x < 0 || y < 0 || x >= nx || y >= ny)
            continue;
          adj[iy * nx + ix].push_back(static_cast<std::size_t>(y * nx + x));
        }
  return adj;
}

std::vector<std::size_t> local_maxima(std::span<const double> scores,
                                      const Adjacency& neighbors)
{
  if (scores.size() != neighbors.size())
    throw InputError("score field and adjacency sizes differ");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool peak = std::all_of(neighbors[i].begin(), neighbors[i].end(),
                                  [&](std::size_t k) { return scores[i] >= scores[k]; });
    if (peak)
      out.push_back(i);
  }
  return out;
}

const char* to_string(StopReason reason)
{
  return reason == StopReason::ReachedTarget ? "reached_m" : "below_tol";
}

RowTuple GreedyTrace::design(const DesignSpace& scalar_space) const
{
  RowTuple rows;
  for (const auto& r : rounds)
    rows.push_back(scalar_space.candidates.at(r.chosen).front());
  return rows;
}

GreedyTrace greedy_oed(const DesignSpace& scalar_space,
                       const FieldJacobianBatch& batch, int m_target, double tol,
                       double rank_tol, unsigned workers)
{
  if (m_target < 1)
    throw InputError("greedy target dimension must be at least 1");
  if (!(tol > 0.0))
    throw InputError("greedy tolerance must be positive");
  scalar_space.validate(batch.field_size());
  if (scalar_space.arity() != 1)
    throw InputError("greedy search needs a space of one-row designs");

  GreedyTrace trace;
  trace.tol = tol;
  trace.m_target = m_target;
  trace.target_exceeds_parameters = m_target > batch.parameter_dim();

  RowTuple chosen_rows;
  for (int d = 1; d <= m_target; ++d) {
    GreedyRound round;
    round.round = d;
    round.utility = d == 1 ? Utility::EseInverse : Utility::EskInverse;
    round.scores.assign(scalar_space.size(), 0.0);

    // With more rows than parameters every extension is rank deficient.
    if (d <= batch.parameter_dim()) {
      parallel_for(scalar_space.size(), workers, [&](std::size_t c) {
        RowTuple rows = chosen_rows;
        rows.push_back(scalar_space.candidates[c].front());
        const CriterionReport report =
          expected_criteria(assemble_design_jacobian(batch, rows), rank_tol);
        round.scores[c] = utility_value(report, round.utility);
      });
    }
    round.chosen = best_index(round.scores);
    round.chosen_utility = round.scores[round.chosen];

    if (d >= 2 && round.chosen_utility < tol) {
      trace.rejected = std::move(round);
      trace.stop_reason = StopReason::BelowTolerance;
      return trace;
    }
    chosen_rows.push_back(scalar_space.candidates[round.chosen].front());
    trace.rounds.push_back(std::move(round));
  }
  trace.stop_reason = StopReason::ReachedTarget;
  return trace;
}

} // namespace oed
