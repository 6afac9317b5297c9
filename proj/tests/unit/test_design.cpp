#include "oed/design.hpp"
#include "oed/error.hpp"
#include "oed/models/synthetic.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace oed;

namespace {

FieldJacobianBatch linear_batch(const Eigen::MatrixXd& a, Eigen::Index count = 8)
{
  const LinearModel model(a);
  return estimate_field_jacobians(
    model, draw_samples(ParameterBox::cube(a.cols(), 0.0, 1.0), count, 1), 1e-6, 1);
}

} // namespace

TEST_CASE("design spaces")
{
  const DesignSpace scalar = DesignSpace::scalar(4);
  CHECK(scalar.size() == 4);
  CHECK(scalar.arity() == 1);

  const DesignSpace pairs = DesignSpace::unordered_pairs(41);
  CHECK(pairs.size() == 820);
  CHECK(pairs.arity() == 2);
  CHECK(pairs.candidates.front() == RowTuple{1, 0});
  CHECK(pairs.find({3, 7}) == pairs.find({7, 3}));
  CHECK(pairs.candidates[*pairs.find({3, 7})] == RowTuple{7, 3});
  CHECK_FALSE(pairs.find({2, 2}).has_value());

  Eigen::MatrixXd coords(3, 1);
  coords << 0.0, 0.5, 1.0;
  const DesignSpace labelled = DesignSpace::unordered_pairs(3, coords);
  CHECK(labelled.label(0) == "(0.5, 0)");
  CHECK(labelled.coordinates_of(2) == std::vector<double>{1.0, 0.5});

  DesignSpace ragged;
  ragged.candidates = {{0}, {0, 1}};
  CHECK_THROWS_AS(ragged.validate(3), InputError);
  CHECK_THROWS_AS(DesignSpace::scalar(4).validate(3), InputError);
  CHECK_THROWS_AS(DesignSpace{}.validate(3), InputError);
}

TEST_CASE("exhaustive search over scalar and pair designs")
{
  Eigen::MatrixXd a(2, 2);
  a << 2, 0, 0, 1;
  const FieldJacobianBatch b = linear_batch(a);

  const ExhaustiveResult single = exhaustive_oed(DesignSpace::scalar(2), b, Utility::EseInverse);
  CHECK(single.argmax() == 0);
  CHECK(single.reports[0].ese_inverse == doctest::Approx(2.0));
  CHECK(single.reports[1].ese_inverse == doctest::Approx(1.0));

  const ExhaustiveResult pair =
    exhaustive_oed(DesignSpace::unordered_pairs(2), b, Utility::EseInverse);
  REQUIRE(pair.reports.size() == 1);
  CHECK(pair.reports[0].ese_inverse == doctest::Approx(2.0));
  CHECK(pair.reports[0].esk_inverse == doctest::Approx(1.0));

  const ExhaustiveResult esk = exhaustive_oed(DesignSpace::scalar(2), b, Utility::EskInverse);
  CHECK(esk.scores() == std::vector<double>{1.0, 1.0});
  CHECK(esk.ranking == std::vector<std::size_t>{0, 1});
}

TEST_CASE("greedy example")
{
  Eigen::MatrixXd a(3, 2);
  a << 2, 0, 0, 1, 1, 0;
  const FieldJacobianBatch b = linear_batch(a);
  const DesignSpace space = DesignSpace::scalar(3);

  const GreedyTrace t = greedy_oed(space, b, 2);
  REQUIRE(t.rounds.size() == 2);
  CHECK(t.stop_reason == StopReason::ReachedTarget);
  CHECK(t.rounds[0].utility == Utility::EseInverse);
  CHECK(t.rounds[0].chosen == 0);
  CHECK(t.rounds[0].chosen_utility == doctest::Approx(2.0));
  CHECK(t.rounds[1].utility == Utility::EskInverse);
  CHECK(t.rounds[1].chosen == 1);
  CHECK(t.rounds[1].chosen_utility == doctest::Approx(1.0));
  // Row 0 again and the parallel row 2 are both rank deficient with row 0.
  CHECK(t.rounds[1].scores[0] == 0.0);
  CHECK(t.rounds[1].scores[2] == 0.0);
  CHECK(t.design(space) == RowTuple{0, 1});
  CHECK_FALSE(t.rejected.has_value());
  CHECK_FALSE(t.target_exceeds_parameters);

  SUBCASE("one round equals the scalar ESE argmax")
  {
    const GreedyTrace one = greedy_oed(space, b, 1);
    const ExhaustiveResult ex = exhaustive_oed(space, b, Utility::EseInverse);
    REQUIRE(one.rounds.size() == 1);
    CHECK(one.rounds[0].chosen == ex.argmax());
    CHECK(one.stop_reason == StopReason::ReachedTarget);
  }
  SUBCASE("tolerance above every round-2 score stops after round 1")
  {
    const GreedyTrace stop = greedy_oed(space, b, 2, 1.5);
    CHECK(stop.rounds.size() == 1);
    CHECK(stop.stop_reason == StopReason::BelowTolerance);
    REQUIRE(stop.rejected.has_value());
    CHECK(stop.rejected->round == 2);
    CHECK(stop.design(space) == RowTuple{0});
  }
  SUBCASE("more rows than parameters")
  {
    const GreedyTrace over = greedy_oed(space, b, 3);
    CHECK(over.target_exceeds_parameters);
    CHECK(over.stop_reason == StopReason::BelowTolerance);
    CHECK(over.rounds.size() == 2);
    REQUIRE(over.rejected.has_value());
    CHECK(std::all_of(over.rejected->scores.begin(), over.rejected->scores.end(),
                      [](double s) { return s == 0.0; }));
  }
  SUBCASE("bad arguments")
  {
    CHECK_THROWS_AS(greedy_oed(space, b, 0), InputError);
    CHECK_THROWS_AS(greedy_oed(space, b, 2, 0.0), InputError);
    CHECK_THROWS_AS(greedy_oed(DesignSpace::unordered_pairs(3), b, 2), InputError);
  }
}

TEST_CASE("greedy ties go to the lowest index")
{
  const FieldJacobianBatch b = linear_batch(Eigen::MatrixXd::Identity(3, 3));
  const GreedyTrace t = greedy_oed(DesignSpace::scalar(3), b, 3);
  CHECK(t.design(DesignSpace::scalar(3)) == RowTuple{0, 1, 2});
}

TEST_CASE("greedy never beats the exhaustive optimum")
{
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd a = oed::testing::random_matrix(rng, 6, 2);
    const FieldJacobianBatch b = linear_batch(a, 4);
    const GreedyTrace g = greedy_oed(DesignSpace::scalar(6), b, 2, 1e-9);
    if (g.rounds.size() < 2)
      continue;
    const ExhaustiveResult ex =
      exhaustive_oed(DesignSpace::unordered_pairs(6), b, Utility::EskInverse);
    const double best = ex.scores()[ex.argmax()];
    CHECK(best - g.rounds[1].chosen_utility >= -1e-12);
  }
}

TEST_CASE("input rotation does not move the optimum")
{
  std::mt19937_64 rng(15);
  const Eigen::MatrixXd a = oed::testing::random_matrix(rng, 7, 3);
  const FieldJacobianBatch base = linear_batch(a);
  const ExhaustiveResult r0 =
    exhaustive_oed(DesignSpace::unordered_pairs(7), base, Utility::EskInverse);
  for (double theta : {0.3, 1.1, 2.5}) {
    const LinearModel rotated = rotated_linear(a, theta);
    const FieldJacobianBatch b = estimate_field_jacobians(
      rotated, draw_samples(ParameterBox::cube(3, 0.0, 1.0), 8, 1), 1e-6, 1);
    const ExhaustiveResult r = exhaustive_oed(DesignSpace::unordered_pairs(7), b,
                                              Utility::EskInverse);
    CHECK(r.argmax() == r0.argmax());
    for (std::size_t c = 0; c < r.reports.size(); ++c)
      CHECK(r.reports[c].esk_inverse == doctest::Approx(r0.reports[c].esk_inverse).epsilon(1e-6));
  }
}

TEST_CASE("local maxima")
{
  SUBCASE("single peak on a grid")
  {
    std::vector<double> f(25);
    for (int iy = 0; iy < 5; ++iy)
      for (int ix = 0; ix < 5; ++ix)
        f[iy * 5 + ix] = -std::hypot(ix - 3, iy - 1);
    const auto peaks = local_maxima(f, grid_adjacency(5, 5));
    CHECK(peaks == std::vector<std::size_t>{8});
  }
  SUBCASE("two peaks")
  {
    std::vector<double> f{1, 0, 0, 2, 0};
    const auto peaks = local_maxima(f, grid_adjacency(5, 1));
    CHECK(peaks == std::vector<std::size_t>{0, 3});
  }
  SUBCASE("constant field reports everything")
  {
    std::vector<double> f(9, 1.0);
    CHECK(local_maxima(f, grid_adjacency(3, 3)).size() == 9);
  }
  SUBCASE("pair grid skips the diagonal")
  {
    const Adjacency adj = pair_grid_adjacency(4);
    REQUIRE(adj.size() == 6);
    // (1, 0) touches (2, 0) and (2, 1) only.
    std::vector<std::size_t> n = adj[0];
    std::sort(n.begin(), n.end());
    CHECK(n == std::vector<std::size_t>{1, 2});
  }
  CHECK_THROWS_AS(local_maxima(std::vector<double>(3), grid_adjacency(2, 2)), InputError);
}
