#include "oed/error.hpp"
#include "oed/geometry.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace oed;
using oed::testing::rel_close;

namespace {

JacobianMatrix mat(std::initializer_list<std::initializer_list<double>> rows)
{
  Eigen::MatrixXd a(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r)
      a(i, j++) = v;
    ++i;
  }
  return JacobianMatrix(a);
}

const JacobianMatrix kShear = mat({{1, 0}, {1, 1}});

} // namespace

TEST_CASE("JacobianMatrix rejects bad input")
{
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(2, 2);
  a(0, 1) = std::nan("");
  CHECK_THROWS_AS(JacobianMatrix{a}, InputError);
  a(0, 1) = INFINITY;
  CHECK_THROWS_AS(JacobianMatrix{a}, InputError);
  CHECK_THROWS_AS(JacobianMatrix{Eigen::MatrixXd::Ones(3, 2)}, InputError);
  CHECK_THROWS_AS(JacobianMatrix{Eigen::MatrixXd(0, 2)}, InputError);
}

TEST_CASE("singular values")
{
  const Eigen::VectorXd id = singular_values(JacobianMatrix(Eigen::MatrixXd::Identity(2, 2)));
  CHECK(id(0) == doctest::Approx(1.0));
  CHECK(id(1) == doctest::Approx(1.0));

  const Eigen::VectorXd diag = singular_values(mat({{2, 0, 0}, {0, 0, 3}}));
  CHECK(diag(0) == doctest::Approx(3.0));
  CHECK(diag(1) == doctest::Approx(2.0));

  // Roots of the characteristic polynomial of J J^T = [[1,1],[1,2]].
  const double tr = 3.0, det = 1.0;
  const double hi = std::sqrt((tr + std::sqrt(tr * tr - 4 * det)) / 2);
  const double lo = std::sqrt((tr - std::sqrt(tr * tr - 4 * det)) / 2);
  const Eigen::VectorXd s = singular_values(kShear);
  CHECK(s(0) == doctest::Approx(hi).epsilon(1e-14));
  CHECK(s(1) == doctest::Approx(lo).epsilon(1e-14));
  CHECK(s(0) == doctest::Approx(1.6180339887));
  CHECK(s(1) == doctest::Approx(0.6180339887));
}

TEST_CASE("parallelepiped and cross-section measures")
{
  CHECK(parallelepiped_measure(JacobianMatrix(Eigen::MatrixXd::Identity(3, 3))) ==
        doctest::Approx(1.0));
  CHECK(parallelepiped_measure(kShear) ==
        doctest::Approx(std::abs(oed::testing::elimination_det(kShear.entries()))));

  std::mt19937_64 rng(11);
  const Eigen::MatrixXd a = oed::testing::random_full_rank(rng, 2, 4);
  CHECK(rel_close(parallelepiped_measure(JacobianMatrix(a)), oed::testing::gram_volume(a),
                  1e-10));

  CHECK(cross_section_measure(JacobianMatrix(Eigen::MatrixXd::Identity(2, 2))) ==
        doctest::Approx(1.0));
  CHECK(cross_section_measure(mat({{2, 0}, {0, 4}})) == doctest::Approx(0.125));
  CHECK(std::isinf(cross_section_measure(mat({{1, 2}, {2, 4}}))));
}

TEST_CASE("local scaling")
{
  CHECK(local_scaling(JacobianMatrix(Eigen::MatrixXd::Identity(2, 2))) == doctest::Approx(1.0));
  CHECK(local_scaling(kShear) == doctest::Approx(1.0));
  CHECK_THROWS_AS(local_scaling(kShear, 0.0), InputError);

  SUBCASE("matches cross-section measure")
  {
    std::mt19937_64 rng(5);
    for (int t = 0; t < 20; ++t) {
      const JacobianMatrix j(oed::testing::random_matrix(rng, 2, 3));
      CHECK(local_scaling(j) == cross_section_measure(j));
    }
  }

  SUBCASE("pre-image volume of a unit square, Monte Carlo")
  {
    const JacobianMatrix j = mat({{2.0, 1.0}, {0.5, 1.5}});
    const double se = local_scaling(j);
    CHECK(se == doctest::Approx(0.4));

    const Eigen::Matrix2d inv = j.entries().inverse();
    Eigen::Vector2d lo = Eigen::Vector2d::Constant(1e9), hi = -lo;
    for (double x : {0.0, 1.0})
      for (double y : {0.0, 1.0}) {
        const Eigen::Vector2d c = inv * Eigen::Vector2d(x, y);
        lo = lo.cwiseMin(c);
        hi = hi.cwiseMax(c);
      }
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> ux(lo(0), hi(0)), uy(lo(1), hi(1));
    const int count = 200000;
    int hits = 0;
    for (int i = 0; i < count; ++i) {
      const Eigen::Vector2d q = j.entries() * Eigen::Vector2d(ux(rng), uy(rng));
      hits += (q.array() >= 0.0).all() && (q.array() <= 1.0).all();
    }
    const double area = (hi - lo).prod();
    const double p = static_cast<double>(hits) / count;
    const double estimate = area * p;
    const double err = area * std::sqrt(p * (1 - p) / count);
    CHECK(std::abs(estimate - se * 1.0) <= 4.0 * err);
  }
}

TEST_CASE("local skewness from singular values")
{
  const LocalCriterion id = local_skewness_svd(JacobianMatrix(Eigen::MatrixXd::Identity(3, 3)));
  CHECK(id.skewness == doctest::Approx(1.0));
  for (Eigen::Index k = 0; k < 3; ++k)
    CHECK(id.skewness_vector(k) == doctest::Approx(1.0));

  // j1 perp = (0.5, -0.5) relative to row 2; ||j1|| / ||j1 perp|| = sqrt 2.
  const LocalCriterion shear = local_skewness_svd(kShear);
  CHECK(shear.skewness == doctest::Approx(std::sqrt(2.0)));
  CHECK(shear.skewness_vector(0) == doctest::Approx(std::sqrt(2.0)));
  CHECK(shear.skewness_vector(1) == doctest::Approx(std::sqrt(2.0)));
  CHECK_FALSE(shear.rank_deficient);

  const LocalCriterion dependent = local_skewness_svd(mat({{1, 0}, {2, 0}}));
  CHECK(std::isinf(dependent.skewness));
  CHECK(std::isinf(dependent.scaling));
  CHECK(dependent.rank_deficient);

  SUBCASE("single row convention")
  {
    const LocalCriterion one = local_skewness_svd(mat({{3, 4}}));
    CHECK(one.skewness == 1.0);
    CHECK(one.scaling == doctest::Approx(0.2));
  }
  SUBCASE("zero row is rank deficient")
  {
    const LocalCriterion zero = local_skewness_svd(mat({{0, 0, 0}, {1, 2, 3}}));
    CHECK(std::isinf(zero.skewness));
    CHECK(std::isinf(zero.skewness_vector(0)));
    CHECK(std::isinf(local_skewness_svd(mat({{0, 0}})).skewness));
  }
}

TEST_CASE("local skewness by projection")
{
  const LocalCriterion id = local_skewness_oracle(JacobianMatrix(Eigen::MatrixXd::Identity(2, 2)));
  CHECK(id.skewness_vector(0) == doctest::Approx(1.0));
  CHECK(id.skewness_vector(1) == doctest::Approx(1.0));

  const LocalCriterion shear = local_skewness_oracle(kShear);
  CHECK(shear.skewness_vector(0) == doctest::Approx(std::sqrt(2.0)));
  CHECK(shear.skewness_vector(1) == doctest::Approx(std::sqrt(2.0)));
  CHECK(shear.scaling == doctest::Approx(1.0));

  std::mt19937_64 rng(3);
  const JacobianMatrix j(oed::testing::random_full_rank(rng, 3, 5));
  const LocalCriterion a = local_skewness_svd(j);
  const LocalCriterion b = local_skewness_oracle(j);
  for (Eigen::Index k = 0; k < 3; ++k)
    CHECK(rel_close(a.skewness_vector(k), b.skewness_vector(k), 1e-8));
}

TEST_CASE("skewness as incremental scaling")
{
  CHECK(skewness_as_scaling_ratio(JacobianMatrix(Eigen::MatrixXd::Identity(2, 2))) ==
        doctest::Approx(1.0));
  CHECK(skewness_as_scaling_ratio(kShear) == doctest::Approx(std::sqrt(2.0)));
  CHECK(std::isinf(skewness_as_scaling_ratio(mat({{1, 0}, {2, 0}}))));
  CHECK_THROWS_AS(skewness_as_scaling_ratio(mat({{1, 0}})), InputError);

  std::mt19937_64 rng(8);
  const JacobianMatrix j(oed::testing::random_full_rank(rng, 4, 6));
  CHECK(rel_close(skewness_as_scaling_ratio(j), local_skewness_svd(j).skewness, 1e-8));
}

TEST_CASE("geometry properties over random matrices")
{
  std::mt19937_64 rng(20240611);
  std::uniform_int_distribution<int> pick_m(1, 4);
  int checked = 0;
  for (int t = 0; t < 1000; ++t) {
    const int m = pick_m(rng);
    std::uniform_int_distribution<int> pick_n(m, 8);
    const int n = pick_n(rng);
    const Eigen::MatrixXd a = oed::testing::random_full_rank(rng, m, n);
    const JacobianMatrix j(a);

    const double volume = parallelepiped_measure(j);
    REQUIRE(rel_close(volume, oed::testing::gram_volume(a), 1e-10));
    const double se = local_scaling(j);
    REQUIRE(std::abs(se * volume - 1.0) <= 1e-10);

    const LocalCriterion svd = local_skewness_svd(j);
    const LocalCriterion proj = local_skewness_oracle(j);
    REQUIRE(rel_close(svd.skewness, proj.skewness, 1e-8));
    for (Eigen::Index k = 0; k < m; ++k)
      REQUIRE(svd.skewness_vector(k) >= 1.0 - 1e-10);
    if (m >= 2)
      REQUIRE(rel_close(svd.skewness, skewness_as_scaling_ratio(j), 1e-8));

    // Positive row scaling leaves skewness alone.
    const Eigen::VectorXd d = (oed::testing::random_matrix(rng, m, 1).array().abs() + 0.1).matrix();
    const LocalCriterion scaled = local_skewness_svd(JacobianMatrix(d.asDiagonal() * a));
    REQUIRE(rel_close(scaled.skewness, svd.skewness, 1e-8));

    // Orthogonal input rotation leaves everything alone.
    const JacobianMatrix rotated(a * oed::testing::random_orthogonal(rng, n));
    const LocalCriterion rot = local_skewness_svd(rotated);
    REQUIRE(rel_close(rot.skewness, svd.skewness, 1e-8));
    REQUIRE(rel_close(rot.scaling, svd.scaling, 1e-8));
    const Eigen::VectorXd s0 = singular_values(j), s1 = singular_values(rotated);
    for (Eigen::Index k = 0; k < m; ++k)
      REQUIRE(rel_close(s0(k), s1(k), 1e-8));
    ++checked;
  }
  CHECK(checked == 1000);
}

TEST_CASE("orthogonal rows reach the lower bound")
{
  std::mt19937_64 rng(77);
  for (int t = 0; t < 50; ++t) {
    const Eigen::MatrixXd q = oed::testing::random_orthogonal(rng, 5);
    Eigen::MatrixXd a = q.topRows(3);
    a.row(0) *= 3.0;
    a.row(2) *= 0.25;
    const LocalCriterion c = local_skewness_svd(JacobianMatrix(a));
    for (Eigen::Index k = 0; k < 3; ++k)
      CHECK(std::abs(c.skewness_vector(k) - 1.0) <= 1e-10);

    // Tilt row 1 toward row 0: only rows 0 and 1 lose orthogonality.
    a.row(1) += 0.5 * q.row(0);
    const LocalCriterion tilted = local_skewness_svd(JacobianMatrix(a));
    CHECK(tilted.skewness_vector(0) > 1.0 + 1e-6);
    CHECK(tilted.skewness_vector(1) > 1.0 + 1e-6);
    CHECK(std::abs(tilted.skewness_vector(2) - 1.0) <= 1e-10);
  }
}

TEST_CASE("rank deficiency flags scaling and skewness together")
{
  std::mt19937_64 rng(99);
  for (int t = 0; t < 200; ++t) {
    Eigen::MatrixXd a = oed::testing::random_matrix(rng, 3, 4);
    a.row(2) = 0.3 * a.row(0) - 1.7 * a.row(1);
    const JacobianMatrix j(a);
    const LocalCriterion c = local_skewness_svd(j);
    const Eigen::VectorXd s = singular_values(j);
    REQUIRE(s(2) <= kDefaultRankTol * s(0));
    CHECK(c.rank_deficient);
    CHECK(std::isinf(local_scaling(j)));
    CHECK(std::isinf(c.skewness));
    CHECK(std::isinf(c.scaling));
  }
}
