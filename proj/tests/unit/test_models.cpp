#include "oed/error.hpp"
#include "oed/models/heat.hpp"
#include "oed/models/synthetic.hpp"
#include "oed/sampling.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace oed;

namespace {

Eigen::VectorXd solve(const HeatModel& model, std::initializer_list<double> lambda)
{
  return model.evaluate(std::span<const double>(lambda.begin(), lambda.size()));
}

double value_at(const HeatModel& model, const Eigen::VectorXd& u, double x, double y = 0.0)
{
  const double p[] = {x, y};
  return u(model.nearest_node(std::span<const double>(p, 2)));
}

} // namespace

TEST_CASE("heat configuration validation")
{
  CHECK_NOTHROW(HeatModelConfig::rod().validate());
  CHECK_NOTHROW(HeatModelConfig::plate().validate());
  HeatModelConfig bad = HeatModelConfig::rod();
  bad.elements_per_axis = 1;
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = HeatModelConfig::rod();
  bad.time_steps = 0;
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = HeatModelConfig::rod();
  bad.rho = 0.0;
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = HeatModelConfig::plate(31);
  CHECK_THROWS_AS(bad.validate(), InputError);
  bad = HeatModelConfig::rod();
  bad.dimension = 3;
  CHECK_THROWS_AS(HeatModel{bad}, InputError);
}

TEST_CASE("rod layout")
{
  const HeatModel rod(HeatModelConfig::rod());
  CHECK(rod.parameter_dim() == 2);
  CHECK(rod.field_size() == 41);
  CHECK(rod.coordinates()(40, 0) == doctest::Approx(1.0));
  const double left = 0.49, mid = 0.5, right = 0.51;
  CHECK(rod.region_of(std::span<const double>(&left, 1)) == 0);
  CHECK(rod.region_of(std::span<const double>(&mid, 1)) == 1);
  CHECK(rod.region_of(std::span<const double>(&right, 1)) == 1);
  CHECK(rod.nearest_node(std::span<const double>(&mid, 1)) == 20);
  CHECK_THROWS_AS(solve(rod, {0.1}), InputError);
  CHECK_THROWS_AS(solve(rod, {0.1, -0.1}), InputError);
}

TEST_CASE("zero source gives a zero solution")
{
  for (int dim : {1, 2}) {
    HeatModelConfig cfg = dim == 1 ? HeatModelConfig::rod() : HeatModelConfig::plate(6);
    cfg.source_amplitude = 0.0;
    const HeatModel model(cfg);
    const Eigen::VectorXd lambda = Eigen::VectorXd::Constant(model.parameter_dim(), 0.1);
    for (const auto& u : model.trajectory(std::span<const double>(lambda.data(), lambda.size())))
      CHECK(u.cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("rod temperature profiles")
{
  const HeatModel rod(HeatModelConfig::rod());
  const Eigen::VectorXd cold = solve(rod, {0.01, 0.01});
  const Eigen::VectorXd warm = solve(rod, {0.2, 0.2});

  Eigen::Index peak = 0;
  cold.maxCoeff(&peak);
  CHECK(peak == 20);
  CHECK(cold(0) < 0.05 * cold(20));
  for (Eigen::Index i = 0; i <= 20; ++i)
    CHECK(std::abs(cold(i) - cold(40 - i)) <= 1e-10 * cold(20));

  const double centre_ratio = warm(20) / cold(20);
  const double end_ratio = warm(0) / cold(0);
  CHECK(centre_ratio > 0.4);
  CHECK(centre_ratio < 0.7);
  CHECK(end_ratio > 5.0);

  SUBCASE("unequal conductivities break the symmetry")
  {
    const Eigen::VectorXd skew = solve(rod, {0.01, 0.2});
    CHECK(skew(40) > skew(0));
  }
}

TEST_CASE("across-parameter variation dips near x = 0.3 and x = 0.7")
{
  const HeatModel rod(HeatModelConfig::rod());
  const SampleSet s = draw_samples(ParameterBox::cube(2, 0.01, 0.2), 400, 8);
  Eigen::MatrixXd u(s.size(), rod.field_size());
  for (Eigen::Index i = 0; i < s.size(); ++i)
    u.row(i) = rod.evaluate(Eigen::VectorXd(s.points.row(i).transpose())).transpose();
  const Eigen::RowVectorXd mean = u.colwise().mean();
  const Eigen::RowVectorXd sd =
    ((u.rowwise() - mean).array().square().colwise().sum() / (s.size() - 1.0)).sqrt();

  std::vector<double> minima;
  for (Eigen::Index k = 1; k + 1 < sd.size(); ++k)
    if (sd(k) <= sd(k - 1) && sd(k) <= sd(k + 1))
      minima.push_back(rod.coordinates()(k, 0));
  auto near = [&](double x) {
    return std::any_of(minima.begin(), minima.end(),
                       [&](double m) { return std::abs(m - x) <= 0.1; });
  };
  CHECK(near(0.3));
  CHECK(near(0.7));
}

TEST_CASE("finite element operators")
{
  for (int dim : {1, 2}) {
    const HeatModel model(dim == 1 ? HeatModelConfig::rod() : HeatModelConfig::plate(9));
    const Eigen::Index n = model.parameter_dim();
    std::mt19937_64 rng(dim);
    const Eigen::VectorXd lambda =
      (oed::testing::random_matrix(rng, n, 1).array().abs() * 0.19 + 0.01).matrix();
    const std::span<const double> l(lambda.data(), lambda.size());
    const Eigen::SparseMatrix<double> k = model.stiffness(l);
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(model.field_size());

    CHECK((k * ones).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(Eigen::MatrixXd(k - Eigen::SparseMatrix<double>(k.transpose())).cwiseAbs().maxCoeff() <=
          1e-12);
    // Consistent mass integrates rho c over the unit domain.
    const double total_mass = ones.dot(model.mass() * ones);
    CHECK(total_mass == doctest::Approx(1.5 * 1.5));

    const Eigen::VectorXd v = oed::testing::random_matrix(rng, model.field_size(), 1);
    CHECK(v.dot(k * v) >= 0.0);
    CHECK(v.dot(model.mass() * v) > 0.0);

    // Insulated boundary: total heat grows by exactly dt * sum(b) per step.
    const auto states = model.trajectory(l);
    const double dt = model.config().t_final / model.config().time_steps;
    for (std::size_t step = 0; step < states.size(); ++step) {
      const double heat = ones.dot(model.mass() * states[step]);
      CHECK(heat == doctest::Approx(step * dt * model.load().sum()).epsilon(1e-10));
    }
  }
}

TEST_CASE("load vector integrates the source")
{
  // 1D: integral of 50 exp(-(x - 0.5)^2 / 0.05) over [0, 1].
  const HeatModel rod(HeatModelConfig::rod());
  const double exact = 50.0 * std::sqrt(std::numbers::pi * 0.05) * std::erf(0.5 / std::sqrt(0.05));
  CHECK(rod.load().sum() == doctest::Approx(exact).epsilon(1e-6));
  const HeatModel plate(HeatModelConfig::plate(30));
  CHECK(plate.load().sum() == doctest::Approx(exact * exact / 50.0).epsilon(1e-5));
}

TEST_CASE("plate symmetry")
{
  const HeatModel plate(HeatModelConfig::plate(12));
  REQUIRE(plate.parameter_dim() == 9);
  REQUIRE(plate.field_size() == 169);
  const Eigen::VectorXd lambda = Eigen::VectorXd::Constant(9, 0.07);
  const Eigen::VectorXd u = plate.evaluate(lambda);
  const int side = 13;
  const double scale = u.cwiseAbs().maxCoeff();
  double worst = 0.0;
  for (int iy = 0; iy < side; ++iy)
    for (int ix = 0; ix < side; ++ix) {
      const double v = u(iy * side + ix);
      worst = std::max(worst, std::abs(v - u(ix * side + iy)));
      worst = std::max(worst, std::abs(v - u(iy * side + (side - 1 - ix))));
      worst = std::max(worst, std::abs(v - u((side - 1 - iy) * side + ix)));
    }
  CHECK(worst <= 1e-10 * scale);

  const double corner[] = {0.1, 0.9};
  CHECK(plate.region_of(std::span<const double>(corner, 2)) == 6);
  const double centre[] = {0.5, 0.5};
  CHECK(plate.region_of(std::span<const double>(centre, 2)) == 4);
  CHECK(plate.nearest_node(std::span<const double>(centre, 2)) == 6 * side + 6);
}

namespace {

double centre_convergence_order(const Eigen::VectorXd& lambda)
{
  std::vector<double> centre;
  for (int e : {30, 60, 120}) {
    const HeatModel plate(HeatModelConfig::plate(e));
    centre.push_back(value_at(plate, plate.evaluate(lambda), 0.5, 0.5));
  }
  const double d1 = std::abs(centre[0] - centre[1]);
  const double d2 = std::abs(centre[1] - centre[2]);
  REQUIRE(d2 > 0.0);
  return std::log2(d1 / d2);
}

} // namespace

TEST_CASE("plate self-convergence under mesh refinement")
{
  const double smooth = centre_convergence_order(Eigen::VectorXd::Constant(9, 0.1));
  MESSAGE("observed order, uniform conductivity: " << smooth);
  CHECK(smooth >= 1.5);

  // Cross points where four plates of contrasting conductivity meet carry
  // a corner singularity, so the rate drops below 2 but refinement still helps.
  const Eigen::VectorXd contrast =
    (Eigen::VectorXd(9) << 0.02, 0.05, 0.1, 0.15, 0.2, 0.03, 0.08, 0.12, 0.18).finished();
  const double rough = centre_convergence_order(contrast);
  MESSAGE("observed order, piecewise conductivity: " << rough);
  CHECK(rough > 1.0);
}

TEST_CASE("rod output depends smoothly on the conductivities")
{
  const HeatModel rod(HeatModelConfig::rod());
  const SampleSet s = draw_samples(ParameterBox::cube(2, 0.01, 0.2), 20, 2);
  const FieldJacobianBatch coarse = estimate_field_jacobians(rod, s, 2e-5, 1);
  const FieldJacobianBatch fine = estimate_field_jacobians(rod, s, 1e-5, 1);
  for (std::size_t i = 0; i < coarse.jacobians.size(); ++i) {
    const double scale = fine.jacobians[i].cwiseAbs().maxCoeff();
    CHECK((coarse.jacobians[i] - fine.jacobians[i]).cwiseAbs().maxCoeff() <= 1e-3 * scale);
  }
}

TEST_CASE("synthetic models")
{
  for (const auto& name : synthetic_model_names()) {
    const auto model = make_synthetic_model(name);
    CHECK(model->id() == name);
    CHECK(model->coordinates().rows() == model->field_size());
    const SampleSet s = draw_samples(ParameterBox::cube(model->parameter_dim(), -1.0, 1.0), 10, 4);
    const FieldJacobianBatch b = estimate_field_jacobians(*model, s, 1e-7, 1);
    for (Eigen::Index i = 0; i < s.size(); ++i) {
      const Eigen::VectorXd x = s.points.row(i).transpose();
      const Eigen::MatrixXd exact = model->jacobian(std::span<const double>(x.data(), x.size()));
      CHECK((b.jacobians[i] - exact).cwiseAbs().maxCoeff() <= 1e-5);
    }
  }
  CHECK_THROWS_AS(make_synthetic_model("nope"), InputError);

  const Eigen::Vector2d v = QuadraticModel().evaluate(Eigen::VectorXd(Eigen::Vector2d(3, 2)));
  CHECK(v(0) == 9.0);
  CHECK(v(1) == 6.0);

  const Eigen::MatrixXd r = plane_rotation(4, 1, 3, 0.7);
  CHECK((r.transpose() * r - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK(r(0, 0) == 1.0);
  CHECK_THROWS_AS(plane_rotation(3, 1, 1, 0.2), InputError);

  std::mt19937_64 rng(6);
  const Eigen::MatrixXd a = oed::testing::random_matrix(rng, 3, 3);
  const LinearModel rotated = rotated_linear(a, 0.9);
  const Eigen::VectorXd s0 = Eigen::JacobiSVD<Eigen::MatrixXd>(a).singularValues();
  const Eigen::VectorXd s1 = Eigen::JacobiSVD<Eigen::MatrixXd>(rotated.matrix()).singularValues();
  CHECK((s0 - s1).cwiseAbs().maxCoeff() <= 1e-12);
}
