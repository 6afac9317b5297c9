#include "oed/models/heat.hpp"

#include "oed/error.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace oed {

HeatModelConfig HeatModelConfig::rod()
{
  return HeatModelConfig{};
}

HeatModelConfig HeatModelConfig::plate(int elements_per_axis)
{
  HeatModelConfig cfg;
  cfg.dimension = 2;
  cfg.elements_per_axis = elements_per_axis;
  cfg.time_steps = 40;
  cfg.t_final = 2.0;
  cfg.regions_per_axis = 3;
  return cfg;
}

void HeatModelConfig::validate() const
{
  if (dimension != 1 && dimension != 2)
    throw InputError("heat model dimension must be 1 or 2");
  if (elements_per_axis < 2)
    throw InputError("heat model needs at least 2 elements per axis");
  if (time_steps < 1)
    throw InputError("heat model needs at least 1 time step");
  if (!(t_final > 0.0))
    throw InputError("t_final must be positive");
  if (!(rho > 0.0) || !(c > 0.0))
    throw InputError("rho and c must be positive");
  if (!(source_width > 0.0))
    throw InputError("source width must be positive");
  if (regions_per_axis < 1 || elements_per_axis % regions_per_axis != 0)
    throw InputError("elements per axis (" + std::to_string(elements_per_axis) +
                     ") must be a multiple of regions per axis (" +
                     std::to_string(regions_per_axis) + ")");
}

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

constexpr std::array<double, 3> kGaussPoints = {-0.7745966692414834, 0.0,
                                                0.7745966692414834};
constexpr std::array<double, 3> kGaussWeights = {5.0 / 9.0, 8.0 / 9.0,
                                                 5.0 / 9.0};

double source_value(const HeatModelConfig& cfg, double x, double y)
{
  double r2 = (0.5 - x) * (0.5 - x);
  if (cfg.dimension == 2)
    r2 += (0.5 - y) * (0.5 - y);
  return cfg.source_amplitude * std::exp(-r2 / cfg.source_width);
}

// Bilinear shape functions on [-1,1]^2, nodes counterclockwise from (-1,-1).
void bilinear(double xi, double eta, std::array<double, 4>& n,
              std::array<std::array<double, 2>, 4>& dn)
{
  n = {(1 - xi) * (1 - eta) / 4, (1 + xi) * (1 - eta) / 4,
       (1 + xi) * (1 + eta) / 4, (1 - xi) * (1 + eta) / 4};
  dn = {{{-(1 - eta) / 4, -(1 - xi) / 4},
         {(1 - eta) / 4, -(1 + xi) / 4},
         {(1 + eta) / 4, (1 + xi) / 4},
         {-(1 + eta) / 4, (1 - xi) / 4}}};
}

} // namespace

HeatModel::HeatModel(HeatModelConfig config)
  : config_(config)
{
  config_.validate();
  const int ne = config_.elements_per_axis;
  const int regions = config_.regions_per_axis;
  const double h = 1.0 / ne;
  const double capacity = config_.rho * config_.c;

  if (config_.dimension == 1) {
    const Eigen::Index nodes = ne + 1;
    coordinates_.resize(nodes, 1);
    for (Eigen::Index i = 0; i < nodes; ++i)
      coordinates_(i, 0) = static_cast<double>(i) / ne;

    Triplets mass;
    std::vector<Triplets> stiff(regions);
    load_ = Eigen::VectorXd::Zero(nodes);
    for (int e = 0; e < ne; ++e) {
      const int r = e * regions / ne;
      const std::array<int, 2> idx = {e, e + 1};
      for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
          mass.emplace_back(idx[a], idx[b], capacity * h / 6.0 * (a == b ? 2.0 : 1.0));
          stiff[r].emplace_back(idx[a], idx[b], (a == b ? 1.0 : -1.0) / h);
        }
      const double mid = (e + 0.5) * h;
      for (std::size_t q = 0; q < kGaussPoints.size(); ++q) {
        const double xi = kGaussPoints[q];
        const double w = kGaussWeights[q] * h / 2.0;
        const double s = source_value(config_, mid + xi * h / 2.0, 0.0);
        load_(idx[0]) += w * s * (1 - xi) / 2.0;
        load_(idx[1]) += w * s * (1 + xi) / 2.0;
      }
    }
    mass_.resize(nodes, nodes);
    mass_.setFromTriplets(mass.begin(), mass.end());
    for (auto& t : stiff) {
      Eigen::SparseMatrix<double> k(nodes, nodes);
      k.setFromTriplets(t.begin(), t.end());
      region_stiffness_.push_back(std::move(k));
    }
    return;
  }

  // Element matrices on the reference square, shared by every element of the
  // uniform mesh.
  Eigen::Matrix4d me = Eigen::Matrix4d::Zero();
  Eigen::Matrix4d ke = Eigen::Matrix4d::Zero();
  std::array<double, 4> n{};
  std::array<std::array<double, 2>, 4> dn{};
  const double jac = h * h / 4.0;
  for (std::size_t qx = 0; qx < 3; ++qx)
    for (std::size_t qy = 0; qy < 3; ++qy) {
      bilinear(kGaussPoints[qx], kGaussPoints[qy], n, dn);
      const double w = kGaussWeights[qx] * kGaussWeights[qy] * jac;
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
          me(a, b) += w * n[a] * n[b];
          ke(a, b) += w * (4.0 / (h * h)) *
                      (dn[a][0] * dn[b][0] + dn[a][1] * dn[b][1]);
        }
    }

  const Eigen::Index side = ne + 1;
  const Eigen::Index nodes = side * side;
  coordinates_.resize(nodes, 2);
  for (Eigen::Index iy = 0; iy < side; ++iy)
    for (Eigen::Index ix = 0; ix < side; ++ix) {
      coordinates_(iy * side + ix, 0) = static_cast<double>(ix) / ne;
      coordinates_(iy * side + ix, 1) = static_cast<double>(iy) / ne;
    }

  Triplets mass;
  std::vector<Triplets> stiff(regions * regions);
  load_ = Eigen::VectorXd::Zero(nodes);
  for (int ey = 0; ey < ne; ++ey)
    for (int ex = 0; ex < ne; ++ex) {
      const int r = (ex * regions / ne) + regions * (ey * regions / ne);
      const std::array<Eigen::Index, 4> idx = {
        ey * side + ex, ey * side + ex + 1, (ey + 1) * side + ex + 1,
        (ey + 1) * side + ex};
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
          mass.emplace_back(idx[a], idx[b], capacity * me(a, b));
          stiff[r].emplace_back(idx[a], idx[b], ke(a, b));
        }
      const double xc = (ex + 0.5) * h;
      const double yc = (ey + 0.5) * h;
      for (std::size_t qx = 0; qx < 3; ++qx)
        for (std::size_t qy = 0; qy < 3; ++qy) {
          bilinear(kGaussPoints[qx], kGaussPoints[qy], n, dn);
          const double w = kGaussWeights[qx] * kGaussWeights[qy] * jac;
          const double s = source_value(config_, xc + kGaussPoints[qx] * h / 2,
                                        yc + kGaussPoints[qy] * h / 2);
          for (int a = 0; a < 4; ++a)
            load_(idx[a]) += w * s * n[a];
        }
    }
  mass_.resize(nodes, nodes);
  mass_.setFromTriplets(mass.begin(), mass.end());
  for (auto& t : stiff) {
    Eigen::SparseMatrix<double> k(nodes, nodes);
    k.setFromTriplets(t.begin(), t.end());
    region_stiffness_.push_back(std::move(k));
  }
}

std::string HeatModel::id() const
{
  std::ostringstream os;
  os << "heat" << config_.dimension << "d-e" << config_.elements_per_axis
     << "-s" << config_.time_steps << "-t" << config_.t_final;
  return os.str();
}

Eigen::SparseMatrix<double> HeatModel::stiffness(std::span<const double> lambda) const
{
  if (static_cast<Eigen::Index>(lambda.size()) != parameter_dim())
    throw InputError("heat model expects " + std::to_string(parameter_dim()) +
                     " conductivities, got " + std::to_string(lambda.size()));
  Eigen::SparseMatrix<double> k = lambda[0] * region_stiffness_[0];
  for (std::size_t r = 1; r < lambda.size(); ++r)
    k += lambda[r] * region_stiffness_[r];
  return k;
}

void HeatModel::march(std::span<const double> lambda,
                      const std::function<void(const Eigen::VectorXd&)>& on_step) const
{
  for (double k : lambda)
    if (!(k > 0.0) || !std::isfinite(k))
      throw InputError("conductivities must be positive and finite");

  const double dt = config_.t_final / config_.time_steps;
  const Eigen::SparseMatrix<double> k = stiffness(lambda);
  const Eigen::SparseMatrix<double> lhs = mass_ + (0.5 * dt) * k;
  const Eigen::SparseMatrix<double> rhs = mass_ - (0.5 * dt) * k;

  // The system matrix is fixed for a given lambda: factor once.
  Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> solver(lhs);
  if (solver.info() != Eigen::Success)
    throw NumericalError("heat system matrix is not positive definite");

  Eigen::VectorXd u = Eigen::VectorXd::Zero(field_size());
  const Eigen::VectorXd forcing = dt * load_;
  on_step(u);
  for (int step = 0; step < config_.time_steps; ++step) {
    u = solver.solve(rhs * u + forcing);
    on_step(u);
  }
}

std::vector<Eigen::VectorXd> HeatModel::trajectory(std::span<const double> lambda) const
{
  std::vector<Eigen::VectorXd> states;
  states.reserve(config_.time_steps + 1);
  march(lambda, [&](const Eigen::VectorXd& u) { states.push_back(u); });
  return states;
}

Eigen::VectorXd HeatModel::evaluate(std::span<const double> lambda) const
{
  Eigen::VectorXd last;
  march(lambda, [&](const Eigen::VectorXd& u) { last = u; });
  return last;
}

int HeatModel::region_of(std::span<const double> point) const
{
  const int regions = config_.regions_per_axis;
  auto axis = [&](double x) {
    const int r = static_cast<int>(std::floor(x * regions + 1e-9));
    return std::clamp(r, 0, regions - 1);
  };
  if (config_.dimension == 1)
    return axis(point[0]);
  return axis(point[0]) + regions * axis(point[1]);
}

Eigen::Index HeatModel::nearest_node(std::span<const double> point) const
{
  const int ne = config_.elements_per_axis;
  auto snap = [&](double x) {
    return static_cast<Eigen::Index>(
      std::clamp<long>(std::lround(x * ne), 0L, static_cast<long>(ne)));
  };
  if (config_.dimension == 1)
    return snap(point[0]);
  return snap(point[1]) * (ne + 1) + snap(point[0]);
}

} // namespace oed
