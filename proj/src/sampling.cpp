#include "oed/sampling.hpp"

#include "oed/error.hpp"
#include "oed/parallel.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

namespace oed {

static_assert(std::endian::native == std::endian::little,
              "batch cache I/O assumes a little-endian host");

ParameterBox ParameterBox::cube(Eigen::Index n, double lo, double hi)
{
  ParameterBox box{Eigen::VectorXd::Constant(n, lo), Eigen::VectorXd::Constant(n, hi)};
  box.validate();
  return box;
}

void ParameterBox::validate() const
{
  if (lower.size() < 1 || lower.size() != upper.size())
    throw InputError("parameter box bounds must be non-empty and of equal length");
  for (Eigen::Index i = 0; i < lower.size(); ++i)
    if (!std::isfinite(lower(i)) || !std::isfinite(upper(i)) || !(lower(i) < upper(i)))
      throw InputError("parameter box needs finite lower < upper on axis " +
                       std::to_string(i));
}

bool ParameterBox::contains(const Eigen::VectorXd& point) const
{
  return point.size() == dim() && (point.array() >= lower.array()).all() &&
         (point.array() <= upper.array()).all();
}

const char* to_string(SamplingScheme scheme)
{
  switch (scheme) {
  case SamplingScheme::UniformRandom: return "uniform-random";
  case SamplingScheme::TensorGrid: return "tensor-grid";
  case SamplingScheme::Custom: return "custom";
  }
  return "unknown";
}

SampleSet draw_samples(const ParameterBox& box, Eigen::Index count,
                       std::uint64_t seed)
{
  box.validate();
  if (count < 1)
    throw InputError("sample count must be at least 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  SampleSet out;
  out.seed = seed;
  out.scheme = SamplingScheme::UniformRandom;
  out.points.resize(count, box.dim());
  for (Eigen::Index i = 0; i < count; ++i)
    for (Eigen::Index j = 0; j < box.dim(); ++j)
      out.points(i, j) = box.lower(j) + (box.upper(j) - box.lower(j)) * unit(rng);
  return out;
}

SampleSet tensor_grid(const ParameterBox& box, Eigen::Index per_axis)
{
  box.validate();
  if (per_axis < 1)
    throw InputError("tensor grid needs at least one node per axis");
  const Eigen::Index n = box.dim();
  Eigen::Index total = 1;
  for (Eigen::Index j = 0; j < n; ++j)
    total *= per_axis;

  SampleSet out;
  out.scheme = SamplingScheme::TensorGrid;
  out.points.resize(total, n);
  for (Eigen::Index i = 0; i < total; ++i) {
    Eigen::Index rest = i;
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::Index k = rest % per_axis;
      rest /= per_axis;
      const double t = per_axis == 1 ? 0.5 : static_cast<double>(k) / (per_axis - 1);
      out.points(i, j) = box.lower(j) + t * (box.upper(j) - box.lower(j));
    }
  }
  return out;
}

namespace {

std::string describe_point(const Eigen::VectorXd& p)
{
  std::ostringstream os;
  os.precision(17);
  os << '(';
  for (Eigen::Index j = 0; j < p.size(); ++j)
    os << (j ? ", " : "") << p(j);
  os << ')';
  return os.str();
}

} // namespace

FieldJacobianBatch estimate_field_jacobians(const ForwardModel& model,
                                            const SampleSet& samples,
                                            double fd_step, unsigned workers)
{
  if (!(fd_step > 0.0))
    throw InputError("finite-difference step must be positive");
  if (samples.size() < 1)
    throw InputError("sample set is empty");
  const Eigen::Index n = model.parameter_dim();
  if (samples.dim() != n)
    throw InputError("samples have " + std::to_string(samples.dim()) +
                     " parameters but the model expects " + std::to_string(n));

  const Eigen::Index count = samples.size();
  const Eigen::Index field = model.field_size();
  FieldJacobianBatch batch;
  batch.model_id = model.id();
  batch.seed = samples.seed;
  batch.fd_step = fd_step;
  batch.points = samples.points;
  batch.outputs.resize(count, field);
  batch.jacobians.resize(count);

  parallel_for(static_cast<std::size_t>(count), workers, [&](std::size_t s) {
    const auto i = static_cast<Eigen::Index>(s);
    Eigen::VectorXd lambda = samples.points.row(i).transpose();
    auto run = [&](const Eigen::VectorXd& at) {
      Eigen::VectorXd u;
      try {
        u = model.evaluate(at);
      } catch (const std::exception& e) {
        throw NumericalError("model '" + model.id() + "' failed at sample " +
                             std::to_string(i) + ", lambda = " + describe_point(at) +
                             ": " + e.what());
      }
      if (u.size() != field || !u.allFinite())
        throw NumericalError("model '" + model.id() +
                             "' returned an invalid field at sample " +
                             std::to_string(i) + ", lambda = " + describe_point(at));
      return u;
    };

    const Eigen::VectorXd base = run(lambda);
    Eigen::MatrixXd jac(field, n);
    for (Eigen::Index j = 0; j < n; ++j) {
      Eigen::VectorXd shifted = lambda;
      shifted(j) += fd_step;
      jac.col(j) = (run(shifted) - base) / fd_step;
    }
    batch.outputs.row(i) = base.transpose();
    batch.jacobians[s] = std::move(jac);
  });
  return batch;
}

JacobianBatch assemble_design_jacobian(const FieldJacobianBatch& batch,
                                       std::span<const Eigen::Index> rows)
{
  const Eigen::Index m = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index n = batch.parameter_dim();
  if (m < 1)
    throw InputError("a design needs at least one output row");
  if (m > n)
    throw InputError("design has " + std::to_string(m) +
                     " outputs but only " + std::to_string(n) + " parameters");
  for (Eigen::Index r : rows)
    if (r < 0 || r >= batch.field_size())
      throw InputError("output index " + std::to_string(r) +
                       " out of range for field of size " +
                       std::to_string(batch.field_size()));

  JacobianBatch out;
  out.matrices.reserve(batch.jacobians.size());
  Eigen::MatrixXd sel(m, n);
  for (std::size_t i = 0; i < batch.jacobians.size(); ++i) {
    for (Eigen::Index k = 0; k < m; ++k)
      sel.row(k) = batch.jacobians[i].row(rows[k]);
    if (!sel.allFinite()) {
      out.excluded.push_back(static_cast<Eigen::Index>(i));
      continue;
    }
    out.matrices.emplace_back(sel);
  }
  return out;
}

namespace {

constexpr char kMagic[8] = {'O', 'E', 'D', 'B', 'A', 'T', 'C', 'H'};
constexpr std::uint32_t kFormatVersion = 1;

template <class T>
void put(std::ostream& out, const T& value)
{
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
T get(std::istream& in)
{
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in)
    throw InputError("batch file is truncated");
  return value;
}

void put_block(std::ostream& out, const double* data, std::size_t count)
{
  out.write(reinterpret_cast<const char*>(data),
            static_cast<std::streamsize>(count * sizeof(double)));
}

void get_block(std::istream& in, double* data, std::size_t count)
{
  in.read(reinterpret_cast<char*>(data),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!in)
    throw InputError("batch file is truncated");
}

} // namespace

void save_batch(const FieldJacobianBatch& batch, const std::filesystem::path& path)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw InputError("cannot open '" + path.string() + "' for writing");

  const auto count = static_cast<std::uint64_t>(batch.sample_count());
  const auto field = static_cast<std::uint64_t>(batch.field_size());
  const auto n = static_cast<std::uint64_t>(batch.parameter_dim());

  out.write(kMagic, sizeof(kMagic));
  put(out, kFormatVersion);
  put(out, static_cast<std::uint32_t>(batch.model_id.size()));
  out.write(batch.model_id.data(), static_cast<std::streamsize>(batch.model_id.size()));
  put(out, batch.seed);
  put(out, batch.fd_step);
  put(out, count);
  put(out, field);
  put(out, n);

  // Row-major so each sample is contiguous.
  for (std::uint64_t i = 0; i < count; ++i) {
    const Eigen::VectorXd p = batch.points.row(i).transpose();
    put_block(out, p.data(), n);
  }
  for (std::uint64_t i = 0; i < count; ++i) {
    const Eigen::VectorXd u = batch.outputs.row(i).transpose();
    put_block(out, u.data(), field);
  }
  for (const auto& jac : batch.jacobians) {
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = jac;
    put_block(out, rm.data(), field * n);
  }
  if (!out)
    throw InputError("failed writing batch file '" + path.string() + "'");
}

FieldJacobianBatch load_batch(const std::filesystem::path& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw InputError("cannot open batch file '" + path.string() + "'");

  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || !std::equal(std::begin(magic), std::end(magic), std::begin(kMagic)))
    throw InputError("'" + path.string() + "' is not a batch file");
  if (get<std::uint32_t>(in) != kFormatVersion)
    throw InputError("unsupported batch file version in '" + path.string() + "'");

  FieldJacobianBatch batch;
  batch.model_id.resize(get<std::uint32_t>(in));
  in.read(batch.model_id.data(), static_cast<std::streamsize>(batch.model_id.size()));
  batch.seed = get<std::uint64_t>(in);
  batch.fd_step = get<double>(in);
  const auto count = static_cast<Eigen::Index>(get<std::uint64_t>(in));
  const auto field = static_cast<Eigen::Index>(get<std::uint64_t>(in));
  const auto n = static_cast<Eigen::Index>(get<std::uint64_t>(in));
  if (count < 1 || field < 1 || n < 1)
    throw InputError("batch file header has empty dimensions");

  batch.points.resize(count, n);
  batch.outputs.resize(count, field);
  Eigen::VectorXd buf;
  for (Eigen::Index i = 0; i < count; ++i) {
    buf.resize(n);
    get_block(in, buf.data(), n);
    batch.points.row(i) = buf.transpose();
  }
  for (Eigen::Index i = 0; i < count; ++i) {
    buf.resize(field);
    get_block(in, buf.data(), field);
    batch.outputs.row(i) = buf.transpose();
  }
  batch.jacobians.resize(count);
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(field, n);
  for (auto& jac : batch.jacobians) {
    get_block(in, rm.data(), static_cast<std::size_t>(field * n));
    jac = rm;
  }
  return batch;
}

void write_samples_csv(std::ostream& out, const SampleSet& samples)
{
  for (Eigen::Index j = 0; j < samples.dim(); ++j)
    out << (j ? "," : "") << "lambda_" << (j + 1);
  out << '\n';
  out.precision(17);
  for (Eigen::Index i = 0; i < samples.size(); ++i) {
    for (Eigen::Index j = 0; j < samples.dim(); ++j)
      out << (j ? "," : "") << samples.points(i, j);
    out << '\n';
  }
}

} // namespace oed
