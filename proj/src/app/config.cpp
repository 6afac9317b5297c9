#include "oed/app/config.hpp"

#include "oed/models/synthetic.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace oed::app {

using nlohmann::json;

const char* to_string(Task task)
{
  switch (task) {
  case Task::Sweep:
    return "sweep";
  case Task::Oed:
    return "oed";
  case Task::Greedy:
    return "greedy";
  case Task::Dci:
    return "dci";
  case Task::Diagnostics:
    return "diag";
  }
  return "";
}

Task parse_task(const std::string& name)
{
  for (Task t : {Task::Sweep, Task::Oed, Task::Greedy, Task::Dci, Task::Diagnostics})
    if (name == to_string(t))
      return t;
  throw ConfigError("task", "unknown task '" + name + "' (expected sweep, oed, greedy, dci or diag)");
}

namespace {

// Typed access to one JSON object, reporting failures with a dotted path.
class Section
{
public:
  Section(const json& node, std::string path)
    : node_(node)
    , path_(std::move(path))
  {
    if (!node_.is_object())
      throw ConfigError(path_, "must be an object");
  }

  void allow(std::initializer_list<const char*> keys) const
  {
    const std::set<std::string> known(keys.begin(), keys.end());
    for (const auto& [key, value] : node_.items())
      if (!known.count(key))
        throw ConfigError(field(key), "unknown field");
  }

  bool has(const char* key) const { return node_.contains(key) && !node_.at(key).is_null(); }
  const json& at(const char* key) const { return node_.at(key); }
  std::string field(const std::string& key) const
  {
    return path_.empty() ? key : path_ + "." + key;
  }

  double number(const char* key, double fallback) const
  {
    if (!has(key))
      return fallback;
    const json& v = node_.at(key);
    if (!v.is_number())
      throw ConfigError(field(key), "must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x))
      throw ConfigError(field(key), "must be finite");
    return x;
  }

  double positive(const char* key, double fallback) const
  {
    const double x = number(key, fallback);
    if (!(x > 0.0))
      throw ConfigError(field(key), "must be positive");
    return x;
  }

  long long integer(const char* key, long long fallback, long long min_value) const
  {
    if (!has(key))
      return fallback;
    const json& v = node_.at(key);
    if (!v.is_number_integer())
      throw ConfigError(field(key), "must be an integer");
    const long long x = v.get<long long>();
    if (x < min_value)
      throw ConfigError(field(key), "must be at least " + std::to_string(min_value));
    return x;
  }

  std::uint64_t seed(const char* key, std::uint64_t fallback) const
  {
    if (!has(key))
      return fallback;
    const json& v = node_.at(key);
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() &&
                                   v.get<long long>() < 0))
      throw ConfigError(field(key), "must be a non-negative integer");
    return v.get<std::uint64_t>();
  }

  std::string text(const char* key, const std::string& fallback) const
  {
    if (!has(key))
      return fallback;
    const json& v = node_.at(key);
    if (!v.is_string())
      throw ConfigError(field(key), "must be a string");
    return v.get<std::string>();
  }

  bool flag(const char* key, bool fallback) const
  {
    if (!has(key))
      return fallback;
    const json& v = node_.at(key);
    if (!v.is_boolean())
      throw ConfigError(field(key), "must be true or false");
    return v.get<bool>();
  }

  Section child(const char* key) const { return Section(node_.at(key), field(key)); }

private:
  const json& node_;
  std::string path_;
};

Eigen::VectorXd read_vector(const json& v, const std::string& path)
{
  if (!v.is_array() || v.empty())
    throw ConfigError(path, "must be a non-empty array of numbers");
  Eigen::VectorXd out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number())
      throw ConfigError(path + "[" + std::to_string(i) + "]", "must be a number");
    out(static_cast<Eigen::Index>(i)) = v[i].get<double>();
  }
  if (!out.allFinite())
    throw ConfigError(path, "entries must be finite");
  return out;
}

Eigen::MatrixXd read_matrix(const json& v, const std::string& path)
{
  if (!v.is_array() || v.empty())
    throw ConfigError(path, "must be a non-empty array of rows");
  const Eigen::VectorXd first = read_vector(v[0], path + "[0]");
  Eigen::MatrixXd out(static_cast<Eigen::Index>(v.size()), first.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    const Eigen::VectorXd row = read_vector(v[i], path + "[" + std::to_string(i) + "]");
    if (row.size() != first.size())
      throw ConfigError(path, "rows must all have the same length");
    out.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return out;
}

RowTuple read_indices(const json& v, const std::string& path)
{
  if (!v.is_array() || v.empty())
    throw ConfigError(path, "must be a non-empty array of field indices");
  RowTuple out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number_integer() || v[i].get<long long>() < 0)
      throw ConfigError(path + "[" + std::to_string(i) + "]",
                        "must be a non-negative integer");
    out.push_back(v[i].get<Eigen::Index>());
  }
  return out;
}

ParameterBox read_box(const Section& s, Eigen::Index n, double lo, double hi)
{
  ParameterBox box = ParameterBox::cube(n, lo, hi);
  if (!s.has("parameter_bounds"))
    return box;
  const json& v = s.at("parameter_bounds");
  const std::string path = s.field("parameter_bounds");
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    box.lower.setConstant(v[0].get<double>());
    box.upper.setConstant(v[1].get<double>());
  } else if (v.is_array() && v.size() == 2) {
    box.lower = read_vector(v[0], path + "[0]");
    box.upper = read_vector(v[1], path + "[1]");
    if (box.lower.size() != n || box.upper.size() != n)
      throw ConfigError(path, "bounds must have " + std::to_string(n) + " entries");
  } else {
    throw ConfigError(path, "must be [lo, hi] or [[lo...], [hi...]]");
  }
  try {
    box.validate();
  } catch (const InputError& e) {
    throw ConfigError(path, e.what());
  }
  return box;
}

ModelSpec read_model(const Section& s, bool paper_scale, bool& plate)
{
  s.allow({"type", "dimension", "elements_per_axis", "time_steps", "t_final", "rho", "c",
           "source_amplitude", "source_width", "regions_per_axis", "parameter_bounds",
           "name", "matrix"});
  ModelSpec spec;
  const std::string type = s.text("type", "heat");
  plate = false;
  if (type == "heat") {
    spec.kind = ModelSpec::Kind::Heat;
    const long long dim = s.integer("dimension", 1, 1);
    if (dim != 1 && dim != 2)
      throw ConfigError(s.field("dimension"), "must be 1 or 2");
    plate = dim == 2;
    HeatModelConfig cfg = plate ? HeatModelConfig::plate() : HeatModelConfig::rod();
    cfg.elements_per_axis = static_cast<int>(s.integer("elements_per_axis", cfg.elements_per_axis, 2));
    // 100 x 100 nodes; 100 elements would split the 3 x 3 plates mid-cell.
    if (plate && paper_scale)
      cfg.elements_per_axis = 99;
    cfg.time_steps = static_cast<int>(s.integer("time_steps", cfg.time_steps, 1));
    cfg.t_final = s.positive("t_final", cfg.t_final);
    cfg.rho = s.positive("rho", cfg.rho);
    cfg.c = s.positive("c", cfg.c);
    cfg.source_amplitude = s.number("source_amplitude", cfg.source_amplitude);
    cfg.source_width = s.positive("source_width", cfg.source_width);
    cfg.regions_per_axis = static_cast<int>(s.integer("regions_per_axis", cfg.regions_per_axis, 1));
    if (cfg.elements_per_axis % cfg.regions_per_axis != 0)
      throw ConfigError(s.field("elements_per_axis"),
                        "must be a multiple of regions_per_axis (" +
                          std::to_string(cfg.regions_per_axis) + ")");
    spec.heat = cfg;
    Eigen::Index n = cfg.regions_per_axis;
    if (plate)
      n *= cfg.regions_per_axis;
    spec.box = read_box(s, n, 0.01, 0.2);
    if ((spec.box.lower.array() <= 0.0).any())
      throw ConfigError(s.field("parameter_bounds"), "conductivities must be positive");
  } else if (type == "synthetic") {
    spec.kind = ModelSpec::Kind::Synthetic;
    spec.synthetic = s.text("name", "");
    Eigen::Index n = 0;
    if (spec.synthetic == "linear") {
      if (!s.has("matrix"))
        throw ConfigError(s.field("matrix"), "required for the linear synthetic model");
      spec.matrix = read_matrix(s.at("matrix"), s.field("matrix"));
      n = spec.matrix.cols();
    } else {
      const auto names = synthetic_model_names();
      if (std::find(names.begin(), names.end(), spec.synthetic) == names.end())
        throw ConfigError(s.field("name"), "unknown synthetic model '" + spec.synthetic + "'");
      n = make_synthetic_model(spec.synthetic)->parameter_dim();
    }
    spec.box = read_box(s, n, 0.0, 1.0);
  } else {
    throw ConfigError(s.field("type"), "must be \"heat\" or \"synthetic\"");
  }
  return spec;
}

DensityConfig read_density(const Section& s, DensityConfig fallback, bool observed)
{
  s.allow({"type", "mean", "covariance", "variance"});
  DensityConfig d = fallback;
  const std::string type = s.text("type", d.kind == DensityConfig::Kind::Uniform ? "uniform" : "gaussian");
  if (type == "uniform") {
    if (observed)
      throw ConfigError(s.field("type"), "the observed density must be gaussian");
    d.kind = DensityConfig::Kind::Uniform;
    return d;
  }
  if (type != "gaussian")
    throw ConfigError(s.field("type"), "must be \"uniform\" or \"gaussian\"");
  d.kind = DensityConfig::Kind::Gaussian;
  if (s.has("mean")) {
    const json& m = s.at("mean");
    if (m.is_string()) {
      if (m.get<std::string>() != "midpoint")
        throw ConfigError(s.field("mean"), "must be \"midpoint\" or an array");
      d.mean.resize(0);
    } else {
      d.mean = read_vector(m, s.field("mean"));
    }
  }
  d.variance = s.positive("variance", d.variance);
  if (s.has("covariance"))
    d.covariance = read_matrix(s.at("covariance"), s.field("covariance"));
  return d;
}

Utility read_utility(const Section& s)
{
  const std::string u = s.text("utility", "ese_inverse");
  if (u == "ese_inverse")
    return Utility::EseInverse;
  if (u == "esk_inverse")
    return Utility::EskInverse;
  throw ConfigError(s.field("utility"), "must be \"ese_inverse\" or \"esk_inverse\"");
}

} // namespace

RunConfig parse_config(const json& document, const std::filesystem::path& base_dir,
                       const Overrides& overrides)
{
  const Section root(document, "");
  root.allow({"task", "model", "sampling", "design", "dci", "tolerances", "output_dir"});

  RunConfig cfg;
  cfg.document = document;
  if (root.has("task"))
    cfg.task = parse_task(root.text("task", ""));

  if (!root.has("model"))
    throw ConfigError("model", "required");
  bool plate = false;
  cfg.model = read_model(root.child("model"), overrides.paper_scale, plate);
  const Eigen::Index n = cfg.model.box.dim();

  {
    const json empty = json::object();
    const Section s = root.has("sampling") ? root.child("sampling") : Section(empty, "sampling");
    s.allow({"count", "seed", "fd_step", "measure", "cache"});
    const long long default_count = plate ? 100 : 1000;
    cfg.sampling.count = s.integer("count", default_count, 1);
    if (plate && overrides.paper_scale)
      cfg.sampling.count = 1000;
    cfg.sampling.seed = s.seed("seed", 0);
    cfg.sampling.fd_step = s.positive("fd_step", 1e-5);
    const std::string measure = s.text("measure", "volume");
    if (measure == "volume")
      cfg.sampling.measure = HarmonicMeasure::Volume;
    else if (measure == "initial")
      cfg.sampling.measure = HarmonicMeasure::Initial;
    else
      throw ConfigError(s.field("measure"), "must be \"volume\" or \"initial\"");
    if (s.has("cache"))
      cfg.sampling.cache = base_dir / s.text("cache", "");
  }

  {
    const json empty = json::object();
    const Section s = root.has("design") ? root.child("design") : Section(empty, "design");
    s.allow({"arity", "candidates", "symmetric", "utility", "m_target"});
    cfg.design.arity = static_cast<int>(s.integer("arity", std::min<Eigen::Index>(2, n), 1));
    if (cfg.design.arity > n)
      throw ConfigError(s.field("arity"), "exceeds the number of parameters (" +
                                            std::to_string(n) + ")");
    if (cfg.design.arity > 2 && !s.has("candidates"))
      throw ConfigError(s.field("candidates"), "required for arity above 2");
    cfg.design.symmetric = s.flag("symmetric", true);
    cfg.design.utility = read_utility(s);
    cfg.design.m_target = static_cast<int>(s.integer("m_target", std::min<Eigen::Index>(2, n), 1));
    if (s.has("candidates")) {
      const json& list = s.at("candidates");
      const std::string path = s.field("candidates");
      if (!list.is_array() || list.empty())
        throw ConfigError(path, "must be a non-empty array of index tuples");
      for (std::size_t i = 0; i < list.size(); ++i) {
        RowTuple t = read_indices(list[i], path + "[" + std::to_string(i) + "]");
        if (static_cast<int>(t.size()) != cfg.design.arity)
          throw ConfigError(path + "[" + std::to_string(i) + "]",
                            "must have " + std::to_string(cfg.design.arity) + " entries");
        cfg.design.candidates.push_back(std::move(t));
      }
    }
  }

  {
    const json empty = json::object();
    const Section s = root.has("dci") ? root.child("dci") : Section(empty, "dci");
    s.allow({"rows", "points", "initial", "observed", "count", "seed", "bandwidth",
             "grid_per_axis"});
    if (s.has("rows") && s.has("points"))
      throw ConfigError(s.field("rows"), "give either rows or points, not both");
    if (s.has("rows"))
      cfg.dci.rows = read_indices(s.at("rows"), s.field("rows"));
    if (s.has("points")) {
      const json& pts = s.at("points");
      if (!pts.is_array() || pts.empty())
        throw ConfigError(s.field("points"), "must be a non-empty array of coordinates");
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const std::string path = s.field("points") + "[" + std::to_string(i) + "]";
        cfg.dci.points.push_back(pts[i].is_number()
                                   ? Eigen::VectorXd::Constant(1, pts[i].get<double>())
                                   : read_vector(pts[i], path));
      }
    }
    const std::size_t m = std::max(cfg.dci.rows.size(), cfg.dci.points.size());
    if (static_cast<Eigen::Index>(m) > n)
      throw ConfigError(s.field(s.has("rows") ? "rows" : "points"),
                        "more outputs than parameters (" + std::to_string(n) + ")");
    if (s.has("initial"))
      cfg.dci.initial = read_density(s.child("initial"), cfg.dci.initial, false);
    if (s.has("observed"))
      cfg.dci.observed = read_density(s.child("observed"), cfg.dci.observed, true);
    cfg.dci.count = s.integer("count", cfg.dci.count, 2);
    cfg.dci.seed = s.seed("seed", cfg.sampling.seed);
    const std::string bw = s.text("bandwidth", "silverman");
    if (bw == "silverman")
      cfg.dci.bandwidth = BandwidthRule::Silverman;
    else if (bw == "scott")
      cfg.dci.bandwidth = BandwidthRule::Scott;
    else
      throw ConfigError(s.field("bandwidth"), "must be \"silverman\" or \"scott\"");
    cfg.dci.grid_per_axis = static_cast<int>(s.integer("grid_per_axis", cfg.dci.grid_per_axis, 2));

    const DensityConfig& init = cfg.dci.initial;
    if (init.kind == DensityConfig::Kind::Gaussian) {
      if (init.mean.size() && init.mean.size() != n)
        throw ConfigError("dci.initial.mean", "must have " + std::to_string(n) + " entries");
      if (init.covariance.size() && (init.covariance.rows() != n || init.covariance.cols() != n))
        throw ConfigError("dci.initial.covariance",
                          "must be " + std::to_string(n) + " x " + std::to_string(n));
    }
  }

  {
    const json empty = json::object();
    const Section s = root.has("tolerances") ? root.child("tolerances") : Section(empty, "tolerances");
    s.allow({"rank_tol", "greedy_tol"});
    cfg.tolerances.rank_tol = s.positive("rank_tol", kDefaultRankTol);
    cfg.tolerances.greedy_tol = s.positive("greedy_tol", 1e-3);
  }

  cfg.output_dir = base_dir / root.text("output_dir", "out");
  if (overrides.output_dir)
    cfg.output_dir = *overrides.output_dir;
  if (overrides.seed) {
    cfg.sampling.seed = *overrides.seed;
    cfg.dci.seed = *overrides.seed;
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path, const Overrides& overrides)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw ConfigError("config", "cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();

  json document;
  try {
    document = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  RunConfig cfg = parse_config(document, path.parent_path(), overrides);
  cfg.source = path;
  cfg.text = text;
  return cfg;
}

std::unique_ptr<ForwardModel> build_model(const ModelSpec& spec)
{
  if (spec.kind == ModelSpec::Kind::Heat)
    return std::make_unique<HeatModel>(spec.heat);
  if (spec.synthetic == "linear")
    return std::make_unique<LinearModel>(spec.matrix);
  return make_synthetic_model(spec.synthetic);
}

DensitySpec resolve_density(const DensityConfig& config, const ForwardModel& model,
                            const ParameterBox& box, const RowTuple& rows, bool observed)
{
  const Eigen::Index dim = observed ? static_cast<Eigen::Index>(rows.size()) : box.dim();
  const std::string where = observed ? "dci.observed" : "dci.initial";
  if (config.kind == DensityConfig::Kind::Uniform)
    return UniformBoxDensity{box};

  Eigen::VectorXd mean = config.mean;
  if (mean.size() == 0) {
    if (observed) {
      const Eigen::VectorXd field = model.evaluate(box.midpoint());
      mean.resize(dim);
      for (Eigen::Index k = 0; k < dim; ++k)
        mean(k) = field(rows[k]);
    } else {
      mean = box.midpoint();
    }
  }
  if (mean.size() != dim)
    throw ConfigError(where + ".mean", "must have " + std::to_string(dim) + " entries");
  Eigen::MatrixXd cov = config.covariance;
  if (cov.size() == 0)
    cov = config.variance * Eigen::MatrixXd::Identity(dim, dim);
  if (cov.rows() != dim || cov.cols() != dim)
    throw ConfigError(where + ".covariance",
                      "must be " + std::to_string(dim) + " x " + std::to_string(dim));
  try {
    return GaussianDensity(mean, cov);
  } catch (const InputError& e) {
    throw ConfigError(where + ".covariance", e.what());
  }
}

Eigen::Index nearest_field_index(const ForwardModel& model, const Eigen::VectorXd& point)
{
  const Eigen::MatrixXd& coords = model.coordinates();
  if (point.size() != coords.cols())
    throw InputError("point has " + std::to_string(point.size()) + " coordinates, field has " +
                     std::to_string(coords.cols()));
  Eigen::Index best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Eigen::Index p = 0; p < coords.rows(); ++p) {
    const double d = (coords.row(p).transpose() - point).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = p;
    }
  }
  return best;
}

RowTuple resolve_dci_rows(const DciSpec& spec, const ForwardModel& model)
{
  RowTuple rows = spec.rows;
  for (std::size_t i = 0; i < spec.points.size(); ++i) {
    try {
      rows.push_back(nearest_field_index(model, spec.points[i]));
    } catch (const InputError& e) {
      throw ConfigError("dci.points[" + std::to_string(i) + "]", e.what());
    }
  }
  if (rows.empty())
    throw ConfigError("dci.rows", "a DCI run needs rows or points");
  for (std::size_t i = 0; i < rows.size(); ++i)
    if (rows[i] >= model.field_size())
      throw ConfigError("dci.rows[" + std::to_string(i) + "]",
                        "index " + std::to_string(rows[i]) + " out of range for field of size " +
                          std::to_string(model.field_size()));
  return rows;
}

DesignSpace build_design_space(const DesignSpec& spec, const ForwardModel& model)
{
  const Eigen::Index field = model.field_size();
  DesignSpace space;
  if (!spec.candidates.empty()) {
    space.candidates = spec.candidates;
    space.field_coordinates = model.coordinates();
  } else if (spec.arity == 1) {
    space = DesignSpace::scalar(field, model.coordinates());
  } else if (spec.arity == 2 && spec.symmetric) {
    space = DesignSpace::unordered_pairs(field, model.coordinates());
  } else if (spec.arity == 2) {
    space.field_coordinates = model.coordinates();
    for (Eigen::Index p = 0; p < field; ++p)
      for (Eigen::Index q = 0; q < field; ++q)
        if (p != q)
          space.candidates.push_back({p, q});
  } else {
    throw ConfigError("design.candidates", "required for arity above 2");
  }
  try {
    space.validate(field);
  } catch (const InputError& e) {
    throw ConfigError("design.candidates", e.what());
  }
  return space;
}

std::string git_blob_sha1(const std::string& content)
{
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx)
    throw std::runtime_error("cannot allocate a digest context");
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &length) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok)
    throw std::runtime_error("SHA-1 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

} // namespace oed::app
