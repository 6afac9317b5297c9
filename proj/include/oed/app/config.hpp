#pragma once

#include "oed/criteria.hpp"
#include "oed/dci.hpp"
#include "oed/design.hpp"
#include "oed/error.hpp"
#include "oed/models/heat.hpp"
#include "oed/sampling.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace oed::app {

/// Invalid run configuration; the message starts with the offending field path.
class ConfigError : public InputError
{
public:
  ConfigError(const std::string& field, const std::string& message)
    : InputError(field + ": " + message)
    , field_(field)
  {
  }
  const std::string& field() const { return field_; }

private:
  std::string field_;
};

struct ModelSpec
{
  enum class Kind
  {
    Heat,
    Synthetic,
  };
  Kind kind = Kind::Heat;
  HeatModelConfig heat;
  /// Synthetic fixture name, or "linear" with an explicit matrix.
  std::string synthetic;
  Eigen::MatrixXd matrix;
  ParameterBox box;
};

struct SamplingSpec
{
  Eigen::Index count = 1000;
  std::uint64_t seed = 0;
  double fd_step = 1e-5;
  HarmonicMeasure measure = HarmonicMeasure::Volume;
  /// Optional binary batch cache, reused when its header matches the run.
  std::optional<std::filesystem::path> cache;
};

struct DesignSpec
{
  int arity = 2;
  /// Explicit candidate tuples; empty means the full space for the arity.
  std::vector<RowTuple> candidates;
  /// Treat tuples as unordered sets (arity 2 full space only).
  bool symmetric = true;
  Utility utility = Utility::EseInverse;
  int m_target = 2;
};

/// Density description kept unresolved until the model is known.
struct DensityConfig
{
  enum class Kind
  {
    Uniform,
    Gaussian,
  };
  Kind kind = Kind::Uniform;
  /// Gaussian mean; empty means "the model output at the box midpoint"
  /// (observed) or "the box midpoint" (initial).
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  /// Used when covariance is empty: variance * I.
  double variance = 0.15;
};

struct DciSpec
{
  /// Design given as field indices, or as coordinates snapped to the nearest
  /// field point.
  RowTuple rows;
  std::vector<Eigen::VectorXd> points;
  DensityConfig initial;
  DensityConfig observed{DensityConfig::Kind::Gaussian, {}, {}, 0.15};
  Eigen::Index count = 10000;
  std::uint64_t seed = 0;
  BandwidthRule bandwidth = BandwidthRule::Silverman;
  /// Nodes per axis of the updated-density grid (2-parameter models only).
  int grid_per_axis = 60;
};

struct Tolerances
{
  double rank_tol = kDefaultRankTol;
  double greedy_tol = 1e-3;
};

enum class Task
{
  Sweep,
  Oed,
  Greedy,
  Dci,
  Diagnostics,
};

const char* to_string(Task task);
Task parse_task(const std::string& name);

struct RunConfig
{
  std::filesystem::path source;
  std::string text;
  nlohmann::json document;
  std::optional<Task> task;
  ModelSpec model;
  SamplingSpec sampling;
  DesignSpec design;
  DciSpec dci;
  Tolerances tolerances;
  std::filesystem::path output_dir;
};

/// Command-line settings that take precedence over the file.
struct Overrides
{
  std::optional<std::filesystem::path> output_dir;
  std::optional<std::uint64_t> seed;
  bool paper_scale = false;
};

/// Parses and validates a config document. Relative paths resolve against
/// base_dir. --paper-scale moves 2D heat runs to a 100x100 mesh and 1000
/// samples.
RunConfig parse_config(const nlohmann::json& document, const std::filesystem::path& base_dir,
                       const Overrides& overrides = {});

/// Reads, parses and validates a JSON config file.
RunConfig load_config(const std::filesystem::path& path, const Overrides& overrides = {});

std::unique_ptr<ForwardModel> build_model(const ModelSpec& spec);

/// Resolves a density description for a model and design.
DensitySpec resolve_density(const DensityConfig& config, const ForwardModel& model,
                            const ParameterBox& box, const RowTuple& rows, bool observed);

/// Field indices of the DCI design, snapping coordinate points when given.
RowTuple resolve_dci_rows(const DciSpec& spec, const ForwardModel& model);

/// The full design space described by the design block.
DesignSpace build_design_space(const DesignSpec& spec, const ForwardModel& model);

/// Field index whose coordinates are closest to `point`; ties go to the
/// lowest index.
Eigen::Index nearest_field_index(const ForwardModel& model, const Eigen::VectorXd& point);

/// Git blob hash (SHA-1 of "blob <size>\0" + content), lowercase hex.
std::string git_blob_sha1(const std::string& content);

} // namespace oed::app
