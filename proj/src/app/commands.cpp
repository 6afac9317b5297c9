#include "oed/app/commands.hpp"

#include "oed/app/output.hpp"
#include "oed/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

namespace oed::app {

using nlohmann::json;

namespace {

std::vector<std::string> coordinate_names(const Eigen::MatrixXd& coords, std::size_t member)
{
  static const char* axes[] = {"x", "y", "z"};
  const std::string suffix = "_" + std::to_string(member);
  std::vector<std::string> out;
  for (Eigen::Index d = 0; d < coords.cols(); ++d)
    out.push_back(coords.cols() <= 3 ? axes[d] + suffix
                                     : "c" + std::to_string(d + 1) + suffix);
  return out;
}

std::string join_rows(const RowTuple& rows)
{
  std::string out;
  for (std::size_t k = 0; k < rows.size(); ++k)
    out += (k ? ";" : "") + std::to_string(rows[k]);
  return out;
}

json row_coordinates(const ForwardModel& model, const RowTuple& rows)
{
  json out = json::array();
  for (Eigen::Index r : rows)
    out.push_back(to_json(Eigen::VectorXd(model.coordinates().row(r).transpose())));
  return out;
}

SampleSet draw_run_samples(const RunConfig& cfg, const ForwardModel& model)
{
  if (cfg.sampling.measure == HarmonicMeasure::Volume)
    return draw_samples(cfg.model.box, cfg.sampling.count, cfg.sampling.seed);
  const DensitySpec init = resolve_density(cfg.dci.initial, model, cfg.model.box, {}, false);
  SampleSet s;
  s.points = sample_density(init, cfg.sampling.count, cfg.sampling.seed);
  s.seed = cfg.sampling.seed;
  s.scheme = SamplingScheme::Custom;
  return s;
}

bool cache_matches(const FieldJacobianBatch& cached, const ForwardModel& model,
                   const SampleSet& samples, double fd_step)
{
  return cached.model_id == model.id() && cached.seed == samples.seed &&
         cached.fd_step == fd_step && cached.points.rows() == samples.points.rows() &&
         cached.points.cols() == samples.points.cols() && cached.points == samples.points &&
         cached.field_size() == model.field_size();
}

void write_criteria_csv(const std::filesystem::path& path, const DesignSpace& space,
                        const ExhaustiveResult& result)
{
  std::vector<std::string> header{"candidate", "rows"};
  for (std::size_t k = 1; k <= static_cast<std::size_t>(space.arity()); ++k)
    for (auto& name : coordinate_names(space.field_coordinates, k))
      header.push_back(name);
  for (const char* col : {"ese_inverse", "esk_inverse", "stderr_ese", "stderr_esk",
                          "sample_count", "infinite_count", "excluded_count", "measure"})
    header.emplace_back(col);

  CsvWriter csv(path, header);
  for (std::size_t c = 0; c < space.size(); ++c) {
    const CriterionReport& r = result.reports[c];
    csv.cell(static_cast<long long>(c)).cell(join_rows(space.candidates[c]));
    for (double x : space.coordinates_of(c))
      csv.cell(x);
    csv.cell(r.ese_inverse)
      .cell(r.esk_inverse)
      .cell(r.stderr_ese)
      .cell(r.stderr_esk)
      .cell(static_cast<long long>(r.sample_count))
      .cell(static_cast<long long>(r.infinite_count))
      .cell(static_cast<long long>(r.excluded_count))
      .cell(std::string(to_string(r.measure)));
    csv.end_row();
  }
  csv.close();
}

json candidate_json(const DesignSpace& space, const ExhaustiveResult& result, std::size_t c)
{
  return json{{"candidate", c},
              {"rows", space.candidates[c]},
              {"coordinates", space.coordinates_of(c)},
              {"utility", result.scores()[c]},
              {"ese_inverse", result.reports[c].ese_inverse},
              {"esk_inverse", result.reports[c].esk_inverse}};
}

// Neighbourhood structure of the full scalar or unordered-pair space, when
// the field sits on a regular grid.
std::optional<Adjacency> design_adjacency(const DesignSpace& space, const DesignSpec& spec,
                                          const ForwardModel& model)
{
  if (!spec.candidates.empty())
    return std::nullopt;
  const Eigen::Index field = model.field_size();
  const Eigen::Index dims = model.coordinates().cols();
  if (space.arity() == 2 && space.unordered && dims == 1)
    return pair_grid_adjacency(field);
  if (space.arity() == 1 && dims == 1)
    return grid_adjacency(field, 1);
  if (space.arity() == 1 && dims == 2) {
    const auto side = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(field))));
    if (side * side == field)
      return grid_adjacency(side, side);
  }
  return std::nullopt;
}

std::filesystem::path prepare_output(const RunConfig& cfg)
{
  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec)
    throw InputError("cannot create output directory '" + cfg.output_dir.string() +
                     "': " + ec.message());
  return cfg.output_dir;
}

TaskResult task_sweep(const RunConfig& cfg, bool rank, unsigned workers, std::ostream& log)
{
  TaskResult res;
  res.output_dir = prepare_output(cfg);
  const auto model = build_model(cfg.model);
  const DesignSpace space = build_design_space(cfg.design, *model);
  const FieldJacobianBatch batch = acquire_batch(cfg, *model, workers, log);

  log << "evaluating " << space.size() << " candidate designs\n";
  ExhaustiveResult result =
    exhaustive_oed(space, batch, cfg.design.utility, cfg.tolerances.rank_tol, workers);
  for (auto& r : result.reports)
    r.measure = cfg.sampling.measure;

  write_criteria_csv(res.output_dir / "criteria.csv", space, result);
  res.files.push_back("criteria.csv");

  const std::vector<double> scores = result.scores();
  res.summary = {{"utility", to_string(cfg.design.utility)},
                 {"candidates", space.size()},
                 {"sample_count", batch.sample_count()},
                 {"best", candidate_json(space, result, result.argmax())}};
  if (!rank)
    return res;

  json top = json::array();
  for (std::size_t i = 0; i < std::min<std::size_t>(10, result.ranking.size()); ++i)
    top.push_back(candidate_json(space, result, result.ranking[i]));
  json oed{{"schema_version", kSchemaVersion},
           {"utility", to_string(cfg.design.utility)},
           {"argmax", candidate_json(space, result, result.argmax())},
           {"top", top},
           {"local_maxima", nullptr}};
  if (const auto adj = design_adjacency(space, cfg.design, *model)) {
    std::vector<std::size_t> peaks;
    for (std::size_t c : local_maxima(scores, *adj))
      if (scores[c] > 0.0)
        peaks.push_back(c);
    std::stable_sort(peaks.begin(), peaks.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    json list = json::array();
    for (std::size_t c : peaks)
      list.push_back(candidate_json(space, result, c));
    oed["local_maxima"] = list;
    res.summary["local_maxima"] = peaks.size();
  }
  write_json(res.output_dir / "oed.json", oed);
  res.files.push_back("oed.json");
  return res;
}

TaskResult task_greedy(const RunConfig& cfg, unsigned workers, std::ostream& log)
{
  TaskResult res;
  res.output_dir = prepare_output(cfg);
  const auto model = build_model(cfg.model);
  const DesignSpace space = DesignSpace::scalar(model->field_size(), model->coordinates());
  const FieldJacobianBatch batch = acquire_batch(cfg, *model, workers, log);

  log << "greedy search for " << cfg.design.m_target << " components over " << space.size()
      << " field points\n";
  const GreedyTrace trace = greedy_oed(space, batch, cfg.design.m_target,
                                       cfg.tolerances.greedy_tol, cfg.tolerances.rank_tol, workers);

  json rounds = json::array();
  for (const auto& r : trace.rounds) {
    const Eigen::Index row = space.candidates[r.chosen].front();
    rounds.push_back({{"round", r.round},
                      {"utility", to_string(r.utility)},
                      {"field_index", row},
                      {"coordinates", space.coordinates_of(r.chosen)},
                      {"value", r.chosen_utility}});
    log << "  round " << r.round << ": field " << row << " " << space.label(r.chosen) << " "
        << to_string(r.utility) << " = " << r.chosen_utility << '\n';
  }
  json rejected = nullptr;
  if (trace.rejected)
    rejected = {{"round", trace.rejected->round},
                {"utility", to_string(trace.rejected->utility)},
                {"best_field_index", space.candidates[trace.rejected->chosen].front()},
                {"best_value", trace.rejected->chosen_utility}};
  json out{{"schema_version", kSchemaVersion},
           {"m_target", trace.m_target},
           {"tol", trace.tol},
           {"stop_reason", to_string(trace.stop_reason)},
           {"target_exceeds_parameters", trace.target_exceeds_parameters},
           {"design", trace.design(space)},
           {"rounds", rounds},
           {"rejected", rejected}};
  write_json(res.output_dir / "trace.json", out);
  res.files.push_back("trace.json");

  std::vector<std::string> header{"field_index"};
  for (auto& name : coordinate_names(model->coordinates(), 1))
    header.push_back(name.substr(0, name.size() - 2));
  std::vector<const GreedyRound*> tables;
  for (const auto& r : trace.rounds) {
    header.push_back("round_" + std::to_string(r.round));
    tables.push_back(&r);
  }
  if (trace.rejected) {
    header.push_back("rejected_round_" + std::to_string(trace.rejected->round));
    tables.push_back(&*trace.rejected);
  }
  CsvWriter csv(res.output_dir / "greedy_scores.csv", header);
  for (std::size_t c = 0; c < space.size(); ++c) {
    csv.cell(static_cast<long long>(c));
    for (double x : space.coordinates_of(c))
      csv.cell(x);
    for (const GreedyRound* t : tables)
      csv.cell(t->scores[c]);
    csv.end_row();
  }
  csv.close();
  res.files.push_back("greedy_scores.csv");

  res.summary = {{"stop_reason", to_string(trace.stop_reason)},
                 {"rounds", trace.rounds.size()},
                 {"design", trace.design(space)},
                 {"sample_count", batch.sample_count()}};
  return res;
}

TaskResult task_dci(const RunConfig& cfg, unsigned workers, std::ostream& log)
{
  TaskResult res;
  res.output_dir = prepare_output(cfg);
  const auto model = build_model(cfg.model);
  const RowTuple rows = resolve_dci_rows(cfg.dci, *model);
  const DciProblem problem{rows,
                           resolve_density(cfg.dci.initial, *model, cfg.model.box, rows, false),
                           resolve_density(cfg.dci.observed, *model, cfg.model.box, rows, true),
                           cfg.dci.count,
                           cfg.dci.seed,
                           cfg.dci.bandwidth};

  log << "solving the update with " << problem.count << " samples, design rows "
      << join_rows(rows) << '\n';
  const DciSolution sol = dci_solve(*model, problem, workers);
  // The acceptance draws use their own stream, derived from the run seed.
  const WeightedEnsemble ens = rejection_sample(sol.ensemble, cfg.dci.seed + 1);
  const Eigen::Index n = ens.points.cols();
  const Eigen::Index m = ens.qoi.cols();

  std::vector<std::string> header;
  for (Eigen::Index k = 1; k <= n; ++k)
    header.push_back("lambda_" + std::to_string(k));
  for (Eigen::Index k = 1; k <= m; ++k)
    header.push_back("q_" + std::to_string(k));
  header.insert(header.end(), {"weight", "accepted"});
  CsvWriter csv(res.output_dir / "ensemble.csv", header);
  for (Eigen::Index i = 0; i < ens.size(); ++i) {
    for (Eigen::Index k = 0; k < n; ++k)
      csv.cell(ens.points(i, k));
    for (Eigen::Index k = 0; k < m; ++k)
      csv.cell(ens.qoi(i, k));
    csv.cell(ens.weights(i)).cell(static_cast<long long>((*ens.accepted)[i]));
    csv.end_row();
  }
  csv.close();
  res.files.push_back("ensemble.csv");

  const Eigen::MatrixXd accepted = ens.accepted_rows();
  json summary{{"schema_version", kSchemaVersion},
               {"design_rows", rows},
               {"design_coordinates", row_coordinates(*model, rows)},
               {"sample_count", ens.size()},
               {"mean_ratio", ens.mean_ratio},
               {"stderr", ens.stderr_ratio},
               {"predictability_warning", ens.predictability_warning},
               {"excluded_count", ens.excluded.size()},
               {"acceptance_rate", ens.acceptance_rate()},
               {"accepted_count", accepted.rows()},
               {"C_estimate", ens.max_weight()},
               {"bandwidth_rule", to_string(cfg.dci.bandwidth)},
               {"predicted_bandwidth", to_json(sol.predicted.bandwidth)},
               {"accepted_mean", nullptr},
               {"accepted_covariance", nullptr},
               {"density_grid", nullptr}};
  if (const auto* g = std::get_if<GaussianDensity>(&problem.observed))
    summary["observed"] = {{"mean", to_json(g->mean())}, {"covariance", to_json(g->covariance())}};
  if (accepted.rows() >= 2) {
    const Moments mom = sample_moments(accepted);
    summary["accepted_mean"] = to_json(mom.mean);
    summary["accepted_covariance"] = to_json(mom.covariance);
  }
  if (ens.predictability_warning)
    log << "warning: mean ratio " << ens.mean_ratio << " is far from 1; the observed density "
        << "may not be predictable by this design\n";

  if (n == 2) {
    const int g = cfg.dci.grid_per_axis;
    const ParameterBox& box = cfg.model.box;
    Eigen::MatrixXd grid(static_cast<Eigen::Index>(g) * g, 2);
    for (int iy = 0; iy < g; ++iy)
      for (int ix = 0; ix < g; ++ix) {
        grid(iy * g + ix, 0) = box.lower(0) + (box.upper(0) - box.lower(0)) * ix / (g - 1);
        grid(iy * g + ix, 1) = box.lower(1) + (box.upper(1) - box.lower(1)) * iy / (g - 1);
      }
    log << "evaluating the updated density on a " << g << " x " << g << " grid\n";
    const Eigen::VectorXd direct = updated_density_at(*model, problem, sol.predicted, grid, workers);
    const Eigen::VectorXd smooth = weighted_parameter_density(sol.ensemble, grid, cfg.dci.bandwidth);
    CsvWriter dcsv(res.output_dir / "density_grid.csv",
                   {"lambda_1", "lambda_2", "updated_density", "weighted_kde"});
    for (Eigen::Index i = 0; i < grid.rows(); ++i)
      dcsv.cell(grid(i, 0)).cell(grid(i, 1)).cell(direct(i)).cell(smooth(i)).end_row();
    dcsv.close();
    res.files.push_back("density_grid.csv");

    json modes = json::array();
    for (std::size_t k : grid_modes(std::span<const double>(direct.data(), direct.size()), g, g))
      modes.push_back({{"lambda", {grid(k, 0), grid(k, 1)}}, {"density", direct(k)}});
    summary["density_grid"] = {{"file", "density_grid.csv"},
                               {"nodes_per_axis", g},
                               {"modes_above_half_max", modes}};
  }
  write_json(res.output_dir / "summary.json", summary);
  res.files.push_back("summary.json");

  res.summary = {{"mean_ratio", ens.mean_ratio},
                 {"stderr", ens.stderr_ratio},
                 {"acceptance_rate", ens.acceptance_rate()},
                 {"predictability_warning", ens.predictability_warning}};
  return res;
}

TaskResult task_diagnostics(const RunConfig& cfg, unsigned workers, std::ostream& log)
{
  TaskResult res;
  res.output_dir = prepare_output(cfg);
  const auto model = build_model(cfg.model);
  const auto t0 = std::chrono::steady_clock::now();
  const FieldJacobianBatch batch = acquire_batch(cfg, *model, workers, log);
  const double seconds =
    std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  {
    SampleSet s;
    s.points = batch.points;
    std::ofstream out(res.output_dir / "samples.csv", std::ios::binary | std::ios::trunc);
    if (!out)
      throw InputError("cannot write samples.csv");
    write_samples_csv(out, s);
  }
  res.files.push_back("samples.csv");

  // Finite-difference consistency: halve the step on a few samples.
  const Eigen::Index probe = std::min<Eigen::Index>(10, batch.sample_count());
  SampleSet few;
  few.points = batch.points.topRows(probe);
  few.seed = batch.seed;
  const FieldJacobianBatch half = estimate_field_jacobians(*model, few, batch.fd_step / 2, workers);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < probe; ++i) {
    const double scale = std::max(batch.jacobians[i].cwiseAbs().maxCoeff(), 1e-300);
    worst = std::max(worst, (batch.jacobians[i] - half.jacobians[i]).cwiseAbs().maxCoeff() / scale);
  }

  // Rank of single-row designs: how often a field point is insensitive.
  Eigen::Index zero_rows = 0;
  for (const auto& j : batch.jacobians)
    for (Eigen::Index p = 0; p < j.rows(); ++p)
      zero_rows += j.row(p).norm() == 0.0;

  json diag{{"schema_version", kSchemaVersion},
            {"model_id", model->id()},
            {"parameter_dim", model->parameter_dim()},
            {"field_size", model->field_size()},
            {"parameter_lower", to_json(cfg.model.box.lower)},
            {"parameter_upper", to_json(cfg.model.box.upper)},
            {"sample_count", batch.sample_count()},
            {"fd_step", batch.fd_step},
            {"batch_seconds", seconds},
            {"output_min", batch.outputs.minCoeff()},
            {"output_max", batch.outputs.maxCoeff()},
            {"fd_half_step_relative_change", worst},
            {"fd_probe_samples", probe},
            {"zero_gradient_rows", zero_rows}};
  write_json(res.output_dir / "diagnostics.json", diag);
  res.files.push_back("diagnostics.json");
  res.summary = diag;
  res.summary.erase("schema_version");
  res.summary.erase("batch_seconds");
  return res;
}

void write_manifest(Task task, const RunConfig& cfg, unsigned workers, TaskResult& res)
{
  json effective{{"seed", cfg.sampling.seed},
                 {"dci_seed", cfg.dci.seed},
                 {"workers", workers == 0 ? default_workers() : workers},
                 {"sample_count", cfg.sampling.count},
                 {"fd_step", cfg.sampling.fd_step},
                 {"measure", to_string(cfg.sampling.measure)},
                 {"rank_tol", cfg.tolerances.rank_tol},
                 {"greedy_tol", cfg.tolerances.greedy_tol}};
  if (cfg.model.kind == ModelSpec::Kind::Heat)
    effective["model"] = {{"type", "heat"},
                          {"dimension", cfg.model.heat.dimension},
                          {"elements_per_axis", cfg.model.heat.elements_per_axis},
                          {"time_steps", cfg.model.heat.time_steps},
                          {"t_final", cfg.model.heat.t_final}};
  else
    effective["model"] = {{"type", "synthetic"}, {"name", cfg.model.synthetic}};

  json manifest{{"schema_version", kSchemaVersion},
                {"tool", "oedtool"},
                {"version", kToolVersion},
                {"command", to_string(task)},
                {"config_path", cfg.source.string()},
                {"config_sha1", git_blob_sha1(cfg.text.empty() ? cfg.document.dump() : cfg.text)},
                {"config", cfg.document},
                {"effective", effective},
                {"outputs", res.files},
                {"summary", res.summary}};
  write_json(res.output_dir / "manifest.json", manifest);
  res.files.push_back("manifest.json");
}

} // namespace

FieldJacobianBatch acquire_batch(const RunConfig& cfg, const ForwardModel& model,
                                 unsigned workers, std::ostream& log)
{
  const SampleSet samples = draw_run_samples(cfg, model);
  if (cfg.sampling.cache && std::filesystem::exists(*cfg.sampling.cache)) {
    FieldJacobianBatch cached = load_batch(*cfg.sampling.cache);
    if (cache_matches(cached, model, samples, cfg.sampling.fd_step)) {
      log << "reusing batch cache " << cfg.sampling.cache->string() << '\n';
      return cached;
    }
    log << "batch cache " << cfg.sampling.cache->string() << " does not match; recomputing\n";
  }
  log << "estimating Jacobians of " << model.id() << " at " << samples.size()
      << " samples (" << samples.size() * (model.parameter_dim() + 1) << " solves)\n";
  FieldJacobianBatch batch =
    estimate_field_jacobians(model, samples, cfg.sampling.fd_step, workers);
  if (cfg.sampling.cache) {
    if (cfg.sampling.cache->has_parent_path())
      std::filesystem::create_directories(cfg.sampling.cache->parent_path());
    save_batch(batch, *cfg.sampling.cache);
  }
  return batch;
}

TaskResult run_task(Task task, const RunConfig& cfg, unsigned workers, std::ostream& log)
{
  if (cfg.task && *cfg.task != task)
    throw ConfigError("task", std::string("config is for '") + to_string(*cfg.task) +
                                "' but the '" + to_string(task) + "' command was run");
  TaskResult res;
  switch (task) {
  case Task::Sweep:
    res = task_sweep(cfg, false, workers, log);
    break;
  case Task::Oed:
    res = task_sweep(cfg, true, workers, log);
    break;
  case Task::Greedy:
    res = task_greedy(cfg, workers, log);
    break;
  case Task::Dci:
    res = task_dci(cfg, workers, log);
    break;
  case Task::Diagnostics:
    res = task_diagnostics(cfg, workers, log);
    break;
  }
  write_manifest(task, cfg, workers, res);
  return res;
}

int run_command(Task task, const CommandOptions& options, std::ostream& log, std::ostream& err)
{
  try {
    const RunConfig cfg = load_config(options.config, options.overrides);
    const TaskResult res = run_task(task, cfg, options.workers, log);
    log << "wrote";
    for (const auto& f : res.files)
      log << ' ' << (res.output_dir / f).string();
    log << '\n';
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const InputError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumericalError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

} // namespace oed::app
