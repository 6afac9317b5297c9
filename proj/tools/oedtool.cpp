#include "oed/app/commands.hpp"
#include "oed/app/output.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
  using namespace oed::app;

  CLI::App app{"Optimal experimental design for data-consistent inversion"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  struct Entry
  {
    Task task;
    const char* help;
  };
  const Entry entries[] = {
    {Task::Sweep, "Expected scaling and skewness of every candidate design (criteria.csv)"},
    {Task::Oed, "Exhaustive search: sweep plus ranking and local maxima (oed.json)"},
    {Task::Greedy, "Greedy sensor selection (trace.json, greedy_scores.csv)"},
    {Task::Dci, "Data-consistent update for one design (ensemble.csv, summary.json)"},
    {Task::Diagnostics, "Model and finite-difference sanity checks (diagnostics.json)"},
  };

  CommandOptions options;
  std::string out_dir;
  std::uint64_t seed = 0;
  Task chosen = Task::Sweep;
  for (const auto& e : entries) {
    CLI::App* sub = app.add_subcommand(to_string(e.task), e.help);
    sub->add_option("--config", options.config, "JSON run configuration")->required();
    sub->add_option("--out", out_dir, "Output directory (overrides output_dir)");
    sub->add_option("--seed", seed, "Random seed (overrides sampling.seed and dci.seed)");
    sub->add_option("--workers", options.workers, "Worker threads, 0 = all cores")
      ->check(CLI::NonNegativeNumber);
    sub->add_flag("--paper-scale", options.overrides.paper_scale,
                  "2D plate at 100x100 nodes and 1000 samples");
    sub->callback([&chosen, task = e.task] { chosen = task; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }

  for (CLI::App* sub : app.get_subcommands()) {
    if (sub->count("--out"))
      options.overrides.output_dir = out_dir;
    if (sub->count("--seed"))
      options.overrides.seed = seed;
  }
  return run_command(chosen, options, std::cerr, std::cerr);
}
