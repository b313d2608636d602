#pragma once

// End-to-end commands behind the CLI: simulate a scenario, fit a dataset (optionally after
// propensity matching), and run replicate / sensitivity studies. Each writes its outputs and
// a manifest under one directory.

#include <filesystem>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "cdbmm/fit.hpp"
#include "cdbmm/io.hpp"
#include "cdbmm/matching.hpp"
#include "cdbmm/scenarios.hpp"

namespace cdbmm {

inline std::vector<std::filesystem::path> run_simulate(const ScenarioSpec& spec, const std::filesystem::path& dir, const std::string& command) {
  const SyntheticDataset sim = simulate_scenario(spec);
  std::filesystem::create_directories(dir);
  auto files = write_synthetic(sim, dir);
  write_manifest(dir, command,
                 {{"scenario", std::to_string(spec.id)}, {"n", std::to_string(spec.n)}, {"seed", std::to_string(spec.seed)}}, files);
  return files;
}

struct FitRun {
  Dataset data;  // the data actually fitted (matched subset when matching is on)
  std::optional<MatchingReport> matching;
  FitResult fit;
};

/// Load, optionally match, fit, and write every artifact under cfg.output_dir.
inline FitRun run_fit(const RunConfig& cfg, const std::string& command, std::ostream* log = nullptr) {
  cfg.chain.validate();
  cfg.hyper.validate();
  const std::filesystem::path dir = cfg.output_dir;
  std::filesystem::create_directories(dir);
  FitRun run;
  run.data = load_dataset(cfg.input, cfg, log);
  std::vector<std::filesystem::path> files;
  if (cfg.matching.enabled) {
    MatchOptions mo;
    mo.propensity.ridge = cfg.matching.ridge;
    mo.caliper = cfg.matching.caliper;
    run.matching = match_dataset(run.data, mo);
    const auto mf = write_matching(*run.matching, dir);
    files.insert(files.end(), mf.begin(), mf.end());
    run.data = run.matching->matched;
    if (log) *log << "matching kept " << run.data.n() << " units (" << run.matching->match.pairs.size() << " pairs)\n";
  }
  run.fit = fit_model(run.data, cfg.fit_options());
  const auto tf = write_traces(run.fit.draws, run.data.column_names, dir);
  const auto sf = write_fit_summaries(run.fit, run.data, cfg.min_reliable_group_size, dir);
  files.insert(files.end(), tf.begin(), tf.end());
  files.insert(files.end(), sf.begin(), sf.end());
  save_run_config(cfg, dir / "config.json");
  files.push_back(dir / "config.json");
  write_manifest(dir, command, {{"seed", std::to_string(cfg.chain.seed)}, {"config", to_json(cfg).dump()}}, files);
  if (log)
    *log << "fit: " << run.fit.occupied_clusters(0) << " control clusters, " << run.fit.occupied_clusters(1) << " treated clusters, "
         << run.fit.sizes.size() << " groups\n";
  return run;
}

/// One report per σ²_β value (a single report when the list is empty).
inline std::vector<StudyReport> run_study(const ScenarioSpec& spec, const StudyConfig& cfg, const std::vector<double>& sigma2_beta_grid,
                                          const std::filesystem::path& dir, const std::string& command) {
  std::vector<StudyReport> reports =
      sigma2_beta_grid.empty() ? std::vector<StudyReport>{replicate_study(spec, cfg)} : sensitivity_grid(spec, sigma2_beta_grid, cfg);
  std::filesystem::create_directories(dir);
  const auto files = write_study(reports, dir);
  std::string grid;
  for (double v : sigma2_beta_grid) grid += (grid.empty() ? "" : ",") + format_number(v);
  write_manifest(dir, command,
                 {{"scenario", std::to_string(spec.id)},
                  {"n", std::to_string(spec.n)},
                  {"seed", std::to_string(spec.seed)},
                  {"reps", std::to_string(cfg.n_reps)},
                  {"n_iter", std::to_string(cfg.fit.chain.n_iter)},
                  {"burn_in", std::to_string(cfg.fit.chain.burn_in)},
                  {"thin", std::to_string(cfg.fit.chain.thin)},
                  {"warmup", std::to_string(cfg.fit.chain.warmup)},
                  {"loss", std::string(to_string(cfg.fit.loss))},
                  {"sigma2_beta_grid", grid.empty() ? format_number(cfg.fit.hyper.sigma2_beta) : grid}},
                 files);
  return reports;
}

}  // namespace cdbmm
