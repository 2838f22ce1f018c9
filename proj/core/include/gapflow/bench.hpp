// Monte Carlo benchmark harness: experiment specs, closed-loop trials,
// deterministic record serialization, and aggregation.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gapflow/hierarchy.hpp"

namespace gapflow {

// Cross-product experiment description. Loaded from JSON by the CLI; every
// field has a usable default so minimal specs stay small.
struct ExperimentSpec {
  std::string name = "experiment";
  std::vector<std::string> worlds = {"dense"};
  WorldGenParams world_params;
  std::vector<std::string> models = {"holonomic_1st"};
  std::vector<double> fovs_deg = {360.0};
  std::vector<FeatureFlags> flag_sets = {FeatureFlags{}};
  std::vector<double> r_min_factors = {1.5};  // multiples of r_ins
  int seeds = 10;
  std::uint64_t seed_base = 1000;
  double t_max = 120.0;
  double v_max = 0.5;
  double d_max = 5.0;
  double range_noise = 0.0;
};

// One fully resolved trial in the cross product.
struct TrialConfig {
  std::string world_kind;
  std::string model;
  double fov_deg = 360.0;
  FeatureFlags flags;
  double r_min_factor = 1.5;
  std::uint64_t seed = 0;
  WorldGenParams world_params;
  double t_max = 120.0;
  double v_max = 0.5;
  double d_max = 5.0;
  double range_noise = 0.0;
};

struct TrialRecord {
  // Identity (deterministic, compared byte-for-byte across reruns).
  std::string world_kind;
  std::string model;
  double fov_deg = 0.0;
  FeatureFlags flags;
  double r_min_factor = 0.0;
  std::uint64_t seed = 0;
  // Results (deterministic).
  std::string outcome;  // success | collision | abort | timeout
  double path_length = 0.0;
  double sim_time = 0.0;
  int ticks = 0;
  int replans = 0;
  double max_psi = 0.0;
  // Wall-clock measurements (not deterministic; kept out of records.csv).
  double tick_ms_mean = 0.0;
  double tick_ms_median = 0.0;
  double traj_ms_median = 0.0;
  int traj_count = 0;
  double wall_ms = 0.0;
};

RobotKind parse_model(const std::string& name);  // throws std::invalid_argument

// Planner configuration for one trial.
NavConfig make_nav_config(const TrialConfig& tc);

// Runs one closed-loop trial: deterministic world from (kind, seed), 20 Hz
// planning over 100 Hz dynamics, bumper collision ends the trial.
TrialRecord run_trial(const TrialConfig& tc);

std::vector<TrialConfig> expand_spec(const ExperimentSpec& spec);

// Runs all trials with `jobs` worker threads. Results are ordered by trial
// index, so output is identical regardless of parallelism.
std::vector<TrialRecord> run_experiment(const ExperimentSpec& spec, int jobs,
                                        bool progress = false);

// Deterministic results CSV (identity + results columns only).
std::string records_csv(const std::vector<TrialRecord>& records);
// Wall-clock CSV (identity + timing columns); excluded from determinism
// comparisons by construction.
std::string timing_csv(const std::vector<TrialRecord>& records);

struct SummaryRow {
  std::string world_kind;
  std::string model;
  double fov_deg = 0.0;
  FeatureFlags flags;
  double r_min_factor = 0.0;
  int trials = 0;
  int success = 0, collision = 0, abort_ = 0, timeout = 0;
  double mean_path_length = 0.0;  // over successes
  double mean_sim_time = 0.0;     // over successes
  double tick_ms_mean = 0.0;
  double traj_ms_median = 0.0;    // median of per-trial medians
};

std::vector<SummaryRow> summarize(const std::vector<TrialRecord>& records);
std::string summary_table(const std::vector<SummaryRow>& rows);
std::string summary_csv(const std::vector<SummaryRow>& rows);

// Long-form x/y series for plotting: one file sweeps FoV, the other r_min.
std::string plot_fov_csv(const std::vector<SummaryRow>& rows);
std::string plot_rmin_csv(const std::vector<SummaryRow>& rows);

// JSON spec round-trip. load throws std::invalid_argument on malformed or
// semantically invalid specs (unknown world kind, bad model, empty axes).
ExperimentSpec load_spec_json(const std::string& text);
std::string spec_json(const ExperimentSpec& spec);

// Parses a records.csv produced by records_csv(); optionally folds in the
// matching timing.csv (row order must match). Throws std::invalid_argument.
std::vector<TrialRecord> parse_records_csv(const std::string& csv);
void merge_timing_csv(std::vector<TrialRecord>& records, const std::string& timing);

// 64-bit FNV-1a, used for stable string seeds and output digests.
std::uint64_t fnv1a(const std::string& s);

}  // namespace gapflow
