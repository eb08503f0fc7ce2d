// SPDX-License-Identifier: Apache-2.0
//
// Campaign orchestration: golden references, random fault-injection
// campaigns, model training and Bayesian mining with replay validation.
// Every command writes one directory; files that depend only on the inputs
// are byte-identical across re-runs, wall-clock numbers go to timing.csv.

#ifndef BFI_CAMPAIGN_HPP
#define BFI_CAMPAIGN_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bfi/bayes/mining.hpp"
#include "bfi/bayes/tbn.hpp"
#include "bfi/bayes/training.hpp"
#include "bfi/fault.hpp"
#include "bfi/scenario.hpp"

namespace bfi {

/// Invalid campaign configuration; the message names the offending field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A golden run produced a hazard: the scenario or the stack is misconfigured.
class GoldenHazardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CampaignConfig {
  std::string label;  // defaults to the model name ("OneRandom", ...)
  std::string scenario = "A1";
  FaultModel model = FaultModel::OneRandom;
  /// Fault type names for fixed models, variable names otherwise. Empty
  /// means the whole catalog or every injectable variable.
  std::vector<std::string> targets;
  std::size_t experiments = 100;
  std::uint64_t seed = 1;
  std::size_t golden_seeds = 50;  // experiment i simulates with seed 1 + i % golden_seeds
  std::size_t workers = 0;        // 0 lets OpenMP decide
  std::filesystem::path out = "campaign";
  bool traces = true;  // write per-experiment traces and injection logs
};

/// JSON document with the CampaignConfig field names. Unknown fields and
/// wrong types are rejected.
[[nodiscard]] CampaignConfig parse_campaign_config(const std::string& text);
[[nodiscard]] CampaignConfig load_campaign_config(const std::filesystem::path& path);
[[nodiscard]] std::string campaign_config_to_json(const CampaignConfig& c);

/// Plan of experiment i: start uniform over the run, target uniform over the
/// configured targets, reproducible from (config.seed, i).
[[nodiscard]] FaultPlan make_plan(const CampaignConfig& config, const Scenario& scenario,
                                  std::size_t experiment);

struct Experiment {
  std::size_t index = 0;
  FaultPlan plan;  // empty types for golden runs
  std::uint64_t sim_seed = 1;
  RunMetrics metrics;
  std::size_t scenes_run = 0;
  std::uint64_t digest = 0;
  std::vector<InjectionRecord> injections;
};

/// Module of the first target ("perception", "planning", "control"), or "" for golden.
[[nodiscard]] std::string target_module(const FaultPlan& plan);

struct GoldenSummary {
  std::string scenario;
  std::vector<Experiment> runs;  // by seed
  std::size_t hazards = 0;
  double median_min_cipo = 0.0;
  double median_max_lk = 0.0;
  double min_min_cipo = 0.0;  // golden extremes used by MVF
  double max_max_lk = 0.0;
};

/// Golden runs with seeds first_seed .. first_seed + runs - 1. With `out` it
/// writes golden.csv, summary.csv and traces/ there.
GoldenSummary run_golden(const Scenario& scenario, std::size_t runs, std::uint64_t first_seed,
                         std::size_t workers, const std::optional<std::filesystem::path>& out);

struct CampaignResult {
  CampaignConfig config;
  GoldenSummary golden;
  std::vector<Experiment> experiments;
  double seconds = 0.0;
};

/// Runs the golden reference and every experiment, then writes the campaign
/// directory: config.json, manifest.csv, experiments.csv, boxplot.csv,
/// summary.csv, traces/, injections/, golden/ and timing.csv.
/// Throws ConfigError for bad targets and GoldenHazardError when a golden
/// reference run is hazardous.
CampaignResult run_campaign(const CampaignConfig& config);

struct TrainOutcome {
  bayes::TemporalBayesNet model;
  bayes::EmResult em;
  std::vector<bayes::ManifestEntry> manifest;
  std::size_t records = 0;
  double seconds = 0.0;
};

/// Builds the training set, fits the network and writes model.tsv,
/// training_manifest.csv and em.csv into `out`.
TrainOutcome run_training(const bayes::TrainingOptions& options, const std::filesystem::path& out);

enum class FrameTag { registration, braking_onset, turn };
std::string to_string(FrameTag t);

struct TaggedFrame {
  std::size_t scene = 0;
  FrameTag tag = FrameTag::registration;
};

/// Event frames of a run: a new object becomes the fused obstacle
/// (registration), the planner starts braking after not braking
/// (braking_onset), the ego is on a curved lane piece (turn).
[[nodiscard]] std::vector<TaggedFrame> frame_tags(const Scenario& scenario, const RunResult& run);

/// Default cluster window for critical scenes around tagged frames.
inline constexpr std::size_t kTagLead = 5;
inline constexpr std::size_t kTagLag = 15;

/// Distinct tags of frames t with t - before <= scene <= t + after, sorted.
[[nodiscard]] std::vector<FrameTag> tags_near(std::size_t scene,
                                              const std::vector<TaggedFrame>& tags,
                                              std::size_t before, std::size_t after);

struct MineOutcome {
  bayes::MiningResult mining;
  std::size_t replay_hazards = 0;
  double manifestation_percent = 0.0;
  double unconverged_percent = 0.0;
  double per_replay_seconds = 0.0;
  double replay_seconds = 0.0;      // replay of every mined pair
  double exhaustive_seconds = 0.0;  // estimate: scenes x catalog x per-replay cost
  double speedup = 0.0;
  std::vector<TaggedFrame> tags;  // of the golden run
};

/// (scenes x catalog x c) / (mining + |F_crit| x c) with c the per-replay cost.
[[nodiscard]] double mining_speedup(std::size_t scenes, std::size_t catalog, double per_replay,
                                    double mining_seconds, std::size_t fcrit);

/// Replays one mined pair: a OneFixed injection at the pair's scene.
[[nodiscard]] RunResult replay_pair(const Scenario& scenario, const bayes::CriticalPair& pair,
                                    std::uint64_t seed);

struct MineOptions {
  std::uint64_t seed = 1;  // golden and replay simulation seed
  bayes::MiningOptions mining;
  std::size_t calibration_runs = 16;  // timed replays when F_crit is empty
  std::size_t workers = 0;
};

/// Mines F_crit on the golden run, replay-validates every pair and writes
/// fcrit.csv, mining_summary.csv, critical_scenes.csv and timing.csv.
/// Throws GoldenHazardError when the golden run is not hazard-free.
MineOutcome run_mining(const bayes::TemporalBayesNet& model, const Scenario& scenario,
                       const MineOptions& options, const std::optional<std::filesystem::path>& out);

}  // namespace bfi

#endif  // BFI_CAMPAIGN_HPP
