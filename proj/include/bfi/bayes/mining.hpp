// SPDX-License-Identifier: Apache-2.0
//
// Counterfactual safety potential and critical-fault mining over a golden run.

#ifndef BFI_BAYES_MINING_HPP
#define BFI_BAYES_MINING_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bfi/bayes/gibbs.hpp"
#include "bfi/bayes/tbn.hpp"
#include "bfi/fault.hpp"
#include "bfi/scenario.hpp"

namespace bfi::bayes {

/// Lighter than the inference defaults: mining queries have all evidence
/// upstream of the free nodes, so non-centred chains draw independent samples.
inline GibbsOptions mining_gibbs_defaults() {
  GibbsOptions g;
  g.burn_in = 20;
  g.samples = 100;
  g.chains = 2;
  return g;
}

struct Counterfactual {
  double v = 0.0;      // predicted speed at k+1
  double theta = 0.0;  // heading
  double phi = 0.0;    // steering angle
  VehicleState predicted;
  SafetyAssessment assessment;
  bool converged = true;
  double max_rhat = 1.0;
};

/// Evaluates delta-hat for (scene, fault) pairs against one golden run. The
/// golden run must keep frames with safety assessments. Thread-safe.
class CounterfactualEngine {
 public:
  CounterfactualEngine(const TemporalBayesNet& tbn, const Scenario& scenario,
                       const RunResult& golden, GibbsOptions gibbs);

  /// Fault injected at scene k (1 <= k <= frames - 2); nullopt is the null fault.
  [[nodiscard]] Counterfactual evaluate(std::size_t k, const std::optional<FaultType>& fault,
                                        std::uint64_t seed) const;
  [[nodiscard]] std::size_t first_scene() const { return 1; }
  [[nodiscard]] std::size_t last_scene() const;  // inclusive
  [[nodiscard]] const RunResult& golden() const { return *golden_; }

 private:
  const TemporalBayesNet* tbn_;
  const Scenario* scenario_;
  const RunResult* golden_;
  Lane lane_;
  SafetyParams params_;
  std::vector<std::size_t> query_;
  std::vector<std::optional<GibbsSampler>> by_var_;  // indexed by registry variable
  std::optional<GibbsSampler> null_;
};

struct CriticalPair {
  std::size_t scene = 0;
  FaultType fault;
  double golden_delta_long = 0.0;  // golden frame k+1
  double golden_delta_lat = 0.0;
  double delta_hat_long = 0.0;
  double delta_hat_lat = 0.0;
  bool converged = true;
  std::optional<bool> replay_hazard;  // set by replay validation
};

struct MiningOptions {
  GibbsOptions gibbs = mining_gibbs_defaults();
  bool parallel = true;
};

struct MiningResult {
  std::string scenario;
  std::vector<CriticalPair> pairs;  // sorted by scene, then catalog order
  std::size_t scenes = 0;           // scenes in the golden run
  std::size_t catalog_size = 0;
  std::size_t evaluations = 0;   // counterfactual queries, null fault included
  std::size_t screened_out = 0;  // safe scenes whose null prediction was already critical
  std::size_t unconverged = 0;
  std::vector<std::size_t> critical_scenes;
  double seconds = 0.0;

  [[nodiscard]] double critical_scene_percent() const;
  /// |F_crit| / (catalog size x scenes)
  [[nodiscard]] double critical_fault_percent() const;
};

/// Every (scene, fault) pair with a safe golden frame k+1 and delta-hat <= 0
/// on some axis. Scenes where the null fault already predicts delta-hat <= 0
/// are skipped. The parallel path distributes pairs over OpenMP threads.
[[nodiscard]] MiningResult mine_fcrit(const TemporalBayesNet& tbn, const Scenario& scenario,
                                      const RunResult& golden, std::span<const FaultType> catalog,
                                      const MiningOptions& options = {});

/// Serial reference; identical output to mine_fcrit.
[[nodiscard]] MiningResult mine_fcrit_serial(const TemporalBayesNet& tbn,
                                             const Scenario& scenario, const RunResult& golden,
                                             std::span<const FaultType> catalog,
                                             const MiningOptions& options = {});

/// Golden run in the form mining expects (frames kept, safety assessed).
[[nodiscard]] RunResult golden_for_mining(const Scenario& scenario, std::uint64_t seed);

/// F_crit file: CSV with a "# scenario=<id>" line and columns
/// scenario,scene,fault,golden_delta_long,golden_delta_lat,delta_hat_long,delta_hat_lat,converged,replay_hazard
void write_fcrit(const std::filesystem::path& path, const MiningResult& result);
[[nodiscard]] MiningResult read_fcrit(const std::filesystem::path& path);

}  // namespace bfi::bayes

#endif  // BFI_BAYES_MINING_HPP
