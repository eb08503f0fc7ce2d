// SPDX-License-Identifier: Apache-2.0
//
// Report aggregation over campaign directories. Everything here is computed
// from the trace files on disk, so a report can be rebuilt at any time.

#ifndef BFI_REPORT_HPP
#define BFI_REPORT_HPP

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "bfi/safety.hpp"

namespace bfi {

/// Pinned CSV headers.
inline constexpr const char* kBoxplotHeader =
    "label,metric,n,min,whisker_low,q1,median,q3,whisker_high,max";
inline constexpr const char* kMvfHeader = "label,module,experiments,violations,mvf_percent";
inline constexpr const char* kCompensationHeader = "label,index,scene,brake_injected,brake_golden,c";
inline constexpr const char* kReportSummaryHeader =
    "label,scenario,model,experiments,hazards,hazard_percent,golden_min_cipo,golden_max_lk";
inline constexpr const char* kExperimentsHeader =
    "index,label,scenario,model,fault,module,start,duration,sim_seed,min_cipo,max_lk,hazard,"
    "hazard_frame,scenes_run,trace_digest";
inline constexpr const char* kManifestHeader =
    "index,label,scenario,model,fault,module,start,duration,plan_seed,sim_seed,plan_digest";
inline constexpr const char* kGoldenHeader =
    "seed,min_cipo,max_lk,hazard,hazard_frame,scenes_run,trace_digest";
inline constexpr const char* kInjectionHeader = "scene,variable,old,new";
inline constexpr const char* kFcritSummaryHeader =
    "scenario,scenes,catalog,evaluations,screened_out,unconverged,critical_scenes,"
    "critical_scene_percent,fcrit,critical_fault_percent,replay_hazards,manifestation_percent";
inline constexpr const char* kCriticalScenesHeader = "scene,faults,tags";
inline constexpr const char* kTrainingManifestHeader = "fault,runs,records";

/// Quartiles by linear interpolation between order statistics; Tukey
/// whiskers at the most extreme points within 1.5 IQR of the box.
struct BoxStats {
  std::size_t n = 0;
  double min = 0.0;
  double whisker_low = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double whisker_high = 0.0;
  double max = 0.0;
};

[[nodiscard]] double quantile(std::span<const double> sorted, double p);
[[nodiscard]] BoxStats box_stats(std::vector<double> values);

/// Golden extremes an experiment is compared against.
struct GoldenExtremes {
  double min_cipo = 0.0;
  double max_lk = 0.0;
};

/// True when the run got closer than any golden run or left the lane
/// centre further than any golden run.
[[nodiscard]] bool exceeds_golden(const RunMetrics& m, const GoldenExtremes& g);

struct MvfRow {
  std::string module;
  std::size_t experiments = 0;
  std::size_t violations = 0;
  double mvf_percent = 0.0;
};

/// One row per module in `modules` (untargeted modules get 0), ordered by
/// MVF descending then name. `targets[i]` is the module experiment i hit.
[[nodiscard]] std::vector<MvfRow> module_vulnerability(const std::vector<std::string>& modules,
                                                      const std::vector<std::string>& targets,
                                                      const std::vector<RunMetrics>& metrics,
                                                      const GoldenExtremes& golden);

/// c(K) = sum_{j<=K} brake_injected[j] - sum_{j<=K} brake_golden[j], over the
/// common prefix of the two runs.
[[nodiscard]] std::vector<double> compensation(std::span<const double> brake_injected,
                                               std::span<const double> brake_golden);

/// Reads each campaign directory and writes report_summary.csv,
/// boxplot.csv, mvf.csv and compensation.csv into `out`. Throws
/// std::runtime_error when a golden reference or a trace is missing, or the
/// manifest and the traces disagree.
void write_report(const std::vector<std::filesystem::path>& campaigns,
                  const std::filesystem::path& out);

}  // namespace bfi

#endif  // BFI_REPORT_HPP
