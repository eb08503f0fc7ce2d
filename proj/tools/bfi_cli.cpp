// SPDX-License-Identifier: Apache-2.0
//
// bfi: campaign manager command line.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <sstream>

#include "bfi/bayes/selfcheck.hpp"
#include "bfi/campaign.hpp"
#include "bfi/report.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kConfig = 2;
constexpr int kGoldenHazard = 3;
constexpr int kUnconverged = 4;

std::vector<std::string> split_ids(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string id;
  while (std::getline(ss, id, ',')) {
    if (!id.empty()) out.push_back(id);
  }
  return out;
}

int cmd_golden(const std::string& scenario, std::size_t runs, std::uint64_t seed,
               std::size_t workers, const std::string& out) {
  const auto ids = scenario == "all" ? bfi::builtin_scenario_ids() : split_ids(scenario);
  std::size_t hazards = 0;
  std::printf("scenario,runs,hazards,median_min_cipo,median_max_lk\n");
  for (const auto& id : ids) {
    const bfi::Scenario sc = bfi::resolve_scenario(id);
    const auto g = bfi::run_golden(sc, runs, seed, workers, std::filesystem::path(out) / sc.id);
    std::printf("%s,%zu,%zu,%.4f,%.4f\n", sc.id.c_str(), runs, g.hazards, g.median_min_cipo,
                g.median_max_lk);
    hazards += g.hazards;
  }
  if (hazards > 0) {
    std::fprintf(stderr, "golden runs produced %zu hazard(s); aborting\n", hazards);
    return kGoldenHazard;
  }
  return kOk;
}

int cmd_random(const std::string& config, const std::string& scenario, std::uint64_t seed,
               bool seed_set, std::size_t runs, std::size_t workers, const std::string& out) {
  bfi::CampaignConfig c = bfi::load_campaign_config(config);
  if (!scenario.empty()) c.scenario = scenario;
  if (seed_set) c.seed = seed;
  if (runs > 0) c.experiments = runs;
  if (workers > 0) c.workers = workers;
  if (!out.empty()) c.out = out;
  const auto r = bfi::run_campaign(c);
  std::size_t hazards = 0;
  for (const auto& e : r.experiments) hazards += e.metrics.hazard ? 1 : 0;
  std::printf("%s %s %s: %zu experiments, %zu hazards (%.2f%%), %.1fs -> %s\n", c.label.c_str(),
              c.scenario.c_str(), bfi::to_string(c.model).c_str(), r.experiments.size(), hazards,
              100.0 * static_cast<double>(hazards) / static_cast<double>(r.experiments.size()),
              r.seconds, c.out.string().c_str());
  return kOk;
}

int cmd_train(const std::string& scenario, std::size_t runs, std::uint64_t seed,
              std::size_t workers, const std::string& out) {
  bfi::bayes::TrainingOptions o;
  if (!scenario.empty() && scenario != "all") o.scenarios = split_ids(scenario);
  if (runs > 0) o.replications = runs;
  o.seed = seed;
  o.parallel = workers != 1;
  const auto t = bfi::run_training(o, out);
  std::printf("trained on %zu records (%zu fault types), %zu EM iterations, %.1fs -> %s/model.tsv\n",
              t.records, t.manifest.size() - 1, t.em.iterations, t.seconds, out.c_str());
  for (const auto& w : t.em.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  return kOk;
}

int cmd_mine(const std::string& model, const std::string& scenario, std::uint64_t seed,
             std::size_t workers, const std::string& out, double max_unconverged) {
  bfi::bayes::TemporalBayesNet tbn;
  try {
    tbn = bfi::bayes::load_model(model);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  }
  int status = kOk;
  for (const auto& id : split_ids(scenario)) {
    const bfi::Scenario sc = bfi::resolve_scenario(id);
    bfi::MineOptions o;
    o.seed = seed;
    o.workers = workers;
    o.mining.parallel = workers != 1;
    const auto r = bfi::run_mining(tbn, sc, o, std::filesystem::path(out) / sc.id);
    const auto& m = r.mining;
    std::printf(
        "%s: %zu critical pairs in %zu scenes (scenes %.3f%%, faults %.4f%%), manifested %zu "
        "(%.1f%%), mining %.1fs, speedup %.1fx, unconverged %.3f%%\n",
        sc.id.c_str(), m.pairs.size(), m.critical_scenes.size(), m.critical_scene_percent(),
        m.critical_fault_percent(), r.replay_hazards, r.manifestation_percent, m.seconds, r.speedup,
        r.unconverged_percent);
    if (r.unconverged_percent > max_unconverged) {
      std::fprintf(stderr, "%s: %.3f%% of inferences unconverged (threshold %.3f%%)\n",
                   sc.id.c_str(), r.unconverged_percent, max_unconverged);
      status = kUnconverged;
    }
  }
  return status;
}

int cmd_selfcheck(std::uint64_t seed) {
  bool ok = true;
  for (const auto& c : bfi::bayes::run_selfchecks(seed)) {
    std::printf("%s %s: %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
    ok = ok && c.passed;
  }
  return ok ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian fault-injection campaign manager"};
  app.require_subcommand(1);

  struct Args {
    std::string scenario;
    std::string model;
    std::string config;
    std::string out;
    std::uint64_t seed = 1;
    std::size_t runs = 0;
    std::size_t workers = 0;
  };
  Args g, r, t, m, p, s;
  double max_unconverged = 5.0;
  std::vector<std::string> dirs;

  auto* golden = app.add_subcommand("golden", "golden runs; exits 3 on any hazard");
  golden->add_option("--scenario", g.scenario, "scenario ids or files, comma separated, or 'all'")
      ->default_val("all");
  golden->add_option("--runs", g.runs, "runs per scenario")->default_val(50);
  golden->add_option("--seed", g.seed, "first simulation seed")->default_val(1);
  golden->add_option("--workers", g.workers, "worker threads (0: all cores)");
  golden->add_option("--out", g.out, "output directory")->default_val("golden");

  auto* random = app.add_subcommand("random-campaign", "random fault-injection campaign");
  random->add_option("--config", r.config, "campaign config (JSON)")->required();
  random->add_option("--scenario", r.scenario, "override the config scenario");
  auto* seed_opt = random->add_option("--seed", r.seed, "override the config seed");
  random->add_option("--runs", r.runs, "override the experiment count");
  random->add_option("--workers", r.workers, "worker threads");
  random->add_option("--out", r.out, "override the output directory");

  auto* train = app.add_subcommand("train", "generate training data and fit the network");
  train->add_option("--scenario", t.scenario, "training scenarios, comma separated")->default_val("all");
  train->add_option("--runs", t.runs, "injections per fault type")->default_val(30);
  train->add_option("--seed", t.seed, "training seed")->default_val(1);
  train->add_option("--workers", t.workers, "1 forces the serial path");
  train->add_option("--out", t.out, "output directory")->default_val("model");

  auto* mine = app.add_subcommand("mine", "mine critical faults and replay them");
  mine->add_option("--model", m.model, "trained model file")->required();
  mine->add_option("--scenario", m.scenario, "scenarios, comma separated")->default_val("A5");
  mine->add_option("--seed", m.seed, "golden and replay seed")->default_val(1);
  mine->add_option("--workers", m.workers, "worker threads; 1 forces the serial path");
  mine->add_option("--out", m.out, "output directory")->default_val("mining");
  mine->add_option("--max-unconverged", max_unconverged,
                   "percent of unconverged inferences that triggers exit code 4")
      ->default_val(5.0);

  auto* report = app.add_subcommand("report", "consolidated report over campaign directories");
  report->add_option("campaigns", dirs, "campaign directories")->required();
  report->add_option("--out", p.out, "output directory")->default_val("report");

  auto* self = app.add_subcommand("selfcheck", "EM recovery and Gibbs-vs-exact checks");
  self->add_option("--seed", s.seed, "seed")->default_val(1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*golden) return cmd_golden(g.scenario, g.runs, g.seed, g.workers, g.out);
    if (*random)
      return cmd_random(r.config, r.scenario, r.seed, seed_opt->count() > 0, r.runs, r.workers, r.out);
    if (*train) return cmd_train(t.scenario, t.runs, t.seed, t.workers, t.out);
    if (*mine) return cmd_mine(m.model, m.scenario, m.seed, m.workers, m.out, max_unconverged);
    if (*report) {
      bfi::write_report({dirs.begin(), dirs.end()}, p.out);
      std::printf("report written to %s\n", p.out.c_str());
      return kOk;
    }
    if (*self) return cmd_selfcheck(s.seed);
  } catch (const bfi::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const bfi::ScenarioError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const bfi::GoldenHazardError& e) {
    std::fprintf(stderr, "golden hazard: %s\n", e.what());
    return kGoldenHazard;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailed;
  }
  return kOk;
}
