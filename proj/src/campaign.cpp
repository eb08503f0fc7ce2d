// SPDX-License-Identifier: Apache-2.0

#include "bfi/campaign.hpp"

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "bfi/csv.hpp"
#include "bfi/digest.hpp"
#include "bfi/report.hpp"

namespace bfi {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int thread_count(std::size_t workers) {
  return workers > 0 ? static_cast<int>(workers) : omp_get_max_threads();
}

/// Runs body(i) for i in [0, n) on `workers` threads; results are stored by
/// index, so the order of completion never shows in the output.
template <typename F>
void for_each_index(std::size_t n, std::size_t workers, F&& body) {
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic) num_threads(thread_count(workers))
  for (std::ptrdiff_t i = 0; i < count; ++i) body(static_cast<std::size_t>(i));
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string numbered(const char* prefix, std::size_t i, const char* suffix) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s%05zu%s", prefix, i, suffix);
  return buf;
}

bool is_fixed(FaultModel m) { return m == FaultModel::OneFixed || m == FaultModel::MFixed; }

std::vector<FaultType> resolve_targets(const CampaignConfig& c) {
  std::vector<FaultType> out;
  if (c.targets.empty()) {
    if (is_fixed(c.model)) return fault_catalog();
    for (VarId v : injectable_variables()) out.push_back({v});
    return out;
  }
  for (const auto& t : c.targets) {
    if (is_fixed(c.model)) {
      try {
        out.push_back(parse_fault_type(t));
      } catch (const std::exception& e) {
        throw ConfigError("field 'targets': " + std::string(e.what()));
      }
      continue;
    }
    const auto v = find_variable(t);
    if (!v) throw ConfigError("field 'targets': unknown variable " + t);
    if (!spec(*v).injectable) throw ConfigError("field 'targets': not injectable: " + t);
    out.push_back({*v});
  }
  return out;
}

Scenario resolve_config_scenario(const CampaignConfig& c) {
  try {
    return resolve_scenario(c.scenario);
  } catch (const std::exception& e) {
    throw ConfigError("field 'scenario': " + std::string(e.what()));
  }
}

Experiment run_one(const Scenario& sc, const FaultPlan& plan, std::size_t index,
                   std::uint64_t sim_seed, const std::optional<std::filesystem::path>& trace) {
  Experiment e;
  e.index = index;
  e.plan = plan;
  e.sim_seed = sim_seed;
  RunOptions o;
  o.seed = sim_seed;
  o.keep_frames = trace.has_value();
  std::optional<Injector> inj;
  if (!plan.types.empty()) {
    inj.emplace(plan);
    o.hook = &*inj;
  }
  RunResult r = simulate(sc, o);
  e.metrics = r.metrics;
  e.scenes_run = r.scenes_run;
  e.digest = r.digest;
  if (inj) e.injections = inj->log();
  if (trace) write_trace(*trace, r, plan.types.empty() ? 0 : plan.digest());
  return e;
}

void write_box_rows(std::ostream& out, const std::string& label,
                    const std::vector<RunMetrics>& metrics) {
  std::vector<double> cipo;
  std::vector<double> lk;
  for (const auto& m : metrics) {
    cipo.push_back(m.min_cipo);
    lk.push_back(m.max_lk);
  }
  for (const auto& [name, values] : {std::pair{"min_cipo", cipo}, std::pair{"max_lk", lk}}) {
    const BoxStats b = box_stats(values);
    out << label << ',' << name << ',' << b.n << ',' << format_number(b.min) << ','
        << format_number(b.whisker_low) << ',' << format_number(b.q1) << ','
        << format_number(b.median) << ',' << format_number(b.q3) << ','
        << format_number(b.whisker_high) << ',' << format_number(b.max) << '\n';
  }
}

std::string hazard_frame(const RunMetrics& m) {
  return m.hazard_frame ? std::to_string(*m.hazard_frame) : "";
}

}  // namespace

// ---------------------------------------------------------------------------
// configuration

CampaignConfig parse_campaign_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  CampaignConfig c;
  auto count = [&](const std::string& key, const json& v, bool positive) {
    if (!v.is_number_unsigned() || (positive && v.get<std::uint64_t>() == 0))
      throw ConfigError("field '" + key + "': expected a " +
                        (positive ? "positive" : "non-negative") + " integer");
    return v.get<std::uint64_t>();
  };
  auto text_field = [&](const std::string& key, const json& v) {
    if (!v.is_string()) throw ConfigError("field '" + key + "': expected a string");
    return v.get<std::string>();
  };
  for (const auto& [key, v] : j.items()) {
    if (key == "label") {
      c.label = text_field(key, v);
    } else if (key == "scenario") {
      c.scenario = text_field(key, v);
    } else if (key == "model") {
      try {
        c.model = fault_model_from_string(text_field(key, v));
      } catch (const std::invalid_argument& e) {
        throw ConfigError("field 'model': " + std::string(e.what()));
      }
    } else if (key == "targets") {
      if (!v.is_array()) throw ConfigError("field 'targets': expected an array of strings");
      for (const auto& t : v) c.targets.push_back(text_field(key, t));
    } else if (key == "experiments") {
      c.experiments = count(key, v, true);
    } else if (key == "seed") {
      c.seed = count(key, v, false);
    } else if (key == "golden_seeds") {
      c.golden_seeds = count(key, v, true);
    } else if (key == "workers") {
      c.workers = count(key, v, false);
    } else if (key == "out") {
      c.out = text_field(key, v);
    } else if (key == "traces") {
      if (!v.is_boolean()) throw ConfigError("field 'traces': expected true or false");
      c.traces = v.get<bool>();
    } else {
      throw ConfigError("unknown field '" + key + "'");
    }
  }
  if (c.label.empty()) c.label = to_string(c.model);
  if (c.label.find_first_of(",\n") != std::string::npos)
    throw ConfigError("field 'label': must not contain commas or newlines");
  (void)resolve_targets(c);
  return c;
}

CampaignConfig load_campaign_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_campaign_config(ss.str());
}

std::string campaign_config_to_json(const CampaignConfig& c) {
  json j;
  j["label"] = c.label;
  j["scenario"] = c.scenario;
  j["model"] = to_string(c.model);
  j["targets"] = c.targets;
  j["experiments"] = c.experiments;
  j["seed"] = c.seed;
  j["golden_seeds"] = c.golden_seeds;
  j["workers"] = c.workers;
  j["out"] = c.out.string();
  j["traces"] = c.traces;
  return j.dump(2) + "\n";
}

FaultPlan make_plan(const CampaignConfig& config, const Scenario& scenario, std::size_t experiment) {
  const std::vector<FaultType> targets = resolve_targets(config);
  std::mt19937_64 rng(derive_seed(config.seed, experiment));
  FaultPlan p;
  p.model = config.model;
  const bool multi = config.model == FaultModel::MFixed || config.model == FaultModel::MRandom;
  p.duration = multi ? std::uniform_int_distribution<std::size_t>(10, 100)(rng) : 1;
  if (scenario.scenes <= p.duration)
    throw ConfigError("field 'scenario': run too short for " + to_string(config.model));
  p.start = std::uniform_int_distribution<std::size_t>(0, scenario.scenes - p.duration - 1)(rng);
  FaultType t = targets[std::uniform_int_distribution<std::size_t>(0, targets.size() - 1)(rng)];
  if (config.model == FaultModel::BitFlip) {
    t.rule = Rule::bitflip;
    t.bit = std::uniform_int_distribution<int>(0, 63)(rng);
    if (std::bernoulli_distribution(0.5)(rng)) {
      t.bit2 = std::uniform_int_distribution<int>(0, 62)(rng);
      if (t.bit2 >= t.bit) ++t.bit2;
    }
  } else if (!is_fixed(config.model)) {
    t.rule = Rule::set_value;  // the injector draws the value
  }
  p.types = {t};
  p.seed = rng();
  return p;
}

std::string target_module(const FaultPlan& plan) {
  return plan.types.empty() ? std::string{} : module_of(plan.types.front().var);
}

// ---------------------------------------------------------------------------
// golden runs and random campaigns

GoldenSummary run_golden(const Scenario& scenario, std::size_t runs, std::uint64_t first_seed,
                         std::size_t workers, const std::optional<std::filesystem::path>& out) {
  if (runs == 0) throw ConfigError("field 'runs': expected a positive integer");
  if (out) std::filesystem::create_directories(*out / "traces");
  GoldenSummary g;
  g.scenario = scenario.id;
  g.runs.resize(runs);
  for_each_index(runs, workers, [&](std::size_t i) {
    const std::uint64_t seed = first_seed + i;
    std::optional<std::filesystem::path> trace;
    if (out) trace = *out / "traces" / numbered("seed_", seed, ".csv");
    g.runs[i] = run_one(scenario, FaultPlan{}, i, seed, trace);
  });
  std::vector<double> cipo;
  std::vector<double> lk;
  for (const auto& r : g.runs) {
    if (r.metrics.hazard) ++g.hazards;
    cipo.push_back(r.metrics.min_cipo);
    lk.push_back(r.metrics.max_lk);
  }
  const BoxStats bc = box_stats(cipo);
  const BoxStats bl = box_stats(lk);
  g.median_min_cipo = bc.median;
  g.median_max_lk = bl.median;
  g.min_min_cipo = bc.min;
  g.max_max_lk = bl.max;

  if (out) {
    auto csv = open_out(*out / "golden.csv");
    csv << kGoldenHeader << '\n';
    for (const auto& r : g.runs) {
      csv << r.sim_seed << ',' << format_number(r.metrics.min_cipo) << ','
          << format_number(r.metrics.max_lk) << ',' << (r.metrics.hazard ? 1 : 0) << ','
          << hazard_frame(r.metrics) << ',' << r.scenes_run << ',' << hex(r.digest) << '\n';
    }
    auto sum = open_out(*out / "summary.csv");
    sum << "scenario,runs,hazards,median_min_cipo,median_max_lk,min_min_cipo,max_max_lk\n"
        << g.scenario << ',' << runs << ',' << g.hazards << ',' << format_number(g.median_min_cipo)
        << ',' << format_number(g.median_max_lk) << ',' << format_number(g.min_min_cipo) << ','
        << format_number(g.max_max_lk) << '\n';
  }
  return g;
}

CampaignResult run_campaign(const CampaignConfig& config) {
  const auto t0 = Clock::now();
  const Scenario sc = resolve_config_scenario(config);
  (void)resolve_targets(config);
  if (config.experiments == 0) throw ConfigError("field 'experiments': expected a positive integer");
  if (config.golden_seeds == 0) throw ConfigError("field 'golden_seeds': expected a positive integer");

  const std::filesystem::path& dir = config.out;
  std::filesystem::create_directories(dir);
  if (config.traces) {
    std::filesystem::create_directories(dir / "traces");
    std::filesystem::create_directories(dir / "injections");
  }
  CampaignResult res;
  res.config = config;
  res.golden = run_golden(sc, config.golden_seeds, 1, config.workers, dir / "golden");
  if (res.golden.hazards > 0)
    throw GoldenHazardError(sc.id + ": " + std::to_string(res.golden.hazards) +
                            " golden run(s) hazardous");
  const double golden_seconds = seconds_since(t0);

  std::vector<FaultPlan> plans;
  plans.reserve(config.experiments);
  for (std::size_t i = 0; i < config.experiments; ++i) plans.push_back(make_plan(config, sc, i));
  res.experiments.resize(config.experiments);
  for_each_index(config.experiments, config.workers, [&](std::size_t i) {
    std::optional<std::filesystem::path> trace;
    if (config.traces) trace = dir / "traces" / numbered("exp_", i, ".csv");
    Experiment e = run_one(sc, plans[i], i, 1 + i % config.golden_seeds, trace);
    if (config.traces) {
      auto log = open_out(dir / "injections" / numbered("exp_", i, ".csv"));
      log << kInjectionHeader << '\n';
      for (const auto& rec : e.injections) {
        log << rec.scene << ',' << spec(rec.var).name << ',' << format_number(rec.old_value) << ','
            << format_number(rec.new_value) << '\n';
      }
    }
    res.experiments[i] = std::move(e);
  });
  res.seconds = seconds_since(t0);

  {
    auto cfg = open_out(dir / "config.json");
    cfg << campaign_config_to_json(config);
  }
  const std::string model = to_string(config.model);
  auto manifest = open_out(dir / "manifest.csv");
  auto exps = open_out(dir / "experiments.csv");
  manifest << kManifestHeader << '\n';
  exps << kExperimentsHeader << '\n';
  std::size_t hazards = 0;
  std::vector<RunMetrics> metrics;
  for (const auto& e : res.experiments) {
    const std::string fault = e.plan.types.front().name();
    const std::string module = target_module(e.plan);
    manifest << e.index << ',' << config.label << ',' << sc.id << ',' << model << ',' << fault << ','
             << module << ',' << e.plan.start << ',' << e.plan.duration << ',' << e.plan.seed << ','
             << e.sim_seed << ',' << hex(e.plan.digest()) << '\n';
    exps << e.index << ',' << config.label << ',' << sc.id << ',' << model << ',' << fault << ','
         << module << ',' << e.plan.start << ',' << e.plan.duration << ',' << e.sim_seed << ','
         << format_number(e.metrics.min_cipo) << ',' << format_number(e.metrics.max_lk) << ','
         << (e.metrics.hazard ? 1 : 0) << ',' << hazard_frame(e.metrics) << ',' << e.scenes_run
         << ',' << hex(e.digest) << '\n';
    if (e.metrics.hazard) ++hazards;
    metrics.push_back(e.metrics);
  }
  auto box = open_out(dir / "boxplot.csv");
  box << kBoxplotHeader << '\n';
  std::vector<RunMetrics> golden_metrics;
  for (const auto& r : res.golden.runs) golden_metrics.push_back(r.metrics);
  write_box_rows(box, "golden", golden_metrics);
  write_box_rows(box, config.label, metrics);

  auto sum = open_out(dir / "summary.csv");
  sum << kReportSummaryHeader << '\n'
      << config.label << ',' << sc.id << ',' << model << ',' << metrics.size() << ',' << hazards
      << ',' << format_number(100.0 * static_cast<double>(hazards) / static_cast<double>(metrics.size()))
      << ',' << format_number(res.golden.min_min_cipo) << ',' << format_number(res.golden.max_max_lk)
      << '\n';

  auto timing = open_out(dir / "timing.csv");
  timing << "phase,seconds\n"
         << "golden," << golden_seconds << '\n'
         << "experiments," << res.seconds - golden_seconds << '\n'
         << "total," << res.seconds << '\n';
  return res;
}

// ---------------------------------------------------------------------------
// training

TrainOutcome run_training(const bayes::TrainingOptions& options, const std::filesystem::path& out) {
  const auto t0 = Clock::now();
  TrainOutcome o{bayes::TemporalBayesNet::build(), {}, {}, 0, 0.0};
  bayes::TrainingSet set;
  try {
    set = bayes::make_training_set(o.model, options);
  } catch (const ScenarioError& e) {
    throw ConfigError("field 'scenario': " + std::string(e.what()));
  }
  o.records = set.data.rows();
  o.manifest = set.manifest;
  o.em = bayes::em_train(o.model.net(), set.data);
  o.model.trained = true;
  o.seconds = seconds_since(t0);

  std::filesystem::create_directories(out);
  bayes::save_model(out / "model.tsv", o.model);
  auto man = open_out(out / "training_manifest.csv");
  man << kTrainingManifestHeader << '\n';
  for (const auto& m : o.manifest) man << m.fault << ',' << m.runs << ',' << m.records << '\n';
  auto em = open_out(out / "em.csv");
  em << "iteration,log_likelihood\n";
  for (std::size_t i = 0; i < o.em.log_likelihood.size(); ++i)
    em << i << ',' << format_number(o.em.log_likelihood[i]) << '\n';
  auto timing = open_out(out / "timing.csv");
  timing << "phase,seconds\ntraining," << o.seconds << '\n';
  return o;
}

// ---------------------------------------------------------------------------
// frame tags and mining

std::string to_string(FrameTag t) {
  switch (t) {
    case FrameTag::registration: return "registration";
    case FrameTag::braking_onset: return "braking_onset";
    case FrameTag::turn: return "turn";
  }
  return "?";
}

std::vector<TaggedFrame> frame_tags(const Scenario& scenario, const RunResult& run) {
  constexpr double kCloser = 5.0;   // metres: a jump this large means a different object
  constexpr double kBraking = 0.01;
  const Lane lane = scenario.lane();
  const auto cls = index(VarId::fused_obstacle_class);
  const auto dist = index(VarId::fused_obstacle_distance);
  const auto brake = index(VarId::u_brake);
  std::vector<TaggedFrame> tags;
  const auto& f = run.frames;
  for (std::size_t k = 0; k < f.size(); ++k) {
    if (k > 0) {
      const double c0 = f[k - 1].vars[cls];
      const double c1 = f[k].vars[cls];
      if (c1 != 0.0 && (c1 != c0 || f[k].vars[dist] < f[k - 1].vars[dist] - kCloser))
        tags.push_back({k, FrameTag::registration});
      if (f[k].vars[brake] > kBraking && !(f[k - 1].vars[brake] > kBraking))
        tags.push_back({k, FrameTag::braking_onset});
    }
    const LaneProjection p = lane.project({f[k].ego.x, f[k].ego.y});
    if (std::abs(lane.curvature_at(p.station)) > 1e-6) tags.push_back({k, FrameTag::turn});
  }
  return tags;
}

std::vector<FrameTag> tags_near(std::size_t scene, const std::vector<TaggedFrame>& tags,
                                std::size_t before, std::size_t after) {
  std::vector<FrameTag> out;
  for (const auto& t : tags) {
    if (scene + before < t.scene || scene > t.scene + after) continue;
    if (std::find(out.begin(), out.end(), t.tag) == out.end()) out.push_back(t.tag);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double mining_speedup(std::size_t scenes, std::size_t catalog, double per_replay,
                      double mining_seconds, std::size_t fcrit) {
  const double exhaustive = static_cast<double>(scenes) * static_cast<double>(catalog) * per_replay;
  const double bayes = mining_seconds + static_cast<double>(fcrit) * per_replay;
  return bayes > 0.0 ? exhaustive / bayes : 0.0;
}

RunResult replay_pair(const Scenario& scenario, const bayes::CriticalPair& pair, std::uint64_t seed) {
  FaultPlan p;
  p.model = FaultModel::OneFixed;
  p.start = pair.scene;
  p.duration = 1;
  p.types = {pair.fault};
  p.seed = seed;
  Injector inj(p);
  RunOptions o;
  o.seed = seed;
  o.hook = &inj;
  o.keep_frames = false;
  return simulate(scenario, o);
}

MineOutcome run_mining(const bayes::TemporalBayesNet& model, const Scenario& scenario,
                       const MineOptions& options, const std::optional<std::filesystem::path>& out) {
  const RunResult golden = bayes::golden_for_mining(scenario, options.seed);
  if (golden.metrics.hazard) throw GoldenHazardError(scenario.id + ": golden run is hazardous");
  const auto& catalog = fault_catalog();

  MineOutcome o;
  o.mining = bayes::mine_fcrit(model, scenario, golden, catalog, options.mining);
  auto& pairs = o.mining.pairs;

  // replay validation; each replay is timed on its own for the per-replay cost
  std::vector<double> cost(pairs.size());
  std::vector<char> hazard(pairs.size());
  const auto t_replay = Clock::now();
  for_each_index(pairs.size(), options.workers, [&](std::size_t i) {
    const auto t = Clock::now();
    hazard[i] = replay_pair(scenario, pairs[i], options.seed).metrics.hazard ? 1 : 0;
    cost[i] = seconds_since(t);
  });
  o.replay_seconds = seconds_since(t_replay);
  if (pairs.empty()) {
    // nothing to replay: time a spread of single-fault runs instead
    const std::size_t n = std::max<std::size_t>(1, options.calibration_runs);
    cost.resize(n);
    const std::size_t span = golden.frames.size() - 2;
    for_each_index(n, options.workers, [&](std::size_t i) {
      bayes::CriticalPair p;
      p.scene = 1 + (i * span) / n;
      p.fault = catalog[i % catalog.size()];
      const auto t = Clock::now();
      (void)replay_pair(scenario, p, options.seed);
      cost[i] = seconds_since(t);
    });
  }
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    pairs[i].replay_hazard = hazard[i] != 0;
    if (hazard[i]) ++o.replay_hazards;
  }
  double total = 0.0;
  for (double c : cost) total += c;
  o.per_replay_seconds = total / static_cast<double>(cost.size());
  o.manifestation_percent =
      pairs.empty() ? 0.0 : 100.0 * static_cast<double>(o.replay_hazards) / static_cast<double>(pairs.size());
  o.unconverged_percent =
      o.mining.evaluations == 0
          ? 0.0
          : 100.0 * static_cast<double>(o.mining.unconverged) / static_cast<double>(o.mining.evaluations);
  o.exhaustive_seconds = static_cast<double>(o.mining.scenes) * static_cast<double>(catalog.size()) *
                         o.per_replay_seconds;
  o.speedup = mining_speedup(o.mining.scenes, catalog.size(), o.per_replay_seconds,
                             o.mining.seconds, pairs.size());
  o.tags = frame_tags(scenario, golden);

  if (out) {
    std::filesystem::create_directories(*out);
    bayes::write_fcrit(*out / "fcrit.csv", o.mining);
    const auto& m = o.mining;
    auto sum = open_out(*out / "mining_summary.csv");
    sum << kFcritSummaryHeader << '\n'
        << m.scenario << ',' << m.scenes << ',' << m.catalog_size << ',' << m.evaluations << ','
        << m.screened_out << ',' << m.unconverged << ',' << m.critical_scenes.size() << ','
        << format_number(m.critical_scene_percent()) << ',' << m.pairs.size() << ','
        << format_number(m.critical_fault_percent()) << ',' << o.replay_hazards << ','
        << format_number(o.manifestation_percent) << '\n';
    auto crit = open_out(*out / "critical_scenes.csv");
    crit << kCriticalScenesHeader << '\n';
    for (std::size_t s : m.critical_scenes) {
      std::size_t n = 0;
      for (const auto& p : m.pairs) n += p.scene == s ? 1 : 0;
      crit << s << ',' << n << ',';
      const auto near = tags_near(s, o.tags, kTagLead, kTagLag);
      for (std::size_t i = 0; i < near.size(); ++i) crit << (i ? "|" : "") << to_string(near[i]);
      crit << '\n';
    }
    auto timing = open_out(*out / "timing.csv");
    timing << "mining_seconds,per_replay_seconds,replay_seconds,exhaustive_seconds,speedup\n"
           << m.seconds << ',' << o.per_replay_seconds << ',' << o.replay_seconds << ','
           << o.exhaustive_seconds << ',' << o.speedup << '\n';
  }
  return o;
}

}  // namespace bfi
