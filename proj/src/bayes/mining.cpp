// SPDX-License-Identifier: Apache-2.0

#include "bfi/bayes/mining.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "bfi/csv.hpp"
#include "bfi/digest.hpp"

namespace bfi::bayes {

namespace {

std::vector<bool> observed_mask(const LinearGaussianNet& net, const std::vector<std::size_t>& targets) {
  auto fixed = non_descendants(net, targets);
  for (std::size_t t : targets) fixed[t] = true;
  return fixed;
}

}  // namespace

CounterfactualEngine::CounterfactualEngine(const TemporalBayesNet& tbn, const Scenario& scenario,
                                           const RunResult& golden, GibbsOptions gibbs)
    : tbn_(&tbn), scenario_(&scenario), golden_(&golden), lane_(scenario.lane()) {
  if (!tbn.trained) throw ModelError("mining needs a trained model");
  if (golden.frames.size() < 3) throw std::invalid_argument("golden run too short for mining");
  for (const auto& f : golden.frames) {
    if (!f.safety) throw std::invalid_argument("golden run lacks safety assessments");
  }
  params_.kinematics = scenario.ads_config().kinematics;
  for (VarId v : {VarId::ego_speed, VarId::ego_heading, VarId::ego_steer_angle}) {
    query_.push_back(tbn.nodes_of(v, 2).front());
  }
  const LinearGaussianNet& net = tbn.net();
  // without a fault the next vehicle state is still predicted by the model
  auto unfaulted = non_descendants(net, query_);
  null_.emplace(net, std::move(unfaulted), query_, gibbs);
  by_var_.resize(kVarCount);
  for (VarId v : injectable_variables()) {
    const auto targets = tbn.nodes_of(v, 1);
    Intervention iv;
    for (std::size_t t : targets) iv.assignments.push_back({t, 0.0});
    by_var_[index(v)].emplace(intervene(net, iv), observed_mask(net, targets), query_, gibbs);
  }
}

std::size_t CounterfactualEngine::last_scene() const { return golden_->frames.size() - 2; }

Counterfactual CounterfactualEngine::evaluate(std::size_t k, const std::optional<FaultType>& fault,
                                              std::uint64_t seed) const {
  const auto& frames = golden_->frames;
  if (k < 1 || k + 1 >= frames.size()) throw std::out_of_range("scene outside the mining window");
  const std::size_t S = tbn_->slice_size();
  std::vector<double> values(kSlices * S);
  for (std::size_t t = 0; t < kSlices; ++t) {
    tbn_->encode(frames[k - 1 + t].vars, std::span<double>(values.data() + t * S, S));
  }
  const GibbsSampler* sampler = &*null_;
  if (fault) {
    const auto& s = by_var_.at(index(fault->var));
    if (!s) throw std::invalid_argument("fault targets a variable that cannot be injected");
    sampler = &*s;
    for (const auto& [node, value] : tbn_->fault_assignment(*fault, 1, frames[k].vars)) {
      values[node] = value;
    }
  }
  const Posterior post = sampler->run(values, seed);

  Counterfactual cf;
  cf.converged = post.converged;
  cf.max_rhat = post.max_rhat;
  const auto& kin = params_.kinematics;
  const VehicleState& now = frames[k].ego;
  cf.v = std::max(post.mean[0], 0.0);
  cf.theta = post.mean[1];
  cf.phi = std::clamp(post.mean[2], -kin.phi_max, kin.phi_max);
  // one-step position update with midpoint speed and heading
  const double dtheta = normalize_angle(cf.theta - now.theta);
  const double heading = now.theta + 0.5 * dtheta;
  const double dist = 0.5 * (now.v + cf.v) * scenario_->dt;
  cf.predicted = {now.x + dist * std::cos(heading), now.y + dist * std::sin(heading), cf.v,
                  normalize_angle(now.theta + dtheta), cf.phi};

  const auto world = scenario_->world_at(frames[k + 1].t, golden_->trigger_times);
  const SafetyEnvelope env = compute_d_safe(cf.predicted, world, lane_, params_);
  const StopDisplacement stop = stop_displacement(cf.predicted, lane_, kin);
  cf.assessment = make_assessment(env, stop.longitudinal, stop.lateral, params_.d_safe_min);
  return cf;
}

double MiningResult::critical_scene_percent() const {
  return scenes == 0 ? 0.0 : 100.0 * static_cast<double>(critical_scenes.size()) / static_cast<double>(scenes);
}

double MiningResult::critical_fault_percent() const {
  const double total = static_cast<double>(scenes) * static_cast<double>(catalog_size);
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(pairs.size()) / total;
}

namespace {

struct PairOutcome {
  bool critical = false;
  bool converged = true;
  CriticalPair pair;
};

MiningResult mine(const TemporalBayesNet& tbn, const Scenario& scenario, const RunResult& golden,
                  std::span<const FaultType> catalog, const MiningOptions& options, bool parallel) {
  const auto t0 = std::chrono::steady_clock::now();
  const CounterfactualEngine engine(tbn, scenario, golden, options.gibbs);
  const std::size_t first = engine.first_scene();
  const std::size_t last = engine.last_scene();
  const std::size_t nf = catalog.size();
  const std::size_t nk = last - first + 1;
  std::vector<PairOutcome> out(nk * nf);
  // scenes whose unfaulted prediction is already unsafe say nothing about the fault
  std::vector<char> usable(nk, 0);

  auto screen = [&](std::size_t i) {
    const std::size_t k = first + i;
    const SafetyAssessment& g = *golden.frames[k + 1].safety;
    if (!g.safe) return;
    const Counterfactual cf = engine.evaluate(k, std::nullopt, derive_seed(options.gibbs.seed, k, nf));
    usable[i] = !is_critical(g, cf.assessment.delta_long, cf.assessment.delta_lat);
  };
  auto work = [&](std::size_t idx) {
    const std::size_t k = first + idx / nf;
    const std::size_t fi = idx % nf;
    const SafetyAssessment& g = *golden.frames[k + 1].safety;
    PairOutcome& o = out[idx];
    if (!usable[idx / nf]) return;
    const Counterfactual cf = engine.evaluate(k, catalog[fi], derive_seed(options.gibbs.seed, k, fi));
    o.converged = cf.converged;
    if (!is_critical(g, cf.assessment.delta_long, cf.assessment.delta_lat)) return;
    o.critical = true;
    o.pair = {k, catalog[fi], g.delta_long, g.delta_lat, cf.assessment.delta_long,
              cf.assessment.delta_lat, cf.converged, std::nullopt};
  };
  const auto ns = static_cast<std::ptrdiff_t>(nk);
  const auto n = static_cast<std::ptrdiff_t>(out.size());
  if (parallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < ns; ++i) screen(static_cast<std::size_t>(i));
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t i = 0; i < n; ++i) work(static_cast<std::size_t>(i));
  } else {
    for (std::ptrdiff_t i = 0; i < ns; ++i) screen(static_cast<std::size_t>(i));
    for (std::ptrdiff_t i = 0; i < n; ++i) work(static_cast<std::size_t>(i));
  }

  MiningResult r;
  r.scenario = scenario.id;
  r.scenes = golden.frames.size();
  r.catalog_size = nf;
  for (std::size_t i = 0; i < nk; ++i) {
    if (!golden.frames[first + i + 1].safety->safe) continue;
    r.evaluations += nf + 1;
    if (!usable[i]) ++r.screened_out;
  }
  for (const auto& o : out) {
    if (!o.converged) ++r.unconverged;
    if (!o.critical) continue;
    r.pairs.push_back(o.pair);
    if (r.critical_scenes.empty() || r.critical_scenes.back() != o.pair.scene)
      r.critical_scenes.push_back(o.pair.scene);
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace

MiningResult mine_fcrit(const TemporalBayesNet& tbn, const Scenario& scenario,
                        const RunResult& golden, std::span<const FaultType> catalog,
                        const MiningOptions& options) {
  return mine(tbn, scenario, golden, catalog, options, options.parallel);
}

MiningResult mine_fcrit_serial(const TemporalBayesNet& tbn, const Scenario& scenario,
                               const RunResult& golden, std::span<const FaultType> catalog,
                               const MiningOptions& options) {
  return mine(tbn, scenario, golden, catalog, options, false);
}

RunResult golden_for_mining(const Scenario& scenario, std::uint64_t seed) {
  RunOptions o;
  o.seed = seed;
  o.assess = true;
  o.keep_frames = true;
  return simulate(scenario, o);
}

void write_fcrit(const std::filesystem::path& path, const MiningResult& result) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "# scenario=" << result.scenario << " scenes=" << result.scenes
      << " catalog=" << result.catalog_size << "\n";
  out << "scenario,scene,fault,golden_delta_long,golden_delta_lat,delta_hat_long,delta_hat_lat,"
         "converged,replay_hazard\n";
  for (const auto& p : result.pairs) {
    out << result.scenario << ',' << p.scene << ',' << p.fault.name() << ','
        << format_number(p.golden_delta_long) << ',' << format_number(p.golden_delta_lat) << ','
        << format_number(p.delta_hat_long) << ',' << format_number(p.delta_hat_lat) << ','
        << (p.converged ? 1 : 0) << ',';
    if (p.replay_hazard) out << (*p.replay_hazard ? 1 : 0);
    out << '\n';
  }
}

MiningResult read_fcrit(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  MiningResult r;
  std::string line;
  std::getline(in, line);
  {
    std::istringstream hs(line.substr(std::min(line.size(), line.find_first_not_of("# "))));
    std::string tok;
    while (hs >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = tok.substr(0, eq);
      const std::string val = tok.substr(eq + 1);
      if (key == "scenario") r.scenario = val;
      if (key == "scenes") r.scenes = std::stoul(val);
      if (key == "catalog") r.catalog_size = std::stoul(val);
    }
  }
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) f.push_back(c);
    if (f.size() < 8) throw std::runtime_error("short F_crit row");
    CriticalPair p;
    p.scene = std::stoul(f[1]);
    p.fault = parse_fault_type(f[2]);
    p.golden_delta_long = parse_number(f[3]);
    p.golden_delta_lat = parse_number(f[4]);
    p.delta_hat_long = parse_number(f[5]);
    p.delta_hat_lat = parse_number(f[6]);
    p.converged = f[7] == "1";
    if (f.size() > 8 && !f[8].empty()) p.replay_hazard = f[8] == "1";
    if (r.critical_scenes.empty() || r.critical_scenes.back() != p.scene)
      r.critical_scenes.push_back(p.scene);
    r.pairs.push_back(p);
  }
  return r;
}

}  // namespace bfi::bayes
