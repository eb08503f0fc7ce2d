// SPDX-License-Identifier: Apache-2.0
//
// End-to-end acceptance run: one PASS/FAIL line per criterion. Exits
// non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include "bfi/bayes/gibbs.hpp"
#include "bfi/bayes/network.hpp"
#include "bfi/bayes/selfcheck.hpp"
#include "bfi/campaign.hpp"
#include "bfi/kinematics.hpp"
#include "bfi/report.hpp"

using namespace bfi;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

int failures = 0;

void criterion(int n, const char* title, const std::function<void(Verdict&)>& body) {
  Verdict v;
  const auto t0 = Clock::now();
  try {
    body(v);
  } catch (const std::exception& e) {
    v.pass = false;
    v.detail << " [exception: " << e.what() << "]";
  }
  std::printf("criterion %d %s: %s (%.1fs) %s\n", n, title, v.pass ? "PASS" : "FAIL", since(t0),
              v.detail.str().c_str());
  std::fflush(stdout);
  if (!v.pass) ++failures;
}

fs::path work_dir() {
  const fs::path d = fs::temp_directory_path() / "bfi_acceptance";
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------

void kinematics(Verdict& v) {
  const auto t0 = Clock::now();
  KinematicParams p;
  double worst_rel = 0.0;
  double worst_arc = 0.0;
  bool exact_t = true;
  for (int i = 0; i < 40; ++i) {
    const double v0 = 0.5 + i;
    VehicleState s;
    s.v = v0;
    const StopResult r = emergency_stop(s, p);
    const double d = v0 * v0 / (2 * p.a_max);
    worst_rel = std::max(worst_rel, std::abs(r.d_stop_long - d) / d);
    exact_t = exact_t && r.t_stop == v0 / p.a_max;
    // same speed on a fixed steering angle: end point on the circular arc
    s.phi = 0.25;
    const StopResult a = emergency_stop(s, p);
    const double rad = p.wheelbase / std::tan(s.phi);
    worst_arc = std::max({worst_arc, std::abs(a.d_stop_long - rad * std::sin(d / rad)),
                          std::abs(a.d_stop_lat - rad * (1 - std::cos(d / rad)))});
    exact_t = exact_t && a.t_stop == v0 / p.a_max;
  }
  const double secs = since(t0);
  v.detail << "max rel d_stop error " << worst_rel << ", max arc error " << worst_arc;
  v.require(worst_rel < 1e-6, "d_stop rel < 1e-6");
  v.require(worst_arc < 1e-4, "arc-chord < 1e-4");
  v.require(exact_t, "t_stop == v0/a");
  v.require(secs < 5.0, "runtime < 5 s");
}

void timed_check(Verdict& v, const bayes::CheckResult& r, double secs, double limit) {
  v.detail << r.detail;
  v.require(r.passed, r.name);
  v.require(secs < limit, "runtime");
}

void interventions(Verdict& v) {
  using namespace bayes;
  // a -> b -> c, a -> c, d free standing
  LinearGaussianNet net;
  net.add_node("a", {}, Cpd{{}, 1.0, 1.0});
  net.add_node("b", {0}, Cpd{{0.9}, 0.5, 0.5});
  net.add_node("c", {0, 1}, Cpd{{0.4, -0.7}, -0.2, 0.3});
  net.add_node("d", {}, Cpd{{}, 2.0, 0.8});
  Intervention iv;
  iv.assignments = {{1, 2.5}};
  const LinearGaussianNet cut = intervene(net, iv);
  v.require(cut.is_point_mass(1) && cut.joint().cov(1, 1) == 0.0 && cut.joint().mean(1) == 2.5,
            "do() point mass");
  GibbsOptions g;
  g.samples = 400;
  const std::vector<std::size_t> q{1, 2};
  const Posterior base = gibbs_posterior(net, iv, {{0, 0.0}}, q, g);
  v.require(base.mean[0] == 2.5 && base.stddev[0] == 0.0, "sampled target stays at the assigned value");
  // evidence on the former parent a still moves c through a -> c, but not
  // through b; in the chain a -> b -> c it has no influence at all
  LinearGaussianNet chain;
  chain.add_node("a", {}, Cpd{{}, 0.0, 1.0});
  chain.add_node("b", {0}, Cpd{{1.5}, 0.0, 1.0});
  chain.add_node("c", {1}, Cpd{{0.8}, 0.0, 1.0});
  const std::vector<std::size_t> qc{2};
  const double m1 = gibbs_posterior(chain, iv, {{0, -8.0}}, qc, g).mean[0];
  const double m2 = gibbs_posterior(chain, iv, {{0, 12.0}}, qc, g).mean[0];
  v.require(m1 == m2, "former-parent evidence has no influence");
  const auto nd = non_descendants(net, std::vector<std::size_t>{1});
  v.require(nd == std::vector<bool>{true, false, false, true}, "non-descendants of b");
  const auto nd0 = non_descendants(net, std::vector<std::size_t>{0});
  v.require(nd0 == std::vector<bool>{false, false, false, true}, "non-descendants of a");
  const JointGaussian before = net.joint();
  const JointGaussian after = cut.joint();
  v.require(std::abs(before.mean(0) - after.mean(0)) < 1e-12 && std::abs(before.cov(3, 3) - after.cov(3, 3)) < 1e-12,
            "non-descendant marginals unchanged");
  v.detail << "chain posterior of c under do(b=2.5): " << m1;
}

void golden_free(Verdict& v) {
  const auto t0 = Clock::now();
  std::size_t hazards = 0;
  for (const auto& id : builtin_scenario_ids()) {
    const GoldenSummary g = run_golden(builtin_scenario(id), 50, 1, 0, std::nullopt);
    hazards += g.hazards;
    v.detail << id << " min_cipo " << g.min_min_cipo << "; ";
  }
  v.detail << "hazards " << hazards;
  v.require(hazards == 0, "zero golden hazards");
  v.require(since(t0) < 300.0, "runtime < 5 min");
}

struct MiningStage {
  bool ran = false;
  bayes::TemporalBayesNet model;
  double training_seconds = 0.0;
  std::map<std::string, MineOutcome> mined;
  std::map<std::string, double> random_rate;  // percent
  std::map<std::string, double> seconds;
};

MiningStage& mining_stage() {
  static MiningStage s;
  return s;
}

void mining_vs_random(Verdict& v) {
  MiningStage& st = mining_stage();
  const auto t0 = Clock::now();
  bayes::TrainingOptions to;
  const TrainOutcome t = run_training(to, work_dir() / "model");
  st.model = t.model;
  st.training_seconds = t.seconds;
  v.detail << "trained on " << t.records << " records in " << t.seconds << "s; ";
  for (const std::string id : {"A5", "A6"}) {
    const auto s0 = Clock::now();
    CampaignConfig c;
    c.label = "random";
    c.scenario = id;
    c.model = FaultModel::OneRandom;
    c.experiments = 500;
    c.traces = false;
    c.out = work_dir() / ("random_" + id);
    const CampaignResult r = run_campaign(c);
    std::size_t hazards = 0;
    for (const auto& e : r.experiments) hazards += e.metrics.hazard ? 1 : 0;
    const double rate = 100.0 * static_cast<double>(hazards) / 500.0;
    const MineOutcome m = run_mining(st.model, builtin_scenario(id), MineOptions{}, work_dir() / ("mine_" + id));
    st.mined[id] = m;
    st.random_rate[id] = rate;
    st.seconds[id] = since(s0);
    v.detail << id << " random " << rate << "%, mined replay " << m.manifestation_percent << "% of "
             << m.mining.pairs.size() << "; ";
    v.require(rate <= 1.0, id + " random hazard <= 1%");
    v.require(!m.mining.pairs.empty() && m.manifestation_percent >= 50.0, id + " mined replay >= 50%");
    v.require(m.manifestation_percent >= 20.0 * rate, id + " mined >= 20x random");
  }
  const MineOutcome a4 = run_mining(st.model, builtin_scenario("A4"), MineOptions{}, work_dir() / "mine_A4");
  st.mined["A4"] = a4;
  st.ran = true;
  v.require(since(t0) < 1800.0, "runtime < 30 min");
}

void tag_clusters(Verdict& v) {
  MiningStage& st = mining_stage();
  if (!st.ran) throw std::runtime_error("mining stage did not run");
  const auto& a4 = st.mined.at("A4");
  const auto& m4 = a4.mining;
  const bool zero = m4.pairs.empty() && m4.critical_scenes.empty() && a4.replay_hazards == 0 &&
                    m4.critical_fault_percent() == 0.0 && m4.critical_scene_percent() == 0.0;
  v.detail << "A4 fcrit " << m4.pairs.size() << "; ";
  v.require(zero, "A4 row all zero");
  for (const std::string id : {"A5", "A6"}) {
    const auto& m = st.mined.at(id);
    std::size_t tagged = 0;
    for (std::size_t s : m.mining.critical_scenes) {
      const auto near = tags_near(s, m.tags, kTagLead, kTagLag);
      if (!near.empty()) ++tagged;
      v.detail << id << "@" << s << ":";
      for (auto t : near) v.detail << to_string(t) << "|";
      v.detail << " ";
    }
    v.require(!m.mining.critical_scenes.empty(), id + " has critical scenes");
    v.require(tagged == m.mining.critical_scenes.size(), id + " every critical scene near a tagged frame");
  }
}

void speedup(Verdict& v) {
  MiningStage& st = mining_stage();
  if (!st.ran) throw std::runtime_error("mining stage did not run");
  const auto& m = st.mined.at("A5");
  const double s = mining_speedup(m.mining.scenes, m.mining.catalog_size, m.per_replay_seconds,
                                  m.mining.seconds, m.mining.pairs.size());
  v.detail << "scenes " << m.mining.scenes << " x catalog " << m.mining.catalog_size << " x "
           << m.per_replay_seconds << "s vs mining " << m.mining.seconds << "s + " << m.mining.pairs.size()
           << " replays: " << s << "x";
  v.require(s >= 10.0, "speedup >= 10");
}

void compensation_shape(Verdict& v) {
  const Scenario sc = builtin_scenario("A3");
  const std::size_t start = 100;
  const std::size_t duration = 30;
  FaultPlan p;
  p.model = FaultModel::MFixed;
  p.start = start;
  p.duration = duration;
  p.types = {parse_fault_type("control.throttle:max")};
  Injector inj(p);
  RunOptions o;
  o.seed = 1;
  const RunResult gold = simulate(sc, o);
  o.hook = &inj;
  const RunResult run = simulate(sc, o);
  std::vector<double> bi, bg;
  for (const auto& f : run.frames) bi.push_back(f.vars[index(VarId::brake)]);
  for (const auto& f : gold.frames) bg.push_back(f.vars[index(VarId::brake)]);
  const auto c = compensation(bi, bg);
  const std::size_t n = c.size();
  double pre = 0.0;
  for (std::size_t k = 0; k < start; ++k) pre = std::max(pre, std::abs(c[k]));
  const std::size_t end = start + duration;
  double late_max = c[end];
  for (std::size_t k = end; k < n; ++k) late_max = std::max(late_max, c[k]);
  const std::size_t tail = n - n / 5;
  double lo = c[tail], hi = c[tail];
  for (std::size_t k = tail; k < n; ++k) {
    lo = std::min(lo, c[k]);
    hi = std::max(hi, c[k]);
  }
  v.detail << "pre-window max |c| " << pre << ", c(start) " << c[start] << ", c(end) " << c[end]
           << ", final " << c[n - 1] << ", tail spread " << hi - lo;
  v.require(n == sc.scenes, "full-length runs");
  v.require(pre < 1e-9, "c ~ 0 before the window");
  v.require(c[end] > c[start] + 1e-3, "c increases during the window");
  v.require(c[n - 1] > c[end], "c increases after the window");
  v.require(hi - lo < 1e-3, "plateau within 1e-3 over the final 20%");
}

void determinism(Verdict& v) {
  CampaignConfig c;
  c.label = "det";
  c.scenario = "A6";
  c.model = FaultModel::BitFlip;
  c.experiments = 40;
  c.golden_seeds = 5;
  c.seed = 17;
  std::vector<fs::path> dirs;
  for (std::size_t w : {std::size_t{1}, std::size_t{0}}) {
    c.workers = w;
    c.out = work_dir() / ("det_" + std::to_string(w));
    fs::remove_all(c.out);
    (void)run_campaign(c);
    write_report({c.out}, c.out / "report");
    dirs.push_back(c.out);
  }
  std::size_t compared = 0;
  std::size_t differ = 0;
  for (const auto& e : fs::recursive_directory_iterator(dirs[0])) {
    if (!e.is_regular_file() || e.path().filename() == "timing.csv") continue;
    const fs::path rel = fs::relative(e.path(), dirs[0]);
    if (rel.filename() == "config.json") continue;  // records the worker count
    ++compared;
    if (slurp(e.path()) != slurp(dirs[1] / rel)) {
      ++differ;
      v.detail << "differs: " << rel.string() << "; ";
    }
  }
  v.detail << compared << " files compared across serial and parallel runs";
  v.require(compared > 80, "traces and reports present");
  v.require(differ == 0, "byte-identical outputs");
}

}  // namespace

int main() {
  fs::remove_all(work_dir());
  fs::create_directories(work_dir());

  criterion(1, "kinematics oracles", kinematics);
  criterion(2, "gibbs vs exact", [](Verdict& v) {
    const auto t0 = Clock::now();
    const auto r = bayes::check_gibbs_exact(1, 20);
    timed_check(v, r, since(t0), 60.0);
  });
  criterion(3, "em recovery", [](Verdict& v) {
    const auto t0 = Clock::now();
    const auto r = bayes::check_em_recovery(1, 10000);
    timed_check(v, r, since(t0), 60.0);
  });
  criterion(4, "intervention properties", interventions);
  criterion(5, "golden runs hazard free", golden_free);
  criterion(6, "mined vs random injection", mining_vs_random);
  criterion(7, "critical scene clusters", tag_clusters);
  criterion(8, "mining speedup", speedup);
  criterion(9, "compensation shape", compensation_shape);
  criterion(10, "deterministic re-run", determinism);

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
