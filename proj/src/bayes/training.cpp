// SPDX-License-Identifier: Apache-2.0

#include "bfi/bayes/training.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

#include "bfi/digest.hpp"
#include "bfi/fault.hpp"

namespace bfi::bayes {

void append_triples(const TemporalBayesNet& tbn, const std::vector<FrameRecord>& frames,
                    const std::vector<std::vector<VarId>>& injected, std::size_t first,
                    std::size_t last, std::vector<std::vector<double>>& rows,
                    std::vector<std::vector<std::uint32_t>>& skip, std::size_t& dropped) {
  const std::size_t S = tbn.slice_size();
  if (frames.size() < 3) return;
  first = std::max<std::size_t>(first, 1);
  last = std::min(last, frames.size() - 2);
  for (std::size_t j = first; j <= last; ++j) {
    std::vector<double> row(kSlices * S);
    for (std::size_t t = 0; t < kSlices; ++t) {
      tbn.encode(frames[j - 1 + t].vars, std::span<double>(row.data() + t * S, S));
    }
    if (!std::all_of(row.begin(), row.end(), [](double v) { return std::isfinite(v); })) {
      ++dropped;
      continue;
    }
    std::vector<std::uint32_t> sk;
    for (std::size_t t = 0; t < kSlices; ++t) {
      const std::size_t scene = j - 1 + t;
      if (scene >= injected.size()) continue;
      for (VarId v : injected[scene]) {
        for (std::size_t n : tbn.nodes_of(v, t)) sk.push_back(static_cast<std::uint32_t>(n));
      }
    }
    rows.push_back(std::move(row));
    skip.push_back(std::move(sk));
  }
}

namespace {

struct Job {
  std::size_t scenario = 0;
  std::uint64_t sim_seed = 1;
  std::optional<FaultPlan> plan;
  std::size_t manifest = 0;  // manifest entry index
};

struct JobOutput {
  std::vector<std::vector<double>> rows;
  std::vector<std::vector<std::uint32_t>> skip;
  std::size_t dropped = 0;
};

}  // namespace

TrainingSet make_training_set(const TemporalBayesNet& tbn, const TrainingOptions& options) {
  if (options.scenarios.empty()) throw std::invalid_argument("training needs at least one scenario");
  if (options.replications == 0) throw std::invalid_argument("replications must be positive");
  if (options.max_duration == 0) throw std::invalid_argument("max_duration must be positive");
  std::vector<Scenario> scenarios;
  for (const auto& id : options.scenarios) scenarios.push_back(resolve_scenario(id));

  TrainingSet set;
  std::vector<Job> jobs;
  set.manifest.push_back({"golden", 0, 0});
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    for (std::size_t g = 0; g < options.golden_seeds; ++g) {
      jobs.push_back({s, g + 1, std::nullopt, 0});
      ++set.manifest[0].runs;
    }
  }
  const auto& catalog = fault_catalog();
  for (std::size_t fi = 0; fi < catalog.size(); ++fi) {
    set.manifest.push_back({catalog[fi].name(), options.replications, 0});
    for (std::size_t r = 0; r < options.replications; ++r) {
      std::mt19937_64 rng(derive_seed(options.seed, fi, r));
      const std::size_t s = (fi + r) % scenarios.size();
      const std::size_t scenes = scenarios[s].scenes;
      FaultPlan p;
      p.duration = std::uniform_int_distribution<std::size_t>(
          1, std::min(options.max_duration, scenes > 4 ? scenes - 4 : 1))(rng);
      p.model = p.duration == 1 ? FaultModel::OneFixed : FaultModel::MFixed;
      p.start = std::uniform_int_distribution<std::size_t>(1, scenes - p.duration - 2)(rng);
      p.types = {catalog[fi]};
      p.seed = rng();
      jobs.push_back({s, 1 + r % 5, p, fi + 1});
    }
  }

  std::vector<JobOutput> outputs(jobs.size());
  auto work = [&](std::size_t i) {
    const Job& job = jobs[i];
    const Scenario& sc = scenarios[job.scenario];
    JobOutput& out = outputs[i];
    RunOptions ro;
    ro.seed = job.sim_seed;
    if (!job.plan) {
      const RunResult r = simulate(sc, ro);
      append_triples(tbn, r.frames, {}, 1, r.frames.size(), out.rows, out.skip, out.dropped);
      return;
    }
    Injector inj(*job.plan);
    ro.hook = &inj;
    const RunResult r = simulate(sc, ro);
    std::vector<std::vector<VarId>> injected(r.frames.size());
    for (const auto& rec : inj.log()) {
      if (rec.scene < injected.size()) injected[rec.scene].push_back(rec.var);
    }
    const std::size_t start = job.plan->start;
    const std::size_t first = start - std::min(start, options.window_before);
    const std::size_t last = start + job.plan->duration + options.window_after;
    append_triples(tbn, r.frames, injected, first, last, out.rows, out.skip, out.dropped);
  };
  const auto n = static_cast<std::ptrdiff_t>(jobs.size());
  if (options.parallel) {
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t i = 0; i < n; ++i) work(static_cast<std::size_t>(i));
  } else {
    for (std::ptrdiff_t i = 0; i < n; ++i) work(static_cast<std::size_t>(i));
  }

  std::size_t total = 0;
  for (const auto& o : outputs) total += o.rows.size();
  const std::size_t width = kSlices * tbn.slice_size();
  set.data.values.resize(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(width));
  set.data.skip.reserve(total);
  Eigen::Index row = 0;
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    auto& o = outputs[i];
    for (std::size_t r = 0; r < o.rows.size(); ++r, ++row) {
      for (std::size_t c = 0; c < width; ++c) set.data.values(row, static_cast<Eigen::Index>(c)) = o.rows[r][c];
      set.data.skip.push_back(std::move(o.skip[r]));
    }
    set.manifest[jobs[i].manifest].records += o.rows.size();
    set.dropped += o.dropped;
    o = {};
  }
  return set;
}

}  // namespace bfi::bayes
