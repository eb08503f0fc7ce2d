// SPDX-License-Identifier: Apache-2.0
//
// Serial reference against the OpenMP mining kernel on one golden run.
//
//   bench_mining [scenario] [repeats] [model.tsv]
//
// Without a model file an untrained network is used; the cost per
// counterfactual query does not depend on the parameter values.

#include <omp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <vector>

#include "bfi/bayes/mining.hpp"
#include "bfi/bayes/tbn.hpp"

namespace {

using Clock = std::chrono::steady_clock;

template <class F>
double best_of(int repeats, F&& f) {
  double best = 1e300;
  for (int i = 0; i < repeats; ++i) {
    const auto t0 = Clock::now();
    f();
    best = std::min(best, std::chrono::duration<double>(Clock::now() - t0).count());
  }
  return best;
}

bool same(const bfi::bayes::MiningResult& a, const bfi::bayes::MiningResult& b) {
  if (a.pairs.size() != b.pairs.size() || a.evaluations != b.evaluations) return false;
  for (std::size_t i = 0; i < a.pairs.size(); ++i) {
    if (a.pairs[i].scene != b.pairs[i].scene || !(a.pairs[i].fault == b.pairs[i].fault) ||
        a.pairs[i].delta_hat_long != b.pairs[i].delta_hat_long)
      return false;
  }
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  const std::string id = argc > 1 ? argv[1] : "A5";
  const int repeats = argc > 2 ? std::max(1, std::atoi(argv[2])) : 3;
  bfi::bayes::TemporalBayesNet tbn;
  if (argc > 3) {
    tbn = bfi::bayes::load_model(argv[3]);
  } else {
    tbn = bfi::bayes::TemporalBayesNet::build();
    tbn.trained = true;
  }
  bfi::Scenario sc = bfi::resolve_scenario(id);
  if (argc <= 3) sc.scenes = std::min<std::size_t>(sc.scenes, 400);
  const auto golden = bfi::bayes::golden_for_mining(sc, 1);
  const auto& catalog = bfi::fault_catalog();

  bfi::bayes::MiningResult serial, parallel;
  const double ts = best_of(repeats, [&] { serial = bfi::bayes::mine_fcrit_serial(tbn, sc, golden, catalog); });
  std::printf("kernel,threads,scenes,evaluations,seconds,speedup,identical\n");
  std::printf("serial,1,%zu,%zu,%.4f,1.00,yes\n", serial.scenes, serial.evaluations, ts);
  const int max_threads = omp_get_max_threads();
  std::vector<int> counts;
  for (int t = 1; t < max_threads; t *= 2) counts.push_back(t);
  counts.push_back(max_threads);
  for (int t : counts) {
    omp_set_num_threads(t);
    const double tp = best_of(repeats, [&] { parallel = bfi::bayes::mine_fcrit(tbn, sc, golden, catalog); });
    std::printf("openmp,%d,%zu,%zu,%.4f,%.2f,%s\n", t, parallel.scenes, parallel.evaluations, tp, ts / tp,
                same(serial, parallel) ? "yes" : "NO");
  }
  return same(serial, parallel) ? 0 : 1;
}
