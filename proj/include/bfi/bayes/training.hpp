// SPDX-License-Identifier: Apache-2.0
//
// Training data for the temporal network: golden runs plus every catalog
// fault type injected a fixed number of times, windowed into (k-1, k, k+1)
// triples.

#ifndef BFI_BAYES_TRAINING_HPP
#define BFI_BAYES_TRAINING_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "bfi/bayes/em.hpp"
#include "bfi/bayes/tbn.hpp"
#include "bfi/scenario.hpp"

namespace bfi::bayes {

struct TrainingOptions {
  std::vector<std::string> scenarios{"A1", "A2", "A3", "A4", "A5", "A6"};
  std::size_t golden_seeds = 2;    // golden runs per scenario
  std::size_t replications = 30;   // injections per catalog fault type
  std::size_t max_duration = 20;   // injected scenes per replication, uniform on [1, max]
  std::size_t window_before = 2;   // triples kept before the first injected scene
  std::size_t window_after = 30;   // and after the last one
  std::uint64_t seed = 1;
  bool parallel = true;
};

struct ManifestEntry {
  std::string fault;  // fault type name, or "golden"
  std::size_t runs = 0;
  std::size_t records = 0;
};

struct TrainingSet {
  Dataset data;
  std::vector<ManifestEntry> manifest;
  std::size_t dropped = 0;  // triples with non-finite values
};

/// Deterministic in the options; the parallel and serial paths produce the
/// same rows in the same order.
[[nodiscard]] TrainingSet make_training_set(const TemporalBayesNet& tbn,
                                            const TrainingOptions& options);

/// Appends the triples of one run. `injected[k]` lists variables corrupted at
/// scene k; only triples with a centre scene in [first, last] are kept.
void append_triples(const TemporalBayesNet& tbn, const std::vector<FrameRecord>& frames,
                    const std::vector<std::vector<VarId>>& injected, std::size_t first,
                    std::size_t last, std::vector<std::vector<double>>& rows,
                    std::vector<std::vector<std::uint32_t>>& skip, std::size_t& dropped);

}  // namespace bfi::bayes

#endif  // BFI_BAYES_TRAINING_HPP
