// SPDX-License-Identifier: Apache-2.0
//
// Gibbs sampling for linear-Gaussian networks. Every full conditional is
// Gaussian, so each site update is an exact draw.

#ifndef BFI_BAYES_GIBBS_HPP
#define BFI_BAYES_GIBBS_HPP

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "bfi/bayes/network.hpp"

namespace bfi::bayes {

/// centered: sites are node values. noncentered: sites are the standardized
/// CPD residuals of the free nodes (x = CPD mean + sigma * eps); chains do not
/// stall on near-deterministic CPDs.
enum class Parameterization { centered, noncentered };

struct GibbsOptions {
  std::size_t burn_in = 200;
  std::size_t samples = 2000;
  std::size_t chains = 4;
  std::uint64_t seed = 1;
  Parameterization parameterization = Parameterization::noncentered;
  double rhat_threshold = 1.05;
};

struct Posterior {
  std::vector<std::size_t> query;
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<double> rhat;
  double max_rhat = 1.0;
  bool converged = true;

  /// Mean of a query node; throws std::out_of_range for other nodes.
  [[nodiscard]] double mean_of(std::size_t node) const;
};

/// Sampler compiled for one network and one observed/intervened pattern.
/// Nodes marked `fixed`, and intervened point masses, take their values from
/// run() (so one sampler serves any intervention value); everything else is
/// sampled, after removing free nodes that are not ancestors of a query or
/// fixed node (they cannot affect the answer). Shareable across threads.
class GibbsSampler {
 public:
  GibbsSampler(const LinearGaussianNet& net, std::vector<bool> fixed,
               std::vector<std::size_t> query, GibbsOptions options);

  /// `values` has one entry per node; only fixed entries are read.
  [[nodiscard]] Posterior run(std::span<const double> values, std::uint64_t seed) const;
  [[nodiscard]] Posterior run(std::span<const double> values) const {
    return run(values, options_.seed);
  }
  [[nodiscard]] std::size_t free_count() const { return free_.size(); }
  [[nodiscard]] const GibbsOptions& options() const { return options_; }

 private:
  struct Site {
    std::size_t node;
    double sigma;
    std::vector<std::pair<std::size_t, double>> children;  // (node, weight of this site)
  };

  void run_chain(std::vector<double>& x, std::uint64_t seed,
                 std::vector<std::vector<double>>& trace) const;
  void sweep_centered(std::vector<double>& x, std::mt19937_64& rng) const;

  LinearGaussianNet net_;
  std::vector<bool> fixed_;
  std::vector<std::size_t> query_;
  GibbsOptions options_;
  std::vector<Site> free_;             // topological order
  std::vector<std::size_t> likelihood_;  // fixed nodes with a free parent
  std::vector<int> free_slot_;         // node -> index in free_, or -1
  // noncentered: d x_free[a] / d eps[b] and d residual[o] / d eps[b]
  Eigen::MatrixXd jac_;
  Eigen::MatrixXd res_jac_;
};

/// Posterior under do(iv) given evidence. Evidence on intervened nodes is
/// ignored (they are point masses).
[[nodiscard]] Posterior gibbs_posterior(const LinearGaussianNet& net, const Intervention& iv,
                                        const Assignment& evidence,
                                        std::span<const std::size_t> query,
                                        const GibbsOptions& options);

/// Split potential scale reduction over equally long chains.
[[nodiscard]] double split_rhat(const std::vector<std::vector<double>>& chains);

}  // namespace bfi::bayes

#endif  // BFI_BAYES_GIBBS_HPP
