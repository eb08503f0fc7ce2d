// SPDX-License-Identifier: Apache-2.0
//
// Built-in numerical self-checks: EM parameter recovery on a synthetic
// temporal network and Gibbs posteriors against closed-form conditioning.

#ifndef BFI_BAYES_SELFCHECK_HPP
#define BFI_BAYES_SELFCHECK_HPP

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "bfi/bayes/em.hpp"
#include "bfi/bayes/gibbs.hpp"
#include "bfi/bayes/network.hpp"

namespace bfi::bayes {

/// Three-slice network with three variables per slice (x, y, z). Slices 1
/// and 2 share parameters. With `truth` the CPDs hold the generating
/// parameters (sigma 0.1 in the tied slices), otherwise zero weights and
/// unit sigma.
[[nodiscard]] LinearGaussianNet synthetic_tbn(bool truth);

/// Ancestral samples; each entry is replaced by NaN with probability `missing`.
[[nodiscard]] Dataset sample_dataset(const LinearGaussianNet& net, std::size_t rows,
                                     double missing, std::uint64_t seed);

/// Posterior mean of `query` under do(iv) and evidence, by Gaussian
/// conditioning on the joint of the intervened net.
[[nodiscard]] std::vector<double> exact_posterior_mean(const LinearGaussianNet& net,
                                                       const Intervention& iv,
                                                       const Assignment& evidence,
                                                       const std::vector<std::size_t>& query);

/// Random DAG with n nodes in index order: edge probability p, weights in
/// [-1, 1], intercepts in [-2, 2], sigma in [0.3, 1.5].
[[nodiscard]] LinearGaussianNet random_net(std::size_t n, double p, std::mt19937_64& rng);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// EM on synthetic_tbn data: every tied weight within 5% relative, log-likelihood monotone.
[[nodiscard]] CheckResult check_em_recovery(std::uint64_t seed, std::size_t rows = 10000);
/// Gibbs vs exact on `nets` random nets with evidence and one intervention.
[[nodiscard]] CheckResult check_gibbs_exact(std::uint64_t seed, std::size_t nets = 20);

[[nodiscard]] std::vector<CheckResult> run_selfchecks(std::uint64_t seed);

}  // namespace bfi::bayes

#endif  // BFI_BAYES_SELFCHECK_HPP
