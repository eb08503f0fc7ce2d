// SPDX-License-Identifier: Apache-2.0
//
// Parameter learning for linear-Gaussian networks by expectation maximization.

#ifndef BFI_BAYES_EM_HPP
#define BFI_BAYES_EM_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "bfi/bayes/network.hpp"

namespace bfi::bayes {

/// One row per record, one column per node. NaN marks a missing value.
/// `skip[r]` lists nodes whose value in record r was forced from outside the
/// model (an injected fault): the value still feeds its children but the
/// record is not evidence for the node's own CPD. Rows with skipped nodes must
/// be complete.
struct Dataset {
  Eigen::MatrixXd values;
  std::vector<std::vector<std::uint32_t>> skip;

  [[nodiscard]] std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
};

struct EmOptions {
  std::size_t max_iterations = 50;
  double tolerance = 1e-8;  // relative log-likelihood improvement
  double ridge = 1e-6;      // added to a singular normal matrix
  double sigma_floor = 1e-6;
  bool check_size = true;   // require rows >= 10 x parameter count
};

struct EmResult {
  std::vector<double> log_likelihood;  // before the first and after every iteration
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<std::string> warnings;
};

/// Free parameters: weights + intercept + sigma per CPD group (ungrouped nodes
/// count as their own group).
[[nodiscard]] std::size_t parameter_count(const LinearGaussianNet& net);

/// Log-likelihood of the observed entries (the partition function never
/// appears: every factor is a normalized Gaussian).
[[nodiscard]] double log_likelihood(const LinearGaussianNet& net, const Dataset& data);

/// Fits every CPD in place. Complete rows contribute exact sufficient
/// statistics; incomplete rows contribute expectations under the current
/// joint Gaussian. Throws std::invalid_argument when the data is too small
/// or malformed.
EmResult em_train(LinearGaussianNet& net, const Dataset& data, const EmOptions& options = {});

}  // namespace bfi::bayes

#endif  // BFI_BAYES_EM_HPP
