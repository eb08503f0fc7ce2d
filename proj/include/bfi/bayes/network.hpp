// SPDX-License-Identifier: Apache-2.0
//
// Linear-Gaussian Bayesian network: x | pa(x) ~ N(w . pa(x) + c, sigma^2).

#ifndef BFI_BAYES_NETWORK_HPP
#define BFI_BAYES_NETWORK_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace bfi::bayes {

struct Cpd {
  std::vector<double> weights;  // one per parent, same order as Node::parents
  double intercept = 0.0;
  double sigma = 1.0;  // 0 only for point masses created by an intervention
};

struct Node {
  std::string name;
  std::vector<std::size_t> parents;
  Cpd cpd;
  /// Nodes with the same non-negative group share their CPD parameters
  /// during training (slice tying in a temporal network).
  int group = -1;
};

class CycleError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct JointGaussian {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// (node, value) pairs.
using Assignment = std::vector<std::pair<std::size_t, double>>;

class LinearGaussianNet {
 public:
  /// Parents may refer to nodes added later; acyclicity is checked by
  /// topological_order().
  std::size_t add_node(std::string name, std::vector<std::size_t> parents, Cpd cpd = {},
                       int group = -1);

  [[nodiscard]] std::size_t size() const { return nodes_.size(); }
  [[nodiscard]] const Node& node(std::size_t i) const { return nodes_.at(i); }
  [[nodiscard]] Node& node(std::size_t i) { return nodes_.at(i); }
  [[nodiscard]] const std::vector<Node>& nodes() const { return nodes_; }
  [[nodiscard]] std::optional<std::size_t> find(const std::string& name) const;

  /// Kahn order; throws CycleError.
  [[nodiscard]] std::vector<std::size_t> topological_order() const;
  [[nodiscard]] std::vector<std::vector<std::size_t>> children() const;
  [[nodiscard]] std::vector<bool> descendants(std::span<const std::size_t> targets) const;
  [[nodiscard]] std::vector<bool> ancestors(std::span<const std::size_t> targets) const;
  [[nodiscard]] bool is_point_mass(std::size_t i) const {
    return nodes_[i].parents.empty() && nodes_[i].cpd.sigma == 0.0;
  }

  /// CPD mean given parent values taken from x (indexed by node).
  [[nodiscard]] double cpd_mean(std::size_t i, std::span<const double> x) const;
  /// Joint distribution of all nodes, computed recursively in topological order.
  [[nodiscard]] JointGaussian joint() const;
  /// Digest of names and parent lists.
  [[nodiscard]] std::uint64_t topology_digest() const;
  /// Parent indices in range, weight counts match, sigma >= 0, acyclic.
  void validate() const;

 private:
  std::vector<Node> nodes_;
};

/// do(x = c) for every assignment: edges into x are removed and x becomes a
/// point mass at c. Edges out of x are kept.
struct Intervention {
  Assignment assignments;
  [[nodiscard]] std::vector<std::size_t> targets() const;
};

[[nodiscard]] LinearGaussianNet intervene(const LinearGaussianNet& net, const Intervention& iv);

/// Nodes that are neither targets nor descendants of a target.
[[nodiscard]] std::vector<bool> non_descendants(const LinearGaussianNet& net,
                                                std::span<const std::size_t> targets);

}  // namespace bfi::bayes

#endif  // BFI_BAYES_NETWORK_HPP
