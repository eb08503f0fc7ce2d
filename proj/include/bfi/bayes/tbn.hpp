// SPDX-License-Identifier: Apache-2.0
//
// Three-slice temporal Bayesian network over the ADS variable registry.
// Slice 0 is scene k-1, slice 1 scene k, slice 2 scene k+1. Same-scene edges
// follow the registry inputs, cross-scene edges the registry prev_inputs.
// Categorical variables with C categories become C-1 indicator nodes
// (category 0 is the reference); every consumer gets the whole block.

#ifndef BFI_BAYES_TBN_HPP
#define BFI_BAYES_TBN_HPP

#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bfi/bayes/network.hpp"
#include "bfi/fault.hpp"
#include "bfi/registry.hpp"

namespace bfi::bayes {

inline constexpr std::size_t kSlices = 3;

struct SliceNode {
  VarId var;
  int category = -1;  // indicator for this category, -1 for numeric nodes
  std::string name;
};

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class TemporalBayesNet {
 public:
  /// Throws CycleError when the same-scene data flow has a cycle.
  static TemporalBayesNet build(const std::vector<VariableSpec>& variables = registry());

  [[nodiscard]] const LinearGaussianNet& net() const { return net_; }
  [[nodiscard]] LinearGaussianNet& net() { return net_; }
  [[nodiscard]] const std::vector<SliceNode>& slice_nodes() const { return slice_; }
  [[nodiscard]] std::size_t slice_size() const { return slice_.size(); }
  [[nodiscard]] std::size_t node(std::size_t slice, std::size_t slice_node) const {
    return slice * slice_.size() + slice_node;
  }
  /// Nodes of a variable in one slice (one, or C-1 indicators).
  [[nodiscard]] std::vector<std::size_t> nodes_of(VarId var, std::size_t slice) const;
  /// Slice-sized numeric encoding of a frame.
  void encode(const VarFrame& frame, std::span<double> out) const;
  [[nodiscard]] std::vector<double> encode(const VarFrame& frame) const;
  /// Category with the largest posterior indicator mass (reference gets 1 - sum).
  [[nodiscard]] int decode_category(VarId var, std::span<const double> indicator_means) const;

  /// do() assignment for a fault type applied at `slice` to a golden frame.
  [[nodiscard]] Assignment fault_assignment(const FaultType& fault, std::size_t slice,
                                            const VarFrame& golden) const;

  [[nodiscard]] std::uint64_t digest() const { return net_.topology_digest(); }
  bool trained = false;

 private:
  LinearGaussianNet net_;
  std::vector<SliceNode> slice_;
  std::vector<std::size_t> first_;  // per registry variable, first slice-node index
  std::vector<std::size_t> width_;  // nodes per variable
  std::vector<std::size_t> categories_;
};

/// Human-readable, tab-delimited model file. Loading rebuilds the topology
/// from the registry and throws ModelError on any mismatch.
void save_model(const std::filesystem::path& path, const TemporalBayesNet& tbn);
[[nodiscard]] TemporalBayesNet load_model(const std::filesystem::path& path);

}  // namespace bfi::bayes

#endif  // BFI_BAYES_TBN_HPP
