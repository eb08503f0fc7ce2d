// SPDX-License-Identifier: Apache-2.0

#include "bfi/bayes/network.hpp"

#include <algorithm>
#include <queue>

#include "bfi/digest.hpp"

namespace bfi::bayes {

std::size_t LinearGaussianNet::add_node(std::string name, std::vector<std::size_t> parents,
                                        Cpd cpd, int group) {
  if (cpd.weights.empty()) cpd.weights.assign(parents.size(), 0.0);
  nodes_.push_back({std::move(name), std::move(parents), std::move(cpd), group});
  return nodes_.size() - 1;
}

std::optional<std::size_t> LinearGaussianNet::find(const std::string& name) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].name == name) return i;
  }
  return std::nullopt;
}

std::vector<std::vector<std::size_t>> LinearGaussianNet::children() const {
  std::vector<std::vector<std::size_t>> ch(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    for (std::size_t p : nodes_[i].parents) ch.at(p).push_back(i);
  }
  return ch;
}

std::vector<std::size_t> LinearGaussianNet::topological_order() const {
  const auto ch = children();
  std::vector<std::size_t> indeg(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) indeg[i] = nodes_[i].parents.size();
  // min-heap keeps the order stable and independent of insertion details
  std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> ready;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (indeg[i] == 0) ready.push(i);
  }
  std::vector<std::size_t> order;
  order.reserve(nodes_.size());
  while (!ready.empty()) {
    const std::size_t i = ready.top();
    ready.pop();
    order.push_back(i);
    for (std::size_t c : ch[i]) {
      if (--indeg[c] == 0) ready.push(c);
    }
  }
  if (order.size() != nodes_.size()) {
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (indeg[i] != 0) throw CycleError("cycle through node " + nodes_[i].name);
    }
  }
  return order;
}

std::vector<bool> LinearGaussianNet::descendants(std::span<const std::size_t> targets) const {
  const auto ch = children();
  std::vector<bool> seen(nodes_.size(), false);
  std::vector<std::size_t> stack;
  for (std::size_t t : targets) {
    for (std::size_t c : ch.at(t)) stack.push_back(c);
  }
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    if (seen[i]) continue;
    seen[i] = true;
    for (std::size_t c : ch[i]) stack.push_back(c);
  }
  return seen;
}

std::vector<bool> LinearGaussianNet::ancestors(std::span<const std::size_t> targets) const {
  std::vector<bool> seen(nodes_.size(), false);
  std::vector<std::size_t> stack;
  for (std::size_t t : targets) {
    for (std::size_t p : nodes_.at(t).parents) stack.push_back(p);
  }
  while (!stack.empty()) {
    const std::size_t i = stack.back();
    stack.pop_back();
    if (seen[i]) continue;
    seen[i] = true;
    for (std::size_t p : nodes_[i].parents) stack.push_back(p);
  }
  return seen;
}

double LinearGaussianNet::cpd_mean(std::size_t i, std::span<const double> x) const {
  const Node& n = nodes_[i];
  double m = n.cpd.intercept;
  for (std::size_t j = 0; j < n.parents.size(); ++j) m += n.cpd.weights[j] * x[n.parents[j]];
  return m;
}

JointGaussian LinearGaussianNet::joint() const {
  const auto order = topological_order();
  const auto n = static_cast<Eigen::Index>(nodes_.size());
  JointGaussian g{Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Zero(n, n)};
  std::vector<std::size_t> done;
  done.reserve(nodes_.size());
  for (std::size_t i : order) {
    const Node& node = nodes_[i];
    const auto ii = static_cast<Eigen::Index>(i);
    double m = node.cpd.intercept;
    for (std::size_t j = 0; j < node.parents.size(); ++j) {
      m += node.cpd.weights[j] * g.mean(static_cast<Eigen::Index>(node.parents[j]));
    }
    g.mean(ii) = m;
    // cov(x_i, x_d) = sum_p w_p cov(x_p, x_d) for earlier d
    for (std::size_t d : done) {
      const auto dd = static_cast<Eigen::Index>(d);
      double c = 0.0;
      for (std::size_t j = 0; j < node.parents.size(); ++j) {
        c += node.cpd.weights[j] * g.cov(static_cast<Eigen::Index>(node.parents[j]), dd);
      }
      g.cov(ii, dd) = c;
      g.cov(dd, ii) = c;
    }
    double v = node.cpd.sigma * node.cpd.sigma;
    for (std::size_t j = 0; j < node.parents.size(); ++j) {
      v += node.cpd.weights[j] * g.cov(static_cast<Eigen::Index>(node.parents[j]), ii);
    }
    g.cov(ii, ii) = v;
    done.push_back(i);
  }
  return g;
}

std::uint64_t LinearGaussianNet::topology_digest() const {
  Fnv1a h;
  for (const auto& n : nodes_) {
    h.add(n.name.data(), n.name.size());
    const char sep = '|';
    h.add(&sep, 1);
    for (std::size_t p : n.parents) {
      const std::string& pn = nodes_.at(p).name;
      h.add(pn.data(), pn.size());
      h.add(&sep, 1);
    }
    const char end = '\n';
    h.add(&end, 1);
  }
  return h.value();
}

void LinearGaussianNet::validate() const {
  for (const auto& n : nodes_) {
    for (std::size_t p : n.parents) {
      if (p >= nodes_.size()) throw std::invalid_argument(n.name + ": parent index out of range");
    }
    if (n.cpd.weights.size() != n.parents.size())
      throw std::invalid_argument(n.name + ": weight count does not match parents");
    if (!(n.cpd.sigma >= 0)) throw std::invalid_argument(n.name + ": negative sigma");
  }
  (void)topological_order();
}

std::vector<std::size_t> Intervention::targets() const {
  std::vector<std::size_t> t;
  for (const auto& [i, v] : assignments) t.push_back(i);
  return t;
}

LinearGaussianNet intervene(const LinearGaussianNet& net, const Intervention& iv) {
  LinearGaussianNet out = net;
  for (const auto& [i, value] : iv.assignments) {
    Node& n = out.node(i);
    n.parents.clear();
    n.cpd.weights.clear();
    n.cpd.intercept = value;
    n.cpd.sigma = 0.0;
  }
  return out;
}

std::vector<bool> non_descendants(const LinearGaussianNet& net,
                                  std::span<const std::size_t> targets) {
  auto d = net.descendants(targets);
  for (std::size_t t : targets) d.at(t) = true;
  d.flip();
  return d;
}

}  // namespace bfi::bayes
