// SPDX-License-Identifier: Apache-2.0

#include "bfi/bayes/em.hpp"

#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <stdexcept>

namespace bfi::bayes {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

struct Group {
  std::vector<std::size_t> members;
  std::size_t parents = 0;
};

std::vector<Group> cpd_groups(const LinearGaussianNet& net) {
  std::map<long, std::size_t> slot;
  std::vector<Group> groups;
  for (std::size_t i = 0; i < net.size(); ++i) {
    const Node& n = net.node(i);
    const long key = n.group >= 0 ? n.group : -1 - static_cast<long>(i);
    auto [it, added] = slot.emplace(key, groups.size());
    if (added) groups.push_back({{}, n.parents.size()});
    Group& g = groups[it->second];
    if (g.parents != n.parents.size())
      throw std::invalid_argument("tied CPDs with different parent counts: " + n.name);
    g.members.push_back(i);
  }
  return groups;
}

struct Stats {
  MatrixXd a;  // sum z z^T, z = (parents, 1)
  VectorXd b;  // sum z x
  double c = 0.0;  // sum x^2
  double n = 0.0;
};

bool is_missing(double v) { return !std::isfinite(v); }

/// Rows grouped by their pattern of missing columns.
struct Partition {
  std::vector<Index> complete;
  std::map<std::vector<Index>, std::vector<Index>> incomplete;
};

Partition partition(const Dataset& data) {
  Partition p;
  for (Index r = 0; r < data.values.rows(); ++r) {
    std::vector<Index> miss;
    for (Index c = 0; c < data.values.cols(); ++c) {
      if (is_missing(data.values(r, c))) miss.push_back(c);
    }
    if (miss.empty()) {
      p.complete.push_back(r);
    } else {
      if (!data.skip.empty() && !data.skip[static_cast<std::size_t>(r)].empty())
        throw std::invalid_argument("records with injected nodes must be complete");
      p.incomplete[miss].push_back(r);
    }
  }
  return p;
}

/// Conditional moments of the missing block given the observed one.
struct Conditional {
  std::vector<Index> observed;
  MatrixXd gain;      // S_MO S_OO^-1
  MatrixXd cov;       // S_MM - gain S_OM
  Eigen::LDLT<MatrixXd> obs_ldlt;
  double obs_logdet = 0.0;
};

Conditional condition(const JointGaussian& g, const std::vector<Index>& miss) {
  Conditional c;
  std::set<Index> ms(miss.begin(), miss.end());
  for (Index i = 0; i < g.mean.size(); ++i) {
    if (!ms.count(i)) c.observed.push_back(i);
  }
  const MatrixXd soo = g.cov(c.observed, c.observed);
  const MatrixXd smo = g.cov(miss, c.observed);
  c.obs_ldlt.compute(soo);
  if (c.obs_ldlt.info() != Eigen::Success) throw std::runtime_error("observed covariance is singular");
  c.gain = c.obs_ldlt.solve(smo.transpose()).transpose();
  c.cov = g.cov(miss, miss) - c.gain * smo.transpose();
  c.obs_logdet = c.obs_ldlt.vectorD().array().abs().log().sum();
  return c;
}

}  // namespace

std::size_t parameter_count(const LinearGaussianNet& net) {
  std::size_t k = 0;
  for (const auto& g : cpd_groups(net)) k += g.parents + 2;
  return k;
}

double log_likelihood(const LinearGaussianNet& net, const Dataset& data) {
  const Partition part = partition(data);
  double ll = 0.0;
  std::vector<double> x(net.size());
  std::vector<bool> skipped(net.size(), false);
  for (Index r : part.complete) {
    for (std::size_t i = 0; i < net.size(); ++i) x[i] = data.values(r, static_cast<Index>(i));
    if (!data.skip.empty()) {
      for (auto s : data.skip[static_cast<std::size_t>(r)]) skipped[s] = true;
    }
    for (std::size_t i = 0; i < net.size(); ++i) {
      if (skipped[i]) continue;
      const double s = net.node(i).cpd.sigma;
      const double e = (x[i] - net.cpd_mean(i, x)) / s;
      ll += -0.5 * (kLog2Pi + e * e) - std::log(s);
    }
    if (!data.skip.empty()) {
      for (auto s : data.skip[static_cast<std::size_t>(r)]) skipped[s] = false;
    }
  }
  if (!part.incomplete.empty()) {
    const JointGaussian g = net.joint();
    for (const auto& [miss, rows] : part.incomplete) {
      const Conditional c = condition(g, miss);
      const VectorXd mo = g.mean(c.observed);
      for (Index r : rows) {
        const VectorXd d = data.values(r, c.observed).transpose() - mo;
        const double q = d.dot(c.obs_ldlt.solve(d));
        ll += -0.5 * (static_cast<double>(d.size()) * kLog2Pi + c.obs_logdet + q);
      }
    }
  }
  return ll;
}

EmResult em_train(LinearGaussianNet& net, const Dataset& data, const EmOptions& options) {
  net.validate();
  if (static_cast<std::size_t>(data.values.cols()) != net.size())
    throw std::invalid_argument("dataset columns do not match the network");
  if (!data.skip.empty() && data.skip.size() != data.rows())
    throw std::invalid_argument("skip list size does not match the dataset");
  const auto groups = cpd_groups(net);
  if (options.check_size && data.rows() < 10 * parameter_count(net))
    throw std::invalid_argument("insufficient training data: " + std::to_string(data.rows()) +
                                " records for " + std::to_string(parameter_count(net)) +
                                " parameters");
  const Partition part = partition(data);

  // rows excluded from each node's own regression
  std::vector<std::vector<bool>> excluded;
  if (!data.skip.empty()) {
    excluded.assign(net.size(), {});
    for (std::size_t r = 0; r < data.skip.size(); ++r) {
      for (auto s : data.skip[r]) {
        if (s >= net.size()) throw std::invalid_argument("skip index out of range");
        if (excluded[s].empty()) excluded[s].assign(data.rows(), false);
        excluded[s][r] = true;
      }
    }
  }

  EmResult result;
  result.log_likelihood.push_back(log_likelihood(net, data));
  std::set<std::string> warned;

  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    std::vector<Stats> stats(groups.size());
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      const auto p = static_cast<Index>(groups[gi].parents + 1);
      stats[gi].a = MatrixXd::Zero(p, p);
      stats[gi].b = VectorXd::Zero(p);
    }

    // complete rows: exact statistics
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      for (std::size_t i : groups[gi].members) {
        const Node& node = net.node(i);
        std::vector<Index> rows;
        rows.reserve(part.complete.size());
        for (Index r : part.complete) {
          if (!excluded.empty() && !excluded[i].empty() && excluded[i][static_cast<std::size_t>(r)]) continue;
          rows.push_back(r);
        }
        const auto p = static_cast<Index>(node.parents.size());
        MatrixXd z(static_cast<Index>(rows.size()), p + 1);
        for (Index j = 0; j < p; ++j) {
          z.col(j) = data.values(rows, static_cast<Index>(node.parents[static_cast<std::size_t>(j)]));
        }
        z.col(p).setOnes();
        const VectorXd xi = data.values(rows, static_cast<Index>(i));
        stats[gi].a.noalias() += z.transpose() * z;
        stats[gi].b.noalias() += z.transpose() * xi;
        stats[gi].c += xi.squaredNorm();
        stats[gi].n += static_cast<double>(rows.size());
      }
    }

    // incomplete rows: expected statistics under the current parameters
    if (!part.incomplete.empty()) {
      const JointGaussian g = net.joint();
      for (const auto& [miss, rows] : part.incomplete) {
        const Conditional c = condition(g, miss);
        const VectorXd mo = g.mean(c.observed);
        const VectorXd mm = g.mean(miss);
        MatrixXd cov = MatrixXd::Zero(g.mean.size(), g.mean.size());
        cov(miss, miss) = c.cov;
        for (Index r : rows) {
          VectorXd xbar = data.values.row(r).transpose();
          const VectorXd d = data.values(r, c.observed).transpose() - mo;
          xbar(miss) = mm + c.gain * d;
          for (std::size_t gi = 0; gi < groups.size(); ++gi) {
            for (std::size_t i : groups[gi].members) {
              const Node& node = net.node(i);
              const auto p = static_cast<Index>(node.parents.size());
              std::vector<Index> idx;
              for (auto q : node.parents) idx.push_back(static_cast<Index>(q));
              VectorXd z(p + 1);
              z.head(p) = xbar(idx);
              z(p) = 1.0;
              const auto ii = static_cast<Index>(i);
              stats[gi].a.noalias() += z * z.transpose();
              stats[gi].a.topLeftCorner(p, p) += cov(idx, idx);
              stats[gi].b.noalias() += z * xbar(ii);
              stats[gi].b.head(p) += cov(idx, std::vector<Index>{ii});
              stats[gi].c += xbar(ii) * xbar(ii) + cov(ii, ii);
              stats[gi].n += 1.0;
            }
          }
        }
      }
    }

    // M-step
    for (std::size_t gi = 0; gi < groups.size(); ++gi) {
      Stats& s = stats[gi];
      const Node& first = net.node(groups[gi].members.front());
      if (s.n < 1.0) {
        if (warned.insert(first.name + ":empty").second)
          result.warnings.push_back(first.name + ": no training records, parameters unchanged");
        continue;
      }
      const auto p = s.a.rows();
      MatrixXd a = s.a;
      Eigen::LDLT<MatrixXd> ldlt(a);
      const bool singular = ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
                            ldlt.rcond() < 1e-13;
      if (singular) {
        a += options.ridge * MatrixXd::Identity(p, p);
        ldlt.compute(a);
        if (warned.insert(first.name).second)
          result.warnings.push_back(first.name + ": singular design matrix, ridge " +
                                    std::to_string(options.ridge) + " applied");
      }
      const VectorXd w = ldlt.solve(s.b);
      const double sse = s.c - 2.0 * w.dot(s.b) + w.dot(s.a * w);
      const double sigma = std::max(std::sqrt(std::max(sse / s.n, 0.0)), options.sigma_floor);
      for (std::size_t i : groups[gi].members) {
        Cpd& cpd = net.node(i).cpd;
        for (Index j = 0; j + 1 < p; ++j) cpd.weights[static_cast<std::size_t>(j)] = w(j);
        cpd.intercept = w(p - 1);
        cpd.sigma = sigma;
      }
    }

    ++result.iterations;
    const double ll = log_likelihood(net, data);
    const double prev = result.log_likelihood.back();
    result.log_likelihood.push_back(ll);
    if (std::abs(ll - prev) <= options.tolerance * std::max(1.0, std::abs(prev))) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace bfi::bayes
