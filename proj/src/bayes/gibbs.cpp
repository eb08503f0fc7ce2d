// SPDX-License-Identifier: Apache-2.0

#include "bfi/bayes/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "bfi/digest.hpp"

namespace bfi::bayes {

double Posterior::mean_of(std::size_t node) const {
  for (std::size_t i = 0; i < query.size(); ++i) {
    if (query[i] == node) return mean[i];
  }
  throw std::out_of_range("node is not part of the query");
}

GibbsSampler::GibbsSampler(const LinearGaussianNet& net, std::vector<bool> fixed,
                           std::vector<std::size_t> query, GibbsOptions options)
    : net_(net), fixed_(std::move(fixed)), query_(std::move(query)), options_(options) {
  const std::size_t n = net_.size();
  if (fixed_.size() != n) throw std::invalid_argument("fixed mask size does not match the net");
  if (options_.chains < 1 || options_.samples < 4)
    throw std::invalid_argument("gibbs needs at least one chain and four samples");
  for (std::size_t i = 0; i < n; ++i) {
    if (net_.is_point_mass(i)) fixed_[i] = true;
  }

  std::vector<std::size_t> anchors = query_;
  for (std::size_t i = 0; i < n; ++i) {
    if (fixed_[i]) anchors.push_back(i);
  }
  std::vector<bool> keep = net_.ancestors(anchors);
  for (std::size_t q : query_) keep.at(q) = true;

  free_slot_.assign(n, -1);
  for (std::size_t i : net_.topological_order()) {
    if (fixed_[i] || !keep[i]) continue;
    if (!(net_.node(i).cpd.sigma > 0))
      throw std::invalid_argument(net_.node(i).name + ": free node needs sigma > 0");
    free_slot_[i] = static_cast<int>(free_.size());
    free_.push_back({i, net_.node(i).cpd.sigma, {}});
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Node& node = net_.node(i);
    const bool free_child = free_slot_[i] >= 0;
    bool has_free_parent = false;
    for (std::size_t j = 0; j < node.parents.size(); ++j) {
      const int s = free_slot_[node.parents[j]];
      if (s < 0) continue;
      has_free_parent = true;
      if (free_child || fixed_[i]) free_[static_cast<std::size_t>(s)].children.push_back({i, node.cpd.weights[j]});
    }
    if (fixed_[i] && has_free_parent) {
      if (!(node.cpd.sigma > 0))
        throw std::invalid_argument(node.name + ": observed node needs sigma > 0");
      likelihood_.push_back(i);
    }
  }

  if (options_.parameterization == Parameterization::noncentered) {
    const auto m = static_cast<Eigen::Index>(free_.size());
    jac_ = Eigen::MatrixXd::Zero(m, m);
    for (Eigen::Index a = 0; a < m; ++a) {
      const Node& node = net_.node(free_[static_cast<std::size_t>(a)].node);
      jac_(a, a) = node.cpd.sigma;
      for (std::size_t j = 0; j < node.parents.size(); ++j) {
        const int s = free_slot_[node.parents[j]];
        if (s >= 0) jac_.row(a) += node.cpd.weights[j] * jac_.row(s);
      }
    }
    res_jac_ = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(likelihood_.size()), m);
    for (std::size_t o = 0; o < likelihood_.size(); ++o) {
      const Node& node = net_.node(likelihood_[o]);
      for (std::size_t j = 0; j < node.parents.size(); ++j) {
        const int s = free_slot_[node.parents[j]];
        if (s >= 0) res_jac_.row(static_cast<Eigen::Index>(o)) -= node.cpd.weights[j] * jac_.row(s);
      }
    }
  }
}

void GibbsSampler::sweep_centered(std::vector<double>& x, std::mt19937_64& rng) const {
  std::normal_distribution<double> z;
  for (const Site& site : free_) {
    const double own = 1.0 / (site.sigma * site.sigma);
    double prec = own;
    double num = net_.cpd_mean(site.node, x) * own;
    const double xu = x[site.node];
    for (const auto& [c, w] : site.children) {
      const double sc = net_.node(c).cpd.sigma;
      const double r = x[c] - (net_.cpd_mean(c, x) - w * xu);
      prec += w * w / (sc * sc);
      num += w * r / (sc * sc);
    }
    x[site.node] = num / prec + z(rng) / std::sqrt(prec);
  }
}

void GibbsSampler::run_chain(std::vector<double>& x, std::uint64_t seed,
                             std::vector<std::vector<double>>& trace) const {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  const std::size_t total = options_.burn_in + options_.samples;
  auto record = [&](std::size_t sweep) {
    if (sweep < options_.burn_in) return;
    for (std::size_t q = 0; q < query_.size(); ++q) trace[q].push_back(x[query_[q]]);
  };

  if (options_.parameterization == Parameterization::centered) {
    // ancestral initialisation
    for (const Site& site : free_) x[site.node] = net_.cpd_mean(site.node, x) + site.sigma * z(rng);
    for (std::size_t s = 0; s < total; ++s) {
      sweep_centered(x, rng);
      record(s);
    }
    return;
  }

  const auto m = static_cast<Eigen::Index>(free_.size());
  Eigen::VectorXd eps(m);
  for (Eigen::Index a = 0; a < m; ++a) eps(a) = z(rng);
  for (Eigen::Index a = 0; a < m; ++a) {
    const Site& site = free_[static_cast<std::size_t>(a)];
    x[site.node] = net_.cpd_mean(site.node, x) + site.sigma * eps(a);
  }
  const auto nl = static_cast<Eigen::Index>(likelihood_.size());
  Eigen::VectorXd res(nl);
  Eigen::VectorXd inv_var(nl);
  for (Eigen::Index o = 0; o < nl; ++o) {
    const std::size_t node = likelihood_[static_cast<std::size_t>(o)];
    res(o) = x[node] - net_.cpd_mean(node, x);
    const double s = net_.node(node).cpd.sigma;
    inv_var(o) = 1.0 / (s * s);
  }
  for (std::size_t s = 0; s < total; ++s) {
    for (Eigen::Index b = 0; b < m; ++b) {
      double prec = 1.0;
      double num = 0.0;
      for (Eigen::Index o = 0; o < nl; ++o) {
        const double g = res_jac_(o, b);
        if (g == 0.0) continue;
        const double r_minus = res(o) - g * eps(b);
        prec += g * g * inv_var(o);
        num -= g * r_minus * inv_var(o);
      }
      const double e = num / prec + z(rng) / std::sqrt(prec);
      const double d = e - eps(b);
      eps(b) = e;
      for (Eigen::Index a = b; a < m; ++a) {
        const double j = jac_(a, b);
        if (j != 0.0) x[free_[static_cast<std::size_t>(a)].node] += j * d;
      }
      if (nl > 0) res += res_jac_.col(b) * d;
    }
    record(s);
  }
}

Posterior GibbsSampler::run(std::span<const double> values, std::uint64_t seed) const {
  if (values.size() != net_.size()) throw std::invalid_argument("value vector size mismatch");
  std::vector<double> base(values.begin(), values.end());
  for (std::size_t i = 0; i < net_.size(); ++i) {
    if (fixed_[i] && !std::isfinite(base[i]))
      throw std::invalid_argument("non-finite value for fixed node " + net_.node(i).name);
  }

  Posterior post;
  post.query = query_;
  std::vector<std::vector<std::vector<double>>> traces(
      query_.size(), std::vector<std::vector<double>>(options_.chains));
  for (std::size_t c = 0; c < options_.chains; ++c) {
    std::vector<double> x = base;
    std::vector<std::vector<double>> trace(query_.size());
    for (auto& t : trace) t.reserve(options_.samples);
    run_chain(x, derive_seed(seed, c), trace);
    for (std::size_t q = 0; q < query_.size(); ++q) traces[q][c] = std::move(trace[q]);
  }

  for (std::size_t q = 0; q < query_.size(); ++q) {
    const std::size_t node = query_[q];
    if (free_slot_[node] < 0) {
      post.mean.push_back(base[node]);
      post.stddev.push_back(0.0);
      post.rhat.push_back(1.0);
      continue;
    }
    double sum = 0.0;
    double sq = 0.0;
    std::size_t count = 0;
    for (const auto& chain : traces[q]) {
      for (double v : chain) {
        sum += v;
        ++count;
      }
    }
    const double mean = sum / static_cast<double>(count);
    for (const auto& chain : traces[q]) {
      for (double v : chain) sq += (v - mean) * (v - mean);
    }
    post.mean.push_back(mean);
    post.stddev.push_back(std::sqrt(sq / static_cast<double>(count - 1)));
    post.rhat.push_back(split_rhat(traces[q]));
  }
  for (double r : post.rhat) post.max_rhat = std::max(post.max_rhat, r);
  post.converged = post.max_rhat <= options_.rhat_threshold;
  return post;
}

Posterior gibbs_posterior(const LinearGaussianNet& net, const Intervention& iv,
                          const Assignment& evidence, std::span<const std::size_t> query,
                          const GibbsOptions& options) {
  const LinearGaussianNet cut = intervene(net, iv);
  std::vector<bool> fixed(net.size(), false);
  std::vector<double> values(net.size(), 0.0);
  for (const auto& [i, v] : evidence) {
    fixed.at(i) = true;
    values[i] = v;
  }
  for (const auto& [i, v] : iv.assignments) {
    fixed.at(i) = true;
    values[i] = v;
  }
  const GibbsSampler sampler(cut, std::move(fixed), {query.begin(), query.end()}, options);
  return sampler.run(values);
}

double split_rhat(const std::vector<std::vector<double>>& chains) {
  std::vector<std::span<const double>> parts;
  for (const auto& c : chains) {
    const std::size_t h = c.size() / 2;
    if (h < 2) throw std::invalid_argument("chains too short for split R-hat");
    parts.emplace_back(c.data(), h);
    parts.emplace_back(c.data() + (c.size() - h), h);
  }
  const std::size_t h = parts.front().size();
  for (const auto& p : parts) {
    if (p.size() != h) throw std::invalid_argument("chains must have equal length");
  }
  const double n = static_cast<double>(h);
  const double m = static_cast<double>(parts.size());
  std::vector<double> means;
  double w = 0.0;
  for (const auto& p : parts) {
    double s = 0.0;
    for (double v : p) s += v;
    const double mu = s / n;
    double ss = 0.0;
    for (double v : p) ss += (v - mu) * (v - mu);
    means.push_back(mu);
    w += ss / (n - 1);
  }
  w /= m;
  double grand = 0.0;
  for (double mu : means) grand += mu;
  grand /= m;
  double b = 0.0;
  for (double mu : means) b += (mu - grand) * (mu - grand);
  b *= n / (m - 1);
  if (w <= 0.0) return b <= 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  const double var_plus = (n - 1) / n * w + b / n;
  return std::sqrt(var_plus / w);
}

}  // namespace bfi::bayes
