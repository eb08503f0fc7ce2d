// SPDX-License-Identifier: Apache-2.0

#include "bfi/bayes/selfcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bfi/digest.hpp"

namespace bfi::bayes {

namespace {

// generating parameters of the tied slices: weights follow the parent order
struct Truth {
  std::vector<double> x{0.8};            // x_prev
  double x0 = 0.5;
  std::vector<double> y{0.6, 0.3};       // x, y_prev
  double y0 = -0.2;
  std::vector<double> z{-0.7, 0.4};      // x, y
  double z0 = 1.0;
};

}  // namespace

LinearGaussianNet synthetic_tbn(bool truth) {
  const Truth t;
  LinearGaussianNet net;
  auto cpd = [&](std::vector<double> w, double c, double s) {
    return truth ? Cpd{std::move(w), c, s} : Cpd{std::vector<double>(w.size(), 0.0), 0.0, 1.0};
  };
  // slice 0 has its own, wider CPDs so parents carry enough variance
  std::size_t x = net.add_node("x@0", {}, cpd({}, 1.0, 0.5));
  std::size_t y = net.add_node("y@0", {x}, cpd({0.5}, 0.0, 0.3));
  net.add_node("z@0", {x, y}, cpd({1.0, -1.0}, 0.1, 0.3));
  for (int s = 1; s <= 2; ++s) {
    const std::string tag = "@" + std::to_string(s);
    const std::size_t xs = net.add_node("x" + tag, {x}, cpd(t.x, t.x0, 0.1), 0);
    const std::size_t ys = net.add_node("y" + tag, {xs, y}, cpd(t.y, t.y0, 0.1), 1);
    net.add_node("z" + tag, {xs, ys}, cpd(t.z, t.z0, 0.1), 2);
    x = xs;
    y = ys;
  }
  return net;
}

Dataset sample_dataset(const LinearGaussianNet& net, std::size_t rows, double missing,
                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::bernoulli_distribution drop(missing);
  const auto order = net.topological_order();
  const auto n = static_cast<Eigen::Index>(net.size());
  Dataset d;
  d.values.resize(static_cast<Eigen::Index>(rows), n);
  std::vector<double> x(net.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t i : order) x[i] = net.cpd_mean(i, x) + net.node(i).cpd.sigma * z(rng);
    for (Eigen::Index c = 0; c < n; ++c) {
      const bool gone = missing > 0.0 && drop(rng);
      d.values(static_cast<Eigen::Index>(r), c) =
          gone ? std::numeric_limits<double>::quiet_NaN() : x[static_cast<std::size_t>(c)];
    }
  }
  return d;
}

std::vector<double> exact_posterior_mean(const LinearGaussianNet& net, const Intervention& iv,
                                         const Assignment& evidence,
                                         const std::vector<std::size_t>& query) {
  const JointGaussian g = intervene(net, iv).joint();
  // point masses have zero variance; condition only on the evidence that is random
  std::vector<Eigen::Index> obs;
  std::vector<double> val;
  const auto fixed = iv.targets();
  for (const auto& [i, v] : evidence) {
    if (std::find(fixed.begin(), fixed.end(), i) != fixed.end()) continue;
    obs.push_back(static_cast<Eigen::Index>(i));
    val.push_back(v);
  }
  std::vector<double> out;
  const auto m = static_cast<Eigen::Index>(obs.size());
  Eigen::MatrixXd soo(m, m);
  Eigen::VectorXd r(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    r(a) = val[static_cast<std::size_t>(a)] - g.mean(obs[static_cast<std::size_t>(a)]);
    for (Eigen::Index b = 0; b < m; ++b) soo(a, b) = g.cov(obs[static_cast<std::size_t>(a)], obs[static_cast<std::size_t>(b)]);
  }
  const Eigen::VectorXd alpha = m > 0 ? Eigen::VectorXd(soo.ldlt().solve(r)) : Eigen::VectorXd();
  for (std::size_t q : query) {
    const auto qi = static_cast<Eigen::Index>(q);
    double mu = g.mean(qi);
    for (Eigen::Index a = 0; a < m; ++a) mu += g.cov(qi, obs[static_cast<std::size_t>(a)]) * alpha(a);
    out.push_back(mu);
  }
  return out;
}

LinearGaussianNet random_net(std::size_t n, double p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> w(-1.0, 1.0);
  std::uniform_real_distribution<double> c(-2.0, 2.0);
  std::uniform_real_distribution<double> s(0.3, 1.5);
  std::bernoulli_distribution edge(p);
  LinearGaussianNet net;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> parents;
    std::vector<double> weights;
    for (std::size_t j = 0; j < i; ++j) {
      if (!edge(rng)) continue;
      parents.push_back(j);
      weights.push_back(w(rng));
    }
    net.add_node("n" + std::to_string(i), std::move(parents), Cpd{std::move(weights), c(rng), s(rng)});
  }
  return net;
}

CheckResult check_em_recovery(std::uint64_t seed, std::size_t rows) {
  const LinearGaussianNet truth = synthetic_tbn(true);
  LinearGaussianNet fit = synthetic_tbn(false);
  const Dataset d = sample_dataset(truth, rows, 0.05, seed);
  const EmResult r = em_train(fit, d);
  double worst = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (truth.node(i).group < 0) continue;
    const auto& a = truth.node(i).cpd.weights;
    const auto& b = fit.node(i).cpd.weights;
    for (std::size_t j = 0; j < a.size(); ++j) worst = std::max(worst, std::abs(b[j] - a[j]) / std::abs(a[j]));
  }
  bool monotone = true;
  for (std::size_t i = 1; i < r.log_likelihood.size(); ++i) {
    const double prev = r.log_likelihood[i - 1];
    if (r.log_likelihood[i] < prev - 1e-9 * std::abs(prev)) monotone = false;
  }
  std::ostringstream os;
  os << "max relative weight error " << worst << ", " << r.iterations << " iterations, log-likelihood "
     << (monotone ? "monotone" : "NOT monotone");
  return {"em-recovery", worst <= 0.05 && monotone, os.str()};
}

CheckResult check_gibbs_exact(std::uint64_t seed, std::size_t nets) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  GibbsOptions opt;
  opt.samples = 20000;
  for (std::size_t t = 0; t < nets; ++t) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(4, 12)(rng);
    const LinearGaussianNet net = random_net(n, 0.4, rng);
    // evidence drawn from the model itself so it is plausible
    const Dataset one = sample_dataset(net, 1, 0.0, rng());
    Assignment evidence;
    std::vector<std::size_t> query;
    Intervention iv;
    const std::size_t target = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
    iv.assignments.push_back({target, std::uniform_real_distribution<double>(-2.0, 2.0)(rng)});
    for (std::size_t i = 0; i < n; ++i) {
      if (i == target) continue;
      if (std::bernoulli_distribution(0.35)(rng))
        evidence.push_back({i, one.values(0, static_cast<Eigen::Index>(i))});
      else
        query.push_back(i);
    }
    if (query.empty()) continue;
    opt.seed = rng();
    const Posterior post = gibbs_posterior(net, iv, evidence, query, opt);
    const auto exact = exact_posterior_mean(net, iv, evidence, query);
    const JointGaussian g = intervene(net, iv).joint();
    for (std::size_t q = 0; q < query.size(); ++q) {
      // relative to the magnitude of the mean, floored by the prior spread
      const double scale = std::max(std::abs(exact[q]), std::sqrt(g.cov(static_cast<Eigen::Index>(query[q]), static_cast<Eigen::Index>(query[q]))));
      worst = std::max(worst, std::abs(post.mean[q] - exact[q]) / scale);
    }
  }
  std::ostringstream os;
  os << nets << " nets, max relative error " << worst;
  return {"gibbs-exact", worst <= 0.02, os.str()};
}

std::vector<CheckResult> run_selfchecks(std::uint64_t seed) {
  return {check_em_recovery(derive_seed(seed, 1)), check_gibbs_exact(derive_seed(seed, 2))};
}

}  // namespace bfi::bayes
