// SPDX-License-Identifier: Apache-2.0
//
// Linear-Gaussian network, interventions, Gibbs and EM. The closed-form
// oracle below is written independently of the library's joint().

#include <doctest.h>

#include <Eigen/Dense>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "bfi/bayes/em.hpp"
#include "bfi/bayes/gibbs.hpp"
#include "bfi/bayes/mining.hpp"
#include "bfi/bayes/network.hpp"
#include "bfi/bayes/selfcheck.hpp"
#include "bfi/bayes/tbn.hpp"
#include "bfi/scenario.hpp"

using namespace bfi;
using namespace bfi::bayes;

namespace {

struct Edge {
  std::size_t from, to;
  double w;
};

// Structural form x = B x + c + diag(s) e, so x = (I - B)^-1 (c + diag(s) e).
struct Sem {
  std::size_t n = 0;
  std::vector<Edge> edges;
  std::vector<double> c, s;

  Sem(std::size_t n_) : n(n_), c(n_, 0.0), s(n_, 1.0) {}

  LinearGaussianNet net() const {
    LinearGaussianNet g;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::size_t> p;
      std::vector<double> w;
      for (const auto& e : edges) {
        if (e.to == i) {
          p.push_back(e.from);
          w.push_back(e.w);
        }
      }
      g.add_node("v" + std::to_string(i), p, Cpd{w, c[i], s[i]});
    }
    return g;
  }

  // do(i = v): drop incoming edges, constant v, no noise
  Sem cut(std::size_t i, double v) const {
    Sem o = *this;
    std::erase_if(o.edges, [&](const Edge& e) { return e.to == i; });
    o.c[i] = v;
    o.s[i] = 0.0;
    return o;
  }

  void moments(Eigen::VectorXd& mean, Eigen::MatrixXd& cov) const {
    const auto N = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(N, N);
    for (const auto& e : edges) B(static_cast<Eigen::Index>(e.to), static_cast<Eigen::Index>(e.from)) = e.w;
    const Eigen::MatrixXd A = (Eigen::MatrixXd::Identity(N, N) - B).inverse();
    Eigen::VectorXd cv(N), sv(N);
    for (Eigen::Index i = 0; i < N; ++i) {
      cv(i) = c[static_cast<std::size_t>(i)];
      sv(i) = s[static_cast<std::size_t>(i)] * s[static_cast<std::size_t>(i)];
    }
    mean = A * cv;
    cov = A * sv.asDiagonal() * A.transpose();
  }

  // E[x_q | x_obs = val] under the (possibly cut) model
  std::vector<double> conditional_mean(const Assignment& obs, const std::vector<std::size_t>& q) const {
    Eigen::VectorXd mu;
    Eigen::MatrixXd S;
    moments(mu, S);
    std::vector<std::size_t> o;
    std::vector<double> v;
    for (const auto& [i, x] : obs) {
      if (S(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) < 1e-14) continue;
      o.push_back(i);
      v.push_back(x);
    }
    const auto m = static_cast<Eigen::Index>(o.size());
    Eigen::MatrixXd Soo(m, m);
    Eigen::VectorXd r(m);
    for (Eigen::Index a = 0; a < m; ++a) {
      r(a) = v[static_cast<std::size_t>(a)] - mu(static_cast<Eigen::Index>(o[static_cast<std::size_t>(a)]));
      for (Eigen::Index b = 0; b < m; ++b)
        Soo(a, b) = S(static_cast<Eigen::Index>(o[static_cast<std::size_t>(a)]),
                      static_cast<Eigen::Index>(o[static_cast<std::size_t>(b)]));
    }
    const Eigen::VectorXd k = m > 0 ? Eigen::VectorXd(Soo.colPivHouseholderQr().solve(r)) : Eigen::VectorXd();
    std::vector<double> out;
    for (std::size_t qi : q) {
      double x = mu(static_cast<Eigen::Index>(qi));
      for (Eigen::Index a = 0; a < m; ++a)
        x += S(static_cast<Eigen::Index>(qi), static_cast<Eigen::Index>(o[static_cast<std::size_t>(a)])) * k(a);
      out.push_back(x);
    }
    return out;
  }
};

// a -> b -> c, a -> c, d independent, b -> e
Sem diamond() {
  Sem s(5);
  s.edges = {{0, 1, 0.9}, {1, 2, -0.7}, {0, 2, 0.4}, {1, 4, 1.3}};
  s.c = {1.0, 0.5, -0.2, 2.0, 0.0};
  s.s = {1.0, 0.5, 0.3, 0.8, 0.6};
  return s;
}

GibbsOptions gibbs(std::size_t samples, std::uint64_t seed) {
  GibbsOptions g;
  g.samples = samples;
  g.seed = seed;
  return g;
}

}  // namespace

TEST_CASE("joint moments agree with the structural-form oracle") {
  const Sem s = diamond();
  Eigen::VectorXd mu;
  Eigen::MatrixXd S;
  s.moments(mu, S);
  const JointGaussian j = s.net().joint();
  CHECK((j.mean - mu).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((j.cov - S).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("do() replaces the target with a point mass") {
  const Sem s = diamond();
  Intervention iv;
  iv.assignments = {{1, 3.5}};
  const LinearGaussianNet cut = intervene(s.net(), iv);
  CHECK(cut.is_point_mass(1));
  CHECK(cut.node(1).parents.empty());
  const JointGaussian j = cut.joint();
  CHECK(j.mean(1) == 3.5);
  CHECK(j.cov.row(1).cwiseAbs().maxCoeff() == 0.0);
  const Posterior p = gibbs_posterior(s.net(), iv, {}, std::vector<std::size_t>{1, 2}, gibbs(200, 3));
  CHECK(p.mean[0] == 3.5);
  CHECK(p.stddev[0] == 0.0);
  CHECK(p.mean_of(1) == 3.5);
}

TEST_CASE("evidence on a former parent has no influence downstream") {
  Sem chain(3);
  chain.edges = {{0, 1, 1.5}, {1, 2, 0.8}};
  Intervention iv;
  iv.assignments = {{1, -1.0}};
  const std::vector<std::size_t> q{2};
  double first = 0.0;
  for (double a : {-10.0, 0.0, 4.0, 25.0}) {
    const Assignment ev{{0, a}};
    const Posterior p = gibbs_posterior(chain.net(), iv, ev, q, gibbs(500, 9));
    if (a == -10.0) first = p.mean[0];
    CHECK(p.mean[0] == first);  // same seed, bit-identical chain
    CHECK(exact_posterior_mean(chain.net(), iv, ev, q)[0] == doctest::Approx(0.8 * -1.0));
  }
}

TEST_CASE("non-descendants of the intervened nodes on hand-built graphs") {
  const LinearGaussianNet net = diamond().net();
  auto nd = [&](std::vector<std::size_t> t) { return non_descendants(net, t); };
  CHECK(nd({1}) == std::vector<bool>{true, false, false, true, false});
  CHECK(nd({0}) == std::vector<bool>{false, false, false, true, false});
  CHECK(nd({4}) == std::vector<bool>{true, true, true, true, false});
  CHECK(nd({2, 3}) == std::vector<bool>{true, true, false, false, true});

  // their marginals survive the intervention unchanged
  const Sem s = diamond();
  Eigen::VectorXd m0, m1;
  Eigen::MatrixXd c0, c1;
  s.moments(m0, c0);
  s.cut(1, 7.0).moments(m1, c1);
  for (Eigen::Index i : {0, 3}) {
    CHECK(m1(i) == doctest::Approx(m0(i)));
    CHECK(c1(i, i) == doctest::Approx(c0(i, i)));
  }
  CHECK(m1(2) != doctest::Approx(m0(2)));
}

TEST_CASE("random interventions leave non-descendant marginals intact") {
  std::mt19937_64 rng(21);
  for (int t = 0; t < 30; ++t) {
    const std::size_t n = 3 + static_cast<std::size_t>(t % 8);
    const LinearGaussianNet net = random_net(n, 0.5, rng);
    const std::size_t target = static_cast<std::size_t>(t) % n;
    Intervention iv;
    iv.assignments = {{target, 1.25}};
    const JointGaussian a = net.joint();
    const JointGaussian b = intervene(net, iv).joint();
    const auto keep = non_descendants(net, std::vector<std::size_t>{target});
    for (std::size_t i = 0; i < n; ++i) {
      if (!keep[i]) continue;
      const auto k = static_cast<Eigen::Index>(i);
      CHECK(b.mean(k) == doctest::Approx(a.mean(k)).epsilon(1e-12));
      CHECK(b.cov(k, k) == doctest::Approx(a.cov(k, k)).epsilon(1e-12));
    }
  }
}

TEST_CASE("Gibbs posterior means match closed-form conditioning") {
  const Sem s = diamond();
  struct Case {
    Assignment evidence;
    std::size_t target;
    double value;
  };
  for (const Case& c : {Case{{{2, 0.3}, {4, 2.0}}, 3, 0.0}, Case{{{4, -1.0}}, 2, 1.0},
                        Case{{{2, 1.5}}, 3, 0.0}}) {
    Intervention iv;
    iv.assignments = {{c.target, c.value}};
    std::vector<std::size_t> q;
    for (std::size_t i = 0; i < 5; ++i) {
      bool observed = i == c.target;
      for (const auto& e : c.evidence) observed = observed || e.first == i;
      if (!observed) q.push_back(i);
    }
    const auto oracle = s.cut(c.target, c.value).conditional_mean(c.evidence, q);
    const auto lib = exact_posterior_mean(s.net(), iv, c.evidence, q);
    for (auto param : {Parameterization::noncentered, Parameterization::centered}) {
      GibbsOptions g = gibbs(20000, 5);
      g.parameterization = param;
      const Posterior p = gibbs_posterior(s.net(), iv, c.evidence, q, g);
      CHECK(p.converged);
      for (std::size_t k = 0; k < q.size(); ++k) {
        CHECK(lib[k] == doctest::Approx(oracle[k]).epsilon(1e-9));
        CHECK(std::abs(p.mean[k] - oracle[k]) < 0.03);
      }
    }
  }
}

TEST_CASE("split R-hat separates mixed and stuck chains") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  std::vector<std::vector<double>> good(4), bad(4);
  for (std::size_t c = 0; c < 4; ++c) {
    for (int i = 0; i < 1000; ++i) {
      good[c].push_back(z(rng));
      bad[c].push_back(z(rng) + 3.0 * static_cast<double>(c));
    }
  }
  CHECK(split_rhat(good) < 1.01);
  CHECK(split_rhat(bad) > 1.5);
  // a trend inside one chain is caught by the split
  std::vector<std::vector<double>> drift(1);
  for (int i = 0; i < 1000; ++i) drift[0].push_back(0.01 * i + 0.1 * z(rng));
  CHECK(split_rhat(drift) > 1.5);
  CHECK_THROWS((void)split_rhat({{1.0, 2.0}}));
}

TEST_CASE("cycles are rejected") {
  LinearGaussianNet g;
  g.add_node("a", {1}, Cpd{{1.0}, 0, 1});
  g.add_node("b", {0}, Cpd{{1.0}, 0, 1});
  CHECK_THROWS_AS((void)g.topological_order(), CycleError);
}

TEST_CASE("EM recovers tied weights from locally generated data") {
  // same structure as the synthetic network, sampled here with its own loop
  LinearGaussianNet fit = synthetic_tbn(false);
  const LinearGaussianNet truth = synthetic_tbn(true);
  std::mt19937_64 rng(77);
  std::normal_distribution<double> z;
  const std::size_t rows = 10000;
  Dataset d;
  d.values.resize(static_cast<Eigen::Index>(rows), 9);
  for (std::size_t r = 0; r < rows; ++r) {
    double x = 1.0 + 0.5 * z(rng);
    double y = 0.5 * x + 0.3 * z(rng);
    double zz = x - y + 0.1 + 0.3 * z(rng);
    const auto R = static_cast<Eigen::Index>(r);
    d.values(R, 0) = x;
    d.values(R, 1) = y;
    d.values(R, 2) = zz;
    for (Eigen::Index s = 1; s <= 2; ++s) {
      const double xn = 0.8 * x + 0.5 + 0.1 * z(rng);
      const double yn = 0.6 * xn + 0.3 * y - 0.2 + 0.1 * z(rng);
      zz = -0.7 * xn + 0.4 * yn + 1.0 + 0.1 * z(rng);
      d.values(R, 3 * s) = xn;
      d.values(R, 3 * s + 1) = yn;
      d.values(R, 3 * s + 2) = zz;
      x = xn;
      y = yn;
    }
  }
  const EmResult r = em_train(fit, d);
  for (std::size_t i = 3; i < 9; ++i) {
    const auto& a = truth.node(i).cpd;
    const auto& b = fit.node(i).cpd;
    for (std::size_t j = 0; j < a.weights.size(); ++j)
      CHECK(std::abs(b.weights[j] - a.weights[j]) <= 0.05 * std::abs(a.weights[j]));
    CHECK(b.sigma == doctest::Approx(0.1).epsilon(0.05));
  }
  for (std::size_t i = 1; i < r.log_likelihood.size(); ++i)
    CHECK(r.log_likelihood[i] >= r.log_likelihood[i - 1] - 1e-9 * std::abs(r.log_likelihood[i - 1]));
}

TEST_CASE("EM log-likelihood is monotone with missing entries") {
  const LinearGaussianNet truth = synthetic_tbn(true);
  LinearGaussianNet fit = synthetic_tbn(false);
  const Dataset d = sample_dataset(truth, 3000, 0.2, 8);
  const EmResult r = em_train(fit, d);
  REQUIRE(r.log_likelihood.size() >= 2);
  for (std::size_t i = 1; i < r.log_likelihood.size(); ++i)
    CHECK(r.log_likelihood[i] >= r.log_likelihood[i - 1] - 1e-9 * std::abs(r.log_likelihood[i - 1]));
  CHECK(log_likelihood(fit, d) == doctest::Approx(r.log_likelihood.back()).epsilon(1e-9));
}

TEST_CASE("model files round trip") {
  TemporalBayesNet tbn = TemporalBayesNet::build();
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  for (std::size_t i = 0; i < tbn.net().size(); ++i) {
    Cpd& c = tbn.net().node(i).cpd;
    for (double& w : c.weights) w = u(rng);
    c.intercept = u(rng) * 1e3;
    c.sigma = 0.1 + std::abs(u(rng));
  }
  tbn.trained = true;
  const auto path = std::filesystem::temp_directory_path() / "bfi_model_roundtrip.tsv";
  save_model(path, tbn);
  const TemporalBayesNet back = load_model(path);
  std::filesystem::remove(path);
  CHECK(back.digest() == tbn.digest());
  REQUIRE(back.net().size() == tbn.net().size());
  for (std::size_t i = 0; i < tbn.net().size(); ++i) {
    const Cpd& a = tbn.net().node(i).cpd;
    const Cpd& b = back.net().node(i).cpd;
    CHECK(a.weights == b.weights);
    CHECK(a.intercept == b.intercept);
    CHECK(a.sigma == b.sigma);
  }
}

TEST_CASE("corrupt model files are rejected") {
  const auto path = std::filesystem::temp_directory_path() / "bfi_model_bad.tsv";
  {
    std::ofstream(path) << "not a model\n";
  }
  CHECK_THROWS((void)load_model(path));
  std::filesystem::remove(path);
  CHECK_THROWS((void)load_model(path));
}

TEST_CASE("parallel and serial mining agree exactly") {
  Scenario sc = builtin_scenario("A5");
  sc.scenes = 60;
  TemporalBayesNet tbn = TemporalBayesNet::build();
  // untrained weights are enough to compare the two kernels
  for (std::size_t i = 0; i < tbn.net().size(); ++i) tbn.net().node(i).cpd.sigma = 0.5;
  tbn.trained = true;
  const RunResult golden = golden_for_mining(sc, 1);
  const auto& catalog = fault_catalog();
  const MiningResult a = mine_fcrit(tbn, sc, golden, catalog);
  const MiningResult b = mine_fcrit_serial(tbn, sc, golden, catalog);
  CHECK(a.evaluations == b.evaluations);
  CHECK(a.unconverged == b.unconverged);
  CHECK(a.screened_out == b.screened_out);
  REQUIRE(a.pairs.size() == b.pairs.size());
  for (std::size_t i = 0; i < a.pairs.size(); ++i) {
    CHECK(a.pairs[i].scene == b.pairs[i].scene);
    CHECK(a.pairs[i].fault == b.pairs[i].fault);
    CHECK(a.pairs[i].delta_hat_long == b.pairs[i].delta_hat_long);
    CHECK(a.pairs[i].delta_hat_lat == b.pairs[i].delta_hat_lat);
  }

  // F_crit files read back exactly
  const auto path = std::filesystem::temp_directory_path() / "bfi_fcrit_roundtrip.csv";
  write_fcrit(path, a);
  const MiningResult c = read_fcrit(path);
  std::filesystem::remove(path);
  CHECK(c.scenario == a.scenario);
  CHECK(c.scenes == a.scenes);
  CHECK(c.catalog_size == a.catalog_size);
  REQUIRE(c.pairs.size() == a.pairs.size());
  for (std::size_t i = 0; i < a.pairs.size(); ++i) {
    CHECK(c.pairs[i].fault == a.pairs[i].fault);
    CHECK(c.pairs[i].delta_hat_long == a.pairs[i].delta_hat_long);
    CHECK(c.pairs[i].golden_delta_lat == a.pairs[i].golden_delta_lat);
  }
}
