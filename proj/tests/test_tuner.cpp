#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <boost/math/distributions/normal.hpp>

#include "doctest.h"
#include "kfat/parallel.hpp"
#include "kfat/tuner.hpp"

using namespace kfat;

namespace {

TuneConfig small_config() {
  TuneConfig cfg;
  cfg.scenario.model = tracking_1d();
  cfg.scenario.true_noise = {VectorXd::Constant(1, 1.0), VectorXd::Constant(1, 0.1)};
  cfg.scenario.runs = 20;
  cfg.scenario.steps = 50;
  cfg.n_seed = 8;
  cfg.n_iter = 6;
  cfg.hyper_restarts = 2;
  cfg.acquisition_candidates = 200;
  cfg.acquisition_polish = 2;
  return cfg;
}

}  // namespace

TEST_CASE("expected improvement against the normal distribution") {
  const boost::math::normal_distribution<double> n01;
  for (double mu : {-1.0, 0.0, 0.7}) {
    for (double var : {0.01, 1.0, 4.0}) {
      const double best = 0.2;
      const double s = std::sqrt(var);
      const double z = (best - mu) / s;
      const double ref = (best - mu) * boost::math::cdf(n01, z) + s * boost::math::pdf(n01, z);
      CHECK(expected_improvement(mu, var, best) == doctest::Approx(ref).epsilon(1e-12));
      CHECK(expected_improvement(mu, var, best) >= 0.0);
    }
  }
  CHECK(expected_improvement(0.0, 0.0, 1.0) == 0.0);
  CHECK(expected_improvement(-5.0, 1.0, 0.0) > expected_improvement(-4.0, 1.0, 0.0));
  CHECK(expected_improvement(0.0, 2.0, 0.0) > expected_improvement(0.0, 1.0, 0.0));
  CHECK_THROWS_AS(expected_improvement(0.0, -1.0, 0.0), std::invalid_argument);
}

TEST_CASE("unit box mapping") {
  const Bounds b = default_bounds(tracking_1d());
  CHECK(b.lo[0] == 0.1);
  CHECK(b.hi[0] == 5.0);
  CHECK(b.lo[1] == 0.01);
  CHECK(b.hi[1] == 0.5);
  VectorXd u(2);
  u << 0.0, 1.0;
  const VectorXd q = unit_to_q(u, b);
  CHECK(q[0] == doctest::Approx(0.1));
  CHECK(q[1] == doctest::Approx(0.5));
  u << 0.5, 0.5;
  CHECK(unit_to_q(u, b)[0] == doctest::Approx(std::sqrt(0.5)));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> un(0, 1);
  for (int i = 0; i < 20; ++i) {
    u << un(rng), un(rng);
    CHECK((q_to_unit(unit_to_q(u, b), b) - u).norm() < 1e-12);
  }
  CHECK(default_bounds(tracking_2d()).lo.size() == 4);
}

TEST_CASE("latin hypercube stratifies every coordinate") {
  std::mt19937_64 rng(2);
  const MatrixXd pts = latin_hypercube(13, 3, rng);
  for (Index j = 0; j < 3; ++j) {
    std::set<Index> strata;
    for (Index i = 0; i < 13; ++i) {
      CHECK(pts(i, j) >= 0.0);
      CHECK(pts(i, j) < 1.0);
      strata.insert(static_cast<Index>(pts(i, j) * 13));
    }
    CHECK(strata.size() == 13);
  }
}

TEST_CASE("config validation") {
  TuneConfig cfg = small_config();
  cfg.validate();
  CHECK(cfg.bounds.lo.size() == 2);
  TuneConfig bad = small_config();
  bad.dt_list = {};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = small_config();
  bad.dt_list = {0.1, 0.1};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = small_config();
  bad.dt_list = {5.0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = small_config();
  bad.n_seed = 1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = small_config();
  bad.family = SurrogateFamily::TP;
  bad.tp_dof = 2.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("multi-dt cost is the worst single-dt cost") {
  TuneConfig cfg = small_config();
  cfg.validate();
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const VectorXd u = latin_hypercube(1, 2, rng).row(0).transpose();
    const NoiseIntensities q = to_intensities(unit_to_q(u, cfg.bounds), cfg.scenario.model);
    const auto both = multi_dt_cost(q, cfg, 99 + static_cast<std::uint64_t>(i));
    REQUIRE(both.per_dt.size() == 2);
    CHECK(both.cost == std::max(both.per_dt[0], both.per_dt[1]));
    for (std::size_t k = 0; k < 2; ++k) {
      TuneConfig one = cfg;
      one.dt_list = {cfg.dt_list[k]};
      const auto single = multi_dt_cost(q, one, 99 + static_cast<std::uint64_t>(i));
      CHECK(single.cost == both.per_dt[k]);
      CHECK(both.cost >= single.cost);
    }
  }
}

TEST_CASE("multi-dt cost matches a direct Monte Carlo batch") {
  TuneConfig cfg = small_config();
  cfg.dt_list = {0.5};
  cfg.validate();
  const NoiseIntensities q{VectorXd::Constant(1, 0.5), VectorXd::Constant(1, 0.2)};
  ScenarioConfig sc = cfg.scenario;
  sc.candidate_noise = q;
  sc.dt = 0.5;
  sc.master_seed = stream_seed(7, std::bit_cast<std::uint64_t>(0.5));
  const double direct = j_cost(monte_carlo(sc).nees, 2.0).value;
  CHECK(multi_dt_cost(q, cfg, 7).cost == direct);
  cfg.metric = CostKind::JNIS;
  CHECK(multi_dt_cost(q, cfg, 7).cost == j_cost(monte_carlo(sc).nis, 1.0).value);
}

TEST_CASE("Bayesian optimization bookkeeping") {
  TuneConfig cfg = small_config();
  const TuneResult a = bayesopt_minimize(oracle_objective(cfg), cfg);
  CHECK(a.method == "gpbo");
  CHECK(a.history.size() == static_cast<std::size_t>(cfg.n_seed + cfg.n_iter));
  double best = INFINITY;
  cfg.validate();
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    const auto& e = a.history[i];
    CHECK_FALSE(e.failed);
    CHECK(e.iteration == (i < 8 ? -1 - static_cast<long>(i) : static_cast<long>(i) - 8));
    for (Index j = 0; j < 2; ++j) {
      CHECK(e.q[j] >= cfg.bounds.lo[j] * (1 - 1e-12));
      CHECK(e.q[j] <= cfg.bounds.hi[j] * (1 + 1e-12));
    }
    best = std::min(best, e.cost);
  }
  CHECK(a.y_star == best);

  const TuneResult b = bayesopt_minimize(oracle_objective(cfg), cfg);
  REQUIRE(b.history.size() == a.history.size());
  for (std::size_t i = 0; i < a.history.size(); ++i) CHECK(a.history[i].q == b.history[i].q);

  TuneConfig none = cfg;
  none.n_iter = 0;
  CHECK(bayesopt_minimize(oracle_objective(none), none).history.size() == 8);

  TuneConfig tp = cfg;
  tp.family = SurrogateFamily::TP;
  tp.acquisition = Acquisition::UpperConfidenceBound;
  tp.keep_snapshots = true;
  const TuneResult t = bayesopt_minimize(oracle_objective(tp), tp);
  CHECK(t.method == "tpbo");
  CHECK(t.surrogate_snapshots.size() == 6);
}

TEST_CASE("a failed evaluation is resampled once, then tuning aborts") {
  TuneConfig cfg = small_config();
  cfg.n_iter = 2;
  const Objective base = oracle_objective(cfg);
  int calls = 0;
  const Objective flaky = [&](const VectorXd& q, std::uint64_t i) {
    if (++calls == 3) throw std::runtime_error("boom");
    return base(q, i);
  };
  const TuneResult r = bayesopt_minimize(flaky, cfg);
  CHECK(r.history.size() == 11);
  CHECK(r.history[2].failed);
  CHECK(r.history[2].error == "boom");
  CHECK(r.history[3].iteration == r.history[2].iteration);

  const Objective nan_cost = [](const VectorXd&, std::uint64_t) { return CostEvaluation{NAN, {}}; };
  CHECK_THROWS_AS(bayesopt_minimize(nan_cost, cfg), std::runtime_error);
}

TEST_CASE("Bayesian optimization on the oracle objective finds the truth") {
  TuneConfig cfg = small_config();
  cfg.n_seed = 15;
  cfg.n_iter = 35;
  cfg.acquisition_candidates = 500;
  cfg.acquisition_polish = 3;
  int hits = 0;
  for (std::uint64_t trial = 0; trial < 10; ++trial) {
    cfg.seed = 100 + trial;
    const TuneResult r = bayesopt_minimize(oracle_objective(cfg), cfg);
    const double dv = std::fabs(std::log(r.q_star.V[0]));
    const double dw = std::fabs(std::log(r.q_star.W[0] / 0.1));
    hits += dv < 0.35 && dw < 0.35;
  }
  CHECK(hits >= 9);
}

TEST_CASE("Nelder-Mead tuner uses the shared budget") {
  TuneConfig cfg = small_config();
  const TuneResult r = nelder_mead_minimize(oracle_objective(cfg), cfg, VectorXd::Constant(2, 0.5));
  CHECK(r.method == "nelder-mead");
  CHECK(r.history.size() <= static_cast<std::size_t>(cfg.n_seed + cfg.n_iter));
  CHECK_THROWS_AS(nelder_mead_minimize(oracle_objective(cfg), cfg, VectorXd::Zero(3)), std::invalid_argument);
}
