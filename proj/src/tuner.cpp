#include "kfat/tuner.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>

#include "kfat/oracle.hpp"
#include "kfat/parallel.hpp"

namespace kfat {

Bounds default_bounds(const ContinuousModel& model) {
  const Index nw = model.nw();
  const Index nz = model.nz();
  Bounds b{VectorXd(nw + nz), VectorXd(nw + nz)};
  b.lo.head(nw).setConstant(0.1);
  b.hi.head(nw).setConstant(5.0);
  b.lo.tail(nz).setConstant(0.01);
  b.hi.tail(nz).setConstant(0.5);
  return b;
}

VectorXd to_vector(const NoiseIntensities& q) {
  VectorXd v(q.V.size() + q.W.size());
  v << q.V, q.W;
  return v;
}

NoiseIntensities to_intensities(const VectorXd& q, const ContinuousModel& model) {
  if (q.size() != model.nw() + model.nz()) {
    throw std::invalid_argument("parameter vector length does not match nw + nz");
  }
  return {q.head(model.nw()), q.tail(model.nz())};
}

VectorXd unit_to_q(const VectorXd& u, const Bounds& b) {
  const Eigen::ArrayXd llo = b.lo.array().log();
  const Eigen::ArrayXd lhi = b.hi.array().log();
  return (llo + u.array().min(1.0).max(0.0) * (lhi - llo)).exp().matrix();
}

VectorXd q_to_unit(const VectorXd& q, const Bounds& b) {
  const Eigen::ArrayXd llo = b.lo.array().log();
  const Eigen::ArrayXd lhi = b.hi.array().log();
  return ((q.array().log() - llo) / (lhi - llo)).matrix();
}

void TuneConfig::validate() {
  scenario.model.validate();
  scenario.true_noise.validate_for(scenario.model);
  const Index d = scenario.model.nw() + scenario.model.nz();
  if (bounds.lo.size() == 0 && bounds.hi.size() == 0) bounds = default_bounds(scenario.model);
  if (bounds.lo.size() != d || bounds.hi.size() != d) {
    throw std::invalid_argument("bounds must have nw + nz entries");
  }
  if (!((bounds.lo.array() > 0.0).all() && (bounds.lo.array() < bounds.hi.array()).all())) {
    throw std::invalid_argument("bounds need 0 < lo < hi in every coordinate");
  }
  if (dt_list.empty()) throw std::invalid_argument("dt_list is empty");
  std::set<double> seen;
  for (double dt : dt_list) {
    if (!(dt >= scenario.dt_min && dt <= scenario.dt_max)) {
      throw std::invalid_argument("dt=" + std::to_string(dt) + " outside the allowed range");
    }
    if (!seen.insert(dt).second) throw std::invalid_argument("dt_list entries must be distinct");
  }
  if (n_seed < 2) throw std::invalid_argument("n_seed must be >= 2");
  if (n_iter < 0) throw std::invalid_argument("n_iter must be >= 0");
  if (scenario.steps < 1 || scenario.runs < 1) throw std::invalid_argument("steps and runs must be >= 1");
  if (family == SurrogateFamily::TP && !(tp_dof > 2.0)) throw std::invalid_argument("tp_dof must exceed 2");
}

CostEvaluation multi_dt_cost(const NoiseIntensities& q, const TuneConfig& cfg,
                             std::uint64_t iteration_seed) {
  CostEvaluation out;
  out.cost = -std::numeric_limits<double>::infinity();
  for (double dt : cfg.dt_list) {
    ScenarioConfig sc = cfg.scenario;
    sc.candidate_noise = q;
    sc.dt = dt;
    sc.master_seed = stream_seed(iteration_seed, std::bit_cast<std::uint64_t>(dt));
    MonteCarloResult mc;
    try {
      mc = monte_carlo(sc);
    } catch (const MonteCarloError& e) {
      throw MonteCarloError("dt=" + std::to_string(dt) + ": " + e.what(), e.run(), e.step());
    }
    const bool use_nis = cfg.metric == CostKind::JNIS;
    const double dof = static_cast<double>(use_nis ? sc.model.nz() : sc.model.nx());
    const double j = j_cost(use_nis ? mc.nis : mc.nees, dof, cfg.metric, dt).value;
    out.per_dt.push_back(j);
    out.cost = std::max(out.cost, j);
  }
  return out;
}

Objective monte_carlo_objective(const TuneConfig& cfg) {
  return [cfg](const VectorXd& q, std::uint64_t eval_index) {
    return multi_dt_cost(to_intensities(q, cfg.scenario.model), cfg,
                         stream_seed(cfg.seed ^ 0x5eedULL, eval_index));
  };
}

Objective oracle_objective(const TuneConfig& cfg) {
  return [cfg](const VectorXd& q, std::uint64_t) {
    CostEvaluation out;
    out.cost = 0.0;
    const NoiseIntensities cand = to_intensities(q, cfg.scenario.model);
    OracleOptions opts;
    opts.P0 = cfg.scenario.initial_covariance();
    for (double dt : cfg.dt_list) {
      const double j = expected_nees(cfg.scenario.model, cand, cfg.scenario.true_noise, dt, opts).jnees;
      out.per_dt.push_back(j);
      out.cost = std::max(out.cost, j);
    }
    return out;
  };
}

double expected_improvement(double mean, double variance, double best) {
  if (variance < 0.0) throw std::invalid_argument("expected_improvement: negative variance");
  const double sigma = std::sqrt(variance);
  if (sigma <= 0.0) return 0.0;
  const double z = (best - mean) / sigma;
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  return std::max((best - mean) * cdf + sigma * pdf, 0.0);
}

namespace {

double acquisition_value(const SurrogateState& s, const VectorXd& u, double best, const TuneConfig& cfg) {
  const Prediction p = s.posterior(u);
  if (cfg.acquisition == Acquisition::UpperConfidenceBound) {
    // Lower confidence bound for minimization, negated so larger is better.
    return -(p.mean - cfg.ucb_kappa * std::sqrt(p.variance));
  }
  return expected_improvement(p.mean, p.variance, best);
}

}  // namespace

VectorXd maximize_acquisition(const SurrogateState& state, double best, const TuneConfig& cfg,
                              std::mt19937_64& rng) {
  const Index d = state.X().cols();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n_cand = std::max(1, cfg.acquisition_candidates);
  std::vector<std::pair<double, VectorXd>> cands;
  cands.reserve(static_cast<std::size_t>(n_cand));
  for (int i = 0; i < n_cand; ++i) {
    VectorXd u(d);
    for (Index j = 0; j < d; ++j) u[j] = unit(rng);
    cands.emplace_back(acquisition_value(state, u, best, cfg), std::move(u));
  }
  const auto n_polish = static_cast<std::size_t>(std::clamp(cfg.acquisition_polish, 0, n_cand));
  std::partial_sort(cands.begin(), cands.begin() + static_cast<long>(std::max<std::size_t>(n_polish, 1)),
                    cands.end(), [](const auto& a, const auto& b) { return a.first > b.first; });

  VectorXd best_u = cands.front().second;
  double best_val = cands.front().first;
  const VectorXd lo = VectorXd::Zero(d);
  const VectorXd hi = VectorXd::Ones(d);
  NelderMeadOptions nm;
  nm.max_evals = 40 * d;
  nm.initial_step = 0.02;
  nm.diameter_tol = 1e-5;
  for (std::size_t i = 0; i < n_polish; ++i) {
    const auto r = nelder_mead([&](const VectorXd& u) { return -acquisition_value(state, u, best, cfg); },
                               cands[i].second, lo, hi, nm);
    if (-r.f_min > best_val) {
      best_val = -r.f_min;
      best_u = r.x_min;
    }
  }
  return best_u.cwiseMax(lo).cwiseMin(hi);
}

MatrixXd latin_hypercube(Index n, Index dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  MatrixXd pts(n, dim);
  std::vector<Index> perm(static_cast<std::size_t>(n));
  for (Index j = 0; j < dim; ++j) {
    std::iota(perm.begin(), perm.end(), Index{0});
    // Fisher-Yates with an explicit draw so the result does not depend on
    // the standard library's shuffle.
    for (std::size_t i = perm.size(); i > 1; --i) {
      const auto k = static_cast<std::size_t>(unit(rng) * static_cast<double>(i));
      std::swap(perm[i - 1], perm[std::min(k, i - 1)]);
    }
    for (Index i = 0; i < n; ++i) {
      pts(i, j) = (static_cast<double>(perm[static_cast<std::size_t>(i)]) + unit(rng)) / static_cast<double>(n);
    }
  }
  return pts;
}

namespace {

class HistoryRecorder {
 public:
  HistoryRecorder(const Objective& f, const TuneConfig& cfg) : f_(f), cfg_(cfg) {}

  /// Evaluates at unit point u. On failure records the attempt and returns false.
  bool evaluate(const VectorXd& u, long iteration) {
    Evaluation e;
    e.iteration = iteration;
    e.q = unit_to_q(u, cfg_.bounds);
    try {
      CostEvaluation c = f_(e.q, counter_++);
      if (!std::isfinite(c.cost)) throw std::runtime_error("non-finite cost");
      e.cost = c.cost;
      e.per_dt = std::move(c.per_dt);
    } catch (const std::exception& ex) {
      e.failed = true;
      e.error = ex.what();
      e.cost = std::numeric_limits<double>::quiet_NaN();
    }
    history.push_back(e);
    if (!e.failed) {
      units.push_back(u);
      costs.push_back(e.cost);
    }
    return !e.failed;
  }

  /// Evaluate, and on failure retry once at a uniform random point.
  void evaluate_or_resample(const VectorXd& u, long iteration, std::mt19937_64& rng) {
    if (evaluate(u, iteration)) return;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    VectorXd alt(u.size());
    for (Index j = 0; j < alt.size(); ++j) alt[j] = unit(rng);
    if (!evaluate(alt, iteration)) {
      throw std::runtime_error("evaluation failed twice at iteration " + std::to_string(iteration) +
                               ": " + history.back().error);
    }
  }

  std::vector<Evaluation> history;
  std::vector<VectorXd> units;
  std::vector<double> costs;

 private:
  const Objective& f_;
  const TuneConfig& cfg_;
  std::uint64_t counter_ = 0;
};

TuneResult finish(std::string method, const TuneConfig& cfg, std::vector<Evaluation> history,
                  std::chrono::steady_clock::time_point t0) {
  TuneResult r;
  r.method = std::move(method);
  r.history = std::move(history);
  r.y_star = std::numeric_limits<double>::infinity();
  VectorXd q_best;
  for (const auto& e : r.history) {
    if (!e.failed && e.cost < r.y_star) {
      r.y_star = e.cost;
      q_best = e.q;
    }
  }
  if (q_best.size() == 0) throw std::runtime_error("no successful evaluation");
  r.q_star = to_intensities(q_best, cfg.scenario.model);
  r.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace

TuneResult bayesopt_minimize(const Objective& objective, const TuneConfig& cfg_in) {
  TuneConfig cfg = cfg_in;
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const Index d = cfg.bounds.lo.size();
  std::mt19937_64 rng(stream_seed(cfg.seed, 0xb0ULL));

  HistoryRecorder rec(objective, cfg);
  const MatrixXd design = latin_hypercube(cfg.n_seed, d, rng);
  for (Index i = 0; i < design.rows(); ++i) {
    rec.evaluate_or_resample(design.row(i).transpose(), -1 - static_cast<long>(i), rng);
  }

  FitOptions fit;
  fit.family = cfg.family;
  fit.tp_dof = cfg.tp_dof;
  fit.smoothness = cfg.smoothness;
  std::optional<Kernel> kernel;
  std::vector<Kernel> snapshots;

  for (int it = 0; it < cfg.n_iter; ++it) {
    const auto M = static_cast<Index>(rec.units.size());
    MatrixXd X(M, d);
    VectorXd y(M);
    for (Index i = 0; i < M; ++i) {
      X.row(i) = rec.units[static_cast<std::size_t>(i)].transpose();
      y[i] = rec.costs[static_cast<std::size_t>(i)];
    }
    const double mu = y.mean();
    double sd = std::sqrt((y.array() - mu).square().mean());
    if (!(sd > 1e-12)) sd = 1.0;
    const VectorXd ys = (y.array() - mu) / sd;

    const bool full = !kernel || cfg.relearn_interval <= 1 || it % cfg.relearn_interval == 0;
    fit.restarts = full ? cfg.hyper_restarts : 1;
    fit.max_iterations = full ? 150 : 40;
    const FitResult fr = fit_hyperparams(X, ys, rng, fit, kernel ? &*kernel : nullptr);
    kernel = fr.kernel;
    if (cfg.keep_snapshots) snapshots.push_back(*kernel);

    const SurrogateState state(X, ys, *kernel, cfg.family, cfg.tp_dof);
    const VectorXd u = maximize_acquisition(state, ys.minCoeff(), cfg, rng);
    rec.evaluate_or_resample(u, it, rng);
  }

  TuneResult r = finish(cfg.family == SurrogateFamily::TP ? "tpbo" : "gpbo", cfg, std::move(rec.history), t0);
  r.surrogate_snapshots = std::move(snapshots);
  return r;
}

TuneResult bayesopt_tune(TuneConfig cfg) {
  cfg.validate();
  return bayesopt_minimize(monte_carlo_objective(cfg), cfg);
}

TuneResult nelder_mead_minimize(const Objective& objective, const TuneConfig& cfg_in,
                                const VectorXd& start_unit) {
  TuneConfig cfg = cfg_in;
  cfg.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const Index d = cfg.bounds.lo.size();
  if (start_unit.size() != d) throw std::invalid_argument("nelder_mead start has wrong dimension");

  HistoryRecorder rec(objective, cfg);
  long iteration = 0;
  auto f = [&](const VectorXd& u) {
    if (!rec.evaluate(u, iteration++)) return std::numeric_limits<double>::infinity();
    return rec.costs.back();
  };
  NelderMeadOptions opts;
  opts.max_evals = cfg.n_seed + cfg.n_iter;
  nelder_mead(f, start_unit, VectorXd::Zero(d), VectorXd::Ones(d), opts);
  return finish("nelder-mead", cfg, std::move(rec.history), t0);
}

TuneResult nelder_mead_tune(TuneConfig cfg, const VectorXd& start_unit) {
  cfg.validate();
  return nelder_mead_minimize(monte_carlo_objective(cfg), cfg, start_unit);
}

}  // namespace kfat
