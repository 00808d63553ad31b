#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "kfat/metrics.hpp"
#include "kfat/nelder_mead.hpp"
#include "kfat/simulate.hpp"
#include "kfat/surrogate.hpp"

namespace kfat {

enum class Acquisition { ExpectedImprovement, UpperConfidenceBound };

/// Box on the tuning vector q = [V; W] in linear units.
struct Bounds {
  VectorXd lo;
  VectorXd hi;
};

/// V in [0.1, 5] for every process channel, W in [0.01, 0.5] for every
/// measurement channel.
Bounds default_bounds(const ContinuousModel& model);

VectorXd to_vector(const NoiseIntensities& q);
NoiseIntensities to_intensities(const VectorXd& q, const ContinuousModel& model);

struct TuneConfig {
  /// Truth, horizon, run count and prior; candidate_noise is ignored.
  ScenarioConfig scenario;
  Bounds bounds;
  std::vector<double> dt_list{0.1, 0.5};
  CostKind metric = CostKind::JNEES;
  int n_seed = 20;
  int n_iter = 200;
  SurrogateFamily family = SurrogateFamily::GP;
  double tp_dof = 5.0;
  Smoothness smoothness = Smoothness::Matern32;
  Acquisition acquisition = Acquisition::ExpectedImprovement;
  double ucb_kappa = 2.0;
  std::uint64_t seed = 1;
  /// Full multi-start hyperparameter search every `relearn_interval`
  /// iterations; in between, a warm-started single ascent.
  int relearn_interval = 10;
  int hyper_restarts = 3;
  int acquisition_candidates = 1000;
  int acquisition_polish = 5;
  bool keep_snapshots = false;

  /// Fills empty bounds from default_bounds and checks every invariant.
  void validate();
};

struct CostEvaluation {
  double cost = 0.0;
  std::vector<double> per_dt;
};

/// Worst-case consistency cost over cfg.dt_list: one Monte Carlo batch per
/// sample time, each scored by cfg.metric. Batch seeds are keyed by
/// (iteration_seed, dt), so a sample time gets the same noise whichever
/// list it appears in.
CostEvaluation multi_dt_cost(const NoiseIntensities& q, const TuneConfig& cfg,
                             std::uint64_t iteration_seed);

/// Objective over q; the second argument is the evaluation counter.
using Objective = std::function<CostEvaluation(const VectorXd& q, std::uint64_t eval_index)>;

/// multi_dt_cost with a fresh seed per evaluation.
Objective monte_carlo_objective(const TuneConfig& cfg);

/// Noise-free stand-in: the largest oracle J_NEES over cfg.dt_list.
Objective oracle_objective(const TuneConfig& cfg);

/// EI for minimization; zero when variance is zero.
double expected_improvement(double mean, double variance, double best);

/// Point in the unit box maximizing the acquisition: uniform random
/// candidates, then a simplex polish from the best few.
VectorXd maximize_acquisition(const SurrogateState& state, double best, const TuneConfig& cfg,
                              std::mt19937_64& rng);

/// Latin hypercube of n points in [0, 1]^dim.
MatrixXd latin_hypercube(Index n, Index dim, std::mt19937_64& rng);

struct Evaluation {
  long iteration = 0;  // negative for the seed design
  VectorXd q;
  double cost = 0.0;
  std::vector<double> per_dt;
  bool failed = false;
  std::string error;
};

struct TuneResult {
  std::string method;
  NoiseIntensities q_star;
  double y_star = 0.0;
  std::vector<Evaluation> history;
  std::vector<Kernel> surrogate_snapshots;
  double wall_time = 0.0;
};

/// Bayesian optimization over the log-scaled box: Latin hypercube seed,
/// then n_iter rounds of fit, acquire, evaluate. Returns the best point
/// evaluated.
TuneResult bayesopt_minimize(const Objective& objective, const TuneConfig& cfg);

/// bayesopt_minimize on the Monte Carlo objective.
TuneResult bayesopt_tune(TuneConfig cfg);

/// Downhill simplex on the same log-scaled box, started from `start_unit`
/// (a point of [0,1]^d), with n_seed + n_iter evaluations.
TuneResult nelder_mead_minimize(const Objective& objective, const TuneConfig& cfg,
                                const VectorXd& start_unit);

TuneResult nelder_mead_tune(TuneConfig cfg, const VectorXd& start_unit);

/// Maps between the unit box and q (log-linear per coordinate).
VectorXd unit_to_q(const VectorXd& u, const Bounds& b);
VectorXd q_to_unit(const VectorXd& q, const Bounds& b);

}  // namespace kfat
