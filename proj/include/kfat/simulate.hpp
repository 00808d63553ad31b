#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "kfat/kalman.hpp"
#include "kfat/sysmodel.hpp"

namespace kfat {

using Rng = std::mt19937_64;

inline constexpr double kDtMin = 0.01;
inline constexpr double kDtMax = 2.0;

/// u(t) = 2 cos(0.75 t) on every control channel.
VectorXd control_input(double t, Index nu);

/// Factor L with L Lᵀ = M for symmetric PSD M. Eigenvalues below zero
/// (round-off) are clamped, so singular or zero matrices are accepted.
MatrixXd psd_factor(const MatrixXd& M);

struct Trajectory {
  MatrixXd states;        // T x nx, x_1..x_T
  MatrixXd measurements;  // T x nz
  MatrixXd controls;      // T x nu, u_k = control_input(k dt)
};

/// x_k = F x_{k-1} + B u_k + v_k,  z_k = H x_k + w_k  for k = 1..steps,
/// v ~ N(0, Q), w ~ N(0, R).
Trajectory simulate_truth(const DiscreteModel& model, const VectorXd& x0, Index steps, Rng& rng);

struct ScenarioConfig {
  ContinuousModel model;
  NoiseIntensities true_noise;
  NoiseIntensities candidate_noise;
  double dt = 0.1;
  Index steps = 200;
  Index runs = 200;
  std::uint64_t master_seed = 1;
  /// Prior mean; empty means zeros.
  VectorXd x0;
  /// Prior covariance; empty means identity.
  MatrixXd P0;
  double dt_min = kDtMin;
  double dt_max = kDtMax;

  VectorXd initial_mean() const;
  MatrixXd initial_covariance() const;
  void validate() const;
};

struct MonteCarloResult {
  MatrixXd nees;       // N x T, posterior covariance
  MatrixXd nees_pred;  // N x T, predicted covariance
  MatrixXd nis;        // N x T
  /// Per-run T x nx state errors x_k - x_{k|k}; empty unless requested.
  std::vector<MatrixXd> errors;
  DiscreteModel candidate;
  CovarianceSchedule schedule;
};

struct MonteCarloOptions {
  bool keep_errors = false;
};

/// Thrown when a run fails; carries the run and step indices.
class MonteCarloError : public std::runtime_error {
 public:
  MonteCarloError(const std::string& what, long run, long step)
      : std::runtime_error(what), run_(run), step_(step) {}
  long run() const noexcept { return run_; }
  long step() const noexcept { return step_; }

 private:
  long run_;
  long step_;
};

/// N independent runs. Run i draws its truth (initial state from
/// N(x0, P0), process and measurement noise) from a stream seeded by
/// (master_seed, i) and filters it with the model discretized at the
/// candidate intensities.
MonteCarloResult monte_carlo(const ScenarioConfig& cfg, const MonteCarloOptions& opts = {});

}  // namespace kfat
