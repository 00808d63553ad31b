#pragma once

#include <stdexcept>
#include <utility>
#include <vector>

#include "kfat/sysmodel.hpp"

namespace kfat {

/// Which covariance the expected NEES is taken against.
enum class NeesForm { Predicted, Posterior };

struct OracleOptions {
  double tolerance = 1e-12;
  long max_iterations = 100000;
  /// Starting covariance for both recursions; empty means identity.
  MatrixXd P0;
  NeesForm form = NeesForm::Predicted;
  bool keep_history = false;
};

class OracleDivergence : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CovarianceRecursion {
  MatrixXd P;  // last iterate
  std::vector<MatrixXd> history;
  long iterations = 0;
  bool converged = false;
};

/// Predicted-covariance recursion of a filter tuned with `filter_model`:
///   P⁺ = X P Xᵀ + K̄ R K̄ᵀ + Q,  K̄ = F K_w,  X = F - K̄ H,
/// where K_w = P Hᵀ (H P Hᵀ + R)⁻¹. Stops when |ΔP|_F < tol·max(1, |P|_F).
CovarianceRecursion filter_cov_recursion(const DiscreteModel& filter_model,
                                         const OracleOptions& opts = {});

struct JointRecursion {
  CovarianceRecursion filter;  // P̄, what the filter believes
  CovarianceRecursion truth;   // Σ, the actual predicted MSE
  /// Gain K_w at the final iterate (needed for the posterior form).
  MatrixXd K_w;
};

/// Runs the filter recursion together with the true mean-squared-error
/// recursion
///   Σ⁺ = X Σ Xᵀ + K̄ R(W_a) K̄ᵀ + Q(V_a)
/// that shares X and K̄ with the filter. Both start at P0.
JointRecursion true_mse_recursion(const DiscreteModel& filter_model, const DiscreteModel& true_model,
                                  const OracleOptions& opts = {});

struct OracleResult {
  double expected_nees = 0.0;
  double jnees = 0.0;
  MatrixXd P_filter;
  MatrixXd Sigma_true;
  long iterations = 0;
  bool converged = false;
};

/// Steady-state E[NEES] = trace(P̄⁻¹ Σ) for a filter tuned at `candidate`
/// running on a plant with intensities `truth`, with J = |log(E/nx)|.
/// With NeesForm::Posterior both covariances are pushed through one more
/// measurement update first.
OracleResult expected_nees(const ContinuousModel& model, const NoiseIntensities& candidate,
                           const NoiseIntensities& truth, double dt, const OracleOptions& opts = {});

/// Log-spaced axis of n points over [lo, hi].
struct LogAxis {
  double lo = 0.1;
  double hi = 1.0;
  Index n = 10;
  std::vector<double> values() const;
  /// Index of the grid value closest to v in log distance.
  Index nearest(double v) const;
};

struct GridSpec {
  LogAxis V{0.1, 5.0, 50};
  LogAxis W{0.01, 0.5, 50};
};

struct ScanPoint {
  Index iv = 0;
  Index iw = 0;
  double V = 0.0;
  double W = 0.0;
  double dt = 0.0;
  double expected_nees = 0.0;
  double jnees = 0.0;
  double logdet_P = 0.0;
  double logdet_Sigma = 0.0;
};

/// Broadcasts scalar (V, W) to every noise channel of `model`.
NoiseIntensities uniform_intensities(const ContinuousModel& model, double V, double W);

/// Oracle over the full grid, V-major order (iv outer, iw inner).
std::vector<ScanPoint> oracle_scan(const ContinuousModel& model, const GridSpec& grid,
                                   const NoiseIntensities& truth, double dt,
                                   const OracleOptions& opts = {});

/// Grid points whose expected NEES falls in [band.first, band.second].
std::vector<ScanPoint> nees_line_scan(const ContinuousModel& model, const GridSpec& grid,
                                      const NoiseIntensities& truth, double dt,
                                      std::pair<double, double> band = {1.995, 2.005},
                                      const OracleOptions& opts = {});

struct SurfacePoint {
  Index iv = 0;
  Index iw = 0;
  double V = 0.0;
  double W = 0.0;
  double jnees = 0.0;           // max over dt
  std::vector<double> per_dt;   // same order as dt_list
};

/// Per grid point, the largest oracle J over the sample times in dt_list.
std::vector<SurfacePoint> multi_dt_surface(const ContinuousModel& model, const GridSpec& grid,
                                           const std::vector<double>& dt_list,
                                           const NoiseIntensities& truth,
                                           const OracleOptions& opts = {});

}  // namespace kfat
