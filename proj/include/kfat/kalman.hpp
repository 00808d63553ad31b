#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "kfat/sysmodel.hpp"

namespace kfat {

struct FilterState {
  VectorXd x;
  MatrixXd P;
};

struct UpdateResult {
  FilterState state;
  VectorXd innovation;
  MatrixXd S;
  MatrixXd K;
};

struct StepRecord {
  VectorXd x_pred;
  MatrixXd P_pred;
  VectorXd x_post;
  MatrixXd P_post;
  VectorXd innovation;
  MatrixXd S;
  MatrixXd K;
};

using FilterTrace = std::vector<StepRecord>;

/// Raised when the innovation covariance cannot be factored. `step` is the
/// zero-based measurement index, or -1 outside a filter run.
class FilterError : public std::runtime_error {
 public:
  FilterError(const std::string& what, long step)
      : std::runtime_error(what), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

FilterState predict(const FilterState& state, const DiscreteModel& model, const VectorXd& u);

/// Measurement update with S solved by Cholesky. The covariance update is
/// P - K S Kᵀ followed by symmetrization.
UpdateResult update(const FilterState& state, const DiscreteModel& model, const VectorXd& z);

/// Alternating predict/update over T steps. `controls` is T x nu and
/// `measurements` is T x nz, one row per step.
FilterTrace run_filter(const DiscreteModel& model, const VectorXd& x0, const MatrixXd& P0,
                       const MatrixXd& controls, const MatrixXd& measurements);

/// Measurement-independent part of a filter run: the covariances and gains
/// for each of `steps` steps, starting from P0.
struct CovarianceSchedule {
  std::vector<MatrixXd> P_pred;
  std::vector<MatrixXd> P_post;
  std::vector<MatrixXd> S;
  std::vector<MatrixXd> K;
};

CovarianceSchedule covariance_schedule(const DiscreteModel& model, const MatrixXd& P0, Index steps);

}  // namespace kfat
