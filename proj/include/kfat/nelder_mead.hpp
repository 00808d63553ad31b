#pragma once

#include <functional>

#include "kfat/sysmodel.hpp"

namespace kfat {

struct NelderMeadOptions {
  double reflection = 1.0;
  double expansion = 2.0;
  double contraction = 0.5;
  double shrink = 0.5;
  /// Terminate once the simplex diameter falls below this.
  double diameter_tol = 1e-4;
  long max_evals = 1000;
  /// Edge length of the initial simplex, relative to the box width per
  /// coordinate (or absolute when the box is unbounded).
  double initial_step = 0.1;
};

struct NelderMeadResult {
  VectorXd x_min;
  double f_min = 0.0;
  long evals = 0;
};

/// Downhill simplex minimization. Trial points are clamped into [lo, hi];
/// pass infinite bounds for an unconstrained search.
NelderMeadResult nelder_mead(const std::function<double(const VectorXd&)>& objective,
                             const VectorXd& x0, const VectorXd& lo, const VectorXd& hi,
                             const NelderMeadOptions& opts = {});

}  // namespace kfat
