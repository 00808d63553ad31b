#pragma once

#include <utility>
#include <vector>

#include "kfat/sysmodel.hpp"

namespace kfat {

enum class CostKind { JNEES, JNIS };

struct ConsistencyCost {
  double value = 0.0;
  CostKind kind = CostKind::JNEES;
  double dt = 0.0;
  Index n_runs = 0;
  Index n_steps = 0;
};

/// eᵀ P⁻¹ e through a Cholesky solve. Throws std::domain_error if P is not PD.
double nees(const VectorXd& err, const MatrixXd& P);

/// νᵀ S⁻¹ ν through a Cholesky solve.
double nis(const VectorXd& innov, const MatrixXd& S);

/// |log((1/T) Σ_k ε̄_k / dof)| with ε̄_k the run average at step k.
/// `samples` is N x T (runs x steps).
ConsistencyCost j_cost(const MatrixXd& samples, double dof, CostKind kind = CostKind::JNEES,
                       double dt = 0.0);

/// Two-sided band for a statistic averaged over N runs, each chi-square
/// with `dof` degrees of freedom:
///   [χ²_{N·dof}(α/2), χ²_{N·dof}(1-α/2)] / N,  α = 1 - confidence.
std::pair<double, double> chi_square_band(double dof, Index n_runs, double confidence);

/// Fraction of (step, component) pairs with |e_k[j]| <= 2 sqrt(P_k[j][j]),
/// averaged over components. `errors` is T x nx.
double two_sigma_coverage(const MatrixXd& errors, const std::vector<MatrixXd>& P_trace);

/// Per-component coverage, same convention as two_sigma_coverage.
VectorXd two_sigma_coverage_per_component(const MatrixXd& errors,
                                          const std::vector<MatrixXd>& P_trace);

}  // namespace kfat
