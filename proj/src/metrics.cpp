#include "kfat/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "kfat/chi_square.hpp"

namespace kfat {

namespace {

double quadratic_form(const VectorXd& v, const MatrixXd& M, const char* name) {
  if (M.rows() != v.size() || M.cols() != v.size()) {
    throw std::invalid_argument(std::string(name) + ": dimension mismatch");
  }
  Eigen::LLT<MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) {
    throw std::domain_error(std::string(name) + ": covariance is not positive definite");
  }
  return v.dot(llt.solve(v));
}

}  // namespace

double nees(const VectorXd& err, const MatrixXd& P) { return quadratic_form(err, P, "nees"); }

double nis(const VectorXd& innov, const MatrixXd& S) { return quadratic_form(innov, S, "nis"); }

ConsistencyCost j_cost(const MatrixXd& samples, double dof, CostKind kind, double dt) {
  if (samples.rows() < 1 || samples.cols() < 1) {
    throw std::invalid_argument("j_cost: need at least one run and one step");
  }
  if (!samples.allFinite()) throw std::invalid_argument("j_cost: non-finite sample");
  if (!(dof > 0.0)) throw std::invalid_argument("j_cost: dof must be positive");
  const VectorXd run_avg = samples.colwise().mean().transpose();
  const double time_avg = run_avg.mean();
  if (!(time_avg > 0.0)) {
    throw std::domain_error("j_cost: averaged statistic is zero, log undefined");
  }
  ConsistencyCost c;
  c.value = std::fabs(std::log(time_avg / dof));
  c.kind = kind;
  c.dt = dt;
  c.n_runs = samples.rows();
  c.n_steps = samples.cols();
  return c;
}

std::pair<double, double> chi_square_band(double dof, Index n_runs, double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw std::invalid_argument("chi_square_band: confidence must be in (0, 1)");
  }
  if (n_runs < 1) throw std::invalid_argument("chi_square_band: n_runs must be >= 1");
  const double alpha = 1.0 - confidence;
  const double total_dof = dof * static_cast<double>(n_runs);
  const double n = static_cast<double>(n_runs);
  return {chi_square_quantile(0.5 * alpha, total_dof) / n,
          chi_square_quantile(1.0 - 0.5 * alpha, total_dof) / n};
}

VectorXd two_sigma_coverage_per_component(const MatrixXd& errors,
                                          const std::vector<MatrixXd>& P_trace) {
  if (static_cast<std::size_t>(errors.rows()) != P_trace.size()) {
    throw std::invalid_argument("two_sigma_coverage: error and covariance traces differ in length");
  }
  const Index T = errors.rows();
  const Index n = errors.cols();
  VectorXd inside = VectorXd::Zero(n);
  if (T == 0) return inside;
  for (Index k = 0; k < T; ++k) {
    const MatrixXd& P = P_trace[static_cast<std::size_t>(k)];
    for (Index j = 0; j < n; ++j) {
      if (std::fabs(errors(k, j)) <= 2.0 * std::sqrt(P(j, j))) inside[j] += 1.0;
    }
  }
  return inside / static_cast<double>(T);
}

double two_sigma_coverage(const MatrixXd& errors, const std::vector<MatrixXd>& P_trace) {
  return two_sigma_coverage_per_component(errors, P_trace).mean();
}

}  // namespace kfat
