#include "kfat/simulate.hpp"

#include <cmath>

#include "kfat/parallel.hpp"

namespace kfat {

VectorXd control_input(double t, Index nu) { return VectorXd::Constant(nu, 2.0 * std::cos(0.75 * t)); }

MatrixXd psd_factor(const MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(M));
  const VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal();
}

namespace {

VectorXd standard_normal(Index n, Rng& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  VectorXd v(n);
  for (Index i = 0; i < n; ++i) v[i] = gauss(rng);
  return v;
}

}  // namespace

Trajectory simulate_truth(const DiscreteModel& model, const VectorXd& x0, Index steps, Rng& rng) {
  const Index nx = model.nx();
  const Index nz = model.nz();
  const Index nu = model.nu();
  const MatrixXd Lq = psd_factor(model.Q);
  const MatrixXd Lr = psd_factor(model.R);

  Trajectory out;
  out.states.resize(steps, nx);
  out.measurements.resize(steps, nz);
  out.controls.resize(steps, nu);
  VectorXd x = x0;
  for (Index k = 0; k < steps; ++k) {
    const VectorXd u = control_input(static_cast<double>(k + 1) * model.dt, nu);
    x = model.F * x + model.B * u + Lq * standard_normal(nx, rng);
    const VectorXd z = model.H * x + Lr * standard_normal(nz, rng);
    out.states.row(k) = x.transpose();
    out.measurements.row(k) = z.transpose();
    out.controls.row(k) = u.transpose();
  }
  return out;
}

VectorXd ScenarioConfig::initial_mean() const {
  return x0.size() > 0 ? x0 : VectorXd::Zero(model.nx());
}

MatrixXd ScenarioConfig::initial_covariance() const {
  return P0.size() > 0 ? P0 : MatrixXd::Identity(model.nx(), model.nx());
}

void ScenarioConfig::validate() const {
  model.validate();
  true_noise.validate_for(model);
  candidate_noise.validate_for(model);
  if (steps < 1) throw std::invalid_argument("steps must be >= 1");
  if (runs < 1) throw std::invalid_argument("runs must be >= 1");
  if (!(dt >= dt_min && dt <= dt_max)) {
    throw std::invalid_argument("dt=" + std::to_string(dt) + " outside [" + std::to_string(dt_min) +
                                ", " + std::to_string(dt_max) + "]");
  }
  if (x0.size() != 0 && x0.size() != model.nx()) throw std::invalid_argument("x0 has wrong size");
  if (P0.size() != 0 && (P0.rows() != model.nx() || P0.cols() != model.nx())) {
    throw std::invalid_argument("P0 has wrong shape");
  }
}

namespace {

// Lower-triangular L⁻¹ with L Lᵀ = M, so that xᵀ M⁻¹ x = |L⁻¹ x|².
MatrixXd whitening(const MatrixXd& M, long run, long step, const char* what) {
  Eigen::LLT<MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) {
    throw MonteCarloError(std::string(what) + " is not positive definite", run, step);
  }
  const Index n = M.rows();
  MatrixXd inv = MatrixXd::Identity(n, n);
  llt.matrixL().solveInPlace(inv);
  return inv;
}

}  // namespace

MonteCarloResult monte_carlo(const ScenarioConfig& cfg, const MonteCarloOptions& opts) {
  cfg.validate();
  const DiscreteModel truth = discretize(cfg.model, cfg.true_noise, cfg.dt);
  MonteCarloResult res;
  res.candidate = discretize(cfg.model, cfg.candidate_noise, cfg.dt);
  const DiscreteModel& filt = res.candidate;

  const Index T = cfg.steps;
  const Index N = cfg.runs;
  const VectorXd mean0 = cfg.initial_mean();
  const MatrixXd P0 = cfg.initial_covariance();
  const MatrixXd L0 = psd_factor(P0);

  // The gain and covariance sequence does not depend on the data, so it is
  // computed once and shared by every run.
  try {
    res.schedule = covariance_schedule(filt, P0, T);
  } catch (const FilterError& e) {
    throw MonteCarloError(e.what(), 0, e.step());
  }
  std::vector<MatrixXd> w_post, w_pred, w_innov;
  w_post.reserve(static_cast<std::size_t>(T));
  w_pred.reserve(static_cast<std::size_t>(T));
  w_innov.reserve(static_cast<std::size_t>(T));
  for (Index k = 0; k < T; ++k) {
    const auto i = static_cast<std::size_t>(k);
    w_post.push_back(whitening(res.schedule.P_post[i], 0, static_cast<long>(k), "posterior covariance"));
    w_pred.push_back(whitening(res.schedule.P_pred[i], 0, static_cast<long>(k), "predicted covariance"));
    w_innov.push_back(whitening(res.schedule.S[i], 0, static_cast<long>(k), "innovation covariance"));
  }

  res.nees.resize(N, T);
  res.nees_pred.resize(N, T);
  res.nis.resize(N, T);
  if (opts.keep_errors) res.errors.resize(static_cast<std::size_t>(N));

  parallel_for(static_cast<std::size_t>(N), [&](std::size_t run) {
    Rng rng(stream_seed(cfg.master_seed, run));
    std::normal_distribution<double> gauss(0.0, 1.0);
    VectorXd n0(cfg.model.nx());
    for (Index i = 0; i < n0.size(); ++i) n0[i] = gauss(rng);
    const VectorXd x_true0 = mean0 + L0 * n0;
    const Trajectory traj = simulate_truth(truth, x_true0, T, rng);

    MatrixXd err;
    if (opts.keep_errors) err.resize(T, cfg.model.nx());
    const auto r = static_cast<Index>(run);
    VectorXd x = mean0;
    for (Index k = 0; k < T; ++k) {
      const auto i = static_cast<std::size_t>(k);
      const VectorXd x_pred = filt.F * x + filt.B * traj.controls.row(k).transpose();
      const VectorXd innov = traj.measurements.row(k).transpose() - filt.H * x_pred;
      x = x_pred + res.schedule.K[i] * innov;
      const VectorXd e_pred = traj.states.row(k).transpose() - x_pred;
      const VectorXd e_post = traj.states.row(k).transpose() - x;
      res.nees(r, k) = (w_post[i] * e_post).squaredNorm();
      res.nees_pred(r, k) = (w_pred[i] * e_pred).squaredNorm();
      res.nis(r, k) = (w_innov[i] * innov).squaredNorm();
      if (opts.keep_errors) err.row(k) = e_post.transpose();
    }
    if (!res.nees.row(r).allFinite() || !res.nis.row(r).allFinite()) {
      throw MonteCarloError("non-finite consistency statistic", static_cast<long>(run), -1);
    }
    if (opts.keep_errors) res.errors[run] = std::move(err);
  });
  return res;
}

}  // namespace kfat
