#include "kfat/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "kfat/parallel.hpp"

namespace kfat {

namespace {

constexpr double kDivergenceNorm = 1e150;

struct FilterGain {
  MatrixXd K_w;
  MatrixXd K_bar;
  MatrixXd X;
};

FilterGain gain_at(const DiscreteModel& m, const MatrixXd& P) {
  const MatrixXd S = symmetrize(m.H * P * m.H.transpose() + m.R);
  Eigen::LLT<MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) {
    throw OracleDivergence("innovation covariance lost positive definiteness");
  }
  FilterGain g;
  g.K_w = llt.solve(m.H * P).transpose();
  g.K_bar = m.F * g.K_w;
  g.X = m.F - g.K_bar * m.H;
  return g;
}

MatrixXd propagate(const FilterGain& g, const MatrixXd& P, const MatrixXd& R, const MatrixXd& Q) {
  return symmetrize(g.X * P * g.X.transpose() + g.K_bar * R * g.K_bar.transpose() + Q);
}

void check_finite(const MatrixXd& P, const char* which) {
  if (!P.allFinite() || P.norm() > kDivergenceNorm) {
    throw OracleDivergence(std::string(which) + " recursion diverged");
  }
}

MatrixXd start_covariance(const DiscreteModel& m, const OracleOptions& opts) {
  if (opts.P0.size() == 0) return MatrixXd::Identity(m.nx(), m.nx());
  if (opts.P0.rows() != m.nx() || opts.P0.cols() != m.nx()) {
    throw std::invalid_argument("oracle: P0 has wrong shape");
  }
  return opts.P0;
}

bool small_step(const MatrixXd& next, const MatrixXd& prev, double tol) {
  return (next - prev).norm() < tol * std::max(1.0, next.norm());
}

double log_det_spd(const MatrixXd& M) {
  Eigen::LLT<MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) return std::nan("");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

}  // namespace

CovarianceRecursion filter_cov_recursion(const DiscreteModel& m, const OracleOptions& opts) {
  CovarianceRecursion rec;
  rec.P = start_covariance(m, opts);
  if (opts.keep_history) rec.history.push_back(rec.P);
  for (long i = 0; i < opts.max_iterations; ++i) {
    const FilterGain g = gain_at(m, rec.P);
    MatrixXd next = propagate(g, rec.P, m.R, m.Q);
    check_finite(next, "filter covariance");
    const bool done = small_step(next, rec.P, opts.tolerance);
    rec.P = std::move(next);
    rec.iterations = i + 1;
    if (opts.keep_history) rec.history.push_back(rec.P);
    if (done) {
      rec.converged = true;
      break;
    }
  }
  return rec;
}

JointRecursion true_mse_recursion(const DiscreteModel& filter_model, const DiscreteModel& true_model,
                                  const OracleOptions& opts) {
  if (filter_model.nx() != true_model.nx() || filter_model.nz() != true_model.nz()) {
    throw std::invalid_argument("true_mse_recursion: filter and truth models differ in shape");
  }
  JointRecursion j;
  j.filter.P = start_covariance(filter_model, opts);
  j.truth.P = j.filter.P;
  if (opts.keep_history) {
    j.filter.history.push_back(j.filter.P);
    j.truth.history.push_back(j.truth.P);
  }
  for (long i = 0; i < opts.max_iterations; ++i) {
    const FilterGain g = gain_at(filter_model, j.filter.P);
    MatrixXd P_next = propagate(g, j.filter.P, filter_model.R, filter_model.Q);
    MatrixXd S_next = propagate(g, j.truth.P, true_model.R, true_model.Q);
    check_finite(P_next, "filter covariance");
    check_finite(S_next, "true error covariance");
    const bool done = small_step(P_next, j.filter.P, opts.tolerance) &&
                      small_step(S_next, j.truth.P, opts.tolerance);
    j.filter.P = std::move(P_next);
    j.truth.P = std::move(S_next);
    j.filter.iterations = j.truth.iterations = i + 1;
    if (opts.keep_history) {
      j.filter.history.push_back(j.filter.P);
      j.truth.history.push_back(j.truth.P);
    }
    if (done) {
      j.filter.converged = j.truth.converged = true;
      break;
    }
  }
  j.K_w = gain_at(filter_model, j.filter.P).K_w;
  return j;
}

OracleResult expected_nees(const ContinuousModel& model, const NoiseIntensities& candidate,
                           const NoiseIntensities& truth, double dt, const OracleOptions& opts) {
  const DiscreteModel filt = discretize(model, candidate, dt);
  const DiscreteModel act = discretize(model, truth, dt);
  OracleOptions o = opts;
  o.keep_history = false;
  const JointRecursion j = true_mse_recursion(filt, act, o);

  OracleResult r;
  r.iterations = j.filter.iterations;
  r.converged = j.filter.converged;
  r.P_filter = j.filter.P;
  r.Sigma_true = j.truth.P;

  MatrixXd P = j.filter.P;
  MatrixXd Sigma = j.truth.P;
  if (opts.form == NeesForm::Posterior) {
    const Index n = filt.nx();
    const MatrixXd IKH = MatrixXd::Identity(n, n) - j.K_w * filt.H;
    const MatrixXd S = filt.H * P * filt.H.transpose() + filt.R;
    P = symmetrize(P - j.K_w * S * j.K_w.transpose());
    Sigma = symmetrize(IKH * Sigma * IKH.transpose() + j.K_w * act.R * j.K_w.transpose());
  }
  Eigen::LLT<MatrixXd> llt(P);
  if (llt.info() != Eigen::Success) {
    throw OracleDivergence("steady filter covariance is not positive definite");
  }
  r.expected_nees = llt.solve(Sigma).trace();
  r.jnees = std::fabs(std::log(r.expected_nees / static_cast<double>(filt.nx())));
  return r;
}

std::vector<double> LogAxis::values() const {
  if (!(lo > 0.0 && hi > lo) || n < 1) {
    throw std::invalid_argument("LogAxis: need 0 < lo < hi and n >= 1");
  }
  std::vector<double> v(static_cast<std::size_t>(n));
  if (n == 1) {
    v[0] = lo;
    return v;
  }
  const double a = std::log(lo);
  const double step = (std::log(hi) - a) / static_cast<double>(n - 1);
  for (Index i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = std::exp(a + step * static_cast<double>(i));
  v.front() = lo;
  v.back() = hi;
  return v;
}

Index LogAxis::nearest(double x) const {
  const auto v = values();
  Index best = 0;
  double best_d = std::fabs(std::log(v[0] / x));
  for (std::size_t i = 1; i < v.size(); ++i) {
    const double d = std::fabs(std::log(v[i] / x));
    if (d < best_d) {
      best_d = d;
      best = static_cast<Index>(i);
    }
  }
  return best;
}

NoiseIntensities uniform_intensities(const ContinuousModel& model, double V, double W) {
  return {VectorXd::Constant(model.nw(), V), VectorXd::Constant(model.nz(), W)};
}

std::vector<ScanPoint> oracle_scan(const ContinuousModel& model, const GridSpec& grid,
                                   const NoiseIntensities& truth, double dt,
                                   const OracleOptions& opts) {
  const auto vs = grid.V.values();
  const auto ws = grid.W.values();
  std::vector<ScanPoint> out(vs.size() * ws.size());
  parallel_for(out.size(), [&](std::size_t idx) {
    const std::size_t iv = idx / ws.size();
    const std::size_t iw = idx % ws.size();
    ScanPoint& p = out[idx];
    p.iv = static_cast<Index>(iv);
    p.iw = static_cast<Index>(iw);
    p.V = vs[iv];
    p.W = ws[iw];
    p.dt = dt;
    const OracleResult r = expected_nees(model, uniform_intensities(model, p.V, p.W), truth, dt, opts);
    p.expected_nees = r.expected_nees;
    p.jnees = r.jnees;
    p.logdet_P = log_det_spd(r.P_filter);
    p.logdet_Sigma = log_det_spd(r.Sigma_true);
  });
  return out;
}

std::vector<ScanPoint> nees_line_scan(const ContinuousModel& model, const GridSpec& grid,
                                      const NoiseIntensities& truth, double dt,
                                      std::pair<double, double> band, const OracleOptions& opts) {
  auto all = oracle_scan(model, grid, truth, dt, opts);
  std::vector<ScanPoint> line;
  std::copy_if(all.begin(), all.end(), std::back_inserter(line), [&](const ScanPoint& p) {
    return p.expected_nees >= band.first && p.expected_nees <= band.second;
  });
  return line;
}

std::vector<SurfacePoint> multi_dt_surface(const ContinuousModel& model, const GridSpec& grid,
                                           const std::vector<double>& dt_list,
                                           const NoiseIntensities& truth,
                                           const OracleOptions& opts) {
  if (dt_list.empty()) throw std::invalid_argument("multi_dt_surface: dt_list is empty");
  const auto vs = grid.V.values();
  const auto ws = grid.W.values();
  std::vector<SurfacePoint> out(vs.size() * ws.size());
  parallel_for(out.size(), [&](std::size_t idx) {
    const std::size_t iv = idx / ws.size();
    const std::size_t iw = idx % ws.size();
    SurfacePoint& p = out[idx];
    p.iv = static_cast<Index>(iv);
    p.iw = static_cast<Index>(iw);
    p.V = vs[iv];
    p.W = ws[iw];
    const NoiseIntensities cand = uniform_intensities(model, p.V, p.W);
    p.per_dt.reserve(dt_list.size());
    p.jnees = 0.0;
    for (double dt : dt_list) {
      const double j = expected_nees(model, cand, truth, dt, opts).jnees;
      p.per_dt.push_back(j);
      p.jnees = std::max(p.jnees, j);
    }
  });
  return out;
}

}  // namespace kfat
