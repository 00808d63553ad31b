#include "kfat/kalman.hpp"

namespace kfat {

namespace {

void check_dims(const FilterState& state, const DiscreteModel& model) {
  const Index n = model.nx();
  if (state.x.size() != n || state.P.rows() != n || state.P.cols() != n) {
    throw std::invalid_argument("filter state dimension does not match model nx=" +
                                std::to_string(n));
  }
}

struct Gain {
  MatrixXd S;
  MatrixXd K;
};

Gain compute_gain(const MatrixXd& P, const DiscreteModel& model, long step) {
  Gain g;
  g.S = symmetrize(model.H * P * model.H.transpose() + model.R);
  Eigen::LLT<MatrixXd> llt(g.S);
  if (llt.info() != Eigen::Success) {
    throw FilterError("innovation covariance is not positive definite", step);
  }
  // K = P Hᵀ S⁻¹  <=>  S Kᵀ = H P
  g.K = llt.solve(model.H * P).transpose();
  return g;
}

}  // namespace

FilterState predict(const FilterState& state, const DiscreteModel& model, const VectorXd& u) {
  check_dims(state, model);
  if (u.size() != model.nu()) {
    throw std::invalid_argument("control vector has wrong size");
  }
  FilterState out;
  out.x = model.F * state.x + model.B * u;
  out.P = symmetrize(model.F * state.P * model.F.transpose() + model.Q);
  return out;
}

UpdateResult update(const FilterState& state, const DiscreteModel& model, const VectorXd& z) {
  check_dims(state, model);
  if (z.size() != model.nz()) {
    throw std::invalid_argument("measurement vector has wrong size");
  }
  Gain g = compute_gain(state.P, model, -1);
  UpdateResult r;
  r.innovation = z - model.H * state.x;
  r.state.x = state.x + g.K * r.innovation;
  r.state.P = symmetrize(state.P - g.K * g.S * g.K.transpose());
  r.S = std::move(g.S);
  r.K = std::move(g.K);
  return r;
}

FilterTrace run_filter(const DiscreteModel& model, const VectorXd& x0, const MatrixXd& P0,
                       const MatrixXd& controls, const MatrixXd& measurements) {
  if (controls.rows() != measurements.rows()) {
    throw std::invalid_argument("controls and measurements differ in length");
  }
  const Index steps = measurements.rows();
  FilterTrace trace;
  trace.reserve(static_cast<std::size_t>(steps));
  FilterState state{x0, P0};
  for (Index k = 0; k < steps; ++k) {
    const FilterState pred = predict(state, model, controls.row(k).transpose());
    UpdateResult upd;
    try {
      upd = update(pred, model, measurements.row(k).transpose());
    } catch (const FilterError& e) {
      throw FilterError(e.what(), static_cast<long>(k));
    }
    trace.push_back({pred.x, pred.P, upd.state.x, upd.state.P, upd.innovation, upd.S, upd.K});
    state = std::move(upd.state);
  }
  return trace;
}

CovarianceSchedule covariance_schedule(const DiscreteModel& model, const MatrixXd& P0, Index steps) {
  CovarianceSchedule s;
  const auto n = static_cast<std::size_t>(steps);
  s.P_pred.reserve(n);
  s.P_post.reserve(n);
  s.S.reserve(n);
  s.K.reserve(n);
  MatrixXd P = P0;
  for (Index k = 0; k < steps; ++k) {
    MatrixXd Pp = symmetrize(model.F * P * model.F.transpose() + model.Q);
    Gain g = compute_gain(Pp, model, static_cast<long>(k));
    P = symmetrize(Pp - g.K * g.S * g.K.transpose());
    s.P_pred.push_back(std::move(Pp));
    s.P_post.push_back(P);
    s.S.push_back(std::move(g.S));
    s.K.push_back(std::move(g.K));
  }
  return s;
}

}  // namespace kfat
