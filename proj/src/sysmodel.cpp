#include "kfat/sysmodel.hpp"

#include <string>

namespace kfat {

namespace {

void require(bool cond, const std::string& what) {
  if (!cond) throw std::invalid_argument(what);
}

}  // namespace

void ContinuousModel::validate() const {
  const Index n = A.rows();
  require(n >= 1 && A.cols() == n, "A must be square with nx >= 1");
  require(G.rows() == n && G.cols() >= 1, "G must be nx x nu with nu >= 1");
  require(Gamma.rows() == n && Gamma.cols() >= 1, "Gamma must be nx x nw with nw >= 1");
  require(H.cols() == n && H.rows() >= 1, "H must be nz x nx with nz >= 1");
  require(A.allFinite() && G.allFinite() && Gamma.allFinite() && H.allFinite(),
          "model matrices must be finite");
}

void NoiseIntensities::validate_for(const ContinuousModel& model) const {
  require(V.size() == model.nw(), "V has " + std::to_string(V.size()) + " entries, model has nw=" +
                                      std::to_string(model.nw()));
  require(W.size() == model.nz(), "W has " + std::to_string(W.size()) + " entries, model has nz=" +
                                      std::to_string(model.nz()));
  require(V.allFinite() && (V.array() >= 0.0).all(), "process intensities must be >= 0");
  require(W.allFinite() && (W.array() > 0.0).all(), "measurement intensities must be > 0");
}

DiscreteModel discretize(const ContinuousModel& model, const NoiseIntensities& noise, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw std::invalid_argument("discretize: dt must be positive, got " + std::to_string(dt));
  }
  model.validate();
  noise.validate_for(model);

  const Index nx = model.nx();
  const Index nu = model.nu();

  // [A G; 0 0] dt  ->  [F  Bd; 0  I]
  MatrixXd ab = MatrixXd::Zero(nx + nu, nx + nu);
  ab.topLeftCorner(nx, nx) = model.A * dt;
  ab.topRightCorner(nx, nu) = model.G * dt;
  const MatrixXd phi_ab = matrix_exponential<double>(ab);

  // [-A  Gamma V Gammaᵀ; 0  Aᵀ] dt  ->  [.  F⁻¹Q; 0  Fᵀ]
  const MatrixXd qc = model.Gamma * noise.V.asDiagonal() * model.Gamma.transpose();
  MatrixXd vl = MatrixXd::Zero(2 * nx, 2 * nx);
  vl.topLeftCorner(nx, nx) = -model.A * dt;
  vl.topRightCorner(nx, nx) = qc * dt;
  vl.bottomRightCorner(nx, nx) = model.A.transpose() * dt;
  const MatrixXd phi_q = matrix_exponential<double>(vl);

  DiscreteModel out;
  out.dt = dt;
  out.F = phi_ab.topLeftCorner(nx, nx);
  out.B = phi_ab.topRightCorner(nx, nu);
  out.H = model.H;
  out.Q = symmetrize(phi_q.bottomRightCorner(nx, nx).transpose() * phi_q.topRightCorner(nx, nx));
  if (model.sensor_kind == SensorKind::Integrating) {
    out.R = (noise.W / dt).asDiagonal();
  } else {
    out.R = noise.W.asDiagonal();
  }
  return out;
}

ContinuousModel tracking_1d() {
  ContinuousModel m;
  m.A = MatrixXd::Zero(2, 2);
  m.A(0, 1) = 1.0;
  m.G = (MatrixXd(2, 1) << 0.0, 1.0).finished();
  m.Gamma = m.G;
  m.H = (MatrixXd(1, 2) << 1.0, 0.0).finished();
  m.sensor_kind = SensorKind::NonIntegrating;
  return m;
}

ContinuousModel tracking_2d() {
  ContinuousModel m;
  m.A = MatrixXd::Zero(4, 4);
  m.A(0, 2) = 1.0;
  m.A(1, 3) = 1.0;
  // The same scalar control drives both velocity channels.
  m.G = (MatrixXd(4, 1) << 0.0, 0.0, 1.0, 1.0).finished();
  m.Gamma = MatrixXd::Zero(4, 2);
  m.Gamma(2, 0) = 1.0;
  m.Gamma(3, 1) = 1.0;
  m.H = MatrixXd::Zero(2, 4);
  m.H(0, 0) = 1.0;
  m.H(1, 1) = 1.0;
  m.sensor_kind = SensorKind::NonIntegrating;
  return m;
}

}  // namespace kfat
