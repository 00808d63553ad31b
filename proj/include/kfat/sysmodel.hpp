#pragma once

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace kfat {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class SensorKind { Integrating, NonIntegrating };

/// Continuous-time LTI plant
///   dx/dt = A x + G u + Gamma v,   z = H x + w
/// with white v, w of diagonal intensities V, W.
struct ContinuousModel {
  MatrixXd A;
  MatrixXd G;
  MatrixXd Gamma;
  MatrixXd H;
  SensorKind sensor_kind = SensorKind::NonIntegrating;

  Index nx() const { return A.rows(); }
  Index nu() const { return G.cols(); }
  Index nw() const { return Gamma.cols(); }
  Index nz() const { return H.rows(); }

  /// Throws std::invalid_argument if the matrix shapes disagree.
  void validate() const;
};

/// Diagonal noise intensities. V has one entry per process-noise channel,
/// W one per measurement channel.
struct NoiseIntensities {
  VectorXd V;
  VectorXd W;

  void validate_for(const ContinuousModel& model) const;
};

struct DiscreteModel {
  MatrixXd F;
  MatrixXd B;
  MatrixXd H;
  MatrixXd Q;
  MatrixXd R;
  double dt = 0.0;

  Index nx() const { return F.rows(); }
  Index nu() const { return B.cols(); }
  Index nz() const { return H.rows(); }
};

namespace detail {

template <typename Scalar>
Scalar one_norm(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& m) {
  return m.cwiseAbs().colwise().sum().maxCoeff();
}

}  // namespace detail

/// Matrix exponential by scaling and squaring with a degree-13 Padé
/// approximant (Higham 2005). Lower-degree approximants are used when the
/// 1-norm is small enough for them to reach unit roundoff.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> matrix_exponential(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& M) {
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  if (M.rows() != M.cols()) {
    throw std::invalid_argument("matrix_exponential: matrix is not square");
  }
  if (!M.allFinite()) {
    throw std::invalid_argument("matrix_exponential: non-finite entry");
  }
  const Index n = M.rows();
  const Mat I = Mat::Identity(n, n);
  if (n == 0) {
    return I;
  }

  const Scalar norm = detail::one_norm<Scalar>(M);

  // theta_m for m = 3, 5, 7, 9 in double precision.
  static constexpr double theta[] = {1.495585217958292e-2, 2.539398330063230e-1,
                                     9.504178996162932e-1, 2.097847961257068e0};
  static constexpr double b3[] = {120., 60., 12., 1.};
  static constexpr double b5[] = {30240., 15120., 3360., 420., 30., 1.};
  static constexpr double b7[] = {17297280., 8648640., 1995840., 277200.,
                                  25200.,    1512.,    56.,      1.};
  static constexpr double b9[] = {17643225600., 8821612800., 2075673600., 302702400.,
                                  30270240.,    2162160.,    110880.,     3960.,
                                  90.,          1.};
  static constexpr double b13[] = {64764752532480000., 32382376266240000., 7771770303897600.,
                                   1187353796428800.,  129060195264000.,   10559470521600.,
                                   670442572800.,      33522128640.,       1323241920.,
                                   40840800.,          960960.,            16380.,
                                   182.,               1.};

  auto low_order = [&](const double* b, int m) {
    const Mat M2 = M * M;
    Mat power = I;
    Mat U = b[1] * I;
    Mat V = b[0] * I;
    for (int k = 2; k <= m; k += 2) {
      power = power * M2;
      V += b[k] * power;
      U += b[k + 1] * power;
    }
    U = M * U;
    return Mat((V - U).partialPivLu().solve(V + U));
  };

  if (norm <= theta[0]) return low_order(b3, 3);
  if (norm <= theta[1]) return low_order(b5, 5);
  if (norm <= theta[2]) return low_order(b7, 7);
  if (norm <= theta[3]) return low_order(b9, 9);

  constexpr double theta13 = 5.371920351148152;
  int squarings = 0;
  if (norm > theta13) {
    squarings = static_cast<int>(std::ceil(std::log2(static_cast<double>(norm) / theta13)));
  }
  const Mat S = M / std::ldexp(Scalar(1), squarings);
  const Mat S2 = S * S;
  const Mat S4 = S2 * S2;
  const Mat S6 = S4 * S2;

  Mat U = S6 * (b13[13] * S6 + b13[11] * S4 + b13[9] * S2);
  U += b13[7] * S6 + b13[5] * S4 + b13[3] * S2 + b13[1] * I;
  U = S * U;
  Mat V = S6 * (b13[12] * S6 + b13[10] * S4 + b13[8] * S2);
  V += b13[6] * S6 + b13[4] * S4 + b13[2] * S2 + b13[0] * I;

  Mat E = (V - U).partialPivLu().solve(V + U);
  for (int i = 0; i < squarings; ++i) {
    E = E * E;
  }
  return E;
}

/// (M + Mᵀ) / 2
inline MatrixXd symmetrize(const MatrixXd& M) { return 0.5 * (M + M.transpose()); }

/// Van Loan discretization at sample time dt. R is diag(W)/dt for an
/// integrating sensor and diag(W) otherwise.
DiscreteModel discretize(const ContinuousModel& model, const NoiseIntensities& noise, double dt);

/// Constant-velocity particle on a line; acceleration noise, position fix.
ContinuousModel tracking_1d();

/// Planar constant-velocity target, state [x, y, vx, vy]. Noise on the
/// velocities, position measured in both axes.
ContinuousModel tracking_2d();

}  // namespace kfat
