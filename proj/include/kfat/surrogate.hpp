#pragma once

#include <random>

#include "kfat/sysmodel.hpp"

namespace kfat {

enum class SurrogateFamily { GP, TP };
enum class Smoothness { Matern32, Matern52 };

/// Stationary Matérn kernel with one lengthscale per input dimension.
/// Hyperparameters are stored as logs; the packed parameter vector is
/// [log ℓ_1 .. log ℓ_d, log σ², log σ_n²].
struct Kernel {
  VectorXd log_lengthscales;
  double log_signal_variance = 0.0;
  double log_noise_variance = -6.907755278982137;  // log 1e-3
  Smoothness smoothness = Smoothness::Matern32;

  static Kernel defaults(Index dim, Smoothness s = Smoothness::Matern32);

  Index dim() const { return log_lengthscales.size(); }
  Index n_params() const { return dim() + 2; }
  VectorXd params() const;
  void set_params(const VectorXd& p);
  double signal_variance() const;
  double noise_variance() const;
};

double kernel_eval(const VectorXd& x, const VectorXd& x2, const Kernel& k);

/// Noise-free Gram matrix over the rows of X.
MatrixXd gram(const MatrixXd& X, const Kernel& k);

struct Prediction {
  double mean = 0.0;
  double variance = 0.0;
};

/// Fitted GP or Student-t process over M points (rows of X) with a
/// constant prior mean equal to mean(y). Immutable once built.
class SurrogateState {
 public:
  /// Factors K + σ_n² I, adding jitter up to 1e-6 σ² if needed. Throws
  /// std::runtime_error when the factorization still fails.
  SurrogateState(MatrixXd X, VectorXd y, Kernel kernel,
                 SurrogateFamily family = SurrogateFamily::GP, double tp_dof = 5.0);

  Prediction posterior(const VectorXd& x, bool include_noise = false) const;

  double log_marginal_likelihood() const;

  /// Gradient of log_marginal_likelihood with respect to Kernel::params().
  VectorXd lml_gradient() const;

  const MatrixXd& X() const { return X_; }
  const VectorXd& y() const { return y_; }
  const Kernel& kernel() const { return kernel_; }
  SurrogateFamily family() const { return family_; }
  double tp_dof() const { return tp_dof_; }
  double prior_mean() const { return mean_; }
  double jitter() const { return jitter_; }
  Index size() const { return X_.rows(); }

 private:
  MatrixXd X_;
  VectorXd y_;
  Kernel kernel_;
  SurrogateFamily family_;
  double tp_dof_;
  double mean_ = 0.0;
  double jitter_ = 0.0;
  double beta_ = 0.0;  // (y - m)ᵀ K⁻¹ (y - m)
  Eigen::LLT<MatrixXd> llt_;
  VectorXd alpha_;
};

struct HyperBounds {
  double log_lengthscale_lo = -4.605170185988091;  // log 0.01
  double log_lengthscale_hi = 2.302585092994046;   // log 10
  double log_signal_lo = -4.605170185988091;       // log 0.01
  double log_signal_hi = 4.605170185988091;        // log 100
  double log_noise_lo = -13.815510557964274;       // log 1e-6
  double log_noise_hi = 0.0;                       // log 1
};

struct FitOptions {
  int restarts = 5;
  int max_iterations = 150;
  SurrogateFamily family = SurrogateFamily::GP;
  double tp_dof = 5.0;
  Smoothness smoothness = Smoothness::Matern32;
  HyperBounds bounds;
};

struct FitResult {
  Kernel kernel;
  double lml = 0.0;
  /// False when every start failed and the default kernel was returned.
  bool ok = true;
};

/// Maximizes the log marginal likelihood over the kernel hyperparameters by
/// Rprop gradient ascent inside box bounds. The first start is `warm_start`
/// when given (else the default kernel); the rest are uniform draws from the
/// bounds.
FitResult fit_hyperparams(const MatrixXd& X, const VectorXd& y, std::mt19937_64& rng,
                          const FitOptions& opts = {}, const Kernel* warm_start = nullptr);

}  // namespace kfat
