#include "kfat/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace kfat {

Kernel Kernel::defaults(Index dim, Smoothness s) {
  Kernel k;
  k.log_lengthscales = VectorXd::Constant(dim, std::log(0.3));
  k.log_signal_variance = 0.0;
  k.log_noise_variance = std::log(1e-2);
  k.smoothness = s;
  return k;
}

VectorXd Kernel::params() const {
  VectorXd p(n_params());
  p.head(dim()) = log_lengthscales;
  p[dim()] = log_signal_variance;
  p[dim() + 1] = log_noise_variance;
  return p;
}

void Kernel::set_params(const VectorXd& p) {
  if (p.size() != n_params()) throw std::invalid_argument("Kernel::set_params: wrong size");
  log_lengthscales = p.head(dim());
  log_signal_variance = p[dim()];
  log_noise_variance = p[dim() + 1];
}

double Kernel::signal_variance() const { return std::exp(log_signal_variance); }
double Kernel::noise_variance() const { return std::exp(log_noise_variance); }

namespace {

const double kSqrt3 = std::sqrt(3.0);
const double kSqrt5 = std::sqrt(5.0);

double matern(double r, double sf2, Smoothness s) {
  if (s == Smoothness::Matern32) {
    return sf2 * (1.0 + kSqrt3 * r) * std::exp(-kSqrt3 * r);
  }
  return sf2 * (1.0 + kSqrt5 * r + 5.0 / 3.0 * r * r) * std::exp(-kSqrt5 * r);
}

// dk / d(log ℓ_d) = dscale(r) * ((x_d - x2_d) / ℓ_d)²
double matern_lengthscale_factor(double r, double sf2, Smoothness s) {
  if (s == Smoothness::Matern32) {
    return sf2 * 3.0 * std::exp(-kSqrt3 * r);
  }
  return sf2 * 5.0 / 3.0 * (1.0 + kSqrt5 * r) * std::exp(-kSqrt5 * r);
}

double scaled_distance(const VectorXd& x, const VectorXd& x2, const VectorXd& inv_ls) {
  return (x - x2).cwiseProduct(inv_ls).norm();
}

}  // namespace

double kernel_eval(const VectorXd& x, const VectorXd& x2, const Kernel& k) {
  const VectorXd inv_ls = (-k.log_lengthscales.array()).exp().matrix();
  return matern(scaled_distance(x, x2, inv_ls), k.signal_variance(), k.smoothness);
}

MatrixXd gram(const MatrixXd& X, const Kernel& k) {
  const Index m = X.rows();
  const VectorXd inv_ls = (-k.log_lengthscales.array()).exp().matrix();
  const double sf2 = k.signal_variance();
  MatrixXd K(m, m);
  for (Index i = 0; i < m; ++i) {
    K(i, i) = sf2;
    for (Index j = 0; j < i; ++j) {
      const double r = (X.row(i) - X.row(j)).cwiseProduct(inv_ls.transpose()).norm();
      K(i, j) = K(j, i) = matern(r, sf2, k.smoothness);
    }
  }
  return K;
}

SurrogateState::SurrogateState(MatrixXd X, VectorXd y, Kernel kernel, SurrogateFamily family,
                               double tp_dof)
    : X_(std::move(X)), y_(std::move(y)), kernel_(std::move(kernel)), family_(family), tp_dof_(tp_dof) {
  if (X_.rows() != y_.size() || X_.rows() < 1) {
    throw std::invalid_argument("SurrogateState: X and y must have the same nonzero length");
  }
  if (X_.cols() != kernel_.dim()) {
    throw std::invalid_argument("SurrogateState: kernel dimension does not match inputs");
  }
  if (family_ == SurrogateFamily::TP && !(tp_dof_ > 2.0)) {
    throw std::invalid_argument("SurrogateState: Student-t dof must exceed 2");
  }
  if (!kernel_.params().allFinite()) throw std::invalid_argument("SurrogateState: non-finite kernel");
  mean_ = y_.mean();

  const Index m = X_.rows();
  const MatrixXd K = gram(X_, kernel_);
  const double sf2 = kernel_.signal_variance();
  const double sn2 = kernel_.noise_variance();
  bool ok = false;
  for (double rel : {0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6}) {
    jitter_ = rel * sf2;
    llt_.compute(K + (sn2 + jitter_) * MatrixXd::Identity(m, m));
    if (llt_.info() == Eigen::Success) {
      ok = true;
      break;
    }
  }
  if (!ok) throw std::runtime_error("SurrogateState: Gram matrix not positive definite after jitter");
  const VectorXd yc = y_.array() - mean_;
  alpha_ = llt_.solve(yc);
  beta_ = yc.dot(alpha_);
}

Prediction SurrogateState::posterior(const VectorXd& x, bool include_noise) const {
  const Index m = X_.rows();
  const VectorXd inv_ls = (-kernel_.log_lengthscales.array()).exp().matrix();
  const double sf2 = kernel_.signal_variance();
  VectorXd kx(m);
  for (Index i = 0; i < m; ++i) {
    kx[i] = matern(scaled_distance(x, X_.row(i).transpose(), inv_ls), sf2, kernel_.smoothness);
  }
  Prediction p;
  p.mean = mean_ + kx.dot(alpha_);
  const VectorXd v = llt_.matrixL().solve(kx);
  double var = sf2 - v.squaredNorm();
  if (family_ == SurrogateFamily::TP) {
    const auto M = static_cast<double>(m);
    var *= (tp_dof_ + beta_ - 2.0) / (tp_dof_ + M - 2.0);
  }
  if (include_noise) var += kernel_.noise_variance();
  p.variance = std::max(var, 0.0);
  return p;
}

double SurrogateState::log_marginal_likelihood() const {
  const auto M = static_cast<double>(X_.rows());
  const double half_logdet = llt_.matrixLLT().diagonal().array().log().sum();
  if (family_ == SurrogateFamily::GP) {
    return -0.5 * beta_ - half_logdet - 0.5 * M * std::log(2.0 * std::numbers::pi);
  }
  const double nu = tp_dof_;
  return std::lgamma(0.5 * (nu + M)) - std::lgamma(0.5 * nu) -
         0.5 * M * std::log((nu - 2.0) * std::numbers::pi) - half_logdet -
         0.5 * (nu + M) * std::log1p(beta_ / (nu - 2.0));
}

VectorXd SurrogateState::lml_gradient() const {
  const Index m = X_.rows();
  const Index d = kernel_.dim();
  // d lml / dθ = ½ Σ_ij (c ααᵀ - K⁻¹)_ij (∂K/∂θ)_ij, with c = 1 for the GP
  // and c = (ν + M) / (ν - 2 + β) for the Student-t process.
  double c = 1.0;
  if (family_ == SurrogateFamily::TP) {
    c = (tp_dof_ + static_cast<double>(m)) / (tp_dof_ - 2.0 + beta_);
  }
  const MatrixXd Kinv = llt_.solve(MatrixXd::Identity(m, m));
  const MatrixXd Wm = c * alpha_ * alpha_.transpose() - Kinv;

  const VectorXd inv_ls = (-kernel_.log_lengthscales.array()).exp().matrix();
  const double sf2 = kernel_.signal_variance();
  VectorXd grad = VectorXd::Zero(d + 2);
  for (Index i = 0; i < m; ++i) {
    grad[d] += 0.5 * Wm(i, i) * sf2;
    for (Index j = 0; j < i; ++j) {
      const VectorXd diff = (X_.row(i) - X_.row(j)).transpose().cwiseProduct(inv_ls);
      const double r = diff.norm();
      const double w = Wm(i, j);  // symmetric; the pair counts twice
      grad[d] += w * matern(r, sf2, kernel_.smoothness);
      const double f = matern_lengthscale_factor(r, sf2, kernel_.smoothness);
      for (Index k = 0; k < d; ++k) grad[k] += w * f * diff[k] * diff[k];
    }
  }
  grad[d + 1] = 0.5 * kernel_.noise_variance() * Wm.trace();
  return grad;
}

namespace {

struct Box {
  VectorXd lo;
  VectorXd hi;
};

Box param_box(Index dim, const HyperBounds& b) {
  Box box{VectorXd(dim + 2), VectorXd(dim + 2)};
  box.lo.head(dim).setConstant(b.log_lengthscale_lo);
  box.hi.head(dim).setConstant(b.log_lengthscale_hi);
  box.lo[dim] = b.log_signal_lo;
  box.hi[dim] = b.log_signal_hi;
  box.lo[dim + 1] = b.log_noise_lo;
  box.hi[dim + 1] = b.log_noise_hi;
  return box;
}

struct Evaluated {
  double lml = -std::numeric_limits<double>::infinity();
  VectorXd grad;
  bool ok = false;
};

Evaluated evaluate(const MatrixXd& X, const VectorXd& y, const Kernel& k, const FitOptions& opts) {
  Evaluated e;
  try {
    const SurrogateState s(X, y, k, opts.family, opts.tp_dof);
    e.lml = s.log_marginal_likelihood();
    e.grad = s.lml_gradient();
    e.ok = std::isfinite(e.lml) && e.grad.allFinite();
  } catch (const std::exception&) {
    e.ok = false;
  }
  return e;
}

// iRprop- ascent projected onto the box; returns the best iterate seen.
std::pair<Kernel, double> rprop_ascent(const MatrixXd& X, const VectorXd& y, Kernel k,
                                       const Box& box, const FitOptions& opts, bool& ok) {
  const Index n = k.n_params();
  VectorXd theta = k.params().cwiseMax(box.lo).cwiseMin(box.hi);
  VectorXd step = VectorXd::Constant(n, 0.1);
  VectorXd prev_grad = VectorXd::Zero(n);
  Kernel best = k;
  best.set_params(theta);
  double best_lml = -std::numeric_limits<double>::infinity();
  ok = false;
  for (int it = 0; it < opts.max_iterations; ++it) {
    k.set_params(theta);
    Evaluated e = evaluate(X, y, k, opts);
    if (!e.ok) break;
    ok = true;
    if (e.lml > best_lml) {
      best_lml = e.lml;
      best = k;
    }
    for (Index i = 0; i < n; ++i) {
      const double s = e.grad[i] * prev_grad[i];
      if (s > 0.0) {
        step[i] = std::min(step[i] * 1.2, 1.0);
      } else if (s < 0.0) {
        step[i] = std::max(step[i] * 0.5, 1e-8);
        e.grad[i] = 0.0;
      }
      if (e.grad[i] > 0.0) theta[i] += step[i];
      if (e.grad[i] < 0.0) theta[i] -= step[i];
    }
    theta = theta.cwiseMax(box.lo).cwiseMin(box.hi);
    prev_grad = e.grad;
    if (step.maxCoeff() < 1e-6) break;
  }
  return {best, best_lml};
}

}  // namespace

FitResult fit_hyperparams(const MatrixXd& X, const VectorXd& y, std::mt19937_64& rng,
                          const FitOptions& opts, const Kernel* warm_start) {
  const Index dim = X.cols();
  if (X.rows() < 2) throw std::invalid_argument("fit_hyperparams: need at least two points");
  const Box box = param_box(dim, opts.bounds);
  Kernel start = warm_start ? *warm_start : Kernel::defaults(dim, opts.smoothness);
  start.smoothness = opts.smoothness;

  FitResult result;
  result.kernel = Kernel::defaults(dim, opts.smoothness);
  result.lml = -std::numeric_limits<double>::infinity();
  result.ok = false;

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int starts = std::max(1, opts.restarts);
  for (int s = 0; s < starts; ++s) {
    Kernel k = start;
    if (s > 0) {
      VectorXd p(k.n_params());
      for (Index i = 0; i < p.size(); ++i) p[i] = box.lo[i] + unit(rng) * (box.hi[i] - box.lo[i]);
      k.set_params(p);
    }
    bool ok = false;
    auto [kern, lml] = rprop_ascent(X, y, k, box, opts, ok);
    if (ok && lml > result.lml) {
      result.kernel = kern;
      result.lml = lml;
      result.ok = true;
    }
  }
  return result;
}

}  // namespace kfat
