#pragma once

#include <vector>

#include <Eigen/Dense>

#include "spescreen/exec.hpp"

namespace spescreen::ml {

struct GPCBounds {
  double amp_lo = 1e-3, amp_hi = 1e3, amp0 = 1.0;  // constant kernel sigma^2
  double len_lo = 1e-2, len_hi = 1e2, len0 = 1.0;  // RBF length scale
};

struct GPCOptions {
  GPCBounds bounds;
  bool optimize = true;
  int grid = 7;          // log-grid starts per axis
  double newton_tol = 1e-8;
  int newton_max = 100;
};

// k(x, x') = amp * exp(-|x - x'|^2 / (2 len^2))
Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double amp, double len,
                           Exec exec = Exec::Parallel);

struct LaplaceState {
  Eigen::VectorXd f;          // posterior mode
  Eigen::VectorXd grad_log_lik;
  Eigen::VectorXd sqrt_w;
  Eigen::MatrixXd chol_b;     // lower Cholesky factor of I + W^1/2 K W^1/2
  double log_marginal = 0.0;  // Laplace approximation
  double grad_norm = 0.0;     // |d Psi / d f| at the mode
  int iterations = 0;
};

// Newton iteration for the logistic-likelihood posterior mode; y in {0, 1}.
LaplaceState laplace_mode(const Eigen::MatrixXd& k, const std::vector<int>& y, double tol = 1e-8, int max_iter = 100);

struct GPCModel {
  Eigen::MatrixXd x;
  std::vector<int> y;
  double amp = 1.0, len = 1.0;
  LaplaceState state;

  // p(good | x*), MacKay's probit approximation of the logistic average
  Eigen::VectorXd predict(const Eigen::MatrixXd& xs) const;
  // latent mean and variance at xs
  void latent(const Eigen::MatrixXd& xs, Eigen::VectorXd& mean, Eigen::VectorXd& var) const;
};

// Throws ValidationError unless both classes are present.
GPCModel gpc_train(const Eigen::MatrixXd& x, const std::vector<int>& y, const GPCOptions& opts = {});

double gpc_log_marginal(const Eigen::MatrixXd& x, const std::vector<int>& y, double amp, double len);

}  // namespace spescreen::ml
