#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spescreen/spectro/spectro.hpp"

namespace spescreen::ml {

// The ten screening features (rotary strength left out).
std::vector<std::string> feature_names();
Eigen::MatrixXd feature_matrix(const std::vector<spectro::CandidateRecord>& records);

struct LabelOptions {
  double lambda_host_abs_nm = 0.0;  // required, > 0
  bool include_soc = true;
};

// good <=> fosc_em > mean AND lambda_abs > host AND S_VC < mean AND
// (include_soc => SOC < mean), means over the given records.
std::vector<bool> label_good(const std::vector<spectro::CandidateRecord>& records, const LabelOptions& opts);

struct Standardized {
  Eigen::MatrixXd z;                 // retained columns, z-scored
  Eigen::VectorXd mean, stddev;      // per retained column (population stddev)
  std::vector<int> kept;             // original column indices
  std::vector<int> dropped;          // zero-variance columns
};

Standardized standardize(const Eigen::MatrixXd& x);

struct PCAResult {
  Eigen::MatrixXd components;        // columns = principal axes (in retained-feature space)
  Eigen::MatrixXd scores;            // rows = samples
  Eigen::VectorXd explained_variance;
  Eigen::VectorXd explained_ratio;
  Standardized scaling;
};

// z-scores the columns, then diagonalizes the covariance. Axes sorted by
// variance, each with its largest-magnitude loading positive.
PCAResult pca(const Eigen::MatrixXd& x, int k);

}  // namespace spescreen::ml
