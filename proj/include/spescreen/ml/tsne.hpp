#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spescreen/chem/fingerprint.hpp"
#include "spescreen/exec.hpp"

namespace spescreen::ml {

// Pairwise distance providers.
Eigen::MatrixXd jaccard_distances(std::span<const chem::Fingerprint> fps, Exec exec = Exec::Parallel);
Eigen::MatrixXd euclidean_distances(const Eigen::MatrixXd& x, Exec exec = Exec::Parallel);

struct Calibration {
  Eigen::MatrixXd p;               // row-stochastic conditionals p_{j|i}
  Eigen::VectorXd beta;            // 1 / (2 sigma_i^2)
  Eigen::VectorXd entropy_error;   // |H_i - ln(perplexity)|
  Eigen::VectorXd perplexity_error;  // |exp(H_i) - perplexity|
};

// Binary search on each beta_i so exp(H(p_{.|i})) hits the perplexity.
Calibration calibrate(const Eigen::MatrixXd& distances, double perplexity, Exec exec = Exec::Parallel);

struct TSNEOptions {
  double perplexity = 50.0;
  std::uint64_t seed = 0;
  int iterations = 1000;          // total, including early exaggeration and refinement
  int exaggeration_iters = 250;
  double exaggeration = 12.0;
  double learning_rate = 0.0;     // 0: max(N / exaggeration / 4, 50)
  int refine_iters = 100;         // final monotone phase
};

struct EmbeddingMap {
  Eigen::MatrixXd y;                  // N x 2
  double perplexity = 0.0;
  double kl = 0.0;
  std::vector<double> refine_kl;      // KL after each refinement step (non-increasing)
  double max_entropy_error = 0.0;
  std::vector<std::string> warnings;
};

double kl_divergence(const Eigen::MatrixXd& p_joint, const Eigen::MatrixXd& y);

// Exact gradient of KL(P || Q) with respect to y.
Eigen::MatrixXd tsne_gradient(const Eigen::MatrixXd& p_joint, const Eigen::MatrixXd& y, Exec exec = Exec::Parallel);

// Exact t-SNE on a full distance matrix. Deterministic for a fixed seed,
// independent of the thread count.
EmbeddingMap tsne(const Eigen::MatrixXd& distances, const TSNEOptions& opts = {}, Exec exec = Exec::Parallel);

enum class ClusterSelection { ExcessOfMass, Leaf };

struct HDBSCANOptions {
  int min_cluster_size = 10;
  int min_samples = 0;  // 0: same as min_cluster_size; counts the point itself
  ClusterSelection selection = ClusterSelection::Leaf;
};

struct Clustering {
  std::vector<int> labels;  // -1 noise
  int clusters = 0;
};

// HDBSCAN on Euclidean points: core distances, mutual reachability,
// exact Prim MST, condensed tree, cluster selection.
Clustering hdbscan(const Eigen::MatrixXd& points, const HDBSCANOptions& opts = {});

}  // namespace spescreen::ml
