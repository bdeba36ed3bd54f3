#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace vocluster {

struct EmbeddingParams {
  int ami_bins = 64;
  int tau_max = 0;  // 0 -> min(len/4, round(0.05 * sample_rate))
  double cao_threshold = 0.05;
  double cao_e1_floor = 0.8;
  int cao_dmax = 20;
  int cao_n_ref = 1000;
  // |E2(d) - 1| < this for all d <= 5 marks the series stochastic
  double cao_e2_band = 0.1;
  int subsample_target = 2000;
  int reduce_neighbors = 15;
  double reduce_min_dist = 0.1;
  double reduce_spread = 1.0;
  int reduce_epochs = 500;
  std::uint64_t rng_seed = 1;
};

struct PointCloud {
  Eigen::MatrixXd points;  // rows: points, cols: coordinates
  int dim() const { return static_cast<int>(points.cols()); }
  int size() const { return static_cast<int>(points.rows()); }
};

// Mutual information of (x_t, x_{t+tau}) from an equal-width 2-D
// histogram over [min(x), max(x)]; constant signal -> 0.
double average_mutual_information(const std::vector<double>& x, int tau, int bins);

struct DelaySelection {
  int tau = 1;
  bool fallback = false;  // no tau <= tau_max crossed 1/e; argmin used
};

DelaySelection select_delay(const std::vector<double>& x, const EmbeddingParams& params,
                            int sample_rate);

struct CaoResult {
  int dimension = 1;
  bool capped = false;  // no saturation (stochastic or dmax reached)
  std::vector<double> e1;  // e1[d], d = 1..dmax-1
  std::vector<double> e2;
};

CaoResult cao_embedding_dimension(const std::vector<double>& x, int tau,
                                  const EmbeddingParams& params);

PointCloud takens_embed(const std::vector<double>& x, int tau, int D);

struct ReduceResult {
  PointCloud cloud;
  bool pca_fallback = false;  // too few points for the graph layout
};

// dim == 3 -> identity; dim < 3 -> zero-pad; dim > 3 -> k-NN fuzzy graph
// + SGD cross-entropy layout, deterministic for a fixed seed. Clouds
// above subsample_target are first thinned by uniform index stride.
ReduceResult reduce_to_3d(const PointCloud& cloud, const EmbeddingParams& params);

// Least-squares (a, b) for the low-dimensional kernel 1/(1 + a d^{2b})
// matching min_dist/spread; exposed for calibration tests.
std::pair<double, double> fit_low_dim_kernel(double min_dist, double spread);

}  // namespace vocluster
