#pragma once

// Dirichlet-process Gaussian mixture via collapsed CRP Gibbs.
//
// Base measure is normal-inverse-Wishart with mu_j | Sigma_j ~ N(m0, Sigma_j/k0);
// m0, k0, Sigma0 carry hyperpriors and are resampled each sweep from their full
// conditionals, which requires instantiating (mu_j, Sigma_j) once per sweep.

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace vocluster {

struct DpmmPriors {
  double alpha = 1.0;
  double nu0 = 0.0;        // IW degrees of freedom, calibrated to p
  Eigen::VectorXd m1;      // hyperprior mean for m0
  Eigen::MatrixXd S1;      // hyperprior covariance for m0
  double tau1 = 1.0;       // Gamma shape for k0
  double xi1 = 1.0;        // Gamma rate for k0
  double nu1 = 0.0;        // Wishart dof for Sigma0, calibrated to p+2
  Eigen::MatrixXd Sigma1;  // Wishart scale for Sigma0, calibrated to S1/2
};

// Empirical calibration from the data matrix: m1 = column means, S1 = covariance
// (ridged by 1e-6 * trace when not positive definite), nu0 = p, nu1 = p + 2,
// Sigma1 = S1 / 2.
DpmmPriors calibrate_priors(const Eigen::MatrixXd& X, double alpha);

// E[K | n, alpha] = sum_{i=1..n} alpha / (alpha + i - 1), strictly increasing in alpha.
double expected_cluster_count(int n, double alpha);

// Bisection for alpha with |E[K] - k_target| < 1e-8. k_target must lie in
// [1, n); n == 1 returns the default 1.0 (any alpha gives one cluster).
double solve_alpha(int n, double k_target);

// Incremental per-cluster sufficient statistics.
struct ClusterStats {
  int n = 0;
  Eigen::VectorXd sum;
  Eigen::MatrixXd scatter;  // sum of x x^T

  explicit ClusterStats(int p)
      : sum(Eigen::VectorXd::Zero(p)), scatter(Eigen::MatrixXd::Zero(p, p)) {}
  void add(const Eigen::VectorXd& x);
  void remove(const Eigen::VectorXd& x);
};

struct StudentT {
  double df = 0.0;
  Eigen::VectorXd loc;
  Eigen::MatrixXd scale;
};

// Posterior-predictive Student-t of one observation under the cluster's
// posterior NIW (prior predictive when stats.n == 0).
StudentT posterior_predictive(const ClusterStats& stats, const Eigen::VectorXd& m0,
                              double k0, double nu0, const Eigen::MatrixXd& sigma0);

double student_t_log_pdf(const Eigen::VectorXd& x, const StudentT& t);

// Closed-form log marginal likelihood of the rows of X under one NIW component.
double niw_log_marginal(const Eigen::MatrixXd& X, const Eigen::VectorXd& m0, double k0,
                        double nu0, const Eigen::MatrixXd& psi0);

struct ChainResult {
  std::vector<std::vector<int>> samples;  // post-burn-in partitions, canonical labels
  std::vector<int> k_trace;               // one entry per sweep, burn-in included
  std::vector<double> loglik_trace;       // mixture log marginal per sweep
};

// Collapsed Gibbs chain. Starts from an over-segmented leader partition
// (points join the nearest leader within twice the median nearest-neighbor
// distance) with the hyperparameters burned in on that partition before the
// first sweep. Deterministic given the seed.
ChainResult run_chain(const Eigen::MatrixXd& X, const DpmmPriors& priors, int iters,
                      int burnin, std::uint64_t seed);

// Relabel so block ids appear in first-occurrence order 0..K-1.
std::vector<int> canonical_labels(const std::vector<int>& labels);

// Entry (i,j) = fraction of samples placing i and j in the same block.
Eigen::MatrixXd posterior_similarity(const std::vector<std::vector<int>>& samples);

// VI(a,b) = H(a) + H(b) - 2 I(a,b), in nats. A metric on partitions.
double variation_of_information(const std::vector<int>& a, const std::vector<int>& b);

// The sampled partition minimizing the mean VI to all samples; candidates are
// the unique sampled partitions, ties broken by first appearance.
std::vector<int> vi_point_estimate_partition(const std::vector<std::vector<int>>& samples);

}  // namespace vocluster
