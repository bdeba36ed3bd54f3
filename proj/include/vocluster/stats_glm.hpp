#pragma once

#include <Eigen/Dense>

#include <vector>

namespace vocluster {

// Multinomial logit fit with one cluster as the reference level. Rows of
// beta/se/z/p correspond to `levels` (the non-reference clusters in ascending
// order); column 0 is the intercept, then one column per predictor.
struct MultinomialFit {
  int reference = 0;
  std::vector<int> levels;
  Eigen::MatrixXd beta;
  Eigen::MatrixXd se;
  Eigen::MatrixXd z;
  Eigen::MatrixXd p;
  bool converged = false;
  bool ridged = false;  // separation guard engaged (1e-6 L2 penalty)
  double loglik = 0.0;
};

// Negative log-likelihood at `beta`, optionally with its analytic gradient.
// Class order inside beta: non-reference labels ascending, as in MultinomialFit.
double multinomial_nll(const Eigen::MatrixXd& X, const std::vector<int>& labels,
                       int reference, const Eigen::MatrixXd& beta,
                       Eigen::MatrixXd* grad = nullptr);

// Newton maximum likelihood with step halving; standard errors from the
// inverse observed information. Falls back to a ridge-penalized fit when the
// unpenalized problem diverges (complete separation). Predictors are used
// as given; standardize beforehand when scales differ.
MultinomialFit fit_multinomial(const Eigen::MatrixXd& X, const std::vector<int>& labels,
                               int reference);

// Fitted class probabilities, one row per observation; column 0 is the
// reference class, the rest follow fit.levels.
Eigen::MatrixXd multinomial_probs(const Eigen::MatrixXd& X, const MultinomialFit& fit);

// Column z-scores with population std; constant columns become all zero.
Eigen::MatrixXd standardize_columns(const Eigen::MatrixXd& X);

// Per reference cluster: predictor indices (0-based into X's columns) whose
// coefficient is significant for a strict majority of the other clusters.
struct ContrastHighlight {
  int reference = 0;
  std::vector<int> predictors;
};

std::vector<ContrastHighlight> contrast_report(const std::vector<MultinomialFit>& fits,
                                               double alpha_level = 0.05);

}  // namespace vocluster
