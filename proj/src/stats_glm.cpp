#include "vocluster/stats_glm.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace vocluster {

namespace {

// y recoded so the reference is class 0 and the remaining labels follow in
// ascending order; returns the sorted non-reference labels.
std::vector<int> recode(const std::vector<int>& labels, int reference,
                        std::vector<int>* y) {
  std::set<int> uniq(labels.begin(), labels.end());
  if (uniq.size() < 2)
    throw std::invalid_argument("multinomial fit: need at least two clusters");
  if (!uniq.count(reference))
    throw std::invalid_argument("multinomial fit: reference cluster not present");
  std::vector<int> levels;
  for (int u : uniq)
    if (u != reference) levels.push_back(u);
  y->resize(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == reference) {
      (*y)[i] = 0;
    } else {
      const auto it = std::lower_bound(levels.begin(), levels.end(), labels[i]);
      (*y)[i] = 1 + static_cast<int>(it - levels.begin());
    }
  }
  return levels;
}

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& X) {
  Eigen::MatrixXd Xd(X.rows(), X.cols() + 1);
  Xd.col(0).setOnes();
  Xd.rightCols(X.cols()) = X;
  return Xd;
}

// nll, gradient, and (optionally) the observed information for the class-major
// parameter vector b of length (K-1)*(d+1).
double objective(const Eigen::MatrixXd& Xd, const std::vector<int>& y, int K,
                 const Eigen::VectorXd& b, double ridge, Eigen::VectorXd* grad,
                 Eigen::MatrixXd* hess) {
  const int n = static_cast<int>(Xd.rows());
  const int q = static_cast<int>(Xd.cols());
  const int m = (K - 1) * q;

  double nll = 0.0;
  if (grad) grad->setZero(m);
  if (hess) hess->setZero(m, m);

  Eigen::VectorXd eta(K), prob(K);
  for (int i = 0; i < n; ++i) {
    eta(0) = 0.0;
    for (int k = 1; k < K; ++k) eta(k) = Xd.row(i).dot(b.segment((k - 1) * q, q));
    const double mx = eta.maxCoeff();
    prob = (eta.array() - mx).exp();
    const double S = prob.sum();
    prob /= S;
    nll -= eta(y[i]) - mx - std::log(S);

    if (grad)
      for (int k = 1; k < K; ++k)
        grad->segment((k - 1) * q, q) +=
            (prob(k) - (y[i] == k ? 1.0 : 0.0)) * Xd.row(i).transpose();
    if (hess) {
      const Eigen::MatrixXd xx = Xd.row(i).transpose() * Xd.row(i);
      for (int k = 1; k < K; ++k)
        for (int l = 1; l < K; ++l) {
          const double w = prob(k) * ((k == l ? 1.0 : 0.0) - prob(l));
          hess->block((k - 1) * q, (l - 1) * q, q, q) += w * xx;
        }
    }
  }
  if (ridge > 0.0) {
    nll += 0.5 * ridge * b.squaredNorm();
    if (grad) *grad += ridge * b;
    if (hess) *hess += ridge * Eigen::MatrixXd::Identity(m, m);
  }
  return nll;
}

struct NewtonOutcome {
  Eigen::VectorXd b;
  Eigen::MatrixXd hess;
  double nll = 0.0;
  bool converged = false;
  bool diverged = false;
};

NewtonOutcome newton(const Eigen::MatrixXd& Xd, const std::vector<int>& y, int K,
                     double ridge, double grad_tol) {
  const int m = (K - 1) * static_cast<int>(Xd.cols());
  NewtonOutcome out;
  out.b = Eigen::VectorXd::Zero(m);

  Eigen::VectorXd g(m);
  Eigen::MatrixXd H(m, m);
  for (int it = 0; it < 100; ++it) {
    const double f = objective(Xd, y, K, out.b, ridge, &g, &H);
    if (!std::isfinite(f)) {
      out.diverged = true;
      return out;
    }
    if (g.cwiseAbs().maxCoeff() < grad_tol) {
      out.converged = true;
      break;
    }
    Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
    const Eigen::VectorXd step = ldlt.solve(g);
    if (ldlt.info() != Eigen::Success || !step.allFinite()) {
      out.diverged = true;
      return out;
    }
    double hv = 1.0;
    Eigen::VectorXd bn = out.b - step;
    double fn = objective(Xd, y, K, bn, ridge, nullptr, nullptr);
    while ((!std::isfinite(fn) || fn > f + 1e-12) && hv > 1e-8) {
      hv *= 0.5;
      bn = out.b - hv * step;
      fn = objective(Xd, y, K, bn, ridge, nullptr, nullptr);
    }
    if (!std::isfinite(fn) || fn > f + 1e-12) {
      out.diverged = true;  // no descent direction left
      return out;
    }
    out.b = bn;
  }
  out.nll = objective(Xd, y, K, out.b, ridge, &g, &H);
  out.hess = H;
  if (!out.converged && g.cwiseAbs().maxCoeff() < grad_tol) out.converged = true;
  // unpenalized coefficients running away means separation
  if (ridge == 0.0 && (out.b.cwiseAbs().maxCoeff() > 30.0 || !out.converged))
    out.diverged = true;
  return out;
}

}  // namespace

double multinomial_nll(const Eigen::MatrixXd& X, const std::vector<int>& labels,
                       int reference, const Eigen::MatrixXd& beta,
                       Eigen::MatrixXd* grad) {
  std::vector<int> y;
  const std::vector<int> levels = recode(labels, reference, &y);
  const int K = static_cast<int>(levels.size()) + 1;
  const Eigen::MatrixXd Xd = with_intercept(X);
  const int q = static_cast<int>(Xd.cols());
  if (beta.rows() != K - 1 || beta.cols() != q)
    throw std::invalid_argument("multinomial nll: beta shape mismatch");

  Eigen::VectorXd b(static_cast<Eigen::Index>(K - 1) * q);
  for (int k = 0; k < K - 1; ++k) b.segment(k * q, q) = beta.row(k).transpose();
  Eigen::VectorXd g;
  const double nll = objective(Xd, y, K, b, 0.0, grad ? &g : nullptr, nullptr);
  if (grad) {
    grad->resize(K - 1, q);
    for (int k = 0; k < K - 1; ++k) grad->row(k) = g.segment(k * q, q).transpose();
  }
  return nll;
}

MultinomialFit fit_multinomial(const Eigen::MatrixXd& X, const std::vector<int>& labels,
                               int reference) {
  if (static_cast<std::size_t>(X.rows()) != labels.size())
    throw std::invalid_argument("multinomial fit: label count mismatch");
  if (!X.allFinite())
    throw std::invalid_argument("multinomial fit: non-finite predictors");

  std::vector<int> y;
  MultinomialFit fit;
  fit.reference = reference;
  fit.levels = recode(labels, reference, &y);
  const int K = static_cast<int>(fit.levels.size()) + 1;
  const Eigen::MatrixXd Xd = with_intercept(X);
  const int q = static_cast<int>(Xd.cols());

  NewtonOutcome res = newton(Xd, y, K, 0.0, 1e-12);
  if (res.diverged) {
    res = newton(Xd, y, K, 1e-6, 1e-8);
    fit.ridged = true;
    if (res.diverged)
      throw std::runtime_error("multinomial fit: ridge-penalized fit diverged");
  }
  fit.converged = res.converged;
  fit.loglik = -res.nll;

  const int m = (K - 1) * q;
  const Eigen::MatrixXd cov =
      res.hess.ldlt().solve(Eigen::MatrixXd::Identity(m, m));
  fit.beta.resize(K - 1, q);
  fit.se.resize(K - 1, q);
  for (int k = 0; k < K - 1; ++k) {
    fit.beta.row(k) = res.b.segment(k * q, q).transpose();
    for (int j = 0; j < q; ++j)
      fit.se(k, j) = std::sqrt(std::max(0.0, cov(k * q + j, k * q + j)));
  }
  fit.z = fit.beta.array() / fit.se.array();
  fit.p = fit.z.unaryExpr(
      [](double zv) { return std::erfc(std::abs(zv) / std::sqrt(2.0)); });
  return fit;
}

Eigen::MatrixXd multinomial_probs(const Eigen::MatrixXd& X, const MultinomialFit& fit) {
  const Eigen::MatrixXd Xd = with_intercept(X);
  const int n = static_cast<int>(Xd.rows());
  const int K = static_cast<int>(fit.levels.size()) + 1;
  Eigen::MatrixXd P(n, K);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd eta(K);
    eta(0) = 0.0;
    for (int k = 1; k < K; ++k) eta(k) = Xd.row(i).dot(fit.beta.row(k - 1));
    const double mx = eta.maxCoeff();
    Eigen::VectorXd e = (eta.array() - mx).exp();
    P.row(i) = e.transpose() / e.sum();
  }
  return P;
}

Eigen::MatrixXd standardize_columns(const Eigen::MatrixXd& X) {
  Eigen::MatrixXd Z = X.rowwise() - X.colwise().mean();
  for (int j = 0; j < Z.cols(); ++j) {
    const double sd = std::sqrt(Z.col(j).squaredNorm() / Z.rows());
    if (sd > 0.0) Z.col(j) /= sd;
  }
  return Z;
}

std::vector<ContrastHighlight> contrast_report(const std::vector<MultinomialFit>& fits,
                                               double alpha_level) {
  std::vector<ContrastHighlight> out;
  for (const auto& fit : fits) {
    ContrastHighlight h;
    h.reference = fit.reference;
    const int n_levels = static_cast<int>(fit.levels.size());
    for (int j = 1; j < fit.p.cols(); ++j) {
      int sig = 0;
      for (int k = 0; k < n_levels; ++k)
        if (fit.p(k, j) < alpha_level) ++sig;
      if (2 * sig > n_levels) h.predictors.push_back(j - 1);
    }
    out.push_back(std::move(h));
  }
  return out;
}

}  // namespace vocluster
