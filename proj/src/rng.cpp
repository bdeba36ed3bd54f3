#include "vocluster/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace vocluster {

std::uint64_t Rng::integer(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("integer(0)");
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v = gen_();
  while (v >= limit) v = gen_();
  return v % n;
}

double Rng::normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_normal_;
  }
  // Box-Muller; u1 bounded away from 0 so log stays finite
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 6.283185307179586476925286766559 * u2;
  cached_normal_ = r * std::sin(a);
  has_cached_ = true;
  return r * std::cos(a);
}

double Rng::gamma(double shape, double rate) {
  if (shape <= 0.0 || rate <= 0.0) throw std::invalid_argument("gamma parameters");
  // Marsaglia-Tsang squeeze; shape < 1 boosted via the u^{1/shape} trick
  double boost = 1.0;
  double a = shape;
  if (a < 1.0) {
    double u = uniform();
    while (u <= 0.0) u = uniform();
    boost = std::pow(u, 1.0 / a);
    a += 1.0;
  }
  const double d = a - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return boost * d * v / rate;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v)))
      return boost * d * v / rate;
  }
}

Eigen::VectorXd Rng::normal_vector(int p) {
  Eigen::VectorXd z(p);
  for (int i = 0; i < p; ++i) z(i) = normal();
  return z;
}

Eigen::VectorXd sample_mvn(Rng& rng, const Eigen::VectorXd& mean,
                           const Eigen::MatrixXd& chol_cov) {
  return mean + chol_cov * rng.normal_vector(static_cast<int>(mean.size()));
}

Eigen::MatrixXd sample_wishart(Rng& rng, double nu, const Eigen::MatrixXd& scale) {
  const int p = static_cast<int>(scale.rows());
  if (nu < p) throw std::invalid_argument("wishart: nu < dim");
  Eigen::LLT<Eigen::MatrixXd> llt(scale);
  if (llt.info() != Eigen::Success) throw std::runtime_error("wishart: scale not SPD");
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    A(i, i) = std::sqrt(rng.chi_squared(nu - i));
    for (int j = 0; j < i; ++j) A(i, j) = rng.normal();
  }
  const Eigen::MatrixXd LA = llt.matrixL() * A;
  return LA * LA.transpose();
}

Eigen::MatrixXd sample_inverse_wishart(Rng& rng, double nu, const Eigen::MatrixXd& psi) {
  const int p = static_cast<int>(psi.rows());
  Eigen::LLT<Eigen::MatrixXd> llt(psi);
  if (llt.info() != Eigen::Success) throw std::runtime_error("inverse wishart: psi not SPD");
  // X ~ W(nu, psi^{-1}) built from psi's factor: if L = chol(psi) and
  // W = (L^{-T} A)(L^{-T} A)^T with Bartlett A, then W ~ W(nu, psi^{-1}).
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(p, p);
  for (int i = 0; i < p; ++i) {
    A(i, i) = std::sqrt(rng.chi_squared(nu - i));
    for (int j = 0; j < i; ++j) A(i, j) = rng.normal();
  }
  Eigen::MatrixXd L = llt.matrixL();
  Eigen::MatrixXd M = L.transpose().triangularView<Eigen::Upper>().solve(A);
  Eigen::MatrixXd W = M * M.transpose();
  // invert via Cholesky of W
  Eigen::LLT<Eigen::MatrixXd> lltw(W);
  if (lltw.info() != Eigen::Success) throw std::runtime_error("inverse wishart: draw degenerate");
  return lltw.solve(Eigen::MatrixXd::Identity(p, p));
}

}  // namespace vocluster
