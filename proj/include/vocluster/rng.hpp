#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace vocluster {

// Deterministic random source. std::mt19937_64 is bit-exact across
// platforms but the standard distributions are not, so every draw here
// is built directly from the raw 64-bit stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // uniform on [0,1), 53-bit resolution
  double uniform() { return (gen_() >> 11) * 0x1.0p-53; }

  // uniform integer in [0, n), rejection-sampled so the stream stays unbiased
  std::uint64_t integer(std::uint64_t n);

  double normal();
  double gamma(double shape, double rate);
  double chi_squared(double df) { return gamma(0.5 * df, 0.5); }

  Eigen::VectorXd normal_vector(int p);

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

// mean + chol_cov * z, chol_cov lower-triangular
Eigen::VectorXd sample_mvn(Rng& rng, const Eigen::VectorXd& mean,
                           const Eigen::MatrixXd& chol_cov);

// Wishart(nu, scale) via Bartlett decomposition; scale SPD, nu >= dim
Eigen::MatrixXd sample_wishart(Rng& rng, double nu, const Eigen::MatrixXd& scale);

// InverseWishart(nu, psi): X ~ W(nu, psi^{-1}) then X^{-1}
Eigen::MatrixXd sample_inverse_wishart(Rng& rng, double nu, const Eigen::MatrixXd& psi);

}  // namespace vocluster
