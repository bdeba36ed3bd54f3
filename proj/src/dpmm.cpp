#include "vocluster/dpmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "vocluster/rng.hpp"

namespace vocluster {

namespace {

constexpr double kPi = 3.14159265358979323846;

double mv_lgamma(int p, double a) {
  double v = 0.25 * p * (p - 1) * std::log(kPi);
  for (int j = 0; j < p; ++j) v += std::lgamma(a - 0.5 * j);
  return v;
}

double half_log_det(const Eigen::LLT<Eigen::MatrixXd>& llt) {
  return Eigen::MatrixXd(llt.matrixL()).diagonal().array().log().sum();
}

}  // namespace

void ClusterStats::add(const Eigen::VectorXd& x) {
  ++n;
  sum += x;
  scatter += x * x.transpose();
}

void ClusterStats::remove(const Eigen::VectorXd& x) {
  --n;
  sum -= x;
  scatter -= x * x.transpose();
}

DpmmPriors calibrate_priors(const Eigen::MatrixXd& X, double alpha) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  if (n < 1 || p < 1) throw std::invalid_argument("prior calibration: empty data");

  DpmmPriors pr;
  pr.alpha = alpha;
  pr.nu0 = p;
  pr.nu1 = p + 2;
  pr.m1 = X.colwise().mean();
  Eigen::MatrixXd C = X.rowwise() - pr.m1.transpose();
  pr.S1 = C.transpose() * C / n;
  if (pr.S1.trace() <= 0.0) {
    pr.S1 = Eigen::MatrixXd::Identity(p, p);  // all rows identical
  } else if (Eigen::LLT<Eigen::MatrixXd>(pr.S1).info() != Eigen::Success) {
    pr.S1 += 1e-6 * pr.S1.trace() * Eigen::MatrixXd::Identity(p, p);
  }
  pr.Sigma1 = 0.5 * pr.S1;
  return pr;
}

double expected_cluster_count(int n, double alpha) {
  double e = 0.0;
  for (int i = 1; i <= n; ++i) e += alpha / (alpha + i - 1);
  return e;
}

double solve_alpha(int n, double k_target) {
  if (n < 1) throw std::invalid_argument("solve_alpha: n must be positive");
  if (n == 1) return 1.0;  // one item always forms one cluster
  if (k_target < 1.0 || k_target >= n)
    throw std::invalid_argument("solve_alpha: k_target must lie in [1, n)");

  double lo = 0.0, hi = 1.0;
  while (expected_cluster_count(n, hi) < k_target) {
    hi *= 2.0;
    if (hi > 1e15) throw std::logic_error("solve_alpha: bracket failed");
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (expected_cluster_count(n, mid) < k_target)
      lo = mid;
    else
      hi = mid;
  }
  const double alpha = 0.5 * (lo + hi);
  if (std::abs(expected_cluster_count(n, alpha) - k_target) >= 1e-8)
    throw std::logic_error("solve_alpha: bisection did not converge");
  return alpha;
}

StudentT posterior_predictive(const ClusterStats& stats, const Eigen::VectorXd& m0,
                              double k0, double nu0, const Eigen::MatrixXd& sigma0) {
  const int p = static_cast<int>(m0.size());
  StudentT t;
  if (stats.n == 0) {
    t.df = nu0 - p + 1;
    t.loc = m0;
    t.scale = sigma0 * (k0 + 1.0) / (k0 * t.df);
    return t;
  }
  const double n = stats.n;
  const double kn = k0 + n;
  const double nun = nu0 + n;
  const Eigen::VectorXd xbar = stats.sum / n;
  const Eigen::VectorXd d = xbar - m0;
  Eigen::MatrixXd S = stats.scatter - n * xbar * xbar.transpose();
  Eigen::MatrixXd psin = sigma0 + S + (k0 * n / kn) * d * d.transpose();
  psin = 0.5 * (psin + psin.transpose());

  t.df = nun - p + 1;
  t.loc = (k0 * m0 + stats.sum) / kn;
  t.scale = psin * (kn + 1.0) / (kn * t.df);
  return t;
}

double student_t_log_pdf(const Eigen::VectorXd& x, const StudentT& t) {
  const int p = static_cast<int>(x.size());
  Eigen::LLT<Eigen::MatrixXd> llt(t.scale);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("predictive scale matrix is not positive definite");
  const Eigen::VectorXd w = llt.matrixL().solve(x - t.loc);
  const double q = w.squaredNorm();
  return std::lgamma(0.5 * (t.df + p)) - std::lgamma(0.5 * t.df) -
         0.5 * p * std::log(t.df * kPi) - half_log_det(llt) -
         0.5 * (t.df + p) * std::log1p(q / t.df);
}

double niw_log_marginal(const Eigen::MatrixXd& X, const Eigen::VectorXd& m0, double k0,
                        double nu0, const Eigen::MatrixXd& psi0) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  if (n == 0) return 0.0;
  const double kn = k0 + n;
  const double nun = nu0 + n;
  const Eigen::VectorXd xbar = X.colwise().mean();
  Eigen::MatrixXd C = X.rowwise() - xbar.transpose();
  const Eigen::VectorXd d = xbar - m0;
  Eigen::MatrixXd psin =
      psi0 + C.transpose() * C + (k0 * n / kn) * d * d.transpose();
  psin = 0.5 * (psin + psin.transpose());

  Eigen::LLT<Eigen::MatrixXd> l0(psi0), ln(psin);
  if (l0.info() != Eigen::Success || ln.info() != Eigen::Success)
    throw std::runtime_error("marginal likelihood: scale matrix not positive definite");
  return -0.5 * n * p * std::log(kPi) + 0.5 * p * std::log(k0 / kn) +
         mv_lgamma(p, 0.5 * nun) - mv_lgamma(p, 0.5 * nu0) + nu0 * half_log_det(l0) -
         nun * half_log_det(ln);
}

namespace {

// Cached predictive: Cholesky of the Student-t scale plus the x-independent
// part of the log density. Invalidated by cluster mutation or hyper resampling.
struct PredCache {
  std::uint64_t version = ~0ull;
  std::uint64_t epoch = ~0ull;
  double df = 0.0;
  double lognorm = 0.0;
  Eigen::VectorXd loc;
  Eigen::MatrixXd L;
};

void fill_cache(PredCache& c, const ClusterStats& stats, const Eigen::VectorXd& m0,
                double k0, double nu0, const Eigen::MatrixXd& sigma0, int p) {
  const StudentT t = posterior_predictive(stats, m0, k0, nu0, sigma0);
  Eigen::LLT<Eigen::MatrixXd> llt(t.scale);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("predictive scale matrix is not positive definite");
  c.df = t.df;
  c.loc = t.loc;
  c.L = llt.matrixL();
  c.lognorm = std::lgamma(0.5 * (t.df + p)) - std::lgamma(0.5 * t.df) -
              0.5 * p * std::log(t.df * kPi) - c.L.diagonal().array().log().sum();
}

double cached_log_pdf(const PredCache& c, const Eigen::VectorXd& x, int p) {
  const Eigen::VectorXd w = c.L.triangularView<Eigen::Lower>().solve(x - c.loc);
  return c.lognorm - 0.5 * (c.df + p) * std::log1p(w.squaredNorm() / c.df);
}

}  // namespace

ChainResult run_chain(const Eigen::MatrixXd& X, const DpmmPriors& priors, int iters,
                      int burnin, std::uint64_t seed) {
  const int n = static_cast<int>(X.rows());
  const int p = static_cast<int>(X.cols());
  if (n < 2) throw std::invalid_argument("chain: need at least two observations");
  if (!X.allFinite()) throw std::invalid_argument("chain: non-finite observations");
  if (burnin < 0 || iters <= burnin)
    throw std::invalid_argument("chain: iters must exceed burnin");
  if (priors.alpha <= 0.0 || priors.m1.size() != p || priors.S1.rows() != p)
    throw std::invalid_argument("chain: priors not calibrated for this data");

  Rng rng(seed);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(p, p);
  const Eigen::MatrixXd S1inv = priors.S1.llt().solve(I);
  const Eigen::MatrixXd Sigma1inv = priors.Sigma1.llt().solve(I);

  // Sigma0 starts at Sigma1 so the fresh-cluster predictive spans the corpus
  // without swamping within-cluster structure; the conditionals take over from
  // the first sweep.
  Eigen::VectorXd m0 = priors.m1;
  double k0 = 1.0;
  Eigen::MatrixXd sigma0 = priors.Sigma1;

  // Over-segmented leader init. Starting from one cluster (or from anything
  // that mixes distant points) lets the Sigma0 conditional lock onto the
  // corpus scale, and under a corpus-wide Sigma0 the sweep only ever builds
  // more wide clusters. Pure fragments merge on their own; mixed ones poison
  // the hyperparameters.
  std::vector<int> z(n, -1);
  {
    double theta = 0.0;
    {
      std::vector<double> nn(n, std::numeric_limits<double>::infinity());
      for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j) {
          const double d2 = (X.row(i) - X.row(j)).squaredNorm();
          nn[i] = std::min(nn[i], d2);
          nn[j] = std::min(nn[j], d2);
        }
      std::nth_element(nn.begin(), nn.begin() + n / 2, nn.end());
      theta = 2.0 * std::sqrt(nn[n / 2]);
    }
    std::vector<int> leaders;
    for (int i = 0; i < n; ++i) {
      int best = -1;
      double best_d = theta;
      for (std::size_t l = 0; l < leaders.size(); ++l) {
        const double d = (X.row(i) - X.row(leaders[l])).norm();
        if (d <= best_d) {
          best_d = d;
          best = static_cast<int>(l);
        }
      }
      if (best < 0) {
        best = static_cast<int>(leaders.size());
        leaders.push_back(i);
      }
      z[i] = best;
    }
  }
  const int k_init = *std::max_element(z.begin(), z.end()) + 1;
  std::vector<ClusterStats> clusters(k_init, ClusterStats(p));
  for (int i = 0; i < n; ++i) clusters[z[i]].add(X.row(i).transpose());

  std::uint64_t version_counter = 0, hyper_epoch = 0;
  std::vector<std::uint64_t> versions(k_init);
  for (int i = 0; i < k_init; ++i) versions[i] = ++version_counter;
  std::vector<PredCache> caches(k_init);
  PredCache prior_cache;
  const ClusterStats empty_stats(p);

  auto log_pred = [&](int j, const Eigen::VectorXd& x) {
    PredCache& c = caches[j];
    if (c.version != versions[j] || c.epoch != hyper_epoch) {
      fill_cache(c, clusters[j], m0, k0, priors.nu0, sigma0, p);
      c.version = versions[j];
      c.epoch = hyper_epoch;
    }
    return cached_log_pdf(c, x, p);
  };
  auto log_pred_new = [&](const Eigen::VectorXd& x) {
    if (prior_cache.epoch != hyper_epoch) {
      fill_cache(prior_cache, empty_stats, m0, k0, priors.nu0, sigma0, p);
      prior_cache.epoch = hyper_epoch;
    }
    return cached_log_pdf(prior_cache, x, p);
  };

  auto resample_hypers = [&]() {
    const int K = static_cast<int>(clusters.size());
    std::vector<Eigen::VectorXd> mu(K);
    std::vector<Eigen::MatrixXd> sigma_inv(K);
    Eigen::MatrixXd sum_prec = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd sum_prec_mu = Eigen::VectorXd::Zero(p);
    for (int j = 0; j < K; ++j) {
      const double nj = clusters[j].n;
      const double kn = k0 + nj;
      const double nun = priors.nu0 + nj;
      const Eigen::VectorXd xbar = clusters[j].sum / nj;
      const Eigen::VectorXd d = xbar - m0;
      Eigen::MatrixXd psin = sigma0 +
                             (clusters[j].scatter - nj * xbar * xbar.transpose()) +
                             (k0 * nj / kn) * d * d.transpose();
      psin = 0.5 * (psin + psin.transpose());
      const Eigen::MatrixXd sj = sample_inverse_wishart(rng, nun, psin);
      const Eigen::VectorXd mn = (k0 * m0 + clusters[j].sum) / kn;
      Eigen::LLT<Eigen::MatrixXd> ls(sj);
      mu[j] = sample_mvn(rng, mn, Eigen::MatrixXd(ls.matrixL()) / std::sqrt(kn));
      sigma_inv[j] = ls.solve(I);
      sum_prec += sigma_inv[j];
      sum_prec_mu += sigma_inv[j] * mu[j];
    }

    const Eigen::MatrixXd prec = S1inv + k0 * sum_prec;
    const Eigen::MatrixXd cov = prec.llt().solve(I);
    const Eigen::VectorXd mean = cov * (S1inv * priors.m1 + k0 * sum_prec_mu);
    m0 = sample_mvn(rng, mean, Eigen::MatrixXd(cov.llt().matrixL()));

    double quad = 0.0;
    for (int j = 0; j < K; ++j) {
      const Eigen::VectorXd d = mu[j] - m0;
      quad += d.dot(sigma_inv[j] * d);
    }
    k0 = rng.gamma(priors.tau1 + 0.5 * K * p, priors.xi1 + 0.5 * quad);

    sigma0 = sample_wishart(rng, priors.nu1 + K * priors.nu0,
                            (Sigma1inv + sum_prec).llt().solve(I));
    ++hyper_epoch;
  };

  // Let the hyperparameters equilibrate to the initial partition before any
  // reassignment happens; the first sweeps otherwise run at corpus scale.
  for (int w = 0; w < 10; ++w) resample_hypers();

  ChainResult result;
  result.k_trace.reserve(iters);
  result.loglik_trace.reserve(iters);
  result.samples.reserve(iters - burnin);

  std::vector<double> logw;
  for (int sweep = 0; sweep < iters; ++sweep) {
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd x = X.row(i).transpose();
      const int c = z[i];
      clusters[c].remove(x);
      versions[c] = ++version_counter;
      if (clusters[c].n == 0) {
        const int last = static_cast<int>(clusters.size()) - 1;
        if (c != last) {
          clusters[c] = std::move(clusters[last]);
          versions[c] = ++version_counter;
          caches[c] = std::move(caches[last]);
          caches[c].version = ~0ull;
          for (int& zt : z)
            if (zt == last) zt = c;
        }
        clusters.pop_back();
        versions.pop_back();
        caches.pop_back();
      }

      const int K = static_cast<int>(clusters.size());
      logw.assign(K + 1, 0.0);
      for (int j = 0; j < K; ++j)
        logw[j] = std::log(static_cast<double>(clusters[j].n)) + log_pred(j, x);
      logw[K] = std::log(priors.alpha) + log_pred_new(x);

      const double lmax = *std::max_element(logw.begin(), logw.end());
      double total = 0.0;
      for (double& w : logw) {
        w = std::exp(w - lmax);
        total += w;
      }
      if (!std::isfinite(total) || total <= 0.0)
        throw std::runtime_error("chain: degenerate reassignment weights");

      const double u = rng.uniform() * total;
      double acc = 0.0;
      int pick = K;
      for (int j = 0; j <= K; ++j) {
        acc += logw[j];
        if (u < acc) {
          pick = j;
          break;
        }
      }
      if (pick == K) {
        clusters.emplace_back(p);
        versions.push_back(++version_counter);
        caches.emplace_back();
      }
      clusters[pick].add(x);
      versions[pick] = ++version_counter;
      z[i] = pick;
    }

    // (mu_j, Sigma_j) are instantiated inside, solely for the conditionals.
    resample_hypers();

    const int K = static_cast<int>(clusters.size());
    double loglik = 0.0;
    for (int j = 0; j < K; ++j) {
      Eigen::MatrixXd rows(clusters[j].n, p);
      int r = 0;
      for (int i = 0; i < n; ++i)
        if (z[i] == j) rows.row(r++) = X.row(i);
      loglik += niw_log_marginal(rows, m0, k0, priors.nu0, sigma0);
    }
    result.k_trace.push_back(K);
    result.loglik_trace.push_back(loglik);
    if (sweep >= burnin) result.samples.push_back(canonical_labels(z));

    // Guard against incremental-statistics drift: rebuild and resync.
    if ((sweep + 1) % 100 == 0) {
      std::vector<ClusterStats> rebuilt(K, ClusterStats(p));
      for (int i = 0; i < n; ++i) rebuilt[z[i]].add(X.row(i).transpose());
      for (int j = 0; j < K; ++j) {
        const double ref = 1.0 + clusters[j].scatter.cwiseAbs().maxCoeff();
        if (rebuilt[j].n != clusters[j].n ||
            (rebuilt[j].sum - clusters[j].sum).cwiseAbs().maxCoeff() > 1e-6 * ref ||
            (rebuilt[j].scatter - clusters[j].scatter).cwiseAbs().maxCoeff() > 1e-6 * ref)
          throw std::logic_error("chain: sufficient statistics drifted");
        clusters[j] = std::move(rebuilt[j]);
        versions[j] = ++version_counter;
      }
    }
  }
  return result;
}

std::vector<int> canonical_labels(const std::vector<int>& labels) {
  std::unordered_map<int, int> remap;
  std::vector<int> out(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto [it, inserted] = remap.try_emplace(labels[i], static_cast<int>(remap.size()));
    out[i] = it->second;
  }
  return out;
}

Eigen::MatrixXd posterior_similarity(const std::vector<std::vector<int>>& samples) {
  if (samples.empty()) throw std::invalid_argument("similarity: no samples");
  const int n = static_cast<int>(samples[0].size());
  Eigen::MatrixXd sim = Eigen::MatrixXd::Zero(n, n);
  for (const auto& s : samples) {
    if (static_cast<int>(s.size()) != n)
      throw std::invalid_argument("similarity: ragged samples");
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        if (s[i] == s[j]) sim(i, j) += 1.0;
  }
  sim /= static_cast<double>(samples.size());
  sim.triangularView<Eigen::StrictlyLower>() = sim.transpose();
  return sim;
}

double variation_of_information(const std::vector<int>& a, const std::vector<int>& b) {
  if (a.size() != b.size() || a.empty())
    throw std::invalid_argument("VI: partitions must be non-empty and equal length");
  const std::vector<int> ca = canonical_labels(a), cb = canonical_labels(b);
  const int ka = *std::max_element(ca.begin(), ca.end()) + 1;
  const int kb = *std::max_element(cb.begin(), cb.end()) + 1;
  const double n = static_cast<double>(a.size());

  std::vector<double> pa(ka, 0.0), pb(kb, 0.0);
  std::vector<double> joint(static_cast<std::size_t>(ka) * kb, 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    pa[ca[i]] += 1.0;
    pb[cb[i]] += 1.0;
    joint[static_cast<std::size_t>(ca[i]) * kb + cb[i]] += 1.0;
  }

  double ha = 0.0, hb = 0.0, mi = 0.0;
  for (double c : pa)
    if (c > 0) ha -= (c / n) * std::log(c / n);
  for (double c : pb)
    if (c > 0) hb -= (c / n) * std::log(c / n);
  for (int i = 0; i < ka; ++i)
    for (int j = 0; j < kb; ++j) {
      const double c = joint[static_cast<std::size_t>(i) * kb + j];
      if (c > 0) mi += (c / n) * std::log(c * n / (pa[i] * pb[j]));
    }
  return std::max(0.0, ha + hb - 2.0 * mi);
}

std::vector<int> vi_point_estimate_partition(
    const std::vector<std::vector<int>>& samples) {
  if (samples.empty()) throw std::invalid_argument("point estimate: no samples");

  std::map<std::vector<int>, int> counts;  // canonical partition -> multiplicity
  std::vector<const std::vector<int>*> order;
  for (const auto& s : samples) {
    auto [it, inserted] = counts.try_emplace(canonical_labels(s), 0);
    ++it->second;
    if (inserted) order.push_back(&it->first);
  }

  const std::vector<int>* best = nullptr;
  double best_loss = 0.0;
  for (const auto* cand : order) {
    double loss = 0.0;
    for (const auto& [part, mult] : counts)
      loss += mult * variation_of_information(*cand, part);
    if (best == nullptr || loss < best_loss) {
      best = cand;
      best_loss = loss;
    }
  }
  return *best;
}

}  // namespace vocluster
