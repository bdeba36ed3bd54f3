#include "vocluster/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "vocluster/rng.hpp"

namespace vocluster {

double average_mutual_information(const std::vector<double>& x, int tau, int bins) {
  if (tau < 0) throw std::invalid_argument("ami: negative tau");
  const std::size_t n = x.size();
  if (n < static_cast<std::size_t>(tau) + 2) throw std::invalid_argument("ami: series too short");
  const std::size_t m = n - tau;
  if (m < 2 * static_cast<std::size_t>(bins)) throw std::invalid_argument("ami: too few pairs");

  double lo = x[0], hi = x[0];
  for (double v : x) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi <= lo) return 0.0;  // constant signal

  std::vector<int> joint(static_cast<std::size_t>(bins) * bins, 0);
  std::vector<int> px(bins, 0), py(bins, 0);
  const double scale = bins / (hi - lo);
  for (std::size_t i = 0; i < m; ++i) {
    int a = static_cast<int>((x[i] - lo) * scale);
    int b = static_cast<int>((x[i + tau] - lo) * scale);
    a = std::min(a, bins - 1);
    b = std::min(b, bins - 1);
    ++joint[static_cast<std::size_t>(a) * bins + b];
    ++px[a];
    ++py[b];
  }
  double mi = 0.0;
  const double inv = 1.0 / static_cast<double>(m);
  for (int a = 0; a < bins; ++a) {
    if (px[a] == 0) continue;
    for (int b = 0; b < bins; ++b) {
      const int c = joint[static_cast<std::size_t>(a) * bins + b];
      if (c == 0) continue;
      const double pj = c * inv;
      mi += pj * std::log(pj / (px[a] * inv * py[b] * inv));
    }
  }
  return std::max(mi, 0.0);
}

DelaySelection select_delay(const std::vector<double>& x, const EmbeddingParams& params,
                            int sample_rate) {
  int tmax = params.tau_max;
  if (tmax <= 0) {
    tmax = static_cast<int>(std::lround(0.05 * sample_rate));
    tmax = std::min<int>(tmax, static_cast<int>(x.size() / 4));
  }
  tmax = std::max(tmax, 1);
  const double threshold = 1.0 / 2.718281828459045235360287471353;

  DelaySelection sel;
  double best = std::numeric_limits<double>::infinity();
  int best_tau = 1;
  for (int tau = 1; tau <= tmax; ++tau) {
    if (x.size() < static_cast<std::size_t>(tau) + 2 * static_cast<std::size_t>(params.ami_bins))
      break;
    const double mi = average_mutual_information(x, tau, params.ami_bins);
    if (mi < threshold) {
      sel.tau = tau;
      return sel;
    }
    if (mi < best) {
      best = mi;
      best_tau = tau;
    }
  }
  sel.tau = best_tau;
  sel.fallback = true;
  return sel;
}

namespace {

// Cao's E(d) and E*(d) with max-norm nearest neighbors. Neighbors closer
// than 1e-8 * range are skipped: exact or float-level repeats of the
// reference (periodic signals) otherwise produce pure rounding noise in
// the distance ratios.
struct CaoStats {
  std::vector<double> E;      // index d, d = 1..dmax
  std::vector<double> Estar;
};

CaoStats cao_stats(const std::vector<double>& x, int tau, int dmax, int n_ref) {
  const int n = static_cast<int>(x.size());
  double lo = x[0], hi = x[0];
  for (double v : x) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const double floor_dist = 1e-8 * (hi - lo);
  if (hi <= lo) throw std::invalid_argument("cao: constant signal");

  CaoStats s;
  s.E.assign(dmax + 1, 0.0);
  s.Estar.assign(dmax + 1, 0.0);
  for (int d = 1; d <= dmax; ++d) {
    const int m = n - d * tau;
    if (m < 50) {
      // tail dims unreachable on a short series; report flat statistics
      s.E[d] = s.E[d - 1];
      s.Estar[d] = s.Estar[d - 1];
      continue;
    }
    const int refs = std::min(n_ref, m);
    double sum_ratio = 0.0, sum_next = 0.0;
    int used = 0;
    for (int r = 0; r < refs; ++r) {
      const int i = refs == 1 ? 0 : static_cast<int>((static_cast<long long>(r) * (m - 1)) / (refs - 1));
      double best = std::numeric_limits<double>::infinity();
      int bj = -1;
      for (int j = 0; j < m; ++j) {
        if (j == i) continue;
        double dist = 0.0;
        for (int k = 0; k < d; ++k) {
          const double diff = std::fabs(x[i + k * tau] - x[j + k * tau]);
          if (diff > dist) dist = diff;
          if (dist >= best) break;
        }
        if (dist <= floor_dist) continue;
        if (dist < best) {  // strict: ties keep the lowest index
          best = dist;
          bj = j;
        }
      }
      if (bj < 0) continue;
      const double next = std::fabs(x[i + d * tau] - x[bj + d * tau]);
      sum_ratio += std::max(best, next) / best;
      sum_next += next;
      ++used;
    }
    if (used == 0) throw std::runtime_error("cao: no usable neighbors");
    s.E[d] = sum_ratio / used;
    s.Estar[d] = sum_next / used;
  }
  return s;
}

}  // namespace

CaoResult cao_embedding_dimension(const std::vector<double>& x, int tau,
                                  const EmbeddingParams& params) {
  if (tau < 1) throw std::invalid_argument("cao: tau < 1");
  int dmax = params.cao_dmax;
  // need m = n - (dmax+1)*tau points at the largest probe dimension
  while (dmax > 2 && static_cast<int>(x.size()) - (dmax + 1) * tau < 50) --dmax;
  if (static_cast<int>(x.size()) - 3 * tau < 50)
    throw std::invalid_argument("cao: series too short for tau");

  CaoStats s = cao_stats(x, tau, dmax + 1, params.cao_n_ref);

  CaoResult res;
  res.e1.assign(dmax + 1, 0.0);
  res.e2.assign(dmax + 1, 0.0);
  for (int d = 1; d <= dmax; ++d) {
    res.e1[d] = s.E[d] > 0.0 ? s.E[d + 1] / s.E[d] : 0.0;
    res.e2[d] = s.Estar[d] > 0.0 ? s.Estar[d + 1] / s.Estar[d] : 0.0;
  }

  // E2 hovering at 1 for every low dimension marks a stochastic series
  // (for deterministic signals some E2(d) departs from 1).
  bool stochastic = true;
  for (int d = 1; d <= std::min(5, dmax); ++d)
    if (std::fabs(res.e2[d] - 1.0) >= params.cao_e2_band) stochastic = false;
  if (stochastic) {
    res.dimension = params.cao_dmax;
    res.capped = true;
    return res;
  }

  for (int d = 1; d + 1 <= dmax; ++d) {
    if (std::fabs(res.e1[d + 1] - res.e1[d]) < params.cao_threshold &&
        res.e1[d] > params.cao_e1_floor) {
      res.dimension = d;
      return res;
    }
  }
  res.dimension = params.cao_dmax;
  res.capped = true;
  return res;
}

PointCloud takens_embed(const std::vector<double>& x, int tau, int D) {
  if (tau < 1 || D < 1) throw std::invalid_argument("takens: bad tau or D");
  const long long m = static_cast<long long>(x.size()) - static_cast<long long>(D - 1) * tau;
  if (m < 1) throw std::invalid_argument("takens: series shorter than (D-1)*tau");
  PointCloud c;
  c.points.resize(m, D);
  for (long long i = 0; i < m; ++i)
    for (int k = 0; k < D; ++k) c.points(i, k) = x[i + static_cast<long long>(k) * tau];
  return c;
}

std::pair<double, double> fit_low_dim_kernel(double min_dist, double spread) {
  // fit 1/(1 + a x^{2b}) to the target membership curve by Gauss-Newton
  const int npts = 299;
  Eigen::VectorXd xs(npts), ys(npts);
  for (int i = 0; i < npts; ++i) {
    const double xv = 3.0 * spread * (i + 1) / 300.0;
    xs(i) = xv;
    ys(i) = xv <= min_dist ? 1.0 : std::exp(-(xv - min_dist) / spread);
  }
  double a = 1.0, b = 1.0;
  for (int it = 0; it < 200; ++it) {
    Eigen::Matrix2d H = Eigen::Matrix2d::Zero();
    Eigen::Vector2d g = Eigen::Vector2d::Zero();
    for (int i = 0; i < npts; ++i) {
      const double xb = std::pow(xs(i), 2.0 * b);
      const double den = 1.0 + a * xb;
      const double f = 1.0 / den;
      const double r = ys(i) - f;
      const double ja = -xb / (den * den);
      const double jb = -2.0 * a * xb * std::log(xs(i)) / (den * den);
      H(0, 0) += ja * ja;
      H(0, 1) += ja * jb;
      H(1, 1) += jb * jb;
      g(0) += ja * r;
      g(1) += jb * r;
    }
    H(1, 0) = H(0, 1);
    H(0, 0) += 1e-9;
    H(1, 1) += 1e-9;
    const Eigen::Vector2d step = H.ldlt().solve(g);
    double an = a + step(0), bn = b + step(1);
    if (!(an > 0.0) || !(bn > 0.0)) {
      an = a + 0.5 * step(0);
      bn = b + 0.5 * step(1);
    }
    const double moved = std::fabs(an - a) + std::fabs(bn - b);
    a = an;
    b = bn;
    if (moved < 1e-12) break;
  }
  return {a, b};
}

namespace {

PointCloud pca_project3(const PointCloud& in) {
  const int n = in.size();
  Eigen::RowVectorXd mean = in.points.colwise().mean();
  Eigen::MatrixXd centered = in.points.rowwise() - mean;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  PointCloud out;
  out.points = Eigen::MatrixXd::Zero(n, 3);
  const int k = std::min<int>(3, static_cast<int>(svd.matrixV().cols()));
  out.points.leftCols(k) = centered * svd.matrixV().leftCols(k);
  return out;
}

}  // namespace

ReduceResult reduce_to_3d(const PointCloud& cloud, const EmbeddingParams& params) {
  if (cloud.size() < 1) throw std::invalid_argument("reduce: empty cloud");
  ReduceResult res;

  PointCloud work;
  if (cloud.size() > params.subsample_target) {
    // uniform index stride, order preserved
    const int n = cloud.size();
    const int target = params.subsample_target;
    const int stride = (n + target - 1) / target;
    const int kept = (n + stride - 1) / stride;
    work.points.resize(kept, cloud.dim());
    for (int i = 0, r = 0; i < n; i += stride, ++r) work.points.row(r) = cloud.points.row(i);
  } else {
    work = cloud;
  }

  if (work.dim() == 3) {
    res.cloud = work;
    return res;
  }
  if (work.dim() < 3) {
    res.cloud.points = Eigen::MatrixXd::Zero(work.size(), 3);
    res.cloud.points.leftCols(work.dim()) = work.points;
    return res;
  }
  if (work.size() < params.reduce_neighbors + 1) {
    res.cloud = pca_project3(work);
    res.pca_fallback = true;
    return res;
  }

  const int n = work.size();
  const int k = params.reduce_neighbors;

  // exact k-NN (euclidean)
  Eigen::MatrixXi knn(n, k);
  Eigen::MatrixXd knd(n, k);
  {
    std::vector<std::pair<double, int>> cand(n - 1);
    for (int i = 0; i < n; ++i) {
      int c = 0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        cand[c++] = {(work.points.row(i) - work.points.row(j)).squaredNorm(), j};
      }
      std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
      for (int t = 0; t < k; ++t) {
        knn(i, t) = cand[t].second;
        knd(i, t) = std::sqrt(cand[t].first);
      }
    }
  }

  // smooth-kNN calibration: rho_i = nearest nonzero distance, sigma_i by
  // bisection so sum_j exp(-max(0, d_ij - rho_i)/sigma_i) = log2(k)
  Eigen::MatrixXd w(n, k);
  const double target = std::log2(static_cast<double>(k));
  for (int i = 0; i < n; ++i) {
    double rho = 0.0;
    for (int t = 0; t < k; ++t)
      if (knd(i, t) > 0.0) {
        rho = knd(i, t);
        break;
      }
    double lo = 1e-6, hi = 1e3;
    for (int it = 0; it < 64; ++it) {
      const double mid = 0.5 * (lo + hi);
      double s = 0.0;
      for (int t = 0; t < k; ++t) s += std::exp(-std::max(0.0, knd(i, t) - rho) / mid);
      (s > target ? hi : lo) = mid;
    }
    const double sigma = 0.5 * (lo + hi);
    for (int t = 0; t < k; ++t) w(i, t) = std::exp(-std::max(0.0, knd(i, t) - rho) / sigma);
  }

  // fuzzy union a + a' - a a' over directed edges
  std::map<std::pair<int, int>, double> directed;
  for (int i = 0; i < n; ++i)
    for (int t = 0; t < k; ++t) directed[{i, knn(i, t)}] = w(i, t);
  std::map<std::pair<int, int>, double> undirected;
  for (const auto& [e, wij] : directed) {
    const auto rev = std::make_pair(e.second, e.first);
    const auto it = directed.find(rev);
    const double wji = it == directed.end() ? 0.0 : it->second;
    const auto key = std::make_pair(std::min(e.first, e.second), std::max(e.first, e.second));
    undirected[key] = wij + wji - wij * wji;
  }

  std::vector<int> ei, ej;
  std::vector<double> ew;
  for (const auto& [e, wv] : undirected) {
    if (wv <= 0.0) continue;
    ei.push_back(e.first);
    ej.push_back(e.second);
    ew.push_back(wv);
  }
  const double wmax = *std::max_element(ew.begin(), ew.end());

  const auto [a, b] = fit_low_dim_kernel(params.reduce_min_dist, params.reduce_spread);

  Rng rng(params.rng_seed);
  Eigen::MatrixXd Y(n, 3);
  for (int i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c) Y(i, c) = rng.uniform() * 20.0 - 10.0;

  const int epochs = params.reduce_epochs;
  const int neg = 5;
  const double clip = 4.0;
  std::vector<double> every(ew.size()), next_t(ew.size());
  for (std::size_t e = 0; e < ew.size(); ++e) every[e] = wmax / ew[e];
  next_t = every;

  for (int ep = 1; ep <= epochs; ++ep) {
    const double alpha = 1.0 * (1.0 - static_cast<double>(ep) / epochs);
    for (std::size_t e = 0; e < ew.size(); ++e) {
      if (next_t[e] > ep) continue;
      next_t[e] += every[e];
      const int i = ei[e], j = ej[e];
      Eigen::RowVector3d diff = Y.row(i) - Y.row(j);
      const double d2 = diff.squaredNorm();
      if (d2 > 0.0) {
        const double gc = (-2.0 * a * b * std::pow(d2, b - 1.0)) / (1.0 + a * std::pow(d2, b));
        for (int c = 0; c < 3; ++c) {
          const double g = std::clamp(gc * diff(c), -clip, clip);
          Y(i, c) += alpha * g;
          Y(j, c) -= alpha * g;
        }
      }
      for (int s = 0; s < neg; ++s) {
        const int m = static_cast<int>(rng.integer(n));
        if (m == i) continue;
        Eigen::RowVector3d dn = Y.row(i) - Y.row(m);
        const double dn2 = dn.squaredNorm();
        const double gr = (2.0 * b) / ((1e-3 + dn2) * (1.0 + a * std::pow(dn2, b)));
        for (int c = 0; c < 3; ++c) {
          const double g = std::clamp(gr * dn(c), -clip, clip);
          Y(i, c) += alpha * g;
        }
      }
    }
  }

  res.cloud.points = std::move(Y);
  return res;
}

}  // namespace vocluster
