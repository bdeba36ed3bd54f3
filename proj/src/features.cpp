#include "vocluster/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vocluster {

namespace {

std::vector<double> lifetimes_of(const PersistenceDiagram& dgm, int dim) {
  std::vector<double> ls;
  for (const auto& p : dgm.points)
    if (p.dim == dim) ls.push_back(p.death - p.birth);
  return ls;
}

}  // namespace

double persistent_entropy(const PersistenceDiagram& dgm, int dim) {
  std::vector<double> ls = lifetimes_of(dgm, dim);
  double total = 0.0;
  for (double l : ls)
    if (l > 0.0) total += l;
  if (total <= 0.0) return 0.0;
  double H = 0.0;
  for (double l : ls) {
    if (l <= 0.0) continue;
    const double q = l / total;
    H -= q * std::log(q);
  }
  return H;
}

double diagram_p_norm(const PersistenceDiagram& dgm, int dim, double p) {
  double acc = 0.0;
  for (double l : lifetimes_of(dgm, dim))
    if (l > 0.0) acc += std::pow(l, p);
  return acc > 0.0 ? std::pow(acc, 1.0 / p) : 0.0;
}

int persistent_betti(const PersistenceDiagram& dgm, int dim, double r) {
  int alive = 0;
  for (const auto& p : dgm.points)
    if (p.dim == dim && p.birth <= r && r < p.death) ++alive;
  return alive;
}

LifetimeStats lifetime_stats(const PersistenceDiagram& dgm, int dim) {
  LifetimeStats s;
  std::vector<double> ls = lifetimes_of(dgm, dim);
  if (ls.empty()) return s;
  s.count = static_cast<double>(ls.size());
  for (double l : ls) {
    s.sum += l;
    s.max = std::max(s.max, l);
  }
  s.mean = s.sum / s.count;
  double ss = 0.0;
  for (double l : ls) ss += (l - s.mean) * (l - s.mean);
  s.std = std::sqrt(ss / s.count);
  return s;
}

DiagramFeatures diagram_features(const PersistenceDiagram& dgm, int max_dim) {
  double lo = 0.0, hi = dgm.cap_value;
  if (!dgm.points.empty()) {
    lo = dgm.points[0].birth;
    for (const auto& p : dgm.points) lo = std::min(lo, p.birth);
  }
  const double mid = 0.5 * (lo + hi);

  DiagramFeatures out;
  out.dims.resize(max_dim + 1);
  for (int d = 0; d <= max_dim; ++d) {
    DimFeatures& f = out.dims[d];
    f.entropy = persistent_entropy(dgm, d);
    f.p_norm = diagram_p_norm(dgm, d);
    f.betti_mid = persistent_betti(dgm, d, mid);
    const LifetimeStats ls = lifetime_stats(dgm, d);
    f.lifetime_count = ls.count;
    f.lifetime_mean = ls.mean;
    f.lifetime_std = ls.std;
    f.lifetime_max = ls.max;
    f.lifetime_sum = ls.sum;
  }
  return out;
}

Eigen::VectorXd DiagramFeatures::flatten() const {
  Eigen::VectorXd v(static_cast<Eigen::Index>(dims.size()) * 8);
  Eigen::Index i = 0;
  for (const auto& f : dims) {
    v(i++) = f.entropy;
    v(i++) = f.p_norm;
    v(i++) = f.betti_mid;
    v(i++) = f.lifetime_count;
    v(i++) = f.lifetime_mean;
    v(i++) = f.lifetime_std;
    v(i++) = f.lifetime_max;
    v(i++) = f.lifetime_sum;
  }
  return v;
}

std::pair<PCAModel, Eigen::VectorXd> fit_persistent_variable(
    const std::vector<DiagramFeatures>& rows) {
  if (rows.size() < 2) throw std::invalid_argument("persistent variable: need >= 2 clips");
  const int n = static_cast<int>(rows.size());
  const int d = static_cast<int>(rows[0].flatten().size());
  Eigen::MatrixXd X(n, d);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd r = rows[i].flatten();
    if (r.size() != d) throw std::invalid_argument("persistent variable: ragged rows");
    X.row(i) = r.transpose();
  }

  PCAModel model;
  model.mean = X.colwise().mean();
  Eigen::MatrixXd C = X.rowwise() - model.mean.transpose();
  model.scale = (C.array().square().colwise().sum() / n).sqrt();

  std::vector<int> kept;
  for (int j = 0; j < d; ++j)
    if (model.scale(j) > 0.0) kept.push_back(j);
  if (kept.empty()) throw std::invalid_argument("persistent variable: all columns constant");

  Eigen::MatrixXd Z(n, static_cast<int>(kept.size()));
  for (std::size_t k = 0; k < kept.size(); ++k) Z.col(k) = C.col(kept[k]) / model.scale(kept[k]);

  Eigen::BDCSVD<Eigen::MatrixXd> svd(Z, Eigen::ComputeThinV);
  const Eigen::VectorXd sv = svd.singularValues();
  const double total = sv.array().square().sum();
  Eigen::VectorXd axis_kept = svd.matrixV().col(0);

  // sign convention: H0 lifetime_sum loads nonnegatively (flat index 7)
  double ref_loading = 0.0;
  for (std::size_t k = 0; k < kept.size(); ++k)
    if (kept[k] == 7) ref_loading = axis_kept(k);
  if (ref_loading == 0.0) ref_loading = axis_kept(0);  // column dropped: first kept decides
  if (ref_loading < 0.0) axis_kept = -axis_kept;

  model.axis = Eigen::VectorXd::Zero(d);
  for (std::size_t k = 0; k < kept.size(); ++k) model.axis(kept[k]) = axis_kept(k);
  model.explained_variance_ratio = total > 0.0 ? sv(0) * sv(0) / total : 0.0;

  Eigen::VectorXd proj = Z * axis_kept;
  return {model, proj};
}

FeatureVector assemble(const Eigen::VectorXd& mfcc, double s_spec, double s_emb,
                       const std::string& id, int month) {
  if (!mfcc.allFinite())
    throw std::invalid_argument("assemble: non-finite MFCC input for clip " + id);
  if (!std::isfinite(s_spec))
    throw std::invalid_argument("assemble: non-finite spectrogram variable for clip " + id);
  if (!std::isfinite(s_emb))
    throw std::invalid_argument("assemble: non-finite embedding variable for clip " + id);
  FeatureVector fv;
  fv.mfcc = mfcc;
  fv.persvar_spectrogram = s_spec;
  fv.persvar_embedding = s_emb;
  fv.id = id;
  fv.month = month;
  return fv;
}

Eigen::VectorXd FeatureVector::numeric() const {
  Eigen::VectorXd v(mfcc.size() + 2);
  v.head(mfcc.size()) = mfcc;
  v(mfcc.size()) = persvar_spectrogram;
  v(mfcc.size() + 1) = persvar_embedding;
  return v;
}

}  // namespace vocluster
