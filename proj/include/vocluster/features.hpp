#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vocluster/persistence.hpp"

namespace vocluster {

// Eight summary statistics per homology dimension. Lifetimes are
// death - birth over the recorded (finite) pairs.
struct DimFeatures {
  double entropy = 0.0;  // nats
  double p_norm = 0.0;   // p = 2
  double betti_mid = 0.0;
  double lifetime_count = 0.0;
  double lifetime_mean = 0.0;
  double lifetime_std = 0.0;  // population
  double lifetime_max = 0.0;
  double lifetime_sum = 0.0;
};

struct DiagramFeatures {
  std::vector<DimFeatures> dims;  // H0..H1 (spectrogram) or H0..H2 (embedding)
  Eigen::VectorXd flatten() const;
};

struct FeatureVector {
  Eigen::VectorXd mfcc;          // 12
  double persvar_spectrogram = 0.0;
  double persvar_embedding = 0.0;
  std::string id;
  int month = 0;
  Eigen::VectorXd numeric() const;  // the 14-D row
};

struct PCAModel {
  Eigen::VectorXd mean;           // over raw (pre-standardization) columns
  Eigen::VectorXd scale;          // per-column std; 0 marks dropped columns
  Eigen::VectorXd axis;           // PC1 in standardized space, unit norm
  double explained_variance_ratio = 0.0;
};

double persistent_entropy(const PersistenceDiagram& dgm, int dim);
double diagram_p_norm(const PersistenceDiagram& dgm, int dim, double p = 2.0);
// points alive at r: birth <= r < death
int persistent_betti(const PersistenceDiagram& dgm, int dim, double r);

struct LifetimeStats {
  double count = 0.0, mean = 0.0, std = 0.0, max = 0.0, sum = 0.0;
};
LifetimeStats lifetime_stats(const PersistenceDiagram& dgm, int dim);

// betti_mid is evaluated at the midpoint of the diagram's filtration range
DiagramFeatures diagram_features(const PersistenceDiagram& dgm, int max_dim);

// z-scores the flattened rows, fits PCA, projects on PC1. Sign fixed so
// the loading of the H0 lifetime_sum column is nonnegative. Zero-variance
// columns are dropped.
std::pair<PCAModel, Eigen::VectorXd> fit_persistent_variable(
    const std::vector<DiagramFeatures>& rows);

FeatureVector assemble(const Eigen::VectorXd& mfcc, double s_spec, double s_emb,
                       const std::string& id, int month);

}  // namespace vocluster
