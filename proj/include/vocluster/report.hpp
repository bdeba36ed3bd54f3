#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "vocluster/embedding.hpp"
#include "vocluster/spectral.hpp"

namespace vocluster {

struct PipelineConfig {
  std::string manifest;
  std::string output_dir;
  std::uint64_t seed = 1;
  double k_target = 5.0;
  int iters = 10000;
  int burnin = 4000;
  double alpha_level = 0.05;
  double garbage_fraction = 0.005;  // clusters below this share of N get flagged
  SpectralConfig spectral;
  EmbeddingParams embedding;
  // at most one stage toggle may be set
  bool features_only = false;
  bool cluster_only = false;
  bool report_only = false;
};

// Key/value config file: `key = value`, '#' comments, optional double quotes
// around strings. Unknown keys are rejected. See README for the schema.
PipelineConfig load_config(const std::string& path);

struct PipelineResult {
  int n_clips = 0;    // rows in features.csv
  int n_skipped = 0;  // rows in skipped.csv
  int n_clusters = 0;
  std::vector<std::string> ids;
  std::vector<int> partition;
};

PipelineResult run_pipeline(const PipelineConfig& cfg);

// Cluster-by-month contingency counts; only months that actually occur get
// a column, clusters and months both ascending.
struct MonthClusterTable {
  std::vector<int> months;
  std::vector<int> clusters;
  Eigen::MatrixXd counts;  // clusters x months
};

MonthClusterTable cross_tabulate(const std::vector<int>& cluster_of,
                                 const std::vector<int>& month_of);

// Percentage normalizations; all-zero rows/columns stay zero.
Eigen::MatrixXd rows_to_percent(const Eigen::MatrixXd& counts);
Eigen::MatrixXd cols_to_percent(const Eigen::MatrixXd& counts);

// Stacked per-month proportion chart. Months inside the covered range with
// no clips render as explicit gaps, never interpolated over.
std::string render_month_figure(const MonthClusterTable& table,
                                const std::vector<bool>& candidate_garbage);

// %.10g, shared by every CSV writer so reruns stay byte-identical.
std::string format_double(double v);

}  // namespace vocluster
