#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "vocluster/report.hpp"

using namespace vocluster;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
  const fs::path p = fs::temp_directory_path() / "vocluster_test_report";
  fs::create_directories(p);
  return p;
}

std::string write_cfg(const std::string& name, const std::string& body) {
  const fs::path p = scratch_dir() / name;
  std::ofstream(p) << body;
  return p.string();
}

}  // namespace

TEST_CASE("load_config: keys, quotes, and comments") {
  const std::string path = write_cfg("full.cfg",
                                     "# pipeline settings\n"
                                     "manifest = \"/data/m.csv\"  # quoted\n"
                                     "output_dir = /tmp/out\n"
                                     "\n"
                                     "seed = 99\n"
                                     "k_target = 4.5\n"
                                     "iters = 500\n"
                                     "burnin = 200\n"
                                     "alpha_level = 0.01\n"
                                     "garbage_fraction = 0.02\n"
                                     "spec_window_seconds = 0.02\n"
                                     "mfcc_overlap_fraction = 0.5\n"
                                     "n_mel_filters = 30\n"
                                     "db_scale = true\n"
                                     "ami_bins = 32\n"
                                     "subsample_target = 1500\n"
                                     "reduce_neighbors = 10\n"
                                     "reduce_min_dist = 0.25\n"
                                     "features_only = true\n");
  const PipelineConfig cfg = load_config(path);
  CHECK(cfg.manifest == "/data/m.csv");
  CHECK(cfg.output_dir == "/tmp/out");
  CHECK(cfg.seed == 99);
  CHECK(cfg.k_target == 4.5);
  CHECK(cfg.iters == 500);
  CHECK(cfg.burnin == 200);
  CHECK(cfg.alpha_level == 0.01);
  CHECK(cfg.garbage_fraction == 0.02);
  CHECK(cfg.spectral.spec_window_seconds == 0.02);
  CHECK(cfg.spectral.mfcc_overlap_fraction == 0.5);
  CHECK(cfg.spectral.n_mel_filters == 30);
  CHECK(cfg.spectral.db_scale);
  CHECK(cfg.embedding.ami_bins == 32);
  CHECK(cfg.embedding.subsample_target == 1500);
  CHECK(cfg.embedding.reduce_neighbors == 10);
  CHECK(cfg.embedding.reduce_min_dist == 0.25);
  CHECK(cfg.features_only);
  CHECK_FALSE(cfg.cluster_only);
}

TEST_CASE("load_config: defaults survive a minimal file") {
  const PipelineConfig cfg =
      load_config(write_cfg("min.cfg", "manifest = a.csv\noutput_dir = out\n"));
  CHECK(cfg.seed == 1);
  CHECK(cfg.k_target == 5.0);
  CHECK(cfg.iters == 10000);
  CHECK(cfg.burnin == 4000);
  CHECK(cfg.spectral.spec_window_seconds == 0.0116);
  CHECK(cfg.spectral.spec_overlap_fraction == 0.90);
  CHECK(cfg.embedding.reduce_neighbors == 15);
  CHECK(cfg.embedding.subsample_target == 2000);
}

TEST_CASE("load_config: malformed input is rejected") {
  CHECK_THROWS_WITH_AS(load_config(write_cfg("unk.cfg",
                                             "manifest = a\noutput_dir = b\nwindow = 3\n")),
                       doctest::Contains("unknown key"), std::invalid_argument);
  CHECK_THROWS_AS(load_config(write_cfg("noeq.cfg", "manifest a.csv\n")),
                  std::invalid_argument);
  CHECK_THROWS_AS(load_config(write_cfg("badnum.cfg",
                                        "manifest = a\noutput_dir = b\niters = ten\n")),
                  std::invalid_argument);
  CHECK_THROWS_AS(load_config(write_cfg("badbool.cfg",
                                        "manifest = a\noutput_dir = b\ndb_scale = maybe\n")),
                  std::invalid_argument);
  CHECK_THROWS_AS(load_config(write_cfg("nopaths.cfg", "seed = 4\n")), std::invalid_argument);
  CHECK_THROWS_AS(load_config((scratch_dir() / "missing.cfg").string()),
                  std::invalid_argument);
}

TEST_CASE("run_pipeline: stage toggles are mutually exclusive") {
  const PipelineConfig cfg = load_config(write_cfg("toggles.cfg",
                                                   "manifest = nowhere.csv\n"
                                                   "output_dir = out\n"
                                                   "features_only = true\n"
                                                   "report_only = true\n"));
  CHECK_THROWS_WITH_AS(run_pipeline(cfg), doctest::Contains("stage toggle"),
                       std::runtime_error);
}

TEST_CASE("cross_tabulate: ascending axes and correct counts") {
  const std::vector<int> clusters = {0, 2, 0, 2, 5, 2};
  const std::vector<int> months = {3, 1, 3, 1, 7, 3};
  const MonthClusterTable t = cross_tabulate(clusters, months);

  CHECK(t.months == std::vector<int>{1, 3, 7});
  CHECK(t.clusters == std::vector<int>{0, 2, 5});
  REQUIRE(t.counts.rows() == 3);
  REQUIRE(t.counts.cols() == 3);
  CHECK(t.counts(0, 1) == 2.0);  // cluster 0, month 3
  CHECK(t.counts(1, 0) == 2.0);  // cluster 2, month 1
  CHECK(t.counts(1, 1) == 1.0);  // cluster 2, month 3
  CHECK(t.counts(2, 2) == 1.0);  // cluster 5, month 7
  CHECK(t.counts.sum() == 6.0);
  CHECK_THROWS_AS(cross_tabulate({0, 1}, {1}), std::invalid_argument);
}

TEST_CASE("percent tables: normalization with empty lines preserved") {
  Eigen::MatrixXd counts(2, 3);
  counts << 2, 3, 5, 0, 0, 0;

  const Eigen::MatrixXd rows = rows_to_percent(counts);
  CHECK(rows.row(0).sum() == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(rows(0, 2) == doctest::Approx(50.0));
  CHECK(rows.row(1).sum() == 0.0);  // all-zero row stays zero

  const Eigen::MatrixXd cols = cols_to_percent(counts);
  for (int c = 0; c < 3; ++c) CHECK(cols.col(c).sum() == doctest::Approx(100.0));
  CHECK(cols(0, 0) == doctest::Approx(100.0));

  Eigen::MatrixXd with_gap(2, 2);
  with_gap << 1, 0, 1, 0;
  const Eigen::MatrixXd c2 = cols_to_percent(with_gap);
  CHECK(c2.col(1).sum() == 0.0);  // all-zero column stays zero
}

TEST_CASE("render_month_figure: gaps are drawn, never interpolated") {
  const std::vector<int> clusters = {0, 0, 1, 1, 0};
  const std::vector<int> months = {1, 1, 2, 4, 4};
  const MonthClusterTable t = cross_tabulate(clusters, months);
  const std::string svg = render_month_figure(t, {false, false});

  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("</svg>") != std::string::npos);
  // month 3 sits inside the covered range but has no clips
  CHECK(svg.find("stroke-dasharray") != std::string::npos);
  CHECK(svg.find("no data") != std::string::npos);
  CHECK(svg.find("cluster 0") != std::string::npos);
  CHECK(svg.find("cluster 1") != std::string::npos);
  CHECK(svg.find("candidate garbage") == std::string::npos);
}

TEST_CASE("render_month_figure: single cluster fills every recorded month") {
  const MonthClusterTable t = cross_tabulate({0, 0, 0}, {2, 3, 5});
  const std::string svg = render_month_figure(t, {false});
  // a full-height band is the whole 300-unit plot area
  CHECK(svg.find("height=\"300.00\"") != std::string::npos);
  CHECK(svg.find("stroke-dasharray") != std::string::npos);  // month 4 gap
}

TEST_CASE("render_month_figure: small clusters are annotated") {
  const MonthClusterTable t = cross_tabulate({0, 0, 1}, {1, 2, 2});
  const std::string svg = render_month_figure(t, {false, true});
  CHECK(svg.find("candidate garbage") != std::string::npos);
}

TEST_CASE("format_double: fixed round-trippable rendering") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-2.5) == "-2.5");
  CHECK(format_double(0.0) == "0");
  CHECK(format_double(1e-12) == "1e-12");
  CHECK(format_double(1234567890.123) == "1234567890");
  CHECK(format_double(1.0 / 3.0) == "0.3333333333");
  CHECK(format_double(0.1) == format_double(0.1));
}
