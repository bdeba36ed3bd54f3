#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "vocluster/report.hpp"
#include "vocluster/synth.hpp"

int main(int argc, char** argv) {
  CLI::App app{"audio clip clustering pipeline"};
  app.require_subcommand(1);

  std::string config_path;
  bool features_only = false, cluster_only = false, report_only = false;
  CLI::App* run = app.add_subcommand("run", "run the pipeline from a config file");
  run->add_option("config", config_path, "config file (key = value lines)")->required();
  run->add_flag("--features-only", features_only, "stop after writing features.csv");
  run->add_flag("--cluster-only", cluster_only,
                "reuse features.csv, run only the clustering stage");
  run->add_flag("--report-only", report_only,
                "reuse features.csv and partition.csv, rebuild the report");

  std::string synth_dir;
  vocluster::SynthSpec synth_spec;
  CLI::App* synth = app.add_subcommand("synth", "generate the synthetic test corpus");
  synth->add_option("dir", synth_dir, "output directory")->required();
  synth->add_option("--per-family", synth_spec.per_family, "clips per family");
  synth->add_option("--seed", synth_spec.seed, "generator seed");
  synth->add_flag("--edge", synth_spec.edge_clips,
                  "include pure-silence and near-silence clips");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      vocluster::PipelineConfig cfg = vocluster::load_config(config_path);
      if (features_only) cfg.features_only = true;
      if (cluster_only) cfg.cluster_only = true;
      if (report_only) cfg.report_only = true;
      vocluster::run_pipeline(cfg);
    } else {
      const std::string manifest = vocluster::synthesize_corpus(synth_dir, synth_spec);
      std::cout << "wrote " << manifest << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
