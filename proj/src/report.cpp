#include "vocluster/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>

#include "vocluster/acoustics.hpp"
#include "vocluster/corpus.hpp"
#include "vocluster/dpmm.hpp"
#include "vocluster/features.hpp"
#include "vocluster/persistence.hpp"
#include "vocluster/stats_glm.hpp"

namespace fs = std::filesystem;

namespace vocluster {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::string unquote(const std::string& s) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
    return s.substr(1, s.size() - 2);
  return s;
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config: boolean expected for " + key);
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

[[noreturn]] void stage_fail(const std::string& stage, const std::string& what) {
  throw std::runtime_error("[" + stage + "] " + what);
}

std::string features_header() {
  std::string h = "id,month";
  for (int k = 1; k <= 12; ++k) h += ",mfcc" + std::to_string(k);
  return h + ",pers_spec,pers_emb";
}

struct FeatureTable {
  std::vector<std::string> ids;
  std::vector<int> months;
  Eigen::MatrixXd X;  // n x 14
};

void write_features_csv(const std::string& path, const FeatureTable& t) {
  std::string out = features_header() + "\n";
  for (int i = 0; i < t.X.rows(); ++i) {
    out += csv_escape(t.ids[i]) + "," + std::to_string(t.months[i]);
    for (int j = 0; j < 14; ++j) out += "," + format_double(t.X(i, j));
    out += "\n";
  }
  write_text(path, out);
}

FeatureTable read_features_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing " + path + " (run the feature stage first)");
  std::string line;
  if (!std::getline(in, line) || trim(line) != features_header())
    throw std::runtime_error("unexpected header in " + path);

  FeatureTable t;
  std::vector<std::array<double, 14>> rows;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    const std::vector<std::string> f = split_line(line);
    if (f.size() != 16) throw std::runtime_error("bad row in " + path);
    t.ids.push_back(f[0]);
    t.months.push_back(std::stoi(f[1]));
    std::array<double, 14> r;
    for (int j = 0; j < 14; ++j) r[j] = std::stod(f[2 + j]);
    rows.push_back(r);
  }
  t.X.resize(static_cast<int>(rows.size()), 14);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int j = 0; j < 14; ++j) t.X(static_cast<int>(i), j) = rows[i][j];
  return t;
}

std::string rle_encode(const std::vector<int>& labels) {
  std::string out;
  std::size_t i = 0;
  while (i < labels.size()) {
    std::size_t j = i;
    while (j < labels.size() && labels[j] == labels[i]) ++j;
    if (!out.empty()) out += ' ';
    out += std::to_string(labels[i]) + "*" + std::to_string(j - i);
    i = j;
  }
  return out;
}

std::string opt_field(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

constexpr const char* kDescriptorNames[12] = {
    "duration", "pitch", "f1",  "f2", "f3",       "voiced",
    "sc",       "entropy", "hnr", "fm", "loudness", "roughness"};

std::array<std::optional<double>, 12> descriptor_row(const AcousticProfile& p) {
  return {p.duration, p.pitch,   p.f1,  p.f2, p.f3,       p.voiced,
          p.spectral_centroid, p.entropy, p.hnr, p.fm, p.loudness, p.roughness};
}

}  // namespace

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config " + path);

  PipelineConfig cfg;
  bool have_manifest = false, have_outdir = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = unquote(trim(line.substr(eq + 1)));

    try {
      if (key == "manifest") {
        cfg.manifest = val;
        have_manifest = true;
      } else if (key == "output_dir") {
        cfg.output_dir = val;
        have_outdir = true;
      } else if (key == "seed") {
        cfg.seed = std::stoull(val);
      } else if (key == "k_target") {
        cfg.k_target = std::stod(val);
      } else if (key == "iters") {
        cfg.iters = std::stoi(val);
      } else if (key == "burnin") {
        cfg.burnin = std::stoi(val);
      } else if (key == "alpha_level") {
        cfg.alpha_level = std::stod(val);
      } else if (key == "garbage_fraction") {
        cfg.garbage_fraction = std::stod(val);
      } else if (key == "spec_window_seconds") {
        cfg.spectral.spec_window_seconds = std::stod(val);
      } else if (key == "spec_overlap_fraction") {
        cfg.spectral.spec_overlap_fraction = std::stod(val);
      } else if (key == "mfcc_window_seconds") {
        cfg.spectral.mfcc_window_seconds = std::stod(val);
      } else if (key == "mfcc_overlap_fraction") {
        cfg.spectral.mfcc_overlap_fraction = std::stod(val);
      } else if (key == "n_mel_filters") {
        cfg.spectral.n_mel_filters = std::stoi(val);
      } else if (key == "fmin") {
        cfg.spectral.fmin = std::stod(val);
      } else if (key == "fmax") {
        cfg.spectral.fmax = std::stod(val);
      } else if (key == "db_scale") {
        cfg.spectral.db_scale = parse_bool(val, key);
      } else if (key == "ami_bins") {
        cfg.embedding.ami_bins = std::stoi(val);
      } else if (key == "tau_max") {
        cfg.embedding.tau_max = std::stoi(val);
      } else if (key == "cao_dmax") {
        cfg.embedding.cao_dmax = std::stoi(val);
      } else if (key == "cao_n_ref") {
        cfg.embedding.cao_n_ref = std::stoi(val);
      } else if (key == "subsample_target") {
        cfg.embedding.subsample_target = std::stoi(val);
      } else if (key == "reduce_neighbors") {
        cfg.embedding.reduce_neighbors = std::stoi(val);
      } else if (key == "reduce_min_dist") {
        cfg.embedding.reduce_min_dist = std::stod(val);
      } else if (key == "reduce_spread") {
        cfg.embedding.reduce_spread = std::stod(val);
      } else if (key == "reduce_epochs") {
        cfg.embedding.reduce_epochs = std::stoi(val);
      } else if (key == "features_only") {
        cfg.features_only = parse_bool(val, key);
      } else if (key == "cluster_only") {
        cfg.cluster_only = parse_bool(val, key);
      } else if (key == "report_only") {
        cfg.report_only = parse_bool(val, key);
      } else {
        throw std::invalid_argument("config: unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception&) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": bad value for " + key);
    }
  }
  if (!have_manifest || !have_outdir)
    throw std::invalid_argument("config: manifest and output_dir are required");
  return cfg;
}

MonthClusterTable cross_tabulate(const std::vector<int>& cluster_of,
                                 const std::vector<int>& month_of) {
  if (cluster_of.size() != month_of.size())
    throw std::invalid_argument("cross tabulate: length mismatch");
  MonthClusterTable t;
  {
    std::set<int> ms(month_of.begin(), month_of.end());
    std::set<int> cs(cluster_of.begin(), cluster_of.end());
    t.months.assign(ms.begin(), ms.end());
    t.clusters.assign(cs.begin(), cs.end());
  }
  t.counts = Eigen::MatrixXd::Zero(t.clusters.size(), t.months.size());
  for (std::size_t i = 0; i < cluster_of.size(); ++i) {
    const auto r = std::lower_bound(t.clusters.begin(), t.clusters.end(), cluster_of[i]);
    const auto c = std::lower_bound(t.months.begin(), t.months.end(), month_of[i]);
    t.counts(r - t.clusters.begin(), c - t.months.begin()) += 1.0;
  }
  return t;
}

Eigen::MatrixXd rows_to_percent(const Eigen::MatrixXd& counts) {
  Eigen::MatrixXd out = counts;
  for (int r = 0; r < out.rows(); ++r) {
    const double s = out.row(r).sum();
    if (s > 0.0) out.row(r) *= 100.0 / s;
  }
  return out;
}

Eigen::MatrixXd cols_to_percent(const Eigen::MatrixXd& counts) {
  Eigen::MatrixXd out = counts;
  for (int c = 0; c < out.cols(); ++c) {
    const double s = out.col(c).sum();
    if (s > 0.0) out.col(c) *= 100.0 / s;
  }
  return out;
}

std::string render_month_figure(const MonthClusterTable& table,
                                const std::vector<bool>& candidate_garbage) {
  if (table.months.empty() || table.clusters.empty())
    throw std::invalid_argument("figure: empty table");
  const int K = static_cast<int>(table.clusters.size());
  const int m_lo = table.months.front(), m_hi = table.months.back();
  const int slots = m_hi - m_lo + 1;

  const double ml = 64, mt = 46, mb = 52, bar = 44, gap = 14, plot_h = 300;
  const double legend_w = 190;
  const double plot_w = slots * (bar + gap);
  const double width = ml + plot_w + legend_w;
  const double height = mt + plot_h + mb;

  const Eigen::MatrixXd pct = cols_to_percent(table.counts);

  char buf[256];
  std::string svg;
  auto add = [&](const char* fmt, auto... args) {
    std::snprintf(buf, sizeof(buf), fmt, args...);
    svg += buf;
  };

  add("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"%.0f\" height=\"%.0f\" "
      "viewBox=\"0 0 %.0f %.0f\" font-family=\"sans-serif\">\n",
      width, height, width, height);
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  add("<text x=\"%.1f\" y=\"24\" font-size=\"15\" fill=\"#222\">Monthly production share "
      "by cluster</text>\n",
      ml);

  for (int tick = 0; tick <= 100; tick += 25) {
    const double y = mt + plot_h * (1.0 - tick / 100.0);
    add("<line x1=\"%.1f\" y1=\"%.1f\" x2=\"%.1f\" y2=\"%.1f\" stroke=\"#ddd\"/>\n", ml, y,
        ml + plot_w, y);
    add("<text x=\"%.1f\" y=\"%.1f\" font-size=\"11\" fill=\"#555\" "
        "text-anchor=\"end\">%d%%</text>\n",
        ml - 6, y + 4, tick);
  }

  auto color = [&](int idx) {
    std::snprintf(buf, sizeof(buf), "hsl(%d,62%%,52%%)", (idx * 360 / K + 15) % 360);
    return std::string(buf);
  };

  for (int m = m_lo; m <= m_hi; ++m) {
    const double x = ml + (m - m_lo) * (bar + gap) + gap / 2;
    const auto it = std::lower_bound(table.months.begin(), table.months.end(), m);
    const bool present = it != table.months.end() && *it == m;
    if (present) {
      const int c = static_cast<int>(it - table.months.begin());
      double y = mt + plot_h;
      for (int k = 0; k < K; ++k) {
        const double h = plot_h * pct(k, c) / 100.0;
        if (h <= 0.0) continue;
        y -= h;
        add("<rect x=\"%.1f\" y=\"%.2f\" width=\"%.1f\" height=\"%.2f\" fill=\"%s\"/>\n", x,
            y, bar, h, color(k).c_str());
      }
    } else {
      // recording gap: outline only, no band
      add("<rect x=\"%.1f\" y=\"%.1f\" width=\"%.1f\" height=\"%.1f\" fill=\"none\" "
          "stroke=\"#bbb\" stroke-dasharray=\"5 4\"/>\n",
          x, mt, bar, plot_h);
      add("<text x=\"%.1f\" y=\"%.1f\" font-size=\"10\" fill=\"#999\" "
          "text-anchor=\"middle\">no data</text>\n",
          x + bar / 2, mt + plot_h / 2);
    }
    add("<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" fill=\"#333\" "
        "text-anchor=\"middle\">%d</text>\n",
        x + bar / 2, mt + plot_h + 18, m);
  }
  add("<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" fill=\"#333\" "
      "text-anchor=\"middle\">month</text>\n",
      ml + plot_w / 2, height - 12);

  double ly = mt + 6;
  for (int k = 0; k < K; ++k) {
    const double lx = ml + plot_w + 24;
    add("<rect x=\"%.1f\" y=\"%.1f\" width=\"14\" height=\"14\" fill=\"%s\"/>\n", lx,
        ly - 11, color(k).c_str());
    const bool garbage =
        k < static_cast<int>(candidate_garbage.size()) && candidate_garbage[k];
    add("<text x=\"%.1f\" y=\"%.1f\" font-size=\"12\" fill=\"#222\">cluster %d%s</text>\n",
        lx + 20, ly, table.clusters[k], garbage ? " *" : "");
    ly += 20;
  }
  if (std::find(candidate_garbage.begin(), candidate_garbage.end(), true) !=
      candidate_garbage.end())
    add("<text x=\"%.1f\" y=\"%.1f\" font-size=\"10\" fill=\"#777\">* candidate garbage "
        "cluster</text>\n",
        ml + plot_w + 24, ly + 4);

  svg += "</svg>\n";
  return svg;
}

namespace {

// One clip through spectral + embedding + persistence. Throws on failure;
// the caller turns that into a skip-log entry.
struct ClipFeatures {
  Eigen::VectorXd mfcc;
  DiagramFeatures spec_f;
  DiagramFeatures emb_f;
};

ClipFeatures extract_clip(const AudioClip& clip, const PipelineConfig& cfg,
                          std::uint64_t clip_seed) {
  ClipFeatures out;
  out.mfcc = mfcc_mean(clip, cfg.spectral);

  const Spectrogram spec = spectrogram(clip, cfg.spectral);
  out.spec_f = diagram_features(sublevel_cubical_persistence(spec), 1);

  EmbeddingParams ep = cfg.embedding;
  ep.rng_seed = clip_seed;
  const DelaySelection delay = select_delay(clip.samples, ep, clip.sample_rate);
  const CaoResult cao = cao_embedding_dimension(clip.samples, delay.tau, ep);
  const PointCloud embedded = takens_embed(clip.samples, delay.tau, cao.dimension);
  const ReduceResult reduced = reduce_to_3d(embedded, ep);
  out.emb_f = diagram_features(alpha_persistence(reduced.cloud, clip_seed), 2);
  return out;
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& cfg) {
  if (cfg.features_only + cfg.cluster_only + cfg.report_only > 1)
    stage_fail("config", "at most one stage toggle may be set");
  std::error_code ec;
  fs::create_directories(cfg.output_dir, ec);
  if (ec) stage_fail("config", "cannot create output_dir " + cfg.output_dir);
  const auto out_path = [&](const char* name) {
    return (fs::path(cfg.output_dir) / name).string();
  };

  PipelineResult result;
  FeatureTable table;
  std::vector<std::pair<std::string, std::string>> skipped;

  if (cfg.cluster_only || cfg.report_only) {
    try {
      table = read_features_csv(out_path("features.csv"));
    } catch (const std::exception& e) {
      stage_fail("features", e.what());
    }
    std::cout << "[features] reusing " << table.X.rows() << " rows from features.csv\n";
  } else {
    Manifest manifest;
    try {
      manifest = load_manifest(cfg.manifest);
    } catch (const std::exception& e) {
      stage_fail("corpus_io", e.what());
    }
    std::cout << "[corpus_io] " << manifest.entries.size() << " manifest entries\n";

    std::vector<DiagramFeatures> spec_rows, emb_rows;
    std::vector<Eigen::VectorXd> mfccs;
    for (std::size_t idx = 0; idx < manifest.entries.size(); ++idx) {
      const ManifestEntry& entry = manifest.entries[idx];
      try {
        const AudioClip clip = load_clip(entry.path, entry);
        bool all_zero = true;
        for (double s : clip.samples)
          if (s != 0.0) {
            all_zero = false;
            break;
          }
        if (all_zero) throw std::runtime_error("pure silence (all samples zero)");
        if (clip.duration_seconds() > 10.0)
          throw std::runtime_error("longer than 10 s");
        if (clip.duration_seconds() < 0.1)
          throw std::runtime_error("shorter than 100 ms");

        ClipFeatures f = extract_clip(clip, cfg, cfg.seed + idx);
        mfccs.push_back(std::move(f.mfcc));
        spec_rows.push_back(std::move(f.spec_f));
        emb_rows.push_back(std::move(f.emb_f));
        table.ids.push_back(entry.id);
        table.months.push_back(entry.month);
      } catch (const std::exception& e) {
        skipped.emplace_back(entry.id, e.what());
        std::cout << "[features] skipped " << entry.id << ": " << e.what() << "\n";
      }
    }
    if (table.ids.size() < 2)
      stage_fail("features", "fewer than two usable clips after skips");

    Eigen::VectorXd s_spec, s_emb;
    try {
      s_spec = fit_persistent_variable(spec_rows).second;
      s_emb = fit_persistent_variable(emb_rows).second;
    } catch (const std::exception& e) {
      stage_fail("features", e.what());
    }
    const int n = static_cast<int>(table.ids.size());
    table.X.resize(n, 14);
    for (int i = 0; i < n; ++i) {
      const FeatureVector fv =
          assemble(mfccs[i], s_spec(i), s_emb(i), table.ids[i], table.months[i]);
      table.X.row(i) = fv.numeric().transpose();
    }
    write_features_csv(out_path("features.csv"), table);

    std::string skip_csv = "id,reason\n";
    for (const auto& [id, reason] : skipped)
      skip_csv += csv_escape(id) + "," + csv_escape(reason) + "\n";
    write_text(out_path("skipped.csv"), skip_csv);
    std::cout << "[features] " << n << " clips featurized, " << skipped.size()
              << " skipped\n";
  }

  result.n_clips = static_cast<int>(table.X.rows());
  result.n_skipped = static_cast<int>(skipped.size());
  result.ids = table.ids;
  if (cfg.features_only) {
    std::cout << "[features] stopping after feature stage\n";
    return result;
  }

  std::vector<int> partition;
  if (cfg.report_only) {
    std::ifstream in(out_path("partition.csv"));
    if (!in) stage_fail("dpmm", "missing partition.csv (run the cluster stage first)");
    std::string line;
    std::getline(in, line);
    std::size_t i = 0;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      const auto f = split_line(line);
      if (f.size() != 2 || i >= table.ids.size() || f[0] != table.ids[i])
        stage_fail("dpmm", "partition.csv does not match features.csv");
      partition.push_back(std::stoi(f[1]));
      ++i;
    }
    if (partition.size() != table.ids.size())
      stage_fail("dpmm", "partition.csv does not match features.csv");
  } else {
    try {
      const int n = static_cast<int>(table.X.rows());
      const double alpha = solve_alpha(n, cfg.k_target);
      const DpmmPriors priors = calibrate_priors(table.X, alpha);
      std::cout << "[dpmm] n=" << n << " alpha=" << format_double(alpha) << " chain "
                << cfg.iters << "/" << cfg.burnin << "\n";
      const ChainResult chain = run_chain(table.X, priors, cfg.iters, cfg.burnin, cfg.seed);
      partition = vi_point_estimate_partition(chain.samples);

      std::string pcsv = "id,cluster\n";
      for (std::size_t i = 0; i < table.ids.size(); ++i)
        pcsv += csv_escape(table.ids[i]) + "," + std::to_string(partition[i]) + "\n";
      write_text(out_path("partition.csv"), pcsv);

      std::string tcsv = "iter,K,loglik\n";
      for (std::size_t s = 0; s < chain.k_trace.size(); ++s)
        tcsv += std::to_string(s + 1) + "," + std::to_string(chain.k_trace[s]) + "," +
                format_double(chain.loglik_trace[s]) + "\n";
      write_text(out_path("chain_trace.csv"), tcsv);

      std::string rle;
      for (const auto& s : chain.samples) rle += rle_encode(s) + "\n";
      write_text(out_path("partition_samples.rle"), rle);

      const Eigen::MatrixXd sim = posterior_similarity(chain.samples);
      std::ofstream bin(out_path("similarity.bin"), std::ios::binary);
      if (!bin) stage_fail("dpmm", "cannot write similarity.bin");
      for (int i = 0; i < sim.rows(); ++i)
        for (int j = 0; j < sim.cols(); ++j) {
          const float v = static_cast<float>(sim(i, j));
          bin.write(reinterpret_cast<const char*>(&v), sizeof(v));
        }
    } catch (const std::exception& e) {
      stage_fail("dpmm", e.what());
    }
  }
  result.partition = partition;
  result.n_clusters = *std::max_element(partition.begin(), partition.end()) + 1;
  std::cout << "[dpmm] point estimate has " << result.n_clusters << " clusters\n";
  if (cfg.cluster_only) return result;

  // Acoustic profiles, joined with the partition.
  std::vector<AcousticProfile> profiles;
  try {
    const Manifest manifest = load_manifest(cfg.manifest);
    std::map<std::string, const ManifestEntry*> by_id;
    for (const ManifestEntry& e : manifest.entries) by_id[e.id] = &e;
    for (const std::string& id : table.ids) {
      const auto it = by_id.find(id);
      if (it == by_id.end())
        throw std::runtime_error("clip " + id + " missing from manifest");
      profiles.push_back(profile(load_clip(it->second->path, *it->second)));
    }
  } catch (const std::exception& e) {
    stage_fail("acoustics", e.what());
  }

  {
    std::string csv =
        "id,cluster,duration,pitch,f1,f2,f3,voiced,sc,entropy,hnr,fm,loudness,roughness\n";
    for (std::size_t i = 0; i < profiles.size(); ++i) {
      const auto row = descriptor_row(profiles[i]);
      csv += csv_escape(table.ids[i]) + "," + std::to_string(partition[i]);
      for (const auto& v : row) csv += "," + opt_field(v);
      csv += "\n";
    }
    write_text(out_path("profiles.csv"), csv);
  }
  std::cout << "[acoustics] " << profiles.size() << " profiles\n";

  // Cluster contrasts. Descriptors missing too often are dropped, then
  // remaining incomplete rows, then clusters reduced to a single row.
  try {
    const int n = static_cast<int>(profiles.size());
    std::vector<int> kept_cols;
    for (int j = 0; j < 12; ++j) {
      int missing = 0;
      for (int i = 0; i < n; ++i)
        if (!descriptor_row(profiles[i])[j]) ++missing;
      if (missing < 0.25 * n)
        kept_cols.push_back(j);
      else
        std::cout << "[stats_glm] dropping descriptor " << kDescriptorNames[j] << " ("
                  << missing << "/" << n << " missing)\n";
    }
    std::vector<int> kept_rows;
    for (int i = 0; i < n; ++i) {
      const auto row = descriptor_row(profiles[i]);
      bool complete = true;
      for (int j : kept_cols)
        if (!row[j]) complete = false;
      if (complete) kept_rows.push_back(i);
    }
    std::map<int, int> csize;
    for (int i : kept_rows) ++csize[partition[i]];
    std::vector<int> rows2;
    for (int i : kept_rows) {
      if (csize[partition[i]] < 2) {
        std::cout << "[stats_glm] excluding singleton cluster " << partition[i] << "\n";
        continue;
      }
      rows2.push_back(i);
    }
    std::set<int> cset;
    for (int i : rows2) cset.insert(partition[i]);

    std::string fits_csv = "reference,level,descriptor,beta,se,z,p,converged,ridged\n";
    std::string contrast_csv = "reference,descriptor\n";
    if (cset.size() >= 2 && rows2.size() > kept_cols.size() + 2) {
      Eigen::MatrixXd D(rows2.size(), kept_cols.size());
      std::vector<int> labels;
      for (std::size_t r = 0; r < rows2.size(); ++r) {
        const auto row = descriptor_row(profiles[rows2[r]]);
        for (std::size_t c = 0; c < kept_cols.size(); ++c)
          D(r, c) = *row[kept_cols[c]];
        labels.push_back(partition[rows2[r]]);
      }
      const Eigen::MatrixXd Z = standardize_columns(D);

      std::vector<MultinomialFit> fits;
      for (int ref : cset) fits.push_back(fit_multinomial(Z, labels, ref));
      for (const MultinomialFit& fit : fits)
        for (std::size_t k = 0; k < fit.levels.size(); ++k)
          for (std::size_t c = 0; c < kept_cols.size(); ++c)
            fits_csv += std::to_string(fit.reference) + "," +
                        std::to_string(fit.levels[k]) + "," +
                        kDescriptorNames[kept_cols[c]] + "," +
                        format_double(fit.beta(k, c + 1)) + "," +
                        format_double(fit.se(k, c + 1)) + "," +
                        format_double(fit.z(k, c + 1)) + "," +
                        format_double(fit.p(k, c + 1)) + "," +
                        (fit.converged ? "1" : "0") + "," + (fit.ridged ? "1" : "0") + "\n";
      for (const ContrastHighlight& h : contrast_report(fits, cfg.alpha_level))
        for (int pidx : h.predictors)
          contrast_csv += std::to_string(h.reference) + "," +
                          kDescriptorNames[kept_cols[pidx]] + "\n";
      std::cout << "[stats_glm] " << fits.size() << " reference fits on "
                << rows2.size() << " rows x " << kept_cols.size() << " descriptors\n";
    } else {
      std::cout << "[stats_glm] skipped: not enough complete rows or clusters\n";
    }
    write_text(out_path("glm_fits.csv"), fits_csv);
    write_text(out_path("contrasts.csv"), contrast_csv);
  } catch (const std::exception& e) {
    stage_fail("stats_glm", e.what());
  }

  // Tables and figure.
  try {
    const int n = static_cast<int>(profiles.size());
    const MonthClusterTable tab = cross_tabulate(partition, table.months);
    const int K = static_cast<int>(tab.clusters.size());

    std::vector<bool> garbage(K, false);
    {
      std::string csv = "cluster,count,percent,candidate_garbage\n";
      for (int k = 0; k < K; ++k) {
        const double cnt = tab.counts.row(k).sum();
        garbage[k] = cnt < cfg.garbage_fraction * n;
        csv += std::to_string(tab.clusters[k]) + "," +
               format_double(cnt) + "," + format_double(100.0 * cnt / n) + "," +
               (garbage[k] ? "1" : "0") + "\n";
      }
      write_text(out_path("cluster_counts.csv"), csv);
    }
    {
      std::string csv = "month,count,mean_duration,std_duration\n";
      std::map<int, std::vector<double>> durs;
      for (int i = 0; i < n; ++i) durs[table.months[i]].push_back(profiles[i].duration);
      for (const auto& [month, ds] : durs) {
        double m = 0.0;
        for (double d : ds) m += d;
        m /= ds.size();
        double ss = 0.0;
        for (double d : ds) ss += (d - m) * (d - m);
        csv += std::to_string(month) + "," + std::to_string(ds.size()) + "," +
               format_double(m) + "," + format_double(std::sqrt(ss / ds.size())) + "\n";
      }
      write_text(out_path("corpus_months.csv"), csv);
    }
    const auto table_csv = [&](const Eigen::MatrixXd& m) {
      std::string csv = "cluster";
      for (int mm : tab.months) csv += ",m" + std::to_string(mm);
      csv += "\n";
      for (int k = 0; k < K; ++k) {
        csv += std::to_string(tab.clusters[k]);
        for (int c = 0; c < m.cols(); ++c) csv += "," + format_double(m(k, c));
        csv += "\n";
      }
      return csv;
    };
    write_text(out_path("table_cluster_by_month.csv"), table_csv(rows_to_percent(tab.counts)));
    write_text(out_path("table_month_by_cluster.csv"), table_csv(cols_to_percent(tab.counts)));

    {
      std::string csv = "cluster";
      for (const char* d : kDescriptorNames) csv += std::string(",") + d;
      csv += "\n";
      for (int k = 0; k < K; ++k) {
        csv += std::to_string(tab.clusters[k]);
        for (int j = 0; j < 12; ++j) {
          std::vector<double> vals;
          for (int i = 0; i < n; ++i)
            if (partition[i] == tab.clusters[k]) {
              const auto row = descriptor_row(profiles[i]);
              if (row[j]) vals.push_back(*row[j]);
            }
          csv += "," + (vals.empty() ? std::string() : format_double(median_of(vals)));
        }
        csv += "\n";
      }
      write_text(out_path("table_medians.csv"), csv);
    }
    write_text(out_path("figure.svg"), render_month_figure(tab, garbage));
    std::cout << "[report] tables and figure written to " << cfg.output_dir << "\n";
  } catch (const std::exception& e) {
    stage_fail("report", e.what());
  }
  return result;
}

}  // namespace vocluster
