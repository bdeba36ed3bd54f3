// Acceptance gate: one [PASS]/[FAIL] line per criterion, nonzero exit if any
// fail. Oracles live in helpers.hpp and stay independent of the library code.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "helpers.hpp"
#include "vocluster/acoustics.hpp"
#include "vocluster/dpmm.hpp"
#include "vocluster/embedding.hpp"
#include "vocluster/features.hpp"
#include "vocluster/persistence.hpp"
#include "vocluster/report.hpp"
#include "vocluster/rng.hpp"
#include "vocluster/spectral.hpp"
#include "vocluster/stats_glm.hpp"
#include "vocluster/synth.hpp"

using namespace vocluster;
namespace fs = std::filesystem;

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

void expect(bool ok, const std::string& what) {
  if (!ok) throw std::runtime_error(what);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

Eigen::MatrixXd random_grid(Rng& rng, int rows, int cols) {
  Eigen::MatrixXd g(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) g(r, c) = rng.uniform();
  return g;
}

std::vector<std::pair<double, double>> h0_pairs(const PersistenceDiagram& dgm) {
  std::vector<std::pair<double, double>> out;
  for (const DiagramPoint& p : dgm.points)
    if (p.dim == 0) out.emplace_back(p.birth, p.death);
  std::sort(out.begin(), out.end());
  return out;
}

// descending persistence of the dim-d classes
std::vector<double> persistences(const PersistenceDiagram& dgm, int d) {
  std::vector<double> out;
  for (const DiagramPoint& p : dgm.points)
    if (p.dim == d) out.push_back(p.death - p.birth);
  std::sort(out.rbegin(), out.rend());
  return out;
}

std::vector<double> sine_wave(double freq, double seconds, int rate, double amp) {
  std::vector<double> x(static_cast<std::size_t>(seconds * rate));
  for (std::size_t t = 0; t < x.size(); ++t)
    x[t] = amp * std::sin(kTau * freq * static_cast<double>(t) / rate);
  return x;
}

AudioClip as_clip(std::vector<double> samples, int rate, const std::string& id) {
  AudioClip c;
  c.samples = std::move(samples);
  c.sample_rate = rate;
  c.month = 1;
  c.id = id;
  return c;
}

std::vector<double> lorenz_x(int keep, int discard) {
  const double sigma = 10.0, rho = 28.0, beta = 8.0 / 3.0, dt = 0.02;
  Eigen::Vector3d s(1.0, 1.0, 1.0);
  auto f = [&](const Eigen::Vector3d& v) {
    return Eigen::Vector3d(sigma * (v(1) - v(0)), v(0) * (rho - v(2)) - v(1),
                           v(0) * v(1) - beta * v(2));
  };
  std::vector<double> x;
  x.reserve(keep);
  for (int t = 0; t < keep + discard; ++t) {
    const Eigen::Vector3d k1 = f(s);
    const Eigen::Vector3d k2 = f(s + 0.5 * dt * k1);
    const Eigen::Vector3d k3 = f(s + 0.5 * dt * k2);
    const Eigen::Vector3d k4 = f(s + dt * k3);
    s += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (t >= discard) x.push_back(s(0));
  }
  return x;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  expect(static_cast<bool>(in), "cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

fs::path work_dir() {
  const fs::path p = fs::temp_directory_path() / "vocluster_acceptance";
  fs::create_directories(p);
  return p;
}

// ---- criteria ----

void cubical_vs_oracle() {
  Rng rng(101);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::MatrixXd g = random_grid(rng, 8, 8);
    Spectrogram spec;
    spec.values = g;
    const auto got = h0_pairs(sublevel_cubical_persistence(spec));
    const auto want = testhelp::grid_h0(g);
    expect(got.size() == want.size(),
           "trial " + std::to_string(trial) + ": " + std::to_string(got.size()) +
               " H0 pairs, oracle has " + std::to_string(want.size()));
    for (std::size_t i = 0; i < got.size(); ++i)
      expect(std::fabs(got[i].first - want[i].first) <= 1e-12 &&
                 std::fabs(got[i].second - want[i].second) <= 1e-12,
             "trial " + std::to_string(trial) + ": pair " + std::to_string(i) +
                 " differs from the oracle");
  }
}

void alpha_vs_mst() {
  Rng rng(202);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 4 + static_cast<int>(rng.integer(47));
    PointCloud cloud;
    cloud.points.resize(n, 3);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < 3; ++j) cloud.points(i, j) = rng.uniform();

    const PersistenceDiagram dgm = alpha_persistence(cloud);
    std::vector<double> deaths;
    for (const DiagramPoint& p : dgm.points)
      if (p.dim == 0 && p.death != dgm.cap_value) deaths.push_back(p.death);
    std::sort(deaths.begin(), deaths.end());

    const std::vector<double> mst = testhelp::mst_edge_lengths(cloud.points);
    expect(deaths.size() == mst.size(),
           "trial " + std::to_string(trial) + ": " + std::to_string(deaths.size()) +
               " finite H0 deaths for " + std::to_string(n) + " points");
    for (std::size_t i = 0; i < deaths.size(); ++i) {
      const double want = 0.25 * mst[i] * mst[i];
      expect(std::fabs(deaths[i] - want) <= 1e-9,
             "trial " + std::to_string(trial) + ": death " + fmt(deaths[i]) +
                 " vs half-edge^2 " + fmt(want));
    }
  }
}

void circle_loop() {
  Rng rng(303);
  PointCloud cloud;
  cloud.points.resize(200, 3);
  for (int i = 0; i < 200; ++i) {
    const double th = kTau * i / 200.0;
    cloud.points(i, 0) = std::cos(th) + 1e-6 * rng.normal();
    cloud.points(i, 1) = std::sin(th) + 1e-6 * rng.normal();
    cloud.points(i, 2) = 1e-6 * rng.normal();
  }
  const PersistenceDiagram dgm = alpha_persistence(cloud);
  const std::vector<double> h1 = persistences(dgm, 1);
  expect(!h1.empty(), "no H1 class found");
  if (h1.size() > 1)
    expect(h1[0] > 5.0 * h1[1],
           "loop not dominant: " + fmt(h1[0]) + " vs next " + fmt(h1[1]));

  double death = 0.0;
  for (const DiagramPoint& p : dgm.points)
    if (p.dim == 1 && p.death - p.birth == h1[0]) death = p.death;
  expect(std::fabs(death - 1.0) <= 0.05,
         "loop death " + fmt(death) + " not within 5% of the squared radius");
}

void perturbation_stability() {
  Rng rng(404);
  const double eps = 0.01;
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd g = random_grid(rng, 16, 16);
    Eigen::MatrixXd h = g;
    for (int r = 0; r < 16; ++r)
      for (int c = 0; c < 16; ++c) h(r, c) += eps * (2.0 * rng.uniform() - 1.0);

    Spectrogram sg, sh;
    sg.values = g;
    sh.values = h;
    const auto A = h0_pairs(sublevel_cubical_persistence(sg));
    const auto B = h0_pairs(sublevel_cubical_persistence(sh));
    expect(testhelp::diagrams_match_within(A, B, eps + 1e-9),
           "trial " + std::to_string(trial) + ": no matching within the perturbation");
  }
}

void attractor_dimension() {
  EmbeddingParams params;

  std::vector<double> sine(10000);
  for (int t = 0; t < 10000; ++t) sine[t] = std::sin(kTau * t / 99.7);
  const DelaySelection ds = select_delay(sine, params, 8000);
  const CaoResult sine_cao = cao_embedding_dimension(sine, ds.tau, params);
  expect(sine_cao.dimension == 2 && !sine_cao.capped,
         "sine dimension " + std::to_string(sine_cao.dimension) +
             (sine_cao.capped ? " (capped)" : ""));

  const std::vector<double> lor = lorenz_x(10000, 1000);
  const CaoResult lor_cao = cao_embedding_dimension(lor, 8, params);
  expect(lor_cao.dimension == 3 && !lor_cao.capped,
         "lorenz dimension " + std::to_string(lor_cao.dimension) +
             (lor_cao.capped ? " (capped)" : ""));

  const PointCloud emb = takens_embed(sine, ds.tau, 2);
  const ReduceResult red = reduce_to_3d(emb, params);
  const std::vector<double> h1 = persistences(alpha_persistence(red.cloud), 1);
  expect(!h1.empty(), "embedded sine has no H1 class");
  if (h1.size() > 1)
    expect(h1[0] > 5.0 * h1[1],
           "embedded loop not dominant: " + fmt(h1[0]) + " vs " + fmt(h1[1]));
}

void concentration_solve() {
  const double a = solve_alpha(1851, 5.0);
  const double ek = expected_cluster_count(1851, a);
  expect(std::fabs(ek - 5.0) < 1e-8, "E[K] off target by " + fmt(ek - 5.0));
  expect(expected_cluster_count(3, 1.0) == 11.0 / 6.0,
         "E[K | n=3, alpha=1] is not exactly 11/6");
}

void gibbs_recovery() {
  const int per = 100, p = 14;
  Rng rng(506);
  Eigen::MatrixXd X(3 * per, p);
  std::vector<int> truth(3 * per);
  for (int k = 0; k < 3; ++k) {
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(p);
    if (k > 0) mu(k - 1) = 10.0;  // pairwise separation 10 and 10*sqrt(2), unit sigma
    for (int i = 0; i < per; ++i) {
      X.row(k * per + i) = (mu + rng.normal_vector(p)).transpose();
      truth[k * per + i] = k;
    }
  }
  const DpmmPriors priors = calibrate_priors(X, solve_alpha(3 * per, 3.0));
  const ChainResult chain = run_chain(X, priors, 2000, 800, 7);
  const std::vector<int> est = vi_point_estimate_partition(chain.samples);
  const double ari = testhelp::adjusted_rand(est, truth);
  expect(ari >= 0.9, "ARI " + fmt(ari) + " below 0.9");
}

void partition_metric() {
  Rng rng(607);
  auto random_labels = [&]() {
    std::vector<int> v(12);
    for (int& x : v) x = static_cast<int>(rng.integer(4));
    return v;
  };
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_labels(), b = random_labels(), c = random_labels();
    expect(variation_of_information(a, a) <= 1e-12, "VI(a,a) != 0");
    expect(std::fabs(variation_of_information(a, b) - variation_of_information(b, a)) <=
               1e-12,
           "VI not symmetric");
    expect(variation_of_information(a, c) <= variation_of_information(a, b) +
                                                  variation_of_information(b, c) + 1e-10,
           "triangle inequality violated at trial " + std::to_string(trial));
  }
  const double vi =
      variation_of_information({0, 1, 2, 3}, {0, 0, 0, 0});
  expect(std::fabs(vi - std::log(4.0)) <= 1e-12,
         "VI(singletons, one block) = " + fmt(vi) + ", want ln 4");
}

void predictive_normalizes() {
  ClusterStats stats(1);
  for (double v : {-0.4, 0.2, 1.1, 0.5}) stats.add(Eigen::VectorXd::Constant(1, v));
  Eigen::VectorXd m0 = Eigen::VectorXd::Constant(1, 0.3);
  Eigen::MatrixXd sigma0 = Eigen::MatrixXd::Constant(1, 1, 0.8);
  const StudentT t = posterior_predictive(stats, m0, 1.2, 2.5, sigma0);

  const double lo = t.loc(0) - 100.0, hi = t.loc(0) + 100.0;
  const int steps = 400000;
  const double h = (hi - lo) / steps;
  double integral = 0.0;
  Eigen::VectorXd x(1);
  for (int i = 0; i <= steps; ++i) {
    x(0) = lo + h * i;
    const double f = std::exp(student_t_log_pdf(x, t));
    integral += (i == 0 || i == steps) ? 0.5 * f : f;
  }
  integral *= h;
  expect(std::fabs(integral - 1.0) <= 1e-3, "integral " + fmt(integral));
}

void glm_gradient_and_null() {
  Rng rng(708);
  {
    const int n = 40;
    Eigen::MatrixXd X(n, 2);
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
      X(i, 0) = rng.normal();
      X(i, 1) = rng.normal();
      labels[i] = static_cast<int>(rng.integer(3));
    }
    for (int point = 0; point < 20; ++point) {
      Eigen::MatrixXd beta(2, 3);
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 3; ++c) beta(r, c) = 0.5 * rng.normal();
      Eigen::MatrixXd grad;
      multinomial_nll(X, labels, 0, beta, &grad);

      Eigen::MatrixXd fd(2, 3);
      const double h = 1e-5;
      for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 3; ++c) {
          Eigen::MatrixXd bp = beta, bm = beta;
          bp(r, c) += h;
          bm(r, c) -= h;
          fd(r, c) = (multinomial_nll(X, labels, 0, bp) -
                      multinomial_nll(X, labels, 0, bm)) /
                     (2.0 * h);
        }
      const double rel = (grad - fd).cwiseAbs().maxCoeff() /
                         std::max(1.0, fd.cwiseAbs().maxCoeff());
      expect(rel < 1e-6, "gradient relative error " + fmt(rel) + " at point " +
                             std::to_string(point));
    }
  }
  {
    const int n = 120;
    Eigen::MatrixXd X(n, 3);
    std::vector<int> labels(n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < 3; ++j) X(i, j) = rng.normal();
      labels[i] = i % 3;
    }
    int low = 0, total = 0;
    for (int perm = 0; perm < 100; ++perm) {
      for (int i = n - 1; i > 0; --i)
        std::swap(labels[i], labels[rng.integer(i + 1)]);
      const MultinomialFit fit = fit_multinomial(X, labels, 0);
      expect(fit.converged, "null fit diverged at permutation " + std::to_string(perm));
      for (int k = 0; k < fit.p.rows(); ++k)
        for (int j = 1; j < fit.p.cols(); ++j) {
          if (fit.p(k, j) < 0.05) ++low;
          ++total;
        }
    }
    const double rate = static_cast<double>(low) / total;
    expect(std::fabs(rate - 0.05) <= 0.03,
           "false-positive rate " + fmt(rate) + " over " + std::to_string(total) +
               " null p-values");
  }
}

void acoustic_ground_truth() {
  const int rate = 44100;
  {
    const AcousticProfile p = profile(as_clip(sine_wave(440.0, 1.0, rate, 0.8), rate, "sine"));
    expect(p.pitch.has_value(), "sine pitch missing");
    expect(std::fabs(*p.pitch - 440.0) <= 5.0, "sine pitch " + fmt(*p.pitch));
    expect(std::fabs(p.spectral_centroid - 440.0) <= 20.0,
           "sine centroid " + fmt(p.spectral_centroid));
    expect(p.hnr >= 40.0, "sine HNR " + fmt(p.hnr));
  }
  {
    std::vector<double> x(2 * rate);
    double phase = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
      const double f = 300.0 + 30.0 * std::sin(kTau * 5.0 * t / rate);
      phase += kTau * f / rate;
      x[t] = 0.8 * std::sin(phase);
    }
    const AcousticProfile p = profile(as_clip(std::move(x), rate, "vibrato"));
    expect(p.fm.has_value(), "vibrato modulation rate missing");
    expect(std::fabs(*p.fm - 5.0) <= 0.5, "vibrato rate " + fmt(*p.fm));
  }
  {
    Rng rng(809);
    std::vector<double> x(rate);
    for (double& v : x) v = 0.3 * rng.normal();
    const AcousticProfile p = profile(as_clip(std::move(x), rate, "noise"));
    expect(p.entropy >= 0.9, "noise entropy " + fmt(p.entropy));
    expect(p.voiced <= 10.0, "noise voiced " + fmt(p.voiced) + "%");
  }
}

void end_to_end_determinism() {
  const fs::path base = work_dir();
  for (const char* d : {"corpus", "run1", "run2"}) fs::remove_all(base / d);
  SynthSpec spec;
  spec.per_family = 20;
  spec.seed = 404;
  const std::string manifest = synthesize_corpus((base / "corpus").string(), spec);

  PipelineConfig cfg;
  cfg.manifest = manifest;
  cfg.seed = 1;
  cfg.k_target = 3.0;
  cfg.iters = 3000;
  cfg.burnin = 1000;

  cfg.output_dir = (base / "run1").string();
  const PipelineResult r1 = run_pipeline(cfg);
  cfg.output_dir = (base / "run2").string();
  run_pipeline(cfg);

  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(base / "run1"))
    if (e.is_regular_file()) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  expect(!names.empty(), "first run produced no output files");
  for (const std::string& name : names) {
    expect(fs::exists(base / "run2" / name), name + " missing from the second run");
    expect(slurp(base / "run1" / name) == slurp(base / "run2" / name),
           name + " differs between identical runs");
  }

  std::vector<int> family;
  std::map<std::string, int> family_id;
  for (const std::string& id : r1.ids) {
    const std::string tag = id.substr(0, id.find('-'));
    family.push_back(family_id.emplace(tag, static_cast<int>(family_id.size())).first->second);
  }
  const double ari = testhelp::adjusted_rand(r1.partition, family);
  expect(ari >= 0.8, "ARI vs generative families " + fmt(ari));
}

void feature_schema() {
  const fs::path base = work_dir();
  for (const char* d : {"edge_corpus", "edge_out"}) fs::remove_all(base / d);
  SynthSpec spec;
  spec.per_family = 4;
  spec.seed = 404;
  spec.edge_clips = true;
  const std::string manifest = synthesize_corpus((base / "edge_corpus").string(), spec);

  PipelineConfig cfg;
  cfg.manifest = manifest;
  cfg.output_dir = (base / "edge_out").string();
  cfg.features_only = true;
  const PipelineResult r = run_pipeline(cfg);
  expect(r.n_clips == 13, std::to_string(r.n_clips) + " clips featurized, want 13");
  expect(r.n_skipped == 1, std::to_string(r.n_skipped) + " clips skipped, want 1");

  std::ifstream in(base / "edge_out" / "features.csv");
  expect(static_cast<bool>(in), "features.csv missing");
  std::string line;
  std::getline(in, line);  // header
  int rows = 0;
  bool near_silence_present = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    expect(f.size() == 16, "row has " + std::to_string(f.size()) + " fields");
    if (f[0] == "nearsilence") near_silence_present = true;
    for (int j = 2; j < 16; ++j)
      expect(std::isfinite(std::stod(f[j])),
             "non-finite feature for " + f[0] + " at column " + std::to_string(j));
    ++rows;
  }
  expect(rows == r.n_clips, "features.csv row count mismatch");
  expect(near_silence_present, "near-silence clip was not processed");

  const std::string skipped = slurp(base / "edge_out" / "skipped.csv");
  const auto at = skipped.find("\nsilence,");
  expect(at != std::string::npos, "pure-silence clip missing from the skip log");
  const std::string reason = skipped.substr(at + 9, skipped.find('\n', at + 1) - at - 9);
  expect(reason.find("silence") != std::string::npos,
         "skip reason does not mention silence: " + reason);
}

struct Criterion {
  const char* name;
  double budget_seconds;  // 0: untimed
  std::function<void()> body;
};

}  // namespace

int main() {
  const Criterion criteria[] = {
      {"cubical H0 matches a union-find oracle on 50 random grids", 5.0,
       cubical_vs_oracle},
      {"alpha H0 deaths equal squared MST half-lengths on 30 clouds", 10.0,
       alpha_vs_mst},
      {"jittered circle yields one dominant H1 dying near the squared radius", 0.0,
       circle_loop},
      {"H0 diagrams move at most as far as the grid perturbation", 0.0,
       perturbation_stability},
      {"delay embedding recovers sine and Lorenz dimensions plus the sine loop", 0.0,
       attractor_dimension},
      {"concentration solve hits the requested expected cluster count", 0.0,
       concentration_solve},
      {"Gibbs chain recovers three well-separated Gaussians", 300.0, gibbs_recovery},
      {"variation of information behaves as a metric on partitions", 0.0,
       partition_metric},
      {"univariate posterior predictive integrates to one", 0.0, predictive_normalizes},
      {"logit gradient matches finite differences and null p-values are calibrated",
       0.0, glm_gradient_and_null},
      {"acoustic descriptors match synthetic ground truth", 0.0, acoustic_ground_truth},
      {"pipeline reruns byte-identically and recovers the generative families", 900.0,
       end_to_end_determinism},
      {"every usable clip yields exactly 14 finite feature dimensions", 0.0,
       feature_schema},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    std::string detail;
    try {
      c.body();
    } catch (const std::exception& e) {
      detail = e.what();
    }
    const double sec =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (detail.empty() && c.budget_seconds > 0.0 && sec > c.budget_seconds)
      detail = "took " + fmt(sec) + " s, budget " + fmt(c.budget_seconds) + " s";
    if (detail.empty()) {
      std::printf("[PASS] %s (%.2f s)\n", c.name, sec);
    } else {
      std::printf("[FAIL] %s: %s (%.2f s)\n", c.name, detail.c_str(), sec);
      ++failures;
    }
    std::fflush(stdout);
  }
  std::printf("%d/13 criteria passed\n", 13 - failures);
  return failures == 0 ? 0 : 1;
}
