#include "vocluster/synth.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "vocluster/rng.hpp"
#include "vocluster/wav.hpp"

namespace vocluster {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr int kRate = 8000;

void fade_edges(std::vector<double>& x, int n_fade) {
  const int n = static_cast<int>(x.size());
  for (int t = 0; t < n_fade && t < n; ++t) {
    const double g = static_cast<double>(t) / n_fade;
    x[t] *= g;
    x[n - 1 - t] *= g;
  }
}

std::vector<double> sine_sweep(Rng& rng) {
  const double dur = 0.8 + 0.4 * rng.uniform();
  const double f0 = 300.0 * (1.0 + 0.04 * (rng.uniform() - 0.5));
  const double f1 = 1200.0 * (1.0 + 0.04 * (rng.uniform() - 0.5));
  const double phi = 2.0 * kPi * rng.uniform();
  const int n = static_cast<int>(dur * kRate);
  std::vector<double> x(n);
  for (int t = 0; t < n; ++t) {
    const double s = static_cast<double>(t) / kRate;
    x[t] = 0.8 * std::sin(phi + 2.0 * kPi * (f0 * s + 0.5 * (f1 - f0) / dur * s * s)) +
           0.05 * rng.normal();
  }
  fade_edges(x, kRate / 100);
  return x;
}

std::vector<double> noise_burst(Rng& rng) {
  const double dur = 0.8 + 0.4 * rng.uniform();
  const int n = static_cast<int>(dur * kRate);
  std::vector<double> x(n);
  for (int t = 0; t < n; ++t) {
    const double s = static_cast<double>(t) / kRate;
    x[t] = 0.5 * rng.normal() * std::exp(-3.0 * s / dur);
  }
  fade_edges(x, kRate / 200);
  return x;
}

std::vector<double> am_tone(Rng& rng) {
  const double dur = 0.8 + 0.4 * rng.uniform();
  const double fc = 2000.0 * (1.0 + 0.04 * (rng.uniform() - 0.5));
  const double fm = 30.0 * (1.0 + 0.1 * (rng.uniform() - 0.5));
  const double phi = 2.0 * kPi * rng.uniform();
  const int n = static_cast<int>(dur * kRate);
  std::vector<double> x(n);
  for (int t = 0; t < n; ++t) {
    const double s = static_cast<double>(t) / kRate;
    const double env = (1.0 + 0.8 * std::sin(2.0 * kPi * fm * s)) / 1.8;
    x[t] = 0.7 * env * std::sin(phi + 2.0 * kPi * fc * s) + 0.05 * rng.normal();
  }
  fade_edges(x, kRate / 100);
  return x;
}

}  // namespace

std::string synthesize_corpus(const std::string& dir, const SynthSpec& spec) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  Rng rng(spec.seed);

  const int months[3] = {1, 2, 4};
  std::string manifest = "id,path,month\n";
  char name[64];

  struct Family {
    const char* tag;
    std::vector<double> (*gen)(Rng&);
  };
  const Family families[3] = {
      {"sweep", sine_sweep}, {"noise", noise_burst}, {"amtone", am_tone}};

  for (int i = 0; i < spec.per_family; ++i) {
    for (const Family& fam : families) {
      std::snprintf(name, sizeof(name), "%s-%02d", fam.tag, i);
      const std::string file = std::string(name) + ".wav";
      write_wav16((fs::path(dir) / file).string(), fam.gen(rng), kRate);
      manifest += std::string(name) + "," + file + "," + std::to_string(months[i % 3]) + "\n";
    }
  }

  if (spec.edge_clips) {
    write_wav16((fs::path(dir) / "silence.wav").string(),
                std::vector<double>(kRate / 2, 0.0), kRate);
    manifest += "silence,silence.wav,1\n";

    // quiet but above 16-bit quantization, so it decodes to a usable signal
    std::vector<double> quiet(kRate);
    for (double& v : quiet) v = 2e-3 * rng.normal();
    write_wav16((fs::path(dir) / "nearsilence.wav").string(), quiet, kRate);
    manifest += "nearsilence,nearsilence.wav,2\n";
  }

  const std::string manifest_path = (fs::path(dir) / "manifest.csv").string();
  std::ofstream out(manifest_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write manifest: " + manifest_path);
  out << manifest;
  return manifest_path;
}

}  // namespace vocluster
