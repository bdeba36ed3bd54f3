#pragma once

#include <string>
#include <vector>

namespace vocluster {

struct AudioClip {
  std::vector<double> samples;  // mono, peak-normalized to [-1,1]
  int sample_rate = 0;
  int month = 0;  // 1..12
  std::string id;

  double duration_seconds() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

struct ManifestEntry {
  std::string id;
  std::string path;
  int month = 0;
};

struct Manifest {
  std::vector<ManifestEntry> entries;
};

// CSV with header `id,path,month`. Relative paths resolve against the
// manifest's own directory. Duplicate ids and months outside 1..12 are
// rejected.
Manifest load_manifest(const std::string& path);

// Decode one WAV: stereo averaged to mono, then divided by max |sample|
// so the peak is exactly 1 (all-zero stays all-zero).
AudioClip load_clip(const std::string& path, const ManifestEntry& entry);

// Drops clips strictly longer than 10 s; order preserved.
std::vector<AudioClip> filter_corpus(const std::vector<AudioClip>& clips);

struct MonthStats {
  int month = 0;
  int count = 0;
  double mean_duration = 0.0;
  double std_duration = 0.0;  // population
};

std::vector<MonthStats> corpus_counts(const std::vector<AudioClip>& clips);

}  // namespace vocluster
