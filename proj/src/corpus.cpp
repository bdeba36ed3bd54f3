#include "vocluster/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "vocluster/wav.hpp"

namespace vocluster {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
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

}  // namespace

Manifest load_manifest(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("manifest: cannot open " + path);
  const auto base = std::filesystem::path(path).parent_path();
  Manifest m;
  std::string line;
  if (!std::getline(f, line)) throw std::runtime_error("manifest: empty file " + path);
  {
    auto hdr = split_csv_line(line);
    if (hdr.size() != 3 || hdr[0] != "id" || hdr[1] != "path" || hdr[2] != "month")
      throw std::runtime_error("manifest: expected header id,path,month in " + path);
  }
  std::set<std::string> seen;
  int lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto cols = split_csv_line(line);
    if (cols.size() != 3)
      throw std::runtime_error("manifest: bad row at line " + std::to_string(lineno));
    ManifestEntry e;
    e.id = cols[0];
    std::filesystem::path p(cols[1]);
    e.path = p.is_absolute() ? p.string() : (base / p).string();
    try {
      e.month = std::stoi(cols[2]);
    } catch (...) {
      throw std::runtime_error("manifest: non-integer month at line " + std::to_string(lineno));
    }
    if (e.month < 1 || e.month > 12)
      throw std::runtime_error("manifest: month out of 1..12 at line " + std::to_string(lineno));
    if (!seen.insert(e.id).second)
      throw std::runtime_error("manifest: duplicate id '" + e.id + "'");
    m.entries.push_back(std::move(e));
  }
  return m;
}

AudioClip load_clip(const std::string& path, const ManifestEntry& entry) {
  WavData w = read_wav(path);
  const std::size_t n = w.channels[0].size();
  AudioClip clip;
  clip.sample_rate = w.sample_rate;
  clip.month = entry.month;
  clip.id = entry.id;
  clip.samples.resize(n);
  if (w.channels.size() == 2) {
    for (std::size_t i = 0; i < n; ++i)
      clip.samples[i] = 0.5 * (w.channels[0][i] + w.channels[1][i]);
  } else {
    clip.samples = w.channels[0];
  }
  double peak = 0.0;
  for (double v : clip.samples) peak = std::max(peak, std::fabs(v));
  if (peak > 0.0) {
    for (double& v : clip.samples) v /= peak;
  }
  return clip;
}

std::vector<AudioClip> filter_corpus(const std::vector<AudioClip>& clips) {
  std::vector<AudioClip> out;
  out.reserve(clips.size());
  for (const auto& c : clips)
    if (c.duration_seconds() <= 10.0) out.push_back(c);
  return out;
}

std::vector<MonthStats> corpus_counts(const std::vector<AudioClip>& clips) {
  std::map<int, std::vector<double>> by_month;
  for (const auto& c : clips) by_month[c.month].push_back(c.duration_seconds());
  std::vector<MonthStats> out;
  for (const auto& [month, durs] : by_month) {
    MonthStats s;
    s.month = month;
    s.count = static_cast<int>(durs.size());
    double sum = 0.0;
    for (double d : durs) sum += d;
    s.mean_duration = sum / s.count;
    double ss = 0.0;
    for (double d : durs) ss += (d - s.mean_duration) * (d - s.mean_duration);
    s.std_duration = std::sqrt(ss / s.count);
    out.push_back(s);
  }
  return out;
}

}  // namespace vocluster
