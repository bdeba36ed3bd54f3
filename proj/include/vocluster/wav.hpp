#pragma once

#include <string>
#include <vector>

namespace vocluster {

struct WavData {
  std::vector<std::vector<double>> channels;  // raw, full-scale-normalized per width
  int sample_rate = 0;
};

// RIFF/WAVE reader: PCM 8/16/24/32-bit integer and 32-bit float, 1..2
// channels. Compressed codecs are rejected. Throws std::runtime_error
// with the path on any structural problem.
WavData read_wav(const std::string& path);

// 16-bit PCM writer, used by the synthetic-corpus generator and tests.
void write_wav16(const std::string& path, const std::vector<double>& mono,
                 int sample_rate);
void write_wav16_stereo(const std::string& path, const std::vector<double>& left,
                        const std::vector<double>& right, int sample_rate);

}  // namespace vocluster
