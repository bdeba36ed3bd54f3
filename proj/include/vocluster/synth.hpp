#pragma once

#include <cstdint>
#include <string>

namespace vocluster {

// Synthetic test corpus: three generative families (sine sweeps, noise
// bursts, AM tones) at 8 kHz, spread over months {1, 2, 4} so the month-3
// gap exercises figure rendering. Clip ids carry the family name.
struct SynthSpec {
  int per_family = 20;
  std::uint64_t seed = 404;
  bool edge_clips = false;  // add one pure-silence and one near-silence clip
};

// Writes the WAV files plus manifest.csv into dir (created if needed);
// returns the manifest path.
std::string synthesize_corpus(const std::string& dir, const SynthSpec& spec);

}  // namespace vocluster
