#pragma once

#include <optional>
#include <vector>

#include "vocluster/corpus.hpp"

namespace vocluster {

// Per-clip acoustic descriptors, aggregated over 40 ms frames at a 10 ms hop.
// Medians for pitch and formants, means for the rest, proportion for voiced.
// A fully unvoiced clip leaves pitch, formants, and fm missing.
struct AcousticProfile {
  double duration = 0.0;             // s
  std::optional<double> pitch;       // Hz, median F0 over voiced frames
  std::optional<double> f1, f2, f3;  // Hz, median formants over voiced frames
  double voiced = 0.0;               // % frames with periodicity confidence > 0.5
  double spectral_centroid = 0.0;    // Hz
  double entropy = 0.0;              // normalized spectral entropy in [0,1]
  double hnr = 0.0;                  // dB
  std::optional<double> fm;          // Hz, F0-contour modulation rate
  double loudness = 0.0;             // sone-like Stevens estimate
  double roughness = 0.0;            // % of the pair-dissonance maximum
};

AcousticProfile profile(const AudioClip& clip);

// Windowed-sinc resampler (Hann-tapered, `taps` zero crossings per side).
std::vector<double> resample_sinc(const std::vector<double>& x, double fs_in,
                                  double fs_out, int taps = 32);

}  // namespace vocluster
