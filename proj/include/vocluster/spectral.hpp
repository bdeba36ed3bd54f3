#pragma once

#include <Eigen/Dense>

#include "vocluster/corpus.hpp"

namespace vocluster {

struct SpectralConfig {
  double spec_window_seconds = 0.0116;
  double spec_overlap_fraction = 0.90;
  double mfcc_window_seconds = 0.025;
  double mfcc_overlap_fraction = 0.40;
  int n_mfcc = 12;
  int n_mel_filters = 26;
  double fmin = 0.0;
  double fmax = 0.0;  // 0 -> Nyquist
  bool db_scale = false;
};

struct Spectrogram {
  Eigen::MatrixXd values;  // rows: frames, cols: frequency bins 0..Nyquist
  double time_step = 0.0;
  double freq_step = 0.0;
};

// Magnitude-squared STFT with a Gaussian window (sigma = L/6). Window
// length = round(window_seconds * rate), hop = floor(L * (1 - overlap)),
// FFT size = L, last partial frame dropped.
Spectrogram spectrogram(const AudioClip& clip, const SpectralConfig& cfg);

// Framewise mean of coefficients 1..n_mfcc (c0 excluded): 26-filter mel
// bank on the power spectrum, log with floor 1e-10, orthonormal DCT-II.
Eigen::VectorXd mfcc_mean(const AudioClip& clip, const SpectralConfig& cfg);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

}  // namespace vocluster
