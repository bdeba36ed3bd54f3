#include "vocluster/spectral.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include <unsupported/Eigen/FFT>

namespace vocluster {

namespace {

constexpr double kLogFloor = 1e-10;

Eigen::VectorXd gaussian_window(int length) {
  Eigen::VectorXd w(length);
  const double center = 0.5 * (length - 1);
  const double sigma = length / 6.0;
  for (int i = 0; i < length; ++i) {
    const double t = (i - center) / sigma;
    w(i) = std::exp(-0.5 * t * t);
  }
  return w;
}

struct StftGrid {
  Eigen::MatrixXd power;  // frames x (L/2+1)
  int window = 0;
  int hop = 0;
};

StftGrid power_stft(const std::vector<double>& x, int rate, double window_seconds,
                    double overlap) {
  const int L = static_cast<int>(std::lround(window_seconds * rate));
  if (L < 2) throw std::invalid_argument("stft: window too short");
  if (static_cast<int>(x.size()) < L)
    throw std::invalid_argument("stft: clip shorter than one window");
  const int hop = std::max(1, static_cast<int>(std::floor(L * (1.0 - overlap))));
  const int frames = static_cast<int>((x.size() - L) / hop) + 1;
  const int bins = L / 2 + 1;

  const Eigen::VectorXd w = gaussian_window(L);
  Eigen::FFT<double> fft;
  std::vector<double> buf(L);
  std::vector<std::complex<double>> spec(L);

  StftGrid g;
  g.window = L;
  g.hop = hop;
  g.power.resize(frames, bins);
  for (int f = 0; f < frames; ++f) {
    const double* src = x.data() + static_cast<std::size_t>(f) * hop;
    for (int i = 0; i < L; ++i) buf[i] = src[i] * w(i);
    fft.fwd(spec, buf);
    for (int b = 0; b < bins; ++b) g.power(f, b) = std::norm(spec[b]);
  }
  return g;
}

}  // namespace

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

Spectrogram spectrogram(const AudioClip& clip, const SpectralConfig& cfg) {
  StftGrid g = power_stft(clip.samples, clip.sample_rate, cfg.spec_window_seconds,
                          cfg.spec_overlap_fraction);
  Spectrogram s;
  s.values = std::move(g.power);
  if (cfg.db_scale) {
    for (Eigen::Index i = 0; i < s.values.size(); ++i) {
      double& v = s.values.data()[i];
      v = 10.0 * std::log10(v + kLogFloor);
    }
  }
  s.time_step = static_cast<double>(g.hop) / clip.sample_rate;
  s.freq_step = static_cast<double>(clip.sample_rate) / g.window;
  return s;
}

Eigen::VectorXd mfcc_mean(const AudioClip& clip, const SpectralConfig& cfg) {
  StftGrid g = power_stft(clip.samples, clip.sample_rate, cfg.mfcc_window_seconds,
                          cfg.mfcc_overlap_fraction);
  const int bins = static_cast<int>(g.power.cols());
  const int frames = static_cast<int>(g.power.rows());
  const int M = cfg.n_mel_filters;
  if (cfg.n_mfcc > M) throw std::invalid_argument("mfcc: n_mfcc > n_mel_filters");

  const double nyquist = 0.5 * clip.sample_rate;
  const double fmax = cfg.fmax > 0.0 ? std::min(cfg.fmax, nyquist) : nyquist;
  const double mel_lo = hz_to_mel(cfg.fmin);
  const double mel_hi = hz_to_mel(fmax);

  // triangular filters on M+2 equally spaced mel points
  Eigen::MatrixXd fb = Eigen::MatrixXd::Zero(M, bins);
  std::vector<double> edges(M + 2);
  for (int m = 0; m < M + 2; ++m)
    edges[m] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * m / (M + 1));
  const double df = static_cast<double>(clip.sample_rate) / g.window;
  for (int m = 0; m < M; ++m) {
    const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
    for (int b = 0; b < bins; ++b) {
      const double f = b * df;
      if (f > lo && f < mid)
        fb(m, b) = (f - lo) / (mid - lo);
      else if (f >= mid && f < hi)
        fb(m, b) = (hi - f) / (hi - mid);
    }
  }

  // orthonormal DCT-II rows 1..n_mfcc
  Eigen::MatrixXd dct(cfg.n_mfcc, M);
  const double pi = 3.14159265358979323846;
  for (int k = 1; k <= cfg.n_mfcc; ++k)
    for (int m = 0; m < M; ++m)
      dct(k - 1, m) = std::sqrt(2.0 / M) * std::cos(pi * k * (m + 0.5) / M);

  Eigen::VectorXd acc = Eigen::VectorXd::Zero(cfg.n_mfcc);
  for (int f = 0; f < frames; ++f) {
    Eigen::VectorXd mel = fb * g.power.row(f).transpose();
    for (int m = 0; m < M; ++m) mel(m) = std::log(mel(m) + kLogFloor);
    acc += dct * mel;
  }
  return acc / frames;
}

}  // namespace vocluster
