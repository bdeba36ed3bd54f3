#include "vocluster/acoustics.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>

namespace vocluster {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kFrameSec = 0.040;
constexpr double kHopSec = 0.010;
constexpr double kPitchMin = 100.0;   // infant F0 band
constexpr double kPitchMax = 1000.0;
constexpr double kVoicingThreshold = 0.5;

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / v.size();
}

struct PitchFrame {
  bool voiced = false;
  double f0 = 0.0;         // valid only when in band
  bool f0_valid = false;
  double confidence = 0.0;
};

// Difference-function pitch tracker: cumulative-mean-normalized d(tau),
// absolute threshold 0.15 with local-minimum descent, argmin fallback,
// parabolic refinement of the chosen lag.
PitchFrame track_pitch(const double* fr, int L, double fs) {
  PitchFrame out;
  const int tau_min = static_cast<int>(std::floor(fs / kPitchMax));
  const int tau_max = static_cast<int>(std::ceil(fs / kPitchMin));
  const int W = L - tau_max;
  if (W < tau_max / 2 || tau_min < 2) return out;

  Eigen::VectorXd x(L);
  double m = 0.0;
  for (int t = 0; t < L; ++t) m += fr[t];
  m /= L;
  for (int t = 0; t < L; ++t) x(t) = fr[t] - m;

  const double e0 = x.head(W).squaredNorm();
  if (e0 <= 0.0) return out;

  std::vector<double> dn(tau_max + 1, 1.0);
  double csum = 0.0;
  for (int tau = 1; tau <= tau_max; ++tau) {
    const double d = (x.head(W) - x.segment(tau, W)).squaredNorm();
    csum += d;
    dn[tau] = csum > 0.0 ? d * tau / csum : 1.0;
  }

  int best = -1;
  for (int tau = tau_min; tau <= tau_max; ++tau) {
    if (dn[tau] < 0.15) {
      while (tau + 1 <= tau_max && dn[tau + 1] < dn[tau]) ++tau;
      best = tau;
      break;
    }
  }
  if (best < 0) {
    best = tau_min;
    for (int tau = tau_min; tau <= tau_max; ++tau)
      if (dn[tau] < dn[best]) best = tau;
  }
  out.confidence = 1.0 - dn[best];

  double delta = 0.0;
  if (best >= 1 && best < tau_max) {
    const double y0 = dn[best - 1], y1 = dn[best], y2 = dn[best + 1];
    const double den = y0 - 2.0 * y1 + y2;
    if (std::abs(den) > 1e-30) delta = std::clamp(0.5 * (y0 - y2) / den, -1.0, 1.0);
  }
  const double f0 = fs / (best + delta);
  if (f0 >= kPitchMin && f0 <= kPitchMax) {
    out.f0 = f0;
    out.f0_valid = true;
    out.voiced = out.confidence > kVoicingThreshold;
  }
  return out;
}

// Harmonicity 10*log10(r/(1-r)) from the normalized autocorrelation peak near
// the pitch lag, parabolic-interpolated so a near-1 peak is not lost to lag
// quantization. r clamped away from {0,1}, giving a +-60 dB range.
bool harmonicity(const double* fr, int L, double fs, double f0, double* out) {
  const int tau = static_cast<int>(std::lround(fs / f0));
  const int W = L - (tau + 3);
  if (W < 16) return false;

  Eigen::VectorXd x(L);
  double m = 0.0;
  for (int t = 0; t < L; ++t) m += fr[t];
  m /= L;
  for (int t = 0; t < L; ++t) x(t) = fr[t] - m;

  auto rho = [&](int l) {
    const double na = x.head(W).squaredNorm();
    const double nb = x.segment(l, W).squaredNorm();
    if (na <= 0.0 || nb <= 0.0) return 0.0;
    return x.head(W).dot(x.segment(l, W)) / std::sqrt(na * nb);
  };

  int l0 = std::max(2, tau - 2);
  double r1 = rho(l0);
  for (int l = l0 + 1; l <= tau + 2; ++l) {
    const double r = rho(l);
    if (r > r1) {
      r1 = r;
      l0 = l;
    }
  }
  const double y0 = rho(l0 - 1), y2 = rho(l0 + 1);
  const double den = y0 - 2.0 * r1 + y2;
  double rp = r1;
  if (std::abs(den) >= 1e-30) rp = r1 - 0.125 * (y0 - y2) * (y0 - y2) / den;
  rp = std::clamp(rp, 1e-6, 1.0 - 1e-6);
  *out = 10.0 * std::log10(rp / (1.0 - rp));
  return true;
}

struct SpectralFrame {
  double centroid = 0.0;
  double entropy = 0.0;
  std::vector<double> power;  // bins 0..L/2
  double bin_hz = 0.0;
};

SpectralFrame spectral_frame(const double* fr, int L, double fs, Eigen::FFT<double>& fft) {
  SpectralFrame out;
  const double sigma = L / 4.0, c = (L - 1) / 2.0;
  std::vector<double> w(L);
  for (int t = 0; t < L; ++t) {
    const double u = (t - c) / sigma;
    w[t] = fr[t] * std::exp(-0.5 * u * u);
  }
  std::vector<std::complex<double>> X;
  fft.fwd(X, w);
  const int bins = L / 2 + 1;
  out.power.resize(bins);
  out.bin_hz = fs / L;
  double total = 0.0, fsum = 0.0;
  for (int b = 0; b < bins; ++b) {
    out.power[b] = std::norm(X[b]);
    total += out.power[b];
    fsum += b * out.bin_hz * out.power[b];
  }
  if (total > 0.0) {
    out.centroid = fsum / total;
    double H = 0.0;
    for (double p : out.power)
      if (p > 0.0) {
        const double q = p / total;
        H -= q * std::log(q);
      }
    out.entropy = H / std::log(static_cast<double>(bins));
  }
  return out;
}

// Stevens-law estimate: sum of critical-band energies raised to 0.3, the
// bands on the Bark scale. Monotone in amplitude by construction.
double frame_loudness(const SpectralFrame& sf) {
  double bands[25] = {0};
  for (std::size_t b = 1; b < sf.power.size(); ++b) {
    const double f = b * sf.bin_hz;
    const double z = 13.0 * std::atan(0.00076 * f) +
                     3.5 * std::atan((f / 7500.0) * (f / 7500.0));
    const int k = std::clamp(static_cast<int>(z), 0, 24);
    bands[k] += sf.power[b];
  }
  double loud = 0.0;
  for (double e : bands)
    if (e > 0.0) loud += std::pow(e, 0.3);
  return loud;
}

// Pair-dissonance estimate over the strongest spectral peaks, normalized to
// percent of the dissonance-curve maximum. Amplitude-invariant.
double frame_roughness(const SpectralFrame& sf) {
  struct Peak {
    double amp, freq;
  };
  std::vector<Peak> peaks;
  for (std::size_t b = 1; b + 1 < sf.power.size(); ++b)
    if (sf.power[b] > sf.power[b - 1] && sf.power[b] >= sf.power[b + 1])
      peaks.push_back({std::sqrt(sf.power[b]), b * sf.bin_hz});
  if (peaks.size() < 2) return 0.0;
  std::sort(peaks.begin(), peaks.end(),
            [](const Peak& a, const Peak& b) { return a.amp > b.amp; });
  if (peaks.size() > 20) peaks.resize(20);

  constexpr double b1 = 3.5, b2 = 5.75;
  const double xstar = std::log(b2 / b1) / (b2 - b1);
  const double dmax = std::exp(-b1 * xstar) - std::exp(-b2 * xstar);

  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < peaks.size(); ++i)
    for (std::size_t j = i + 1; j < peaks.size(); ++j) {
      const double flo = std::min(peaks[i].freq, peaks[j].freq);
      const double df = std::abs(peaks[i].freq - peaks[j].freq);
      const double s = 0.24 / (0.021 * flo + 19.0);
      const double x = s * df;
      const double d = std::exp(-b1 * x) - std::exp(-b2 * x);
      const double wgt = peaks[i].amp * peaks[j].amp;
      num += wgt * d;
      den += wgt;
    }
  return den > 0.0 ? 100.0 * num / (den * dmax) : 0.0;
}

std::vector<double> hann_window(int n) {
  std::vector<double> w(n, 1.0);
  if (n > 1)
    for (int t = 0; t < n; ++t) w[t] = 0.5 - 0.5 * std::cos(2.0 * kPi * t / (n - 1));
  return w;
}

// Modulation rate of the voiced F0 contour: detrend, Hann-window, zero-padded
// power spectrum, strongest bin in 0.5..20 Hz with parabolic refinement.
// A flat contour (residual spread under 0.5 Hz) has no modulation to report.
std::optional<double> contour_modulation(const std::vector<double>& f0s, double frame_rate,
                                         Eigen::FFT<double>& fft) {
  const int n = static_cast<int>(f0s.size());
  if (n < 8) return std::nullopt;

  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (int t = 0; t < n; ++t) {
    sx += t;
    sy += f0s[t];
    sxx += static_cast<double>(t) * t;
    sxy += t * f0s[t];
  }
  const double det = n * sxx - sx * sx;
  const double slope = det != 0.0 ? (n * sxy - sx * sy) / det : 0.0;
  const double icept = (sy - slope * sx) / n;

  std::vector<double> resid(n);
  double ss = 0.0, rm = 0.0;
  for (int t = 0; t < n; ++t) {
    resid[t] = f0s[t] - (icept + slope * t);
    rm += resid[t];
  }
  rm /= n;
  for (double r : resid) ss += (r - rm) * (r - rm);
  if (std::sqrt(ss / n) < 0.5) return std::nullopt;

  int nfft = 1;
  while (nfft < 4 * n) nfft *= 2;
  const std::vector<double> w = hann_window(n);
  std::vector<double> buf(nfft, 0.0);
  for (int t = 0; t < n; ++t) buf[t] = resid[t] * w[t];
  std::vector<std::complex<double>> X;
  fft.fwd(X, buf);

  const int bins = nfft / 2 + 1;
  const double df = frame_rate / nfft;
  int k = -1;
  double pk = 0.0;
  for (int b = 0; b < bins; ++b) {
    const double f = b * df;
    if (f < 0.5 || f > 20.0) continue;
    const double p = std::norm(X[b]);
    if (k < 0 || p > pk) {
      k = b;
      pk = p;
    }
  }
  if (k < 0) return std::nullopt;
  double dd = 0.0;
  if (k >= 1 && k + 1 < bins) {
    const double y0 = std::norm(X[k - 1]), y2 = std::norm(X[k + 1]);
    const double den = y0 - 2.0 * pk + y2;
    if (std::abs(den) > 1e-30) dd = 0.5 * (y0 - y2) / den;
  }
  return (k + dd) * df;
}

// Levinson-Durbin on the autocorrelation sequence; empty on a non-positive
// prediction error (degenerate frame).
std::vector<double> lpc_coeffs(const std::vector<double>& r, int order) {
  std::vector<double> a(order + 1, 0.0);
  a[0] = 1.0;
  double e = r[0];
  if (e <= 0.0) return {};
  for (int i = 1; i <= order; ++i) {
    double acc = r[i];
    for (int j = 1; j < i; ++j) acc += a[j] * r[i - j];
    const double k = -acc / e;
    std::vector<double> an = a;
    for (int j = 1; j < i; ++j) an[j] = a[j] + k * a[i - j];
    an[i] = k;
    a = std::move(an);
    e *= 1.0 - k * k;
    if (e <= 0.0) return {};
  }
  return a;
}

// Resonance frequencies from one frame: pre-emphasis, Hann window, LPC-18,
// roots of the prediction polynomial with bandwidth under 700 Hz in 200..8000.
std::vector<double> frame_formants(const double* fr, int L, double fs) {
  constexpr int order = 18;
  std::vector<double> x(L);
  double m = 0.0;
  for (int t = 0; t < L; ++t) m += fr[t];
  m /= L;
  for (int t = 0; t < L; ++t) x[t] = fr[t] - m;
  for (int t = L - 1; t >= 1; --t) x[t] -= 0.97 * x[t - 1];

  const std::vector<double> w = hann_window(L);
  for (int t = 0; t < L; ++t) x[t] *= w[t];

  std::vector<double> r(order + 1, 0.0);
  for (int k = 0; k <= order; ++k)
    for (int t = 0; t + k < L; ++t) r[k] += x[t] * x[t + k];
  if (r[0] <= 0.0) return {};
  const std::vector<double> a = lpc_coeffs(r, order);
  if (a.empty()) return {};

  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(order, order);
  for (int j = 0; j < order; ++j) comp(0, j) = -a[j + 1];
  for (int j = 1; j < order; ++j) comp(j, j - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);

  std::vector<double> fmts;
  for (int j = 0; j < order; ++j) {
    const std::complex<double> z = es.eigenvalues()(j);
    if (z.imag() <= 1e-9) continue;
    const double f = std::arg(z) * fs / (2.0 * kPi);
    const double bw = -fs / kPi * std::log(std::abs(z));
    if (f >= 200.0 && f <= 8000.0 && bw > 0.0 && bw < 700.0) fmts.push_back(f);
  }
  std::sort(fmts.begin(), fmts.end());
  return fmts;
}

}  // namespace

std::vector<double> resample_sinc(const std::vector<double>& x, double fs_in,
                                  double fs_out, int taps) {
  if (fs_in == fs_out) return x;
  const double ratio = fs_out / fs_in;
  const int n_in = static_cast<int>(x.size());
  const int n_out = static_cast<int>(std::floor(n_in * ratio));
  const double fc = 0.45 * std::min(fs_in, fs_out) / fs_in;  // cycles per input sample
  std::vector<double> out(n_out, 0.0);
  for (int n = 0; n < n_out; ++n) {
    const double c = n / ratio;
    const int kc = static_cast<int>(std::floor(c));
    const int k0 = std::max(kc - taps + 1, 0);
    const int k1 = std::min(kc + taps, n_in - 1);
    double acc = 0.0;
    for (int k = k0; k <= k1; ++k) {
      const double u = k - c;
      const double arg = 2.0 * kPi * fc * u;
      const double sinc = std::abs(arg) < 1e-12 ? 1.0 : std::sin(arg) / arg;
      acc += x[k] * 2.0 * fc * sinc * (0.5 + 0.5 * std::cos(kPi * u / taps));
    }
    out[n] = acc;
  }
  return out;
}

AcousticProfile profile(const AudioClip& clip) {
  const double fs = clip.sample_rate;
  const int n = static_cast<int>(clip.samples.size());
  if (fs <= 0.0 || n < static_cast<int>(std::lround(0.100 * fs)))
    throw std::invalid_argument("acoustic profile: clip shorter than 100 ms (" + clip.id + ")");

  const int L = static_cast<int>(std::lround(kFrameSec * fs));
  const int H = static_cast<int>(std::lround(kHopSec * fs));
  Eigen::FFT<double> fft;

  AcousticProfile out;
  out.duration = clip.duration_seconds();

  std::vector<bool> voiced_mask;
  std::vector<double> voiced_f0, cents, ents, louds, roughs, hnr_voiced, hnr_all;
  for (int t = 0; t + L <= n; t += H) {
    const double* fr = clip.samples.data() + t;
    const PitchFrame pf = track_pitch(fr, L, fs);
    voiced_mask.push_back(pf.voiced);
    if (pf.voiced) voiced_f0.push_back(pf.f0);

    const SpectralFrame sf = spectral_frame(fr, L, fs, fft);
    cents.push_back(sf.centroid);
    ents.push_back(sf.entropy);
    louds.push_back(frame_loudness(sf));
    roughs.push_back(frame_roughness(sf));

    if (pf.f0_valid) {
      double h;
      if (harmonicity(fr, L, fs, pf.f0, &h)) {
        hnr_all.push_back(h);
        if (pf.voiced) hnr_voiced.push_back(h);
      }
    }
  }

  const int n_frames = static_cast<int>(voiced_mask.size());
  int n_voiced = 0;
  for (bool v : voiced_mask) n_voiced += v;
  out.voiced = n_frames > 0 ? 100.0 * n_voiced / n_frames : 0.0;
  if (!voiced_f0.empty()) out.pitch = median(voiced_f0);
  out.spectral_centroid = mean(cents);
  out.entropy = mean(ents);
  out.hnr = !hnr_voiced.empty() ? mean(hnr_voiced) : mean(hnr_all);
  out.loudness = mean(louds);
  out.roughness = mean(roughs);
  out.fm = contour_modulation(voiced_f0, fs / H, fft);

  // Formants from the 16 kHz resampled clip, voiced frames only. The voicing
  // mask is indexed by frame and both framings share the 40/10 ms grid.
  const std::vector<double> y = resample_sinc(clip.samples, fs, 16000.0);
  const int L16 = static_cast<int>(std::lround(kFrameSec * 16000.0));
  const int H16 = static_cast<int>(std::lround(kHopSec * 16000.0));
  std::vector<double> all1, all2, all3;
  int fi = 0;
  for (int t = 0; t + L16 <= static_cast<int>(y.size()) && fi < n_frames; t += H16, ++fi) {
    if (!voiced_mask[fi]) continue;
    const std::vector<double> f = frame_formants(y.data() + t, L16, 16000.0);
    if (f.size() >= 3) {
      all1.push_back(f[0]);
      all2.push_back(f[1]);
      all3.push_back(f[2]);
    }
  }
  if (!all1.empty()) {
    out.f1 = median(all1);
    out.f2 = median(all2);
    out.f3 = median(all3);
  }
  return out;
}

}  // namespace vocluster
