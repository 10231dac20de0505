#ifndef SPOOFAUDIT_DSP_HPP
#define SPOOFAUDIT_DSP_HPP

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "spoofaudit/audio.hpp"
#include "spoofaudit/common.hpp"

namespace spoofaudit {

// Row-major frames x dims matrix backing features and spectrograms.
struct FeatureMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  FeatureMatrix() = default;
  FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}
  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }
  double* row(std::size_t r) { return data.data() + r * cols; }
};

enum class SpectrogramScale { kPower, kLogPower };

struct Spectrogram {
  FeatureMatrix values;  // frames x bins
  double frame_hop_ms = 10.0;
  std::vector<double> bin_frequencies;
  SpectrogramScale scale_tag = SpectrogramScale::kPower;
};

struct CqccConfig {
  double f_min_hz = 15.625;    // 9 octaves to 8 kHz Nyquist
  int bins_per_octave = 24;
  int n_uniform_bins = 128;
  int n_ceps = 20;             // static coefficients; output dims = 3 * n_ceps
  int delta_window = 2;
  double frame_hop_ms = 10.0;
  double log_floor = 1e-10;
  // 0 = derive the analysis window from the longest kernel.
  double frame_win_ms = 0.0;
};

inline std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  if (n == 1) {
    w[0] = 1.0;
    return w;
  }
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (n - 1));
  return w;
}

// Hann-windowed, zero-padded power spectrogram over n_fft/2+1 bins.
inline Spectrogram power_spectrogram(const AudioSignal& sig, int n_fft,
                                     double win_ms, double hop_ms) {
  std::size_t win = ms_to_samples(win_ms, sig.sample_rate);
  std::size_t hop = ms_to_samples(hop_ms, sig.sample_rate);
  if (win == 0 || hop == 0) throw ValidationError("power_spectrogram: zero window/hop");
  if (win > static_cast<std::size_t>(n_fft))
    throw ValidationError("power_spectrogram: window exceeds n_fft");
  if (sig.size() < win)
    throw ValidationError("power_spectrogram: signal shorter than one window");

  std::size_t frames = (sig.size() - win) / hop + 1;
  std::size_t bins = static_cast<std::size_t>(n_fft) / 2 + 1;
  Spectrogram out;
  out.frame_hop_ms = hop_ms;
  out.scale_tag = SpectrogramScale::kPower;
  out.values = FeatureMatrix(frames, bins);
  out.bin_frequencies.resize(bins);
  for (std::size_t b = 0; b < bins; ++b)
    out.bin_frequencies[b] = static_cast<double>(b) * sig.sample_rate / n_fft;

  std::vector<double> w = hann_window(win);
  double* in = fftw_alloc_real(n_fft);
  fftw_complex* spec = fftw_alloc_complex(bins);
  fftw_plan plan = fftw_plan_dft_r2c_1d(n_fft, in, spec, FFTW_ESTIMATE);
  for (std::size_t t = 0; t < frames; ++t) {
    const double* x = sig.samples.data() + t * hop;
    for (std::size_t i = 0; i < win; ++i) in[i] = x[i] * w[i];
    std::fill(in + win, in + n_fft, 0.0);
    fftw_execute(plan);
    for (std::size_t b = 0; b < bins; ++b)
      out.values.at(t, b) = spec[b][0] * spec[b][0] + spec[b][1] * spec[b][1];
  }
  fftw_destroy_plan(plan);
  fftw_free(in);
  fftw_free(spec);
  return out;
}

namespace detail {

// One constant-Q analysis kernel: windowed complex exponential spanning
// Q = 1/(2^(1/B)-1) cycles at its centre frequency, truncated to the frame.
struct CqtKernel {
  std::vector<double> re, im;
};

struct CqtBank {
  std::vector<CqtKernel> kernels;
  std::vector<double> freqs;
  std::size_t win = 0;
};

inline CqtBank build_cqt_bank(const CqccConfig& cfg, int sample_rate) {
  if (cfg.f_min_hz <= 0) throw ValidationError("cqt: f_min must be positive");
  double nyquist = sample_rate / 2.0;
  double q = 1.0 / (std::pow(2.0, 1.0 / cfg.bins_per_octave) - 1.0);

  CqtBank bank;
  for (int k = 0;; ++k) {
    double f = cfg.f_min_hz * std::pow(2.0, static_cast<double>(k) / cfg.bins_per_octave);
    if (f > nyquist) break;
    bank.freqs.push_back(f);
  }
  if (bank.freqs.empty()) throw ValidationError("cqt: no bins below Nyquist");

  std::size_t longest = static_cast<std::size_t>(
      std::llround(q * sample_rate / bank.freqs.front()));
  if (cfg.frame_win_ms > 0.0) {
    bank.win = ms_to_samples(cfg.frame_win_ms, sample_rate);
    if (longest > 2 * bank.win)
      throw ValidationError(
          "cqt: f_min too low for frame length (lowest-bin kernel spans " +
          std::to_string(longest) + " samples, frame is " +
          std::to_string(bank.win) + ")");
  } else {
    bank.win = longest;
  }
  if (bank.win == 0) throw ValidationError("cqt: zero-length frame");

  for (double f : bank.freqs) {
    std::size_t n = static_cast<std::size_t>(std::llround(q * sample_rate / f));
    n = std::min(std::max<std::size_t>(n, 2), bank.win);
    std::vector<double> w = hann_window(n);
    double wsum = 0.0;
    for (double v : w) wsum += v;
    CqtKernel ker;
    ker.re.resize(n);
    ker.im.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      double phase = 2.0 * std::numbers::pi * f * i / sample_rate;
      ker.re[i] = w[i] * std::cos(phase) / wsum;
      ker.im[i] = -w[i] * std::sin(phase) / wsum;
    }
    bank.kernels.push_back(std::move(ker));
  }
  return bank;
}

}  // namespace detail

// Framewise kernel-correlation constant-Q power spectrogram.
inline Spectrogram cqt_spectrogram(const AudioSignal& sig, const CqccConfig& cfg) {
  detail::CqtBank bank = detail::build_cqt_bank(cfg, sig.sample_rate);
  std::size_t hop = ms_to_samples(cfg.frame_hop_ms, sig.sample_rate);
  if (hop == 0) throw ValidationError("cqt: zero hop");
  if (sig.size() < bank.win)
    throw ValidationError("cqt: signal shorter than one frame");
  std::size_t frames = (sig.size() - bank.win) / hop + 1;

  Spectrogram out;
  out.frame_hop_ms = cfg.frame_hop_ms;
  out.scale_tag = SpectrogramScale::kPower;
  out.bin_frequencies = bank.freqs;
  out.values = FeatureMatrix(frames, bank.freqs.size());
  for (std::size_t t = 0; t < frames; ++t) {
    const double* x = sig.samples.data() + t * hop;
    for (std::size_t b = 0; b < bank.kernels.size(); ++b) {
      const detail::CqtKernel& ker = bank.kernels[b];
      double re = 0.0, im = 0.0;
      std::size_t n = ker.re.size();
      for (std::size_t i = 0; i < n; ++i) {
        re += x[i] * ker.re[i];
        im += x[i] * ker.im[i];
      }
      out.values.at(t, b) = re * re + im * im;
    }
  }
  return out;
}

// Orthonormal DCT-II of a vector.
inline std::vector<double> dct_orthonormal(const std::vector<double>& x) {
  std::size_t n = x.size();
  std::vector<double> y(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += x[i] * std::cos(std::numbers::pi * (i + 0.5) * k / n);
    double scale = (k == 0) ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
    y[k] = scale * acc;
  }
  return y;
}

inline std::vector<double> idct_orthonormal(const std::vector<double>& y) {
  std::size_t n = y.size();
  std::vector<double> x(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double acc = std::sqrt(1.0 / n) * y[0];
    for (std::size_t k = 1; k < n; ++k)
      acc += std::sqrt(2.0 / n) * y[k] *
             std::cos(std::numbers::pi * (i + 0.5) * k / n);
    x[i] = acc;
  }
  return x;
}

// Regression deltas with edge replication; output dims triple the input.
inline FeatureMatrix append_deltas(const FeatureMatrix& feats, int window) {
  if (feats.rows < 1) throw ValidationError("append_deltas: no frames");
  if (window < 1) throw ValidationError("append_deltas: window must be >= 1");

  auto delta_of = [window](const FeatureMatrix& in) {
    FeatureMatrix d(in.rows, in.cols);
    double denom = 0.0;
    for (int k = 1; k <= window; ++k) denom += 2.0 * k * k;
    for (std::size_t t = 0; t < in.rows; ++t) {
      for (std::size_t c = 0; c < in.cols; ++c) {
        double acc = 0.0;
        for (int k = 1; k <= window; ++k) {
          std::size_t tp = std::min(t + k, in.rows - 1);
          std::size_t tm = (t >= static_cast<std::size_t>(k)) ? t - k : 0;
          acc += k * (in.at(tp, c) - in.at(tm, c));
        }
        d.at(t, c) = acc / denom;
      }
    }
    return d;
  };

  FeatureMatrix d1 = delta_of(feats);
  FeatureMatrix d2 = delta_of(d1);
  FeatureMatrix out(feats.rows, feats.cols * 3);
  for (std::size_t t = 0; t < feats.rows; ++t) {
    for (std::size_t c = 0; c < feats.cols; ++c) {
      out.at(t, c) = feats.at(t, c);
      out.at(t, feats.cols + c) = d1.at(t, c);
      out.at(t, 2 * feats.cols + c) = d2.at(t, c);
    }
  }
  return out;
}

// Constant-Q cepstral coefficients: CQT power -> log -> uniform resampling of
// the log spectrum -> orthonormal DCT-II -> first n_ceps -> deltas appended.
inline FeatureMatrix cqcc(const AudioSignal& sig, const CqccConfig& cfg) {
  if (cfg.n_ceps > cfg.n_uniform_bins)
    throw ValidationError("cqcc: n_ceps exceeds n_uniform_bins");
  Spectrogram cqt = cqt_spectrogram(sig, cfg);
  const std::vector<double>& fg = cqt.bin_frequencies;
  std::size_t nb = fg.size();

  // Uniform frequency grid spanning the geometric bins.
  std::size_t nu = static_cast<std::size_t>(cfg.n_uniform_bins);
  std::vector<double> fu(nu);
  for (std::size_t i = 0; i < nu; ++i)
    fu[i] = fg.front() + (fg.back() - fg.front()) * i / (nu - 1);

  FeatureMatrix stat(cqt.values.rows, cfg.n_ceps);
  std::vector<double> logp(nb), uni(nu);
  std::size_t seg = 0;
  for (std::size_t t = 0; t < cqt.values.rows; ++t) {
    for (std::size_t b = 0; b < nb; ++b)
      logp[b] = std::log(cqt.values.at(t, b) + cfg.log_floor);
    seg = 0;
    for (std::size_t i = 0; i < nu; ++i) {
      double f = fu[i];
      while (seg + 2 < nb && fg[seg + 1] < f) ++seg;
      double f0 = fg[seg], f1 = fg[seg + 1];
      double a = (f - f0) / (f1 - f0);
      a = std::clamp(a, 0.0, 1.0);
      uni[i] = (1.0 - a) * logp[seg] + a * logp[seg + 1];
    }
    std::vector<double> cep = dct_orthonormal(uni);
    for (int c = 0; c < cfg.n_ceps; ++c) stat.at(t, c) = cep[c];
  }
  return append_deltas(stat, cfg.delta_window);
}

struct NormStats {
  std::vector<double> mean;
  std::vector<double> stddev;
};

inline NormStats compute_norm_stats(const FeatureMatrix& feats,
                                    double std_floor = 1e-8) {
  NormStats s;
  s.mean.assign(feats.cols, 0.0);
  s.stddev.assign(feats.cols, 0.0);
  if (feats.rows == 0) throw ValidationError("compute_norm_stats: empty matrix");
  for (std::size_t t = 0; t < feats.rows; ++t)
    for (std::size_t c = 0; c < feats.cols; ++c) s.mean[c] += feats.at(t, c);
  for (double& m : s.mean) m /= static_cast<double>(feats.rows);
  for (std::size_t t = 0; t < feats.rows; ++t)
    for (std::size_t c = 0; c < feats.cols; ++c) {
      double d = feats.at(t, c) - s.mean[c];
      s.stddev[c] += d * d;
    }
  for (double& v : s.stddev)
    v = std::max(std::sqrt(v / static_cast<double>(feats.rows)), std_floor);
  return s;
}

inline FeatureMatrix mean_variance_normalize(const FeatureMatrix& feats,
                                             const NormStats& stats) {
  if (stats.mean.size() != feats.cols)
    throw ValidationError("mean_variance_normalize: dimension mismatch");
  FeatureMatrix out(feats.rows, feats.cols);
  for (std::size_t t = 0; t < feats.rows; ++t)
    for (std::size_t c = 0; c < feats.cols; ++c)
      out.at(t, c) = (feats.at(t, c) - stats.mean[c]) / stats.stddev[c];
  return out;
}

// Text feature cache: header "dims hop_ms", then one row per frame.
inline void write_feature_cache(const FeatureMatrix& feats, double hop_ms,
                                const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error("write_feature_cache: cannot open " + path);
  f.precision(12);
  f << feats.cols << " " << hop_ms << "\n";
  for (std::size_t t = 0; t < feats.rows; ++t) {
    for (std::size_t c = 0; c < feats.cols; ++c)
      f << (c ? " " : "") << feats.at(t, c);
    f << "\n";
  }
}

inline FeatureMatrix read_feature_cache(const std::string& path, double* hop_ms = nullptr) {
  std::ifstream f(path);
  if (!f) throw Error("read_feature_cache: cannot open " + path);
  std::size_t dims = 0;
  double hop = 0.0;
  if (!(f >> dims >> hop)) throw ValidationError("read_feature_cache: bad header");
  if (hop_ms) *hop_ms = hop;
  std::vector<double> data;
  double v;
  while (f >> v) data.push_back(v);
  if (dims == 0 || data.size() % dims != 0)
    throw ValidationError("read_feature_cache: row size mismatch");
  FeatureMatrix out(data.size() / dims, dims);
  out.data = std::move(data);
  return out;
}

}  // namespace spoofaudit

#endif  // SPOOFAUDIT_DSP_HPP
