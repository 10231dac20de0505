#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "spoofaudit/dsp.hpp"

using namespace spoofaudit;

namespace {

AudioSignal sine(double freq, double dur_s, int fs = 16000, double amp = 0.5) {
  AudioSignal sig;
  sig.sample_rate = fs;
  sig.samples.resize(s_to_samples(dur_s, fs));
  for (std::size_t i = 0; i < sig.size(); ++i)
    sig.samples[i] = amp * std::sin(2.0 * std::numbers::pi * freq * i / fs);
  return sig;
}

AudioSignal noise(double dur_s, std::uint64_t seed, int fs = 16000) {
  AudioSignal sig;
  sig.sample_rate = fs;
  sig.samples.resize(s_to_samples(dur_s, fs));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.2);
  for (double& s : sig.samples) s = g(rng);
  return sig;
}

// short CQCC config for fast tests
CqccConfig fast_cqcc() {
  CqccConfig cfg;
  cfg.f_min_hz = 125.0;
  cfg.bins_per_octave = 12;
  cfg.n_uniform_bins = 64;
  cfg.n_ceps = 20;
  cfg.frame_hop_ms = 20.0;
  return cfg;
}

}  // namespace

TEST_CASE("power_spectrogram frame count and tone peak") {
  AudioSignal x = noise(4.0, 1);
  Spectrogram sp = power_spectrogram(x, 1728, 108.0, 10.0);
  CHECK(sp.values.rows == 390);  // floor((64000-1728)/160)+1
  CHECK(sp.values.cols == 865);

  AudioSignal tone = sine(1000.0, 1.0);
  Spectrogram tsp = power_spectrogram(tone, 1728, 108.0, 10.0);
  std::size_t best = 0;
  for (std::size_t b = 1; b < tsp.values.cols; ++b)
    if (tsp.values.at(0, b) > tsp.values.at(0, best)) best = b;
  double bin_width = 16000.0 / 1728.0;
  CHECK(std::abs(tsp.bin_frequencies[best] - 1000.0) <= bin_width);

  AudioSignal zeros;
  zeros.sample_rate = 16000;
  zeros.samples.assign(16000, 0.0);
  Spectrogram zsp = power_spectrogram(zeros, 512, 32.0, 10.0);
  for (double v : zsp.values.data) CHECK(v == 0.0);

  AudioSignal tiny;
  tiny.sample_rate = 16000;
  tiny.samples.assign(100, 0.1);
  CHECK_THROWS_AS(power_spectrogram(tiny, 512, 32.0, 10.0), ValidationError);
}

TEST_CASE("power_spectrogram Parseval on a full-length frame") {
  AudioSignal x = noise(0.032, 2);
  int n_fft = 512;
  Spectrogram sp = power_spectrogram(x, n_fft, 32.0, 32.0);
  REQUIRE(sp.values.rows >= 1);
  // time-domain energy of the windowed frame
  std::vector<double> w = hann_window(x.size());
  double time_energy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i)
    time_energy += x.samples[i] * w[i] * x.samples[i] * w[i];
  // frequency-domain energy: sum over full spectrum / N
  double freq_energy = 0.0;
  for (std::size_t b = 0; b < sp.values.cols; ++b) {
    double v = sp.values.at(0, b);
    bool shared = b == 0 || b == sp.values.cols - 1;  // DC/Nyquist not doubled
    freq_energy += shared ? v : 2.0 * v;
  }
  freq_energy /= n_fft;
  CHECK(freq_energy == Catch::Approx(time_energy).epsilon(1e-6));
}

TEST_CASE("cqt tone oracle: pure tone at f_min*2 peaks at bin B") {
  CqccConfig cfg = fast_cqcc();
  AudioSignal tone = sine(cfg.f_min_hz * 2.0, 1.0);
  Spectrogram sp = cqt_spectrogram(tone, cfg);
  REQUIRE(sp.values.rows >= 1);
  std::size_t best = 0;
  for (std::size_t b = 1; b < sp.values.cols; ++b)
    if (sp.values.at(0, b) > sp.values.at(0, best)) best = b;
  CHECK(best == static_cast<std::size_t>(cfg.bins_per_octave));
}

TEST_CASE("cqt zero signal and power positivity") {
  CqccConfig cfg = fast_cqcc();
  AudioSignal zeros;
  zeros.sample_rate = 16000;
  zeros.samples.assign(16000, 0.0);
  Spectrogram sp = cqt_spectrogram(zeros, cfg);
  for (double v : sp.values.data) CHECK(v == 0.0);

  AudioSignal n = noise(0.8, 3);
  Spectrogram nsp = cqt_spectrogram(n, cfg);
  for (double v : nsp.values.data) CHECK(v >= 0.0);
}

TEST_CASE("cqt white-noise flatness after per-Hz normalization") {
  CqccConfig cfg = fast_cqcc();
  std::vector<double> mean_power;
  for (int trial = 0; trial < 100; ++trial) {
    AudioSignal n = noise(0.6, 100 + trial);
    Spectrogram sp = cqt_spectrogram(n, cfg);
    if (mean_power.empty()) mean_power.assign(sp.values.cols, 0.0);
    for (std::size_t b = 0; b < sp.values.cols; ++b) {
      double acc = 0.0;
      for (std::size_t t = 0; t < sp.values.rows; ++t) acc += sp.values.at(t, b);
      mean_power[b] += acc / sp.values.rows;
    }
  }
  // normalize by bin bandwidth (proportional to centre frequency at fixed Q)
  double q = 1.0 / (std::pow(2.0, 1.0 / cfg.bins_per_octave) - 1.0);
  double lo = 1e300, hi = 0.0;
  AudioSignal probe = noise(0.6, 100);
  Spectrogram sp = cqt_spectrogram(probe, cfg);
  for (std::size_t b = 0; b < mean_power.size(); ++b) {
    double norm = mean_power[b] / (sp.bin_frequencies[b] / q);
    lo = std::min(lo, norm);
    hi = std::max(hi, norm);
  }
  CHECK(hi / lo < 10.0);
}

TEST_CASE("cqt frame length error") {
  CqccConfig cfg = fast_cqcc();
  cfg.frame_win_ms = 20.0;  // lowest kernel at 125 Hz spans ~134 ms
  AudioSignal x = noise(1.0, 4);
  CHECK_THROWS_AS(cqt_spectrogram(x, cfg), ValidationError);
}

TEST_CASE("cqcc dims and degenerate inputs") {
  CqccConfig cfg = fast_cqcc();
  AudioSignal x = noise(1.0, 5);
  FeatureMatrix f = cqcc(x, cfg);
  CHECK(f.cols == 60);
  for (double v : f.data) CHECK(std::isfinite(v));

  // all-zero input: log floor keeps everything finite
  AudioSignal zeros;
  zeros.sample_rate = 16000;
  zeros.samples.assign(16000, 0.0);
  FeatureMatrix fz = cqcc(zeros, cfg);
  for (double v : fz.data) CHECK(std::isfinite(v));
}

TEST_CASE("dct orthonormal and constant-input property") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(32);
    for (double& v : x) v = u(rng);
    std::vector<double> back = idct_orthonormal(dct_orthonormal(x));
    for (std::size_t i = 0; i < x.size(); ++i)
      CHECK(back[i] == Catch::Approx(x[i]).margin(1e-9));
  }
  // DCT of a constant vector: only c0 nonzero
  std::vector<double> c(64, 3.7);
  std::vector<double> y = dct_orthonormal(c);
  for (std::size_t k = 1; k < y.size(); ++k) CHECK(std::abs(y[k]) < 1e-9);
}

TEST_CASE("append_deltas") {
  // constant sequence -> zero deltas
  FeatureMatrix c(10, 3);
  for (double& v : c.data) v = 2.0;
  FeatureMatrix cd = append_deltas(c, 2);
  REQUIRE(cd.cols == 9);
  for (std::size_t t = 0; t < cd.rows; ++t)
    for (std::size_t j = 3; j < 9; ++j) CHECK(cd.at(t, j) == 0.0);

  // linear ramp -> delta 1 at interior frames
  FeatureMatrix ramp(10, 1);
  for (std::size_t t = 0; t < 10; ++t) ramp.at(t, 0) = static_cast<double>(t);
  FeatureMatrix rd = append_deltas(ramp, 2);
  for (std::size_t t = 2; t < 8; ++t)
    CHECK(rd.at(t, 1) == Catch::Approx(1.0).margin(1e-12));

  // random 5-frame input matches the direct formula
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  FeatureMatrix x(5, 2);
  for (double& v : x.data) v = u(rng);
  int w = 2;
  FeatureMatrix dx = append_deltas(x, w);
  double denom = 0.0;
  for (int k = 1; k <= w; ++k) denom += 2.0 * k * k;
  for (std::size_t t = 0; t < 5; ++t)
    for (std::size_t c2 = 0; c2 < 2; ++c2) {
      double acc = 0.0;
      for (int k = 1; k <= w; ++k) {
        std::size_t tp = std::min<std::size_t>(t + k, 4);
        std::size_t tm = t >= static_cast<std::size_t>(k) ? t - k : 0;
        acc += k * (x.at(tp, c2) - x.at(tm, c2));
      }
      CHECK(dx.at(t, 2 + c2) == Catch::Approx(acc / denom).margin(1e-12));
    }
}

TEST_CASE("mean_variance_normalize") {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g(3.0, 2.0);
  FeatureMatrix x(200, 4);
  for (double& v : x.data) v = g(rng);
  NormStats st = compute_norm_stats(x);
  FeatureMatrix y = mean_variance_normalize(x, st);
  for (std::size_t c = 0; c < 4; ++c) {
    double mean = 0.0, var = 0.0;
    for (std::size_t t = 0; t < y.rows; ++t) mean += y.at(t, c);
    mean /= y.rows;
    for (std::size_t t = 0; t < y.rows; ++t) {
      double d = y.at(t, c) - mean;
      var += d * d;
    }
    var /= y.rows;
    CHECK(mean == Catch::Approx(0.0).margin(1e-9));
    CHECK(var == Catch::Approx(1.0).epsilon(1e-9));
  }

  // identity stats
  NormStats id;
  id.mean.assign(4, 0.0);
  id.stddev.assign(4, 1.0);
  FeatureMatrix same = mean_variance_normalize(x, id);
  CHECK(same.data == x.data);

  // round-trip denormalize
  FeatureMatrix denorm(y.rows, y.cols);
  for (std::size_t t = 0; t < y.rows; ++t)
    for (std::size_t c = 0; c < y.cols; ++c)
      denorm.at(t, c) = y.at(t, c) * st.stddev[c] + st.mean[c];
  for (std::size_t i = 0; i < x.data.size(); ++i)
    CHECK(denorm.data[i] == Catch::Approx(x.data[i]).margin(1e-9));

  NormStats wrong;
  wrong.mean.assign(3, 0.0);
  wrong.stddev.assign(3, 1.0);
  CHECK_THROWS_AS(mean_variance_normalize(x, wrong), ValidationError);
}

TEST_CASE("feature cache round trip") {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  FeatureMatrix x(17, 6);
  for (double& v : x.data) v = u(rng);
  std::string path =
      (std::filesystem::temp_directory_path() / "sa_feat.txt").string();
  write_feature_cache(x, 10.0, path);
  double hop = 0.0;
  FeatureMatrix y = read_feature_cache(path, &hop);
  CHECK(hop == 10.0);
  REQUIRE(y.rows == x.rows);
  REQUIRE(y.cols == x.cols);
  for (std::size_t i = 0; i < x.data.size(); ++i)
    CHECK(y.data[i] == Catch::Approx(x.data[i]).margin(1e-6));
  std::filesystem::remove(path);
}

TEST_CASE("frame count determinism") {
  CqccConfig cfg = fast_cqcc();
  AudioSignal a = noise(1.3, 10), b = noise(1.3, 11);
  CHECK(cqcc(a, cfg).rows == cqcc(b, cfg).rows);
}
