#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "spoofaudit/artefact.hpp"

using namespace spoofaudit;

namespace {

AudioSignal ambient(double dur_s, std::uint64_t seed, double std_dev = 0.0005,
                    int fs = 16000) {
  AudioSignal sig;
  sig.sample_rate = fs;
  sig.samples.resize(s_to_samples(dur_s, fs));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, std_dev);
  for (double& s : sig.samples) s = g(rng);
  return sig;
}

void add_tone(AudioSignal& sig, double freq, double from_ms, double to_ms,
              double amp) {
  std::size_t a = ms_to_samples(from_ms, sig.sample_rate);
  std::size_t b = std::min(ms_to_samples(to_ms, sig.sample_rate), sig.size());
  for (std::size_t i = a; i < b; ++i)
    sig.samples[i] += amp * std::sin(2.0 * std::numbers::pi * freq * (i - a) /
                                     sig.sample_rate);
}

}  // namespace

TEST_CASE("detect_leading_silence") {
  AudioSignal x;
  x.sample_rate = 16000;
  x.samples.assign(288, 0.0);
  for (int i = 0; i < 1600; ++i) x.samples.push_back(0.1 * ((i % 2) ? 1 : -1));
  CHECK(detect_leading_silence(x) == Catch::Approx(18.0));

  AudioSignal loud;
  loud.sample_rate = 16000;
  loud.samples.assign(100, 0.5);
  CHECK(detect_leading_silence(loud) == 0.0);

  AudioSignal zeros;
  zeros.sample_rate = 16000;
  zeros.samples.assign(16000, 0.0);
  CHECK(detect_leading_silence(zeros) == Catch::Approx(1000.0));
}

TEST_CASE("detect_burst_click") {
  // injected 1 ms full-scale impulse at 20 ms over near-silence
  AudioSignal x = ambient(0.5, 1);
  std::size_t at = ms_to_samples(20.0, 16000);
  for (std::size_t i = 0; i < 16; ++i) x.samples[at + i] = (i % 2) ? 0.95 : -0.95;
  BcsResult r = detect_burst_click(x);
  CHECK(r.detected);
  CHECK(r.score > 6.0);
  CHECK(std::abs(r.onset_ms - 20.0) < 5.0);

  // smooth onset ramped over 200 ms -> no click
  AudioSignal ramp = ambient(0.5, 2);
  for (std::size_t i = 0; i < ramp.size(); ++i) {
    double t = static_cast<double>(i) / 16000.0;
    double env = std::min(t / 0.2, 1.0);
    ramp.samples[i] += 0.5 * env * std::sin(2.0 * std::numbers::pi * 180.0 * t);
  }
  CHECK_FALSE(detect_burst_click(ramp).detected);

  AudioSignal zeros;
  zeros.sample_rate = 16000;
  zeros.samples.assign(8000, 0.0);
  CHECK_FALSE(detect_burst_click(zeros).detected);
}

TEST_CASE("detect_dtmf over all sixteen keys") {
  for (int row = 0; row < 4; ++row)
    for (int col = 0; col < 4; ++col) {
      AudioSignal x = ambient(0.5, 10 + row * 4 + col);
      add_tone(x, kDtmfLow[row], 0.0, 80.0, 0.4);
      add_tone(x, kDtmfHigh[col], 0.0, 80.0, 0.4);
      DtmfResult r = detect_dtmf(x);
      REQUIRE(r.key.has_value());
      CHECK(*r.key == kDtmfKeys[row][col]);
    }
}

TEST_CASE("detect_dtmf rejects noise, 100 trials") {
  int false_positives = 0;
  for (int trial = 0; trial < 100; ++trial) {
    AudioSignal x = ambient(0.5, 100 + trial, 0.2);
    if (detect_dtmf(x).key.has_value()) ++false_positives;
  }
  CHECK(false_positives == 0);
}

TEST_CASE("detect_dtmf survives speech overlap at 0 dB") {
  AudioSignal x = ambient(0.5, 3);
  // speech-like harmonic content at comparable power
  for (std::size_t i = 0; i < x.size(); ++i) {
    double t = static_cast<double>(i) / 16000.0;
    x.samples[i] += 0.28 * std::sin(2.0 * std::numbers::pi * 150.0 * t) +
                    0.2 * std::sin(2.0 * std::numbers::pi * 300.0 * t) +
                    0.12 * std::sin(2.0 * std::numbers::pi * 450.0 * t);
  }
  add_tone(x, kDtmfLow[0], 40.0, 140.0, 0.4);   // 697 Hz
  add_tone(x, kDtmfHigh[0], 40.0, 140.0, 0.4);  // 1209 Hz
  DtmfResult r = detect_dtmf(x);
  REQUIRE(r.key.has_value());
  CHECK(*r.key == '1');
}

TEST_CASE("has_early_speech") {
  VadConfig vad;
  AudioSignal early = ambient(2.0, 4);
  add_tone(early, 200.0, 50.0, 1500.0, 0.5);
  CHECK(has_early_speech(early, vad));

  AudioSignal late = ambient(2.0, 5);
  add_tone(late, 200.0, 400.0, 1800.0, 0.5);
  CHECK_FALSE(has_early_speech(late, vad));

  AudioSignal zeros;
  zeros.sample_rate = 16000;
  zeros.samples.assign(32000, 0.0);
  CHECK_FALSE(has_early_speech(zeros, vad));
}

TEST_CASE("artefact list round trip and validation") {
  namespace fs = std::filesystem;
  std::string path = (fs::temp_directory_path() / "sa_art.txt").string();
  std::vector<ArtefactRecord> recs = {{"T_000001", "BCS", 20.0, 2.0},
                                      {"T_000002", "DTMF", 100.0, 80.0},
                                      {"T_000003", "SILENCE", 0.0, 50.0}};
  write_artefact_list(recs, path);
  auto back = parse_artefact_list(path);
  REQUIRE(back.size() == 3);
  CHECK(back[1].kind == "DTMF");
  CHECK(back[1].onset_ms == Catch::Approx(100.0));

  {
    std::ofstream f(path);
    f << "T_000001 CLICK 0 1\n";
  }
  CHECK_THROWS_AS(parse_artefact_list(path), ValidationError);
  fs::remove(path);
}

TEST_CASE("detectors are deterministic") {
  AudioSignal x = ambient(0.5, 6, 0.1);
  add_tone(x, 697.0, 0.0, 100.0, 0.4);
  add_tone(x, 1336.0, 0.0, 100.0, 0.4);
  AuditConfig cfg;
  ArtefactFlags a = audit_file(x, "f", cfg);
  ArtefactFlags b = audit_file(x, "f", cfg);
  CHECK(a.leading_silence_ms == b.leading_silence_ms);
  CHECK(a.has_bcs_start == b.has_bcs_start);
  CHECK(a.dtmf_key == b.dtmf_key);
  CHECK(a.early_speech_300ms == b.early_speech_300ms);
}
