#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <numbers>
#include <random>

#include "spoofaudit/vad.hpp"

using namespace spoofaudit;

namespace {

// tone burst embedded in near-silence: [pad_before | tone | pad_after]
AudioSignal tone_burst(double pad_before_ms, double tone_ms, double pad_after_ms,
                       std::uint64_t seed = 0, int fs = 16000) {
  AudioSignal sig;
  sig.sample_rate = fs;
  std::size_t nb = ms_to_samples(pad_before_ms, fs);
  std::size_t nt = ms_to_samples(tone_ms, fs);
  std::size_t na = ms_to_samples(pad_after_ms, fs);
  sig.samples.assign(nb + nt + na, 0.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.0005);
  for (double& s : sig.samples) s = g(rng);
  for (std::size_t i = 0; i < nt; ++i)
    sig.samples[nb + i] += 0.5 * std::sin(2.0 * std::numbers::pi * 200.0 * i / fs);
  return sig;
}

}  // namespace

TEST_CASE("detect_endpoints on constructed burst") {
  VadConfig cfg;
  AudioSignal x = tone_burst(300, 1000, 200, 1);
  TimeSpan span = detect_endpoints(x, cfg);
  CHECK(span.start_ms >= 300 - cfg.frame_ms - cfg.hop_ms);
  CHECK(span.start_ms <= 300 + cfg.hop_ms);
  CHECK(span.end_ms >= 1300 - cfg.hop_ms);
  CHECK(span.end_ms <= 1300 + cfg.hop_ms * (cfg.hangover_frames + 1) + cfg.frame_ms);
}

TEST_CASE("detect_endpoints error paths") {
  VadConfig cfg;
  AudioSignal zeros;
  zeros.sample_rate = 16000;
  zeros.samples.assign(16000, 0.0);
  CHECK_THROWS_AS(detect_endpoints(zeros, cfg), NoSpeechError);

  AudioSignal tiny;
  tiny.sample_rate = 16000;
  tiny.samples.assign(100, 0.5);
  CHECK_THROWS_AS(detect_endpoints(tiny, cfg), ValidationError);
}

TEST_CASE("speech from sample zero") {
  VadConfig cfg;
  AudioSignal x = tone_burst(0, 1000, 200, 2);
  TimeSpan span = detect_endpoints(x, cfg);
  CHECK(span.start_ms <= cfg.hop_ms);
}

TEST_CASE("trim_to_endpoints") {
  AudioSignal x = tone_burst(300, 1000, 200, 3);
  CHECK(trim_to_endpoints(x, {0, x.duration_ms()}).samples == x.samples);

  VadConfig cfg;
  TimeSpan span = detect_endpoints(x, cfg);
  AudioSignal trimmed = trim_to_endpoints(x, span);
  // leading zeros removed: first 50 ms of the trimmed signal carries energy
  double energy = 0.0;
  std::size_t n = ms_to_samples(50.0, 16000);
  for (std::size_t i = 0; i < n; ++i) energy += trimmed.samples[i] * trimmed.samples[i];
  CHECK(energy / n > 0.01);

  CHECK_THROWS_AS(trim_to_endpoints(x, {0, x.duration_ms() + 1}), ValidationError);
}

TEST_CASE("detect-trim idempotence") {
  VadConfig cfg;
  AudioSignal x = tone_burst(400, 1200, 300, 4);
  AudioSignal t1 = trim_to_endpoints(x, detect_endpoints(x, cfg));
  TimeSpan again = detect_endpoints(t1, cfg);
  AudioSignal t2 = trim_to_endpoints(t1, again);
  CHECK(std::abs(t1.duration_ms() - t2.duration_ms()) <= 2.0 * cfg.hop_ms + cfg.frame_ms);
  CHECK(again.start_ms <= 2.0 * cfg.hop_ms);
}

TEST_CASE("padding monotonicity") {
  VadConfig cfg;
  AudioSignal x = tone_burst(200, 800, 100, 5);
  TimeSpan base = detect_endpoints(x, cfg);
  double base_dur = base.end_ms - base.start_ms;

  AudioSignal padded = tone_burst(500, 800, 400, 5);
  // same tone content as x (same seed pattern differs in pads only is not
  // guaranteed by the constructor, so rebuild explicitly)
  TimeSpan p = detect_endpoints(padded, cfg);
  CHECK(std::abs((p.end_ms - p.start_ms) - base_dur) <= 2.0 * cfg.hop_ms + cfg.frame_ms);
}

TEST_CASE("annotation parsing") {
  namespace fs = std::filesystem;
  std::string path = (fs::temp_directory_path() / "sa_ann.txt").string();
  {
    std::ofstream f(path);
    f << "# comment line\n";
    f << "T_000001 312.5 1840.0\n";
    f << "T_000002 0.0 900.0  # trailing comment\n";
  }
  auto anns = parse_annotations(path);
  REQUIRE(anns.size() == 2);
  CHECK(anns.at("T_000001").speech_start_ms == 312.5);
  CHECK(anns.at("T_000001").speech_end_ms == 1840.0);

  {
    std::ofstream f(path);
    f << "T_000001 312.5 1840.0\nT_000001 1.0 2.0\n";
  }
  CHECK_THROWS_WITH(parse_annotations(path),
                    Catch::Matchers::ContainsSubstring("T_000001"));

  {
    std::ofstream f(path);
    f << "T_000001 312.5\n";
  }
  CHECK_THROWS_WITH(parse_annotations(path),
                    Catch::Matchers::ContainsSubstring("line 1"));
  fs::remove(path);
}

TEST_CASE("annotation round trip over random sets") {
  namespace fs = std::filesystem;
  std::string path = (fs::temp_directory_path() / "sa_ann_rt.txt").string();
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 4000.0);
  std::map<std::string, EndpointAnnotation> anns;
  for (int i = 0; i < 1000; ++i) {
    EndpointAnnotation a;
    a.file_id = "F_" + std::to_string(i);
    double s = u(rng);
    a.speech_start_ms = std::round(s * 1000) / 1000;
    a.speech_end_ms = a.speech_start_ms + 1.0 + std::round(u(rng) * 1000) / 1000;
    anns[a.file_id] = a;
  }
  write_annotations(anns, path);
  auto back = parse_annotations(path);
  REQUIRE(back.size() == anns.size());
  for (const auto& [id, a] : anns) {
    CHECK(back.at(id).speech_start_ms == Catch::Approx(a.speech_start_ms).margin(1e-5));
    CHECK(back.at(id).speech_end_ms == Catch::Approx(a.speech_end_ms).margin(1e-5));
  }
  fs::remove(path);
}
