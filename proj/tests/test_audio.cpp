#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <random>

#include "spoofaudit/audio.hpp"
#include "spoofaudit/wav.hpp"

using namespace spoofaudit;

namespace {

AudioSignal random_signal(std::size_t n, std::uint64_t seed, int fs = 16000) {
  AudioSignal sig;
  sig.sample_rate = fs;
  sig.samples.resize(n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.99, 0.99);
  for (double& s : sig.samples) s = u(rng);
  return sig;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("slice basics") {
  AudioSignal x = random_signal(16000, 1);
  CHECK(slice(x, {0, 1000}).samples == x.samples);
  CHECK(slice(x, {100, 1000}).size() == 14400);
  CHECK(slice(x, {0, 0}).empty());
  CHECK_THROWS_AS(slice(x, {0, 1001}), ValidationError);
  CHECK_THROWS_AS(slice(x, {500, 400}), ValidationError);
}

TEST_CASE("slice prefix/suffix lengths partition the signal") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    AudioSignal x = random_signal(1000 + rng() % 30000, rng());
    double cut = (rng() % 1000) / 1000.0 * x.duration_ms();
    AudioSignal a = slice(x, {0, cut});
    AudioSignal b = slice(x, {cut, x.duration_ms()});
    CHECK(a.size() + b.size() == x.size());
  }
}

TEST_CASE("concat") {
  AudioSignal x = random_signal(1600, 2);
  AudioSignal empty;
  CHECK(concat(x, empty).samples == x.samples);
  AudioSignal a = random_signal(1600, 3), b = random_signal(14400, 4);
  CHECK(concat(a, b).size() == 16000);
  AudioSignal other = random_signal(100, 5, 8000);
  CHECK_THROWS_AS(concat(a, other), ValidationError);
  // compositional: slicing back the first part recovers it
  AudioSignal joined = concat(a, b);
  CHECK(slice(joined, {0, a.duration_ms()}).samples == a.samples);
}

TEST_CASE("unify_duration") {
  AudioSignal x = random_signal(64000, 6);
  CHECK(unify_duration(x, 4.0).samples == x.samples);

  AudioSignal p = random_signal(16000, 7);
  AudioSignal rep = unify_duration(p, 4.0);
  REQUIRE(rep.size() == 64000);
  for (int k = 0; k < 4; ++k)
    for (std::size_t i = 0; i < 16000; i += 997)
      CHECK(rep.samples[k * 16000 + i] == p.samples[i]);

  AudioSignal longsig = random_signal(80000, 8);
  AudioSignal cut = unify_duration(longsig, 3.0);
  REQUIRE(cut.size() == 48000);
  CHECK(std::equal(cut.samples.begin(), cut.samples.end(), longsig.samples.begin()));

  AudioSignal empty;
  CHECK_THROWS_AS(unify_duration(empty, 1.0), ValidationError);
}

TEST_CASE("unify_duration length property") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 1000; ++trial) {
    std::size_t n = 100 + rng() % 50000;
    double target = 0.01 + (rng() % 5000) / 1000.0;
    AudioSignal x = random_signal(n, rng());
    CHECK(unify_duration(x, target).size() == s_to_samples(target, 16000));
  }
}

TEST_CASE("sample_variance") {
  AudioSignal c;
  c.samples.assign(100, 0.25);
  CHECK(sample_variance(c) == 0.0);

  AudioSignal pm;
  pm.samples = {-1.0, 1.0};
  CHECK(sample_variance(pm) == 1.0);

  AudioSignal one;
  one.samples = {0.5};
  CHECK_THROWS_AS(sample_variance(one), ValidationError);

  // two-pass summation oracle
  AudioSignal x = random_signal(10000, 11);
  long double mean = 0.0L;
  for (double s : x.samples) mean += s;
  mean /= x.size();
  long double acc = 0.0L;
  for (double s : x.samples) acc += (s - mean) * (s - mean);
  double oracle = static_cast<double>(acc / x.size());
  CHECK(sample_variance(x) == Catch::Approx(oracle).epsilon(1e-12));
}

TEST_CASE("sample_variance scaling identity") {
  AudioSignal x = random_signal(5000, 12);
  double v = sample_variance(x);
  for (double a : {0.5, 2.0}) {
    AudioSignal y = x;
    for (double& s : y.samples) s *= a;
    CHECK(sample_variance(y) == Catch::Approx(a * a * v).epsilon(1e-9));
  }
}

TEST_CASE("wav round trip") {
  // zero file
  AudioSignal zeros;
  zeros.sample_rate = 16000;
  zeros.samples.assign(16000, 0.0);
  std::string path = temp_path("sa_zeros.wav");
  save_wav(zeros, path);
  AudioSignal back = load_wav(path);
  REQUIRE(back.size() == 16000);
  CHECK(back.sample_rate == 16000);
  for (double s : back.samples) CHECK(s == 0.0);

  // data chunk size: 1 s of zeros at 16 kHz -> 32000 bytes
  CHECK(std::filesystem::file_size(path) == 44 + 32000);

  // single full-scale sample
  AudioSignal fs1;
  fs1.sample_rate = 16000;
  fs1.samples = {32767.0 / 32768.0};
  save_wav(fs1, path);
  AudioSignal b1 = load_wav(path);
  REQUIRE(b1.size() == 1);
  CHECK(b1.samples[0] == Catch::Approx(0.999969482421875).margin(1e-12));

  std::filesystem::remove(path);
}

TEST_CASE("wav round trip oracle over random signals") {
  std::string path = temp_path("sa_rt.wav");
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    AudioSignal x = random_signal(10 + rng() % 4000, rng());
    save_wav(x, path);
    AudioSignal y = load_wav(path);
    REQUIRE(y.size() == x.size());
    double max_err = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
      max_err = std::max(max_err, std::abs(x.samples[i] - y.samples[i]));
    CHECK(max_err <= 1.0 / 32768.0);
  }
  std::filesystem::remove(path);
}

TEST_CASE("wav error paths") {
  CHECK_THROWS_AS(load_wav(temp_path("sa_does_not_exist.wav")), WavIoError);

  AudioSignal x = random_signal(16, 14);
  CHECK_THROWS_AS(save_wav(x, temp_path("no_such_dir/x.wav")), WavIoError);

  // garbage header
  std::string bad = temp_path("sa_bad.wav");
  {
    std::ofstream f(bad, std::ios::binary);
    f << "not a wav file at all.....";
  }
  CHECK_THROWS_AS(load_wav(bad), WavFormatError);

  // valid container, unsupported encoding (stereo)
  std::string stereo = temp_path("sa_stereo.wav");
  {
    save_wav(x, stereo);
    std::fstream f(stereo, std::ios::binary | std::ios::in | std::ios::out);
    f.seekp(22);
    char two[2] = {2, 0};
    f.write(two, 2);
  }
  CHECK_THROWS_AS(load_wav(stereo), WavUnsupportedError);
  std::filesystem::remove(bad);
  std::filesystem::remove(stereo);
}
