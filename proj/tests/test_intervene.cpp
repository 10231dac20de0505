#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "spoofaudit/intervene.hpp"

using namespace spoofaudit;

namespace {

AudioSignal random_signal(std::size_t n, std::uint64_t seed, int fs = 16000) {
  AudioSignal sig;
  sig.sample_rate = fs;
  sig.samples.resize(n);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.8, 0.8);
  for (double& s : sig.samples) s = u(rng);
  return sig;
}

}  // namespace

TEST_CASE("extract_signature") {
  AudioSignal x = random_signal(16000, 1);
  AudioSignal sig = extract_signature(x, 100.0);
  REQUIRE(sig.size() == 1600);
  CHECK(std::equal(sig.samples.begin(), sig.samples.end(), x.samples.begin()));

  CHECK(extract_signature(x, x.duration_ms()).samples == x.samples);

  AudioSignal pre = random_signal(1600, 2);
  AudioSignal joined = concat(pre, x);
  CHECK(extract_signature(joined, 100.0).samples == pre.samples);

  AudioSignal tiny = random_signal(100, 3);
  CHECK_THROWS_AS(extract_signature(tiny, 100.0), ValidationError);
}

TEST_CASE("make_white_noise determinism and variance") {
  AudioSignal a = make_white_noise(100.0, 16000, 42);
  AudioSignal b = make_white_noise(100.0, 16000, 42);
  CHECK(a.samples == b.samples);
  CHECK(a.size() == 1600);
  CHECK(sample_variance(a) == Catch::Approx(1.0).margin(1e-12));

  AudioSignal c = make_white_noise(100.0, 16000, 43);
  CHECK(a.samples != c.samples);
}

TEST_CASE("scale_noise_for_snr implements the closed form") {
  // Var(X)=1, SNR=0 -> unit-variance output
  AudioSignal ref = make_white_noise(200.0, 16000, 1);
  AudioSignal noise = make_white_noise(100.0, 16000, 2);
  AudioSignal out = scale_noise_for_snr(noise, ref, 0.0);
  CHECK(sample_variance(out) == Catch::Approx(sample_variance(ref)).margin(1e-9));

  // Var(X)=4, SNR=2 -> alpha=0.2
  AudioSignal ref4 = ref;
  for (double& s : ref4.samples) s *= 2.0;
  AudioSignal out4 = scale_noise_for_snr(noise, ref4, 2.0);
  double alpha = std::sqrt(sample_variance(out4) / 1.0);
  CHECK(alpha == Catch::Approx(0.2).margin(1e-9));

  // variance ratio identity at SNR 6
  AudioSignal x = random_signal(20000, 3);
  AudioSignal o6 = scale_noise_for_snr(noise, x, 6.0);
  CHECK(sample_variance(o6) / sample_variance(x) ==
        Catch::Approx(1e-6).epsilon(1e-9));

  AudioSignal flat;
  flat.sample_rate = 16000;
  flat.samples.assign(1000, 0.3);
  CHECK_THROWS_AS(scale_noise_for_snr(noise, flat, 0.0), ValidationError);
}

TEST_CASE("insert_segment") {
  AudioSignal x = random_signal(8000, 4);
  AudioSignal seg = random_signal(1600, 5);

  AudioSignal at_start = insert_segment(x, seg, InsertLocation::kStart);
  CHECK(at_start.samples == concat(seg, x).samples);

  AudioSignal r1 = insert_segment(x, seg, InsertLocation::kRandom, 99);
  AudioSignal r2 = insert_segment(x, seg, InsertLocation::kRandom, 99);
  CHECK(r1.samples == r2.samples);
  CHECK(r1.size() == x.size() + seg.size());

  // removing the inserted range recovers the original
  for (std::size_t off = 0; off + 1 < r1.size(); ++off) {
    if (std::equal(seg.samples.begin(), seg.samples.end(), r1.samples.begin() + off)) {
      std::vector<double> rec(r1.samples.begin(), r1.samples.begin() + off);
      rec.insert(rec.end(), r1.samples.begin() + off + seg.size(), r1.samples.end());
      CHECK(rec == x.samples);
      break;
    }
  }

  AudioSignal other = random_signal(100, 6, 8000);
  CHECK_THROWS_AS(insert_segment(x, other, InsertLocation::kStart), ValidationError);
}

TEST_CASE("apply_intervention kinds and length bookkeeping") {
  AudioSignal x = random_signal(16000, 7);
  SideInfo side;
  side.signature = random_signal(1600, 8);
  side.endpoints["f1"] = {"f1", 200.0, 800.0, EndpointAnnotation::Source::kManual};

  Intervention rp;
  rp.kind = InterventionKind::kRemovePrefix;
  rp.prefix_ms = 100.0;
  AudioSignal y = apply_intervention(rp, x, side, "f1");
  CHECK(y.size() == 16000 - 1600);
  CHECK(std::equal(y.samples.begin(), y.samples.end(), x.samples.begin() + 1600));

  Intervention te;
  te.kind = InterventionKind::kTrimEndpoints;
  AudioSignal t = apply_intervention(te, x, side, "f1");
  CHECK(t.size() == ms_to_samples(600.0, 16000));

  Intervention ps;
  ps.kind = InterventionKind::kPrependSignature;
  AudioSignal p = apply_intervention(ps, x, side, "f1");
  CHECK(p.size() == x.size() + 1600);
  CHECK(std::equal(side.signature.samples.begin(), side.signature.samples.end(),
                   p.samples.begin()));

  Intervention is;
  is.kind = InterventionKind::kInjectSilence;
  is.duration_ms = 100.0;
  is.location = InsertLocation::kStart;
  AudioSignal s = apply_intervention(is, x, side, "f1");
  REQUIRE(s.size() == x.size() + 1600);
  for (std::size_t i = 0; i < 1600; ++i) CHECK(s.samples[i] == 0.0);
  CHECK(std::equal(x.samples.begin(), x.samples.end(), s.samples.begin() + 1600));

  Intervention in_noise;
  in_noise.kind = InterventionKind::kInjectNoise;
  in_noise.duration_ms = 100.0;
  in_noise.snr_exponent = 0.0;
  in_noise.location = InsertLocation::kStart;
  AudioSignal nz = apply_intervention(in_noise, x, side, "f1");
  CHECK(nz.size() == x.size() + 1600);

  Intervention tp;
  tp.kind = InterventionKind::kTrimThenPrepend;
  AudioSignal tpp = apply_intervention(tp, x, side, "f1");
  CHECK(tpp.size() == ms_to_samples(600.0, 16000) + 1600);

  // missing side info per kind
  SideInfo none;
  CHECK_THROWS_AS(apply_intervention(te, x, none, "f1"), PrerequisiteError);
  CHECK_THROWS_AS(apply_intervention(ps, x, none, "f1"), PrerequisiteError);

  AudioSignal tiny = random_signal(800, 9);
  CHECK_THROWS_AS(apply_intervention(rp, tiny, side, "f1"), ValidationError);
}

TEST_CASE("randomized kinds reproduce per (seed, file_id)") {
  AudioSignal x = random_signal(16000, 10);
  SideInfo side;
  Intervention iv;
  iv.kind = InterventionKind::kInjectNoise;
  iv.duration_ms = 100.0;
  iv.location = InsertLocation::kRandom;
  iv.seed = 7;
  AudioSignal a = apply_intervention(iv, x, side, "fileA");
  AudioSignal b = apply_intervention(iv, x, side, "fileA");
  CHECK(a.samples == b.samples);
  AudioSignal c = apply_intervention(iv, x, side, "fileB");
  CHECK(a.samples != c.samples);
}

TEST_CASE("interventions never touch samples outside the edit region") {
  AudioSignal x = random_signal(16000, 11);
  SideInfo side;
  Intervention iv;
  iv.kind = InterventionKind::kInjectSilence;
  iv.duration_ms = 50.0;
  iv.location = InsertLocation::kRandom;
  iv.seed = 3;
  AudioSignal y = apply_intervention(iv, x, side, "f");
  std::size_t seg = ms_to_samples(50.0, 16000);
  REQUIRE(y.size() == x.size() + seg);
  // locate the zero run, then check both flanks bit-exactly
  std::size_t off = 0;
  while (off < y.size() && y.samples[off] != 0.0) ++off;
  CHECK(std::equal(y.samples.begin(), y.samples.begin() + off, x.samples.begin()));
  CHECK(std::equal(y.samples.begin() + off + seg, y.samples.end(),
                   x.samples.begin() + off));
}

TEST_CASE("noise mixing variant keeps length") {
  AudioSignal x = random_signal(16000, 12);
  SideInfo side;
  Intervention iv;
  iv.kind = InterventionKind::kInjectNoise;
  iv.duration_ms = 100.0;
  iv.mix_noise = true;
  iv.location = InsertLocation::kRandom;
  AudioSignal y = apply_intervention(iv, x, side, "f");
  CHECK(y.size() == x.size());
}
