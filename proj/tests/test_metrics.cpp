#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <random>

#include "spoofaudit/metrics.hpp"

using namespace spoofaudit;

namespace {

ScoreSet make_scores(const std::vector<std::pair<int, double>>& rows) {
  ScoreSet s;
  int i = 0;
  for (auto [label, score] : rows)
    s.push_back({"f" + std::to_string(i++),
                 label ? Label::kBonafide : Label::kSpoof, score});
  return s;
}

// brute force: try every candidate threshold (all midpoints and sentinels),
// return minimal |FAR-FRR| and the EER at the lowest such threshold.
EvalResult brute_force_eer(const ScoreSet& scores) {
  std::vector<double> uniq;
  for (const auto& r : scores) uniq.push_back(r.score);
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  std::vector<double> cands;
  cands.push_back(uniq.front() - 1.0);
  for (std::size_t i = 0; i + 1 < uniq.size(); ++i)
    cands.push_back(0.5 * (uniq[i] + uniq[i + 1]));
  cands.push_back(uniq.back() + 1.0);
  EvalResult best;
  double best_gap = 1e300;
  for (double th : cands) {
    int tp = 0, fn = 0, fp = 0, tn = 0;
    for (const auto& r : scores) {
      bool acc = r.score >= th;
      if (r.label == Label::kBonafide)
        acc ? ++tp : ++fn;
      else
        acc ? ++fp : ++tn;
    }
    double far = static_cast<double>(fp) / (fp + tn);
    double frr = static_cast<double>(fn) / (tp + fn);
    if (std::abs(far - frr) < best_gap) {
      best_gap = std::abs(far - frr);
      best.theta = th;
      best.far = far;
      best.frr = frr;
      best.eer = 0.5 * (far + frr);
    }
  }
  return best;
}

}  // namespace

TEST_CASE("confusion_at_threshold") {
  ScoreSet s = make_scores({{1, 0.9}, {1, 0.2}, {0, 0.8}, {0, 0.1}});
  ConfusionCounts c = confusion_at_threshold(s, 0.5);
  CHECK(c.tp == 1);
  CHECK(c.fn == 1);
  CHECK(c.fp == 1);
  CHECK(c.tn == 1);

  ConfusionCounts lo = confusion_at_threshold(s, -10.0);
  CHECK(lo.fn == 0);
  CHECK(lo.tn == 0);
  ConfusionCounts hi = confusion_at_threshold(s, 10.0);
  CHECK(hi.tp == 0);
  CHECK(hi.fp == 0);
}

TEST_CASE("far_frr") {
  CHECK(far_frr({2, 2, 1, 3}).first == Catch::Approx(0.25));
  CHECK(far_frr({5, 0, 1, 3}).second == 0.0);

  // Table-shaped counts: both rates near 7.7%
  auto [far, frr] = far_frr({701, 59, 74, 876});
  CHECK(frr == Catch::Approx(0.0776).margin(0.0001));
  CHECK(far == Catch::Approx(0.0779).margin(0.0001));

  CHECK_THROWS_AS(far_frr({1, 1, 0, 0}), ValidationError);
}

TEST_CASE("compute_eer basics") {
  ScoreSet sep = make_scores({{1, 0.9}, {1, 0.8}, {0, 0.2}, {0, 0.1}});
  EvalResult r = compute_eer(sep);
  CHECK(r.eer == 0.0);

  ScoreSet single = make_scores({{1, 0.5}, {1, 0.6}});
  CHECK_THROWS_AS(compute_eer(single), ValidationError);
}

TEST_CASE("coin-flip labels give EER near one half") {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ScoreSet s;
  for (int i = 0; i < 4000; ++i)
    s.push_back({"f" + std::to_string(i),
                 (rng() & 1) ? Label::kBonafide : Label::kSpoof, u(rng)});
  EvalResult r = compute_eer(s);
  CHECK(std::abs(r.eer - 0.5) < 0.05);
}

TEST_CASE("compute_eer equals brute force on 1000 random sets") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    int n = 4 + static_cast<int>(rng() % 20);
    ScoreSet s;
    bool has_b = false, has_s = false;
    for (int i = 0; i < n; ++i) {
      Label l = (rng() & 1) ? Label::kBonafide : Label::kSpoof;
      (l == Label::kBonafide ? has_b : has_s) = true;
      // quantized scores to exercise ties
      double score = std::round(u(rng) * 8.0) / 8.0;
      s.push_back({"f" + std::to_string(i), l, score});
    }
    if (!has_b) s[0].label = Label::kBonafide;
    if (!has_s) s[1].label = Label::kSpoof;
    EvalResult got = compute_eer(s);
    EvalResult want = brute_force_eer(s);
    CHECK(got.eer == want.eer);
    CHECK(got.theta == want.theta);
  }
}

TEST_CASE("EER invariance under strictly increasing transforms") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> gb(1.0, 1.0), gs(-1.0, 1.0);
  ScoreSet s;
  for (int i = 0; i < 200; ++i) {
    s.push_back({"b" + std::to_string(i), Label::kBonafide, gb(rng)});
    s.push_back({"s" + std::to_string(i), Label::kSpoof, gs(rng)});
  }
  EvalResult base = compute_eer(s);
  for (int mode = 0; mode < 2; ++mode) {
    ScoreSet t = s;
    for (auto& r : t)
      r.score = mode == 0 ? 2.0 * r.score + 1.0 : std::tanh(r.score);
    EvalResult tr = compute_eer(t);
    CHECK(tr.eer == Catch::Approx(base.eer).margin(1e-12));
    ConfusionCounts c0 = compute_eer(s).counts;
    CHECK(tr.counts.tp == c0.tp);
    CHECK(tr.counts.fn == c0.fn);
    CHECK(tr.counts.fp == c0.fp);
    CHECK(tr.counts.tn == c0.tn);
  }
}

TEST_CASE("EER symmetry under score negation and label swap") {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> gb(0.8, 1.0), gs(-0.8, 1.0);
  ScoreSet s;
  for (int i = 0; i < 150; ++i) {
    s.push_back({"b" + std::to_string(i), Label::kBonafide, gb(rng)});
    s.push_back({"s" + std::to_string(i), Label::kSpoof, gs(rng)});
  }
  ScoreSet flipped = s;
  for (auto& r : flipped) {
    r.score = -r.score;
    r.label = r.label == Label::kBonafide ? Label::kSpoof : Label::kBonafide;
  }
  CHECK(compute_eer(flipped).eer == Catch::Approx(compute_eer(s).eer).margin(1e-9));
}

TEST_CASE("threshold optimality") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gb(0.5, 1.0), gs(-0.5, 1.0);
  ScoreSet s;
  for (int i = 0; i < 100; ++i) {
    s.push_back({"b" + std::to_string(i), Label::kBonafide, gb(rng)});
    s.push_back({"s" + std::to_string(i), Label::kSpoof, gs(rng)});
  }
  EvalResult r = compute_eer(s);
  double gap = std::abs(r.far - r.frr);
  EvalResult bf = brute_force_eer(s);
  CHECK(gap <= std::abs(bf.far - bf.frr) + 1e-15);
}

TEST_CASE("diff_report") {
  ScoreSet before = make_scores({{1, 0.9}, {1, 0.7}, {0, 0.3}, {0, 0.2}});
  double theta = 0.5;

  // after = before -> all deltas zero
  DeltaReport same = diff_report(before, before, theta);
  CHECK(same.delta_fn == 0);
  CHECK(same.delta_fp == 0);
  CHECK(same.prop_changed == 0.0);

  // one TP crosses below theta
  ScoreSet after = {{"f0", Label::kBonafide, 0.1}};
  DeltaReport r = diff_report(before, after, theta);
  CHECK(r.delta_fn == 1);
  CHECK(r.files_intervened == 1);
  CHECK(r.prop_changed == 1.0);

  // recount oracle on a random subset
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ScoreSet big;
  for (int i = 0; i < 100; ++i)
    big.push_back({"x" + std::to_string(i),
                   (i % 2) ? Label::kBonafide : Label::kSpoof, u(rng)});
  ScoreSet sub;
  for (int i = 0; i < 100; i += 3) {
    ScoreRecord rr = big[i];
    rr.score = u(rng);
    sub.push_back(rr);
  }
  DeltaReport dr = diff_report(big, sub, 0.5);
  int manual = 0;
  for (const auto& rr : sub) {
    double orig = 0.0;
    for (const auto& b : big)
      if (b.file_id == rr.file_id) orig = b.score;
    if ((orig >= 0.5) != (rr.score >= 0.5)) ++manual;
  }
  CHECK(dr.changed_label == manual);
  CHECK(dr.files_intervened == static_cast<int>(sub.size()));

  ScoreSet unknown = {{"nope", Label::kBonafide, 0.5}};
  CHECK_THROWS_AS(diff_report(before, unknown, theta), ValidationError);
}

TEST_CASE("score file round trip") {
  namespace fs = std::filesystem;
  std::string path = (fs::temp_directory_path() / "sa_scores.txt").string();
  ScoreSet s = make_scores({{1, 0.123456789012345}, {0, -3.5}});
  write_scores(s, path);
  std::map<std::string, Label> labels = {{"f0", Label::kBonafide},
                                         {"f1", Label::kSpoof}};
  ScoreSet back = read_scores(path, labels);
  REQUIRE(back.size() == 2);
  CHECK(back[0].score == s[0].score);
  CHECK(back[1].label == Label::kSpoof);
  fs::remove(path);
}
