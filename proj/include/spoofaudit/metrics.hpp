#ifndef SPOOFAUDIT_METRICS_HPP
#define SPOOFAUDIT_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "spoofaudit/common.hpp"
#include "spoofaudit/protocol.hpp"

namespace spoofaudit {

struct ScoreRecord {
  std::string file_id;
  Label label = Label::kBonafide;
  double score = 0.0;
};

using ScoreSet = std::vector<ScoreRecord>;

struct ConfusionCounts {
  int tp = 0, fn = 0, fp = 0, tn = 0;
};

// Higher score = more bonafide; accept (predict bonafide) iff score >= theta.
inline ConfusionCounts confusion_at_threshold(const ScoreSet& scores, double theta) {
  if (scores.empty()) throw ValidationError("confusion_at_threshold: empty score set");
  ConfusionCounts c;
  for (const auto& r : scores) {
    bool accept = r.score >= theta;
    if (r.label == Label::kBonafide)
      accept ? ++c.tp : ++c.fn;
    else
      accept ? ++c.fp : ++c.tn;
  }
  return c;
}

inline std::pair<double, double> far_frr(const ConfusionCounts& c) {
  if (c.fp + c.tn == 0 || c.tp + c.fn == 0)
    throw ValidationError("far_frr: zero denominator");
  double far = static_cast<double>(c.fp) / (c.fp + c.tn);
  double frr = static_cast<double>(c.fn) / (c.tp + c.fn);
  return {far, frr};
}

struct EvalResult {
  double eer = 0.0;
  double theta = 0.0;
  ConfusionCounts counts;
  double far = 0.0;
  double frr = 0.0;
};

// Sweep candidate thresholds at midpoints between adjacent sorted unique
// scores (plus sentinels); pick the one minimizing |FAR-FRR|, ties toward the
// lower threshold; EER = (FAR+FRR)/2 there.
inline EvalResult compute_eer(const ScoreSet& scores) {
  bool has_b = false, has_s = false;
  for (const auto& r : scores) (r.label == Label::kBonafide ? has_b : has_s) = true;
  if (!has_b || !has_s)
    throw ValidationError("compute_eer: both classes required");

  std::vector<double> uniq;
  uniq.reserve(scores.size());
  for (const auto& r : scores) uniq.push_back(r.score);
  std::sort(uniq.begin(), uniq.end());
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());

  std::vector<double> candidates;
  candidates.push_back(uniq.front() - 1.0);  // accept everything
  for (std::size_t i = 0; i + 1 < uniq.size(); ++i)
    candidates.push_back(0.5 * (uniq[i] + uniq[i + 1]));
  candidates.push_back(uniq.back() + 1.0);   // reject everything

  EvalResult best;
  double best_gap = std::numeric_limits<double>::infinity();
  for (double theta : candidates) {
    ConfusionCounts c = confusion_at_threshold(scores, theta);
    auto [far, frr] = far_frr(c);
    double gap = std::abs(far - frr);
    if (gap < best_gap) {
      best_gap = gap;
      best.theta = theta;
      best.counts = c;
      best.far = far;
      best.frr = frr;
      best.eer = 0.5 * (far + frr);
    }
  }
  return best;
}

struct DeltaReport {
  double theta = 0.0;
  ConfusionCounts before;
  ConfusionCounts after;
  int delta_fn = 0;
  int delta_fp = 0;
  double delta_frr_pct = 0.0;
  double delta_far_pct = 0.0;
  int files_intervened = 0;           // TFI
  int changed_label = 0;
  double prop_changed = 0.0;
};

// Intervention delta at a frozen threshold. `after` may cover only the
// intervened subset; untouched files keep their original scores.
inline DeltaReport diff_report(const ScoreSet& before, const ScoreSet& after,
                               double fixed_theta) {
  std::map<std::string, const ScoreRecord*> by_id;
  for (const auto& r : before) by_id[r.file_id] = &r;

  ScoreSet merged = before;
  std::map<std::string, double> after_scores;
  for (const auto& r : after) {
    if (!by_id.count(r.file_id))
      throw ValidationError("diff_report: file not in baseline: " + r.file_id);
    after_scores[r.file_id] = r.score;
  }
  for (auto& r : merged) {
    auto it = after_scores.find(r.file_id);
    if (it != after_scores.end()) r.score = it->second;
  }

  DeltaReport rep;
  rep.theta = fixed_theta;
  rep.before = confusion_at_threshold(before, fixed_theta);
  rep.after = confusion_at_threshold(merged, fixed_theta);
  rep.delta_fn = rep.after.fn - rep.before.fn;
  rep.delta_fp = rep.after.fp - rep.before.fp;
  auto [far_b, frr_b] = far_frr(rep.before);
  auto [far_a, frr_a] = far_frr(rep.after);
  rep.delta_far_pct = 100.0 * (far_a - far_b);
  rep.delta_frr_pct = 100.0 * (frr_a - frr_b);
  rep.files_intervened = static_cast<int>(after.size());
  for (const auto& r : after) {
    bool was = by_id.at(r.file_id)->score >= fixed_theta;
    bool now = r.score >= fixed_theta;
    if (was != now) ++rep.changed_label;
  }
  rep.prop_changed = rep.files_intervened
                         ? static_cast<double>(rep.changed_label) / rep.files_intervened
                         : 0.0;
  return rep;
}

// Score file: `<file_id> <score>` per line; labels come from the protocol.
inline void write_scores(const ScoreSet& scores, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error("write_scores: cannot open " + path);
  f << std::setprecision(17);
  for (const auto& r : scores) f << r.file_id << " " << r.score << "\n";
}

inline ScoreSet read_scores(const std::string& path,
                            const std::map<std::string, Label>& labels) {
  std::ifstream f(path);
  if (!f) throw Error("read_scores: cannot open " + path);
  ScoreSet out;
  std::string id;
  double score;
  while (f >> id >> score) {
    auto it = labels.find(id);
    if (it == labels.end())
      throw ValidationError("read_scores: unknown file_id " + id);
    out.push_back({id, it->second, score});
  }
  return out;
}

inline nlohmann::json eval_result_json(const EvalResult& r) {
  return {{"eer", r.eer},
          {"theta", r.theta},
          {"tp", r.counts.tp},
          {"fn", r.counts.fn},
          {"fp", r.counts.fp},
          {"tn", r.counts.tn},
          {"far", r.far},
          {"frr", r.frr}};
}

inline nlohmann::json delta_report_json(const DeltaReport& r) {
  return {{"theta", r.theta},
          {"delta_fn", r.delta_fn},
          {"delta_fp", r.delta_fp},
          {"delta_frr_pct", r.delta_frr_pct},
          {"delta_far_pct", r.delta_far_pct},
          {"files_intervened", r.files_intervened},
          {"changed_label", r.changed_label},
          {"prop_changed", r.prop_changed},
          {"before", {{"tp", r.before.tp}, {"fn", r.before.fn}, {"fp", r.before.fp}, {"tn", r.before.tn}}},
          {"after", {{"tp", r.after.tp}, {"fn", r.after.fn}, {"fp", r.after.fp}, {"tn", r.after.tn}}}};
}

// Aligned-column text table mirroring the delta-report layout.
inline std::string delta_report_table(const std::string& title, const DeltaReport& r) {
  std::ostringstream os;
  os << title << "\n";
  os << std::left << std::setw(10) << "TFI" << std::setw(8) << "dFN"
     << std::setw(8) << "dFP" << std::setw(10) << "dFRR%" << std::setw(10)
     << "dFAR%" << std::setw(8) << "Prop" << "\n";
  os << std::left << std::setw(10) << r.files_intervened << std::setw(8)
     << r.delta_fn << std::setw(8) << r.delta_fp << std::setw(10) << std::fixed
     << std::setprecision(2) << r.delta_frr_pct << std::setw(10)
     << r.delta_far_pct << std::setw(8) << r.prop_changed << "\n";
  return os.str();
}

}  // namespace spoofaudit

#endif  // SPOOFAUDIT_METRICS_HPP
