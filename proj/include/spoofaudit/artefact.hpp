#ifndef SPOOFAUDIT_ARTEFACT_HPP
#define SPOOFAUDIT_ARTEFACT_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "spoofaudit/audio.hpp"
#include "spoofaudit/common.hpp"
#include "spoofaudit/protocol.hpp"
#include "spoofaudit/vad.hpp"
#include "spoofaudit/wav.hpp"

namespace spoofaudit {

// "Zero valued silence" is literal digital zero; one LSB tolerates dithered
// writes.
constexpr double kZeroTol = 1.0 / 32768.0;

inline double detect_leading_silence(const AudioSignal& sig,
                                     double zero_tol = kZeroTol) {
  std::size_t n = 0;
  while (n < sig.size() && std::abs(sig.samples[n]) <= zero_tol) ++n;
  return 1000.0 * static_cast<double>(n) / sig.sample_rate;
}

struct BcsConfig {
  double window_ms = 100.0;    // search region at the start
  double sub_ms = 2.0;         // candidate click width
  double context_ms = 50.0;    // surrounding RMS reference
  double guard_ms = 3.0;       // kept out of the context around the candidate
  double click_ratio = 6.0;
  double click_abs_floor = 0.05;  // RMS
};

struct BcsResult {
  bool detected = false;
  double score = 0.0;    // best sub-window / context RMS ratio
  double onset_ms = 0.0;
};

// Burst click: a 2 ms sub-window within the first 100 ms whose RMS towers over
// the surrounding 50 ms.
inline BcsResult detect_burst_click(const AudioSignal& sig,
                                    const BcsConfig& cfg = {}) {
  BcsResult res;
  std::size_t sub = std::max<std::size_t>(ms_to_samples(cfg.sub_ms, sig.sample_rate), 1);
  std::size_t ctx = ms_to_samples(cfg.context_ms, sig.sample_rate);
  std::size_t region = std::min(ms_to_samples(cfg.window_ms, sig.sample_rate), sig.size());
  if (region < sub) return res;

  std::size_t step = std::max<std::size_t>(sub / 2, 1);
  for (std::size_t start = 0; start + sub <= region; start += step) {
    double e_sub = 0.0;
    for (std::size_t i = start; i < start + sub; ++i)
      e_sub += sig.samples[i] * sig.samples[i];
    double rms_sub = std::sqrt(e_sub / sub);

    // Context window centred on the candidate, clamped to the signal. A guard
    // region around the sub-window keeps the tails of a click longer than
    // sub_ms from inflating their own context.
    std::size_t guard = ms_to_samples(cfg.guard_ms, sig.sample_rate);
    std::size_t skip_lo = start > guard ? start - guard : 0;
    std::size_t skip_hi = start + sub + guard;
    std::size_t lo = start > ctx / 2 ? start - ctx / 2 : 0;
    std::size_t hi = std::min(start + sub + ctx / 2, sig.size());
    double e_ctx = 0.0;
    std::size_t n_ctx = 0;
    for (std::size_t i = lo; i < hi; ++i) {
      if (i >= skip_lo && i < skip_hi) continue;
      e_ctx += sig.samples[i] * sig.samples[i];
      ++n_ctx;
    }
    double rms_ctx = n_ctx ? std::sqrt(e_ctx / n_ctx) : 0.0;
    double ratio = rms_sub / std::max(rms_ctx, 1e-6);
    if (ratio > res.score) {
      res.score = ratio;
      res.onset_ms = 1000.0 * static_cast<double>(start) / sig.sample_rate;
    }
    if (rms_sub > std::max(cfg.click_abs_floor, cfg.click_ratio * rms_ctx))
      res.detected = true;
  }
  return res;
}

// Standard DTMF grid.
constexpr double kDtmfLow[4] = {697.0, 770.0, 852.0, 941.0};
constexpr double kDtmfHigh[4] = {1209.0, 1336.0, 1477.0, 1633.0};
constexpr char kDtmfKeys[4][4] = {{'1', '2', '3', 'A'},
                                  {'4', '5', '6', 'B'},
                                  {'7', '8', '9', 'C'},
                                  {'*', '0', '#', 'D'}};

inline double goertzel_magnitude(const double* x, std::size_t n, double freq,
                                 int sample_rate) {
  double w = 2.0 * std::numbers::pi * freq / sample_rate;
  double coeff = 2.0 * std::cos(w);
  double q1 = 0.0, q2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double q0 = x[i] + coeff * q1 - q2;
    q2 = q1;
    q1 = q0;
  }
  double power = q1 * q1 + q2 * q2 - coeff * q1 * q2;
  return std::sqrt(std::max(power, 0.0));
}

struct DtmfConfig {
  double scan_ms = 250.0;
  double hop_ms = 20.0;
  double margin = 2.0;        // winner vs mean of the other three in its group
  double min_balance = 0.25;  // weaker of the two winners vs the stronger
  double min_tone_amp = 0.1;  // weaker winner as an equivalent sine amplitude
  int min_consecutive = 2;
};

struct DtmfResult {
  std::optional<char> key;
  double onset_ms = 0.0;
};

// Goertzel scan for a row/column pair dominating its group over consecutive
// 20 ms hops within the first scan window.
inline DtmfResult detect_dtmf(const AudioSignal& sig, const DtmfConfig& cfg = {}) {
  DtmfResult res;
  std::size_t hop = ms_to_samples(cfg.hop_ms, sig.sample_rate);
  std::size_t scan = std::min(ms_to_samples(cfg.scan_ms, sig.sample_rate), sig.size());
  if (hop == 0 || scan < hop) return res;

  char streak_key = 0;
  int streak = 0;
  for (std::size_t start = 0; start + hop <= scan; start += hop) {
    const double* x = sig.samples.data() + start;
    double low[4], high[4];
    for (int i = 0; i < 4; ++i) {
      low[i] = goertzel_magnitude(x, hop, kDtmfLow[i], sig.sample_rate);
      high[i] = goertzel_magnitude(x, hop, kDtmfHigh[i], sig.sample_rate);
    }
    auto dominant = [&cfg](const double* m) -> int {
      int best = 0;
      for (int i = 1; i < 4; ++i)
        if (m[i] > m[best]) best = i;
      double rest = 0.0;
      for (int i = 0; i < 4; ++i)
        if (i != best) rest += m[i];
      rest /= 3.0;
      return m[best] > cfg.margin * std::max(rest, 1e-9) ? best : -1;
    };
    int r = dominant(low), c = dominant(high);
    // A real key press has comparable energy in both tones and each tone is
    // loud in absolute terms; speech harmonics or chance noise winners are
    // orders of magnitude below a signaling tone's Goertzel response.
    bool balanced = r >= 0 && c >= 0 &&
                    std::min(low[r], high[c]) >=
                        cfg.min_balance * std::max(low[r], high[c]) &&
                    std::min(low[r], high[c]) >=
                        cfg.min_tone_amp * static_cast<double>(hop) / 2.0;
    char key = balanced ? kDtmfKeys[r][c] : 0;
    if (key != 0 && key == streak_key) {
      ++streak;
    } else if (key != 0) {
      streak_key = key;
      streak = 1;
      res.onset_ms = 1000.0 * static_cast<double>(start) / sig.sample_rate;
    } else {
      streak_key = 0;
      streak = 0;
    }
    if (streak >= cfg.min_consecutive) {
      res.key = streak_key;
      return res;
    }
  }
  res.onset_ms = 0.0;
  return res;
}

// Speech present within the first 300 ms; corrupted files report false.
inline bool has_early_speech(const AudioSignal& sig, const VadConfig& vad,
                             double early_ms = 300.0) {
  try {
    return detect_endpoints(sig, vad).start_ms < early_ms;
  } catch (const NoSpeechError&) {
    return false;
  } catch (const ValidationError&) {
    return false;  // too short to analyse
  }
}

struct ArtefactFlags {
  std::string file_id;
  double leading_silence_ms = 0.0;
  bool has_bcs_start = false;
  std::optional<char> dtmf_key;
  bool early_speech_300ms = false;
  bool is_corrupted = false;
  double duration_s = 0.0;
  double bcs_onset_ms = 0.0;
  double dtmf_onset_ms = 0.0;
};

struct ArtefactRecord {
  std::string file_id;
  std::string kind;  // BCS | DTMF | SILENCE
  double onset_ms = 0.0;
  double duration_ms = 0.0;
};

// Side-info list: `<file_id> <BCS|DTMF|SILENCE> <onset_ms> <duration_ms>`.
inline std::vector<ArtefactRecord> parse_artefact_list(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("parse_artefact_list: cannot open " + path);
  std::vector<ArtefactRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    ArtefactRecord r;
    if (!(ss >> r.file_id)) continue;
    if (!(ss >> r.kind >> r.onset_ms >> r.duration_ms))
      throw ValidationError("parse_artefact_list: malformed line " +
                            std::to_string(lineno) + " in " + path);
    if (r.kind != "BCS" && r.kind != "DTMF" && r.kind != "SILENCE")
      throw ValidationError("parse_artefact_list: unknown kind " + r.kind +
                            " at line " + std::to_string(lineno));
    out.push_back(std::move(r));
  }
  return out;
}

inline void write_artefact_list(const std::vector<ArtefactRecord>& recs,
                                const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error("write_artefact_list: cannot open " + path);
  f.precision(6);
  f << std::fixed;
  for (const auto& r : recs)
    f << r.file_id << " " << r.kind << " " << r.onset_ms << " " << r.duration_ms
      << "\n";
}

struct AuditConfig {
  double zero_tol = kZeroTol;
  BcsConfig bcs;
  DtmfConfig dtmf;
  VadConfig vad;
  double early_ms = 300.0;
  std::vector<double> silence_buckets_ms = {10.0, 70.0, 100.0};
  double duration_limit_factor = 2.0;  // x phrase median, unless overridden
  std::map<std::string, double> phrase_duration_limit_s;
};

struct ArtefactTally {
  int count = 0;
  int total = 0;
  std::vector<std::string> files;
  double percent() const {
    return total ? 100.0 * count / total : 0.0;
  }
};

struct ArtefactReport {
  // subset -> class -> artefact name -> tally
  std::map<std::string, std::map<std::string, std::map<std::string, ArtefactTally>>> tallies;
  std::map<std::string, ArtefactFlags> flags;  // by file_id
  std::vector<std::string> missing_files;
  std::vector<ArtefactRecord> side_info;       // consumable by interventions
};

inline ArtefactFlags audit_file(const AudioSignal& sig, const std::string& file_id,
                                const AuditConfig& cfg) {
  ArtefactFlags fl;
  fl.file_id = file_id;
  fl.duration_s = sig.duration_s();
  fl.leading_silence_ms = detect_leading_silence(sig, cfg.zero_tol);
  BcsResult bcs = detect_burst_click(sig, cfg.bcs);
  fl.has_bcs_start = bcs.detected;
  fl.bcs_onset_ms = bcs.onset_ms;
  DtmfResult dtmf = detect_dtmf(sig, cfg.dtmf);
  fl.dtmf_key = dtmf.key;
  fl.dtmf_onset_ms = dtmf.onset_ms;
  try {
    fl.early_speech_300ms = detect_endpoints(sig, cfg.vad).start_ms < cfg.early_ms;
  } catch (const Error&) {
    fl.is_corrupted = true;
    fl.early_speech_300ms = false;
  }
  return fl;
}

inline ArtefactReport audit_corpus(
    const std::map<std::string, std::vector<ProtocolEntry>>& protocols,
    const std::string& audio_dir, const AuditConfig& cfg) {
  ArtefactReport rep;
  std::map<std::string, std::vector<double>> phrase_durations;
  std::map<std::string, std::string> phrase_of;

  for (const auto& [subset, entries] : protocols) {
    for (const auto& e : entries) {
      std::string path = audio_dir + "/" + e.file_id + ".wav";
      if (!std::filesystem::exists(path)) {
        rep.missing_files.push_back(e.file_id);
        continue;
      }
      AudioSignal sig = load_wav(path);
      ArtefactFlags fl = audit_file(sig, e.file_id, cfg);
      phrase_durations[e.phrase_id].push_back(fl.duration_s);
      phrase_of[e.file_id] = e.phrase_id;
      rep.flags[e.file_id] = fl;
    }
  }

  std::map<std::string, double> phrase_limit = cfg.phrase_duration_limit_s;
  for (auto& [phrase, durs] : phrase_durations) {
    if (phrase_limit.count(phrase)) continue;
    std::vector<double> s = durs;
    std::sort(s.begin(), s.end());
    phrase_limit[phrase] = cfg.duration_limit_factor * s[s.size() / 2];
  }

  for (const auto& [subset, entries] : protocols) {
    for (const auto& e : entries) {
      auto it = rep.flags.find(e.file_id);
      if (it == rep.flags.end()) continue;
      const ArtefactFlags& fl = it->second;
      auto& cls = rep.tallies[subset][label_name(e.label)];
      auto mark = [&](const std::string& name, bool hit) {
        ArtefactTally& t = cls[name];
        ++t.total;
        if (hit) {
          ++t.count;
          t.files.push_back(e.file_id);
        }
      };
      mark("early_speech", fl.early_speech_300ms);
      mark("bcs", fl.has_bcs_start);
      mark("dtmf", fl.dtmf_key.has_value());
      for (double b : cfg.silence_buckets_ms) {
        std::ostringstream name;
        name << "leading_silence_gt_" << static_cast<int>(b) << "ms";
        mark(name.str(), fl.leading_silence_ms > b);
      }
      mark("corrupted", fl.is_corrupted);
      mark("duration_anomaly", fl.duration_s > phrase_limit[e.phrase_id]);

      if (fl.has_bcs_start)
        rep.side_info.push_back({e.file_id, "BCS", fl.bcs_onset_ms, cfg.bcs.sub_ms});
      if (fl.dtmf_key)
        rep.side_info.push_back({e.file_id, "DTMF", fl.dtmf_onset_ms, cfg.dtmf.hop_ms * 2});
      if (fl.leading_silence_ms > cfg.silence_buckets_ms.front())
        rep.side_info.push_back({e.file_id, "SILENCE", 0.0, fl.leading_silence_ms});
    }
  }
  return rep;
}

inline nlohmann::json artefact_report_json(const ArtefactReport& rep) {
  nlohmann::json j;
  for (const auto& [subset, classes] : rep.tallies)
    for (const auto& [cls, artefacts] : classes)
      for (const auto& [name, tally] : artefacts)
        j["subsets"][subset][cls][name] = {{"count", tally.count},
                                           {"total", tally.total},
                                           {"percent", tally.percent()},
                                           {"files", tally.files}};
  j["missing_files"] = rep.missing_files;
  j["heuristic_flags"] = {"bcs", "dtmf"};
  return j;
}

}  // namespace spoofaudit

#endif  // SPOOFAUDIT_ARTEFACT_HPP
