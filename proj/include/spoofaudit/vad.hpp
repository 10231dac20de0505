#ifndef SPOOFAUDIT_VAD_HPP
#define SPOOFAUDIT_VAD_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "spoofaudit/audio.hpp"
#include "spoofaudit/common.hpp"

namespace spoofaudit {

struct NoSpeechError : Error {
  using Error::Error;
};

struct EndpointAnnotation {
  std::string file_id;
  double speech_start_ms = 0.0;
  double speech_end_ms = 0.0;
  enum class Source { kManual, kAutomatic } source_tag = Source::kManual;
};

// Energy + zero-crossing endpoint detector with percentile noise floor and
// hangover smoothing. Material between the endpoints is never removed.
struct VadConfig {
  double frame_ms = 25.0;
  double hop_ms = 10.0;
  double energy_percentile_floor = 10.0;  // percentile of frame energies
  double energy_ratio_threshold = 4.0;
  double zcr_threshold = 0.35;            // crossings per sample
  int hangover_frames = 5;
  double min_speech_ms = 100.0;
};

inline TimeSpan detect_endpoints(const AudioSignal& sig, const VadConfig& cfg) {
  std::size_t frame = ms_to_samples(cfg.frame_ms, sig.sample_rate);
  std::size_t hop = ms_to_samples(cfg.hop_ms, sig.sample_rate);
  if (frame == 0 || hop == 0) throw ValidationError("detect_endpoints: zero frame/hop");
  if (sig.duration_ms() < cfg.min_speech_ms)
    throw ValidationError("detect_endpoints: signal shorter than min_speech");
  if (sig.size() < frame)
    throw ValidationError("detect_endpoints: signal shorter than one frame");

  std::size_t frames = (sig.size() - frame) / hop + 1;
  std::vector<double> energy(frames), zcr(frames);
  for (std::size_t t = 0; t < frames; ++t) {
    const double* x = sig.samples.data() + t * hop;
    double e = 0.0;
    int crossings = 0;
    for (std::size_t i = 0; i < frame; ++i) {
      e += x[i] * x[i];
      if (i > 0 && ((x[i] >= 0.0) != (x[i - 1] >= 0.0))) ++crossings;
    }
    energy[t] = e / static_cast<double>(frame);
    zcr[t] = static_cast<double>(crossings) / static_cast<double>(frame);
  }

  // Noise floor from the quietest frames. Averaging the bottom tail (rather
  // than indexing one percentile) keeps the floor at the ambient level even
  // when padding makes up only a small fraction of the file.
  std::vector<double> sorted = energy;
  std::sort(sorted.begin(), sorted.end());
  std::size_t tail = std::max<std::size_t>(
      3, static_cast<std::size_t>(cfg.energy_percentile_floor / 100.0 * 0.5 * frames));
  tail = std::min(tail, frames);
  double floor = 0.0;
  for (std::size_t t = 0; t < tail; ++t) floor += sorted[t];
  floor = std::max(floor / static_cast<double>(tail), 1e-12);

  std::vector<char> speech(frames, 0);
  for (std::size_t t = 0; t < frames; ++t)
    speech[t] = energy[t] > floor * cfg.energy_ratio_threshold &&
                zcr[t] < cfg.zcr_threshold;

  // Hangover: extend each speech run forward to bridge short gaps.
  if (cfg.hangover_frames > 0) {
    int hold = 0;
    for (std::size_t t = 0; t < frames; ++t) {
      if (speech[t]) {
        hold = cfg.hangover_frames;
      } else if (hold > 0) {
        speech[t] = 1;
        --hold;
      }
    }
  }

  // Pick the longest speech run: brief isolated activity (clicks, tones)
  // should not drag the endpoints away from the utterance itself.
  std::size_t first = frames, last = frames;
  std::size_t run_start = 0, best_len = 0;
  bool in_run = false;
  for (std::size_t t = 0; t <= frames; ++t) {
    bool on = t < frames && speech[t];
    if (on && !in_run) {
      run_start = t;
      in_run = true;
    } else if (!on && in_run) {
      if (t - run_start > best_len) {
        best_len = t - run_start;
        first = run_start;
        last = t - 1;
      }
      in_run = false;
    }
  }
  if (first == frames) throw NoSpeechError("detect_endpoints: no speech found");

  TimeSpan span;
  span.start_ms = first * cfg.hop_ms;
  span.end_ms = std::min(last * cfg.hop_ms + cfg.frame_ms, sig.duration_ms());
  if (span.end_ms - span.start_ms < cfg.min_speech_ms)
    throw NoSpeechError("detect_endpoints: detected speech shorter than min_speech");
  return span;
}

inline AudioSignal trim_to_endpoints(const AudioSignal& sig, TimeSpan span) {
  return slice(sig, span);
}

// Annotation file: `<file_id> <start_ms> <end_ms>` per line, `#` comments.
inline std::map<std::string, EndpointAnnotation> parse_annotations(
    const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("parse_annotations: cannot open " + path);
  std::map<std::string, EndpointAnnotation> out;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    EndpointAnnotation a;
    if (!(ss >> a.file_id)) continue;  // blank line
    if (!(ss >> a.speech_start_ms >> a.speech_end_ms))
      throw ValidationError("parse_annotations: malformed line " +
                            std::to_string(lineno) + " in " + path);
    std::string extra;
    if (ss >> extra)
      throw ValidationError("parse_annotations: trailing tokens at line " +
                            std::to_string(lineno) + " in " + path);
    if (a.speech_start_ms < 0 || a.speech_end_ms <= a.speech_start_ms)
      throw ValidationError("parse_annotations: invalid span at line " +
                            std::to_string(lineno) + " in " + path);
    if (out.count(a.file_id))
      throw ValidationError("parse_annotations: duplicate file_id " + a.file_id);
    out.emplace(a.file_id, a);
  }
  return out;
}

inline void write_annotations(const std::map<std::string, EndpointAnnotation>& anns,
                              const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error("write_annotations: cannot open " + path);
  f.precision(6);
  f << std::fixed;
  for (const auto& [id, a] : anns)
    f << id << " " << a.speech_start_ms << " " << a.speech_end_ms << "\n";
}

}  // namespace spoofaudit

#endif  // SPOOFAUDIT_VAD_HPP
