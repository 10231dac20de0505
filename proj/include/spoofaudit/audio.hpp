#ifndef SPOOFAUDIT_AUDIO_HPP
#define SPOOFAUDIT_AUDIO_HPP

#include <cmath>
#include <cstddef>
#include <vector>

#include "spoofaudit/common.hpp"

namespace spoofaudit {

// Mono audio, samples in [-1, 1]. Empty signals are permitted only as the
// concat identity; load/synthesis never produce them.
struct AudioSignal {
  std::vector<double> samples;
  int sample_rate = 16000;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  double duration_ms() const {
    return 1000.0 * static_cast<double>(samples.size()) / sample_rate;
  }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

struct TimeSpan {
  double start_ms = 0.0;
  double end_ms = 0.0;
};

// Shared ms->sample rule: round to nearest. Every module uses this to avoid
// off-by-one drift between slicing, VAD and interventions.
inline std::size_t ms_to_samples(double ms, int sample_rate) {
  return static_cast<std::size_t>(std::llround(ms * sample_rate / 1000.0));
}

inline std::size_t s_to_samples(double seconds, int sample_rate) {
  return static_cast<std::size_t>(std::llround(seconds * sample_rate));
}

inline AudioSignal slice(const AudioSignal& x, TimeSpan span) {
  if (span.start_ms < 0 || span.end_ms < span.start_ms)
    throw ValidationError("slice: invalid span");
  std::size_t a = ms_to_samples(span.start_ms, x.sample_rate);
  std::size_t b = ms_to_samples(span.end_ms, x.sample_rate);
  if (b > x.size()) throw ValidationError("slice: span beyond signal end");
  AudioSignal out;
  out.sample_rate = x.sample_rate;
  out.samples.assign(x.samples.begin() + a, x.samples.begin() + b);
  return out;
}

inline AudioSignal concat(const AudioSignal& a, const AudioSignal& b) {
  if (!a.empty() && !b.empty() && a.sample_rate != b.sample_rate)
    throw ValidationError("concat: sample-rate mismatch");
  AudioSignal out;
  out.sample_rate = a.empty() ? b.sample_rate : a.sample_rate;
  out.samples.reserve(a.size() + b.size());
  out.samples.insert(out.samples.end(), a.samples.begin(), a.samples.end());
  out.samples.insert(out.samples.end(), b.samples.begin(), b.samples.end());
  return out;
}

// Fixed-duration representation: truncate from the end, or replicate the whole
// signal head-to-tail until the target length is reached.
inline AudioSignal unify_duration(const AudioSignal& x, double target_s) {
  if (x.empty()) throw ValidationError("unify_duration: empty signal");
  std::size_t target = s_to_samples(target_s, x.sample_rate);
  AudioSignal out;
  out.sample_rate = x.sample_rate;
  out.samples.reserve(target);
  while (out.samples.size() < target) {
    std::size_t need = target - out.samples.size();
    std::size_t take = std::min(need, x.size());
    out.samples.insert(out.samples.end(), x.samples.begin(),
                       x.samples.begin() + take);
  }
  return out;
}

// Population variance (divide by N); the noise-scaling identity in the
// interventions module relies on this convention being exact.
inline double sample_variance(const AudioSignal& x) {
  if (x.size() < 2) throw ValidationError("sample_variance: need >= 2 samples");
  double mean = 0.0;
  for (double s : x.samples) mean += s;
  mean /= static_cast<double>(x.size());
  double acc = 0.0;
  for (double s : x.samples) {
    double d = s - mean;
    acc += d * d;
  }
  return acc / static_cast<double>(x.size());
}

}  // namespace spoofaudit

#endif  // SPOOFAUDIT_AUDIO_HPP
