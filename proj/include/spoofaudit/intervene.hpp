#ifndef SPOOFAUDIT_INTERVENE_HPP
#define SPOOFAUDIT_INTERVENE_HPP

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "spoofaudit/artefact.hpp"
#include "spoofaudit/audio.hpp"
#include "spoofaudit/common.hpp"
#include "spoofaudit/vad.hpp"

namespace spoofaudit {

enum class InterventionKind {
  kRemovePrefix,
  kTrimEndpoints,
  kPrependSignature,
  kInsertSegment,
  kInjectNoise,
  kInjectSilence,
  kTrimThenPrepend,
};

enum class InsertLocation { kStart, kRandom };

struct Intervention {
  InterventionKind kind = InterventionKind::kRemovePrefix;
  double prefix_ms = 100.0;        // RemovePrefix
  double duration_ms = 100.0;      // InjectNoise / InjectSilence
  double snr_exponent = 0.0;       // InjectNoise, per the log10 SNR definition
  InsertLocation location = InsertLocation::kStart;
  std::uint64_t seed = 0;          // randomized locations / noise draws
  bool mix_noise = false;          // additive-mix variant instead of insertion
};

struct SideInfo {
  std::map<std::string, EndpointAnnotation> endpoints;
  std::vector<ArtefactRecord> artefacts;
  AudioSignal signature;  // BCS signature for Prepend kinds
};

inline AudioSignal extract_signature(const AudioSignal& sig, double first_ms) {
  if (sig.duration_ms() + 1e-9 < first_ms)
    throw ValidationError("extract_signature: signal shorter than requested prefix");
  return slice(sig, {0.0, first_ms});
}

// Standard-normal noise, standardized to exact unit sample variance so the
// SNR scaling identity is an equality rather than a statistical statement.
inline AudioSignal make_white_noise(double duration_ms, int sample_rate,
                                    std::uint64_t seed) {
  AudioSignal out;
  out.sample_rate = sample_rate;
  std::size_t n = ms_to_samples(duration_ms, sample_rate);
  out.samples.resize(n);
  std::mt19937_64 rng = make_rng(seed);
  std::normal_distribution<double> dist(0.0, 1.0);
  for (double& s : out.samples) s = dist(rng);
  if (n >= 2) {
    double var = sample_variance(out);
    double mean = 0.0;
    for (double s : out.samples) mean += s;
    mean /= static_cast<double>(n);
    double scale = 1.0 / std::sqrt(var);
    for (double& s : out.samples) s = (s - mean) * scale;
  }
  return out;
}

// alpha = sqrt(Var(X) * 10^(-SNR)); with unit-variance noise this makes
// Var(alpha * noise) = Var(X) * 10^(-SNR) exact.
inline AudioSignal scale_noise_for_snr(const AudioSignal& noise,
                                       const AudioSignal& reference,
                                       double snr_exponent) {
  // Constant signals land at rounding-error level rather than exactly zero,
  // so degeneracy is judged relative to the signal's own scale.
  auto degenerate = [](const AudioSignal& s, double var) {
    double peak = 0.0;
    for (double v : s.samples) peak = std::max(peak, std::abs(v));
    return var <= 1e-12 * std::max(peak * peak, 1e-30);
  };
  double var_ref = sample_variance(reference);
  if (degenerate(reference, var_ref))
    throw ValidationError("scale_noise_for_snr: zero-variance reference");
  double var_noise = sample_variance(noise);
  if (degenerate(noise, var_noise))
    throw ValidationError("scale_noise_for_snr: degenerate noise");
  double alpha = std::sqrt(var_ref * std::pow(10.0, -snr_exponent));
  AudioSignal out = noise;
  // Standardize first so the output variance identity holds exactly.
  double mean = 0.0;
  for (double s : out.samples) mean += s;
  mean /= static_cast<double>(out.size());
  double inv_std = 1.0 / std::sqrt(var_noise);
  for (double& s : out.samples) s = (s - mean) * inv_std * alpha;
  return out;
}

inline AudioSignal insert_segment(const AudioSignal& sig, const AudioSignal& segment,
                                  InsertLocation location, std::uint64_t seed = 0) {
  if (sig.sample_rate != segment.sample_rate)
    throw ValidationError("insert_segment: sample-rate mismatch");
  std::size_t offset = 0;
  if (location == InsertLocation::kRandom) {
    std::mt19937_64 rng = make_rng(seed);
    std::uniform_int_distribution<std::size_t> dist(0, sig.size());
    offset = dist(rng);
  }
  AudioSignal out;
  out.sample_rate = sig.sample_rate;
  out.samples.reserve(sig.size() + segment.size());
  out.samples.insert(out.samples.end(), sig.samples.begin(),
                     sig.samples.begin() + offset);
  out.samples.insert(out.samples.end(), segment.samples.begin(),
                     segment.samples.end());
  out.samples.insert(out.samples.end(), sig.samples.begin() + offset,
                     sig.samples.end());
  return out;
}

inline AudioSignal mix_segment(const AudioSignal& sig, const AudioSignal& segment,
                               InsertLocation location, std::uint64_t seed = 0) {
  if (sig.sample_rate != segment.sample_rate)
    throw ValidationError("mix_segment: sample-rate mismatch");
  if (segment.size() > sig.size())
    throw ValidationError("mix_segment: segment longer than signal");
  std::size_t offset = 0;
  if (location == InsertLocation::kRandom) {
    std::mt19937_64 rng = make_rng(seed);
    std::uniform_int_distribution<std::size_t> dist(0, sig.size() - segment.size());
    offset = dist(rng);
  }
  AudioSignal out = sig;
  for (std::size_t i = 0; i < segment.size(); ++i) {
    double v = out.samples[offset + i] + segment.samples[i];
    out.samples[offset + i] = std::clamp(v, -1.0, 1.0);
  }
  return out;
}

inline const EndpointAnnotation& require_endpoints(const SideInfo& side,
                                                   const std::string& file_id) {
  auto it = side.endpoints.find(file_id);
  if (it == side.endpoints.end())
    throw PrerequisiteError("intervention: no endpoint annotation for " + file_id);
  return it->second;
}

inline AudioSignal apply_intervention(const Intervention& iv, const AudioSignal& sig,
                                      const SideInfo& side,
                                      const std::string& file_id) {
  // Per-file randomness derives from (seed, file_id) so runs reproduce exactly.
  std::uint64_t file_seed = derive_seed(iv.seed, file_id);
  switch (iv.kind) {
    case InterventionKind::kRemovePrefix: {
      if (sig.duration_ms() < iv.prefix_ms)
        throw ValidationError("RemovePrefix: file shorter than prefix: " + file_id);
      return slice(sig, {iv.prefix_ms, sig.duration_ms()});
    }
    case InterventionKind::kTrimEndpoints: {
      const EndpointAnnotation& a = require_endpoints(side, file_id);
      TimeSpan span{a.speech_start_ms, std::min(a.speech_end_ms, sig.duration_ms())};
      return trim_to_endpoints(sig, span);
    }
    case InterventionKind::kPrependSignature: {
      if (side.signature.empty())
        throw PrerequisiteError("PrependSignature: no signature in side info");
      return concat(side.signature, sig);
    }
    case InterventionKind::kInsertSegment: {
      if (side.signature.empty())
        throw PrerequisiteError("InsertSegment: no segment in side info");
      return insert_segment(sig, side.signature, iv.location, file_seed);
    }
    case InterventionKind::kInjectNoise: {
      AudioSignal noise =
          make_white_noise(iv.duration_ms, sig.sample_rate, file_seed);
      AudioSignal scaled = scale_noise_for_snr(noise, sig, iv.snr_exponent);
      if (iv.mix_noise)
        return mix_segment(sig, scaled, iv.location, file_seed ^ 0x5eedull);
      return insert_segment(sig, scaled, iv.location, file_seed ^ 0x5eedull);
    }
    case InterventionKind::kInjectSilence: {
      AudioSignal zeros;
      zeros.sample_rate = sig.sample_rate;
      zeros.samples.assign(ms_to_samples(iv.duration_ms, sig.sample_rate), 0.0);
      return insert_segment(sig, zeros, iv.location, file_seed);
    }
    case InterventionKind::kTrimThenPrepend: {
      if (side.signature.empty())
        throw PrerequisiteError("TrimThenPrepend: no signature in side info");
      const EndpointAnnotation& a = require_endpoints(side, file_id);
      TimeSpan span{a.speech_start_ms, std::min(a.speech_end_ms, sig.duration_ms())};
      return concat(side.signature, trim_to_endpoints(sig, span));
    }
  }
  throw Error("apply_intervention: unknown kind");
}

inline std::string intervention_kind_name(InterventionKind k) {
  switch (k) {
    case InterventionKind::kRemovePrefix: return "RemovePrefix";
    case InterventionKind::kTrimEndpoints: return "TrimEndpoints";
    case InterventionKind::kPrependSignature: return "PrependSignature";
    case InterventionKind::kInsertSegment: return "InsertSegment";
    case InterventionKind::kInjectNoise: return "InjectNoise";
    case InterventionKind::kInjectSilence: return "InjectSilence";
    case InterventionKind::kTrimThenPrepend: return "TrimThenPrepend";
  }
  return "?";
}

inline InterventionKind parse_intervention_kind(const std::string& s) {
  if (s == "RemovePrefix") return InterventionKind::kRemovePrefix;
  if (s == "TrimEndpoints") return InterventionKind::kTrimEndpoints;
  if (s == "PrependSignature") return InterventionKind::kPrependSignature;
  if (s == "InsertSegment") return InterventionKind::kInsertSegment;
  if (s == "InjectNoise") return InterventionKind::kInjectNoise;
  if (s == "InjectSilence") return InterventionKind::kInjectSilence;
  if (s == "TrimThenPrepend") return InterventionKind::kTrimThenPrepend;
  throw ValidationError("unknown intervention kind: " + s);
}

}  // namespace spoofaudit

#endif  // SPOOFAUDIT_INTERVENE_HPP
