#ifndef SPOOFAUDIT_CORPUS_HPP
#define SPOOFAUDIT_CORPUS_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "spoofaudit/artefact.hpp"
#include "spoofaudit/audio.hpp"
#include "spoofaudit/common.hpp"
#include "spoofaudit/protocol.hpp"
#include "spoofaudit/vad.hpp"
#include "spoofaudit/wav.hpp"

namespace spoofaudit {

struct PhraseSpec {
  std::string id;
  double nominal_s = 1.0;
};

struct ChannelParams {
  double lowpass_cutoff_hz = 3400.0;
  int lowpass_passes = 2;     // cascaded biquad sections
  double echo_decay = 0.3;
  double echo_delay_ms = 12.0;
  int echo_taps = 3;
  double noise_floor = 0.002; // std of additive channel noise
};

struct CorpusSpec {
  int train_per_class = 200;
  int dev_per_class = 100;
  int eval_per_class = 100;
  int sample_rate = 16000;
  std::vector<PhraseSpec> phrases = {
      {"S01", 1.2}, {"S02", 0.75}, {"S03", 1.5}, {"S04", 1.8}, {"S05", 1.0},
      {"S06", 1.3}, {"S07", 1.6}, {"S08", 1.1}, {"S09", 1.4}, {"S10", 2.0}};
  // Artefact prevalences mirroring the audited dataset's bias structure.
  double p_bcs_bonafide = 0.36;
  double p_bcs_spoof = 0.025;
  double p_dtmf_spoof = 0.45;
  double p_silence_bonafide = 0.19;
  double p_nonspeech300_bonafide = 0.60;  // nonspeech in first 300 ms
  double p_early_speech_spoof = 0.69;
  double p_long_s02 = 0.10;               // anomalously long short-phrase takes
  int n_corrupted = 4;
  // Corpus channel: quieter than the op defaults so the replay giveaway is the
  // channel shape rather than a trivially separable noise level or a blatant
  // echo; the dataset's bias structure should be the easier cue to learn.
  // Gentler than the op defaults: the channel cue should be learnable but
  // weak enough that the dataset's artefact pattern is the easier shortcut.
  ChannelParams channel = [] {
    ChannelParams c;
    c.lowpass_cutoff_hz = 7200.0;
    c.lowpass_passes = 1;
    c.echo_decay = 0.2;
    return c;
  }();
  double ambient_noise = 0.0005;          // padding / room tone std
  std::uint64_t master_seed = 20170301;
};

struct SynthResult {
  AudioSignal signal;
  TimeSpan endpoints;  // speech span within the signal
};

// Speech stand-in: 3-5 harmonics on a drifting F0, syllabic amplitude
// modulation, low-band noise bursts, ambient padding before and after.
// F0 stays in 100-200 Hz so harmonics never reach the DTMF column band.
inline SynthResult synth_utterance(double nominal_s, std::uint64_t seed, int fs,
                                   double pad_before_ms, double pad_after_ms,
                                   double ambient_noise = 0.0005) {
  std::mt19937_64 rng = make_rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);

  double speech_s = nominal_s * (0.8 + 0.4 * u(rng));
  std::size_t n_speech = s_to_samples(speech_s, fs);
  std::size_t n_before = ms_to_samples(pad_before_ms, fs);
  std::size_t n_after = ms_to_samples(pad_after_ms, fs);

  double f0 = 100.0 + 100.0 * u(rng);
  double f0_drift = (u(rng) - 0.5) * 30.0;  // Hz over the utterance
  int harmonics = 3 + static_cast<int>(u(rng) * 3.0);
  if (harmonics > 5) harmonics = 5;
  double am_rate = 3.0 + 3.0 * u(rng);
  double am_phase = 2.0 * std::numbers::pi * u(rng);
  std::vector<double> hamp(harmonics);
  for (int h = 0; h < harmonics; ++h) hamp[h] = (0.4 + 0.6 * u(rng)) / (h + 1);

  std::vector<double> speech(n_speech, 0.0);
  double phase = 0.0;
  for (std::size_t i = 0; i < n_speech; ++i) {
    double t = static_cast<double>(i) / fs;
    double f = f0 + f0_drift * t / std::max(speech_s, 1e-6);
    phase += 2.0 * std::numbers::pi * f / fs;
    double s = 0.0;
    for (int h = 0; h < harmonics; ++h) s += hamp[h] * std::sin((h + 1) * phase);
    double am = 0.55 + 0.45 * std::sin(2.0 * std::numbers::pi * am_rate * t + am_phase);
    speech[i] = s * (0.35 + 0.65 * am);
  }
  // A few low-band noise bursts, below the DTMF column band.
  std::normal_distribution<double> gauss(0.0, 1.0);
  int bursts = 1 + static_cast<int>(u(rng) * 3.0);
  for (int b = 0; b < bursts; ++b) {
    std::size_t len = s_to_samples(0.03 + 0.05 * u(rng), fs);
    if (len + 1 >= n_speech) continue;
    std::size_t at = static_cast<std::size_t>(u(rng) * (n_speech - len - 1));
    double lp = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      lp = 0.85 * lp + 0.15 * gauss(rng);  // one-pole lowpass noise
      speech[at + i] += 0.5 * lp;
    }
  }
  double peak = 1e-9;
  for (double s : speech) peak = std::max(peak, std::abs(s));
  double gain = 0.75 / peak;  // headroom for artefact injection
  for (double& s : speech) s *= gain;

  SynthResult res;
  res.signal.sample_rate = fs;
  res.signal.samples.resize(n_before + n_speech + n_after);
  for (std::size_t i = 0; i < res.signal.size(); ++i)
    res.signal.samples[i] = ambient_noise * gauss(rng);
  for (std::size_t i = 0; i < n_speech; ++i)
    res.signal.samples[n_before + i] += speech[i];
  for (double& s : res.signal.samples) s = std::clamp(s, -1.0, 1.0);
  res.endpoints.start_ms = 1000.0 * n_before / fs;
  res.endpoints.end_ms = 1000.0 * (n_before + n_speech) / fs;
  return res;
}

// Replay channel: cascaded lowpass biquads, a short decaying echo, additive
// noise at the floor level. Deterministic per seed.
inline AudioSignal simulate_replay(const AudioSignal& in, const ChannelParams& ch,
                                   std::uint64_t seed) {
  AudioSignal out = in;
  // RBJ-style Butterworth lowpass biquad.
  double w0 = 2.0 * std::numbers::pi * ch.lowpass_cutoff_hz / in.sample_rate;
  double q = std::numbers::sqrt2 / 2.0;
  double alpha = std::sin(w0) / (2.0 * q);
  double cw = std::cos(w0);
  double b0 = (1.0 - cw) / 2.0, b1 = 1.0 - cw, b2 = (1.0 - cw) / 2.0;
  double a0 = 1.0 + alpha, a1 = -2.0 * cw, a2 = 1.0 - alpha;
  b0 /= a0; b1 /= a0; b2 /= a0; a1 /= a0; a2 /= a0;
  for (int pass = 0; pass < ch.lowpass_passes; ++pass) {
    double x1 = 0.0, x2 = 0.0, y1 = 0.0, y2 = 0.0;
    for (double& s : out.samples) {
      double x = s;
      double y = b0 * x + b1 * x1 + b2 * x2 - a1 * y1 - a2 * y2;
      x2 = x1; x1 = x; y2 = y1; y1 = y;
      s = y;
    }
  }
  std::size_t delay = ms_to_samples(ch.echo_delay_ms, in.sample_rate);
  if (delay > 0 && ch.echo_taps > 0) {
    std::vector<double> dry = out.samples;
    for (int k = 1; k <= ch.echo_taps; ++k) {
      double g = std::pow(ch.echo_decay, k);
      std::size_t d = k * delay;
      for (std::size_t i = d; i < out.size(); ++i)
        out.samples[i] += g * dry[i - d];
    }
  }
  std::mt19937_64 rng = make_rng(seed);
  std::normal_distribution<double> gauss(0.0, ch.noise_floor);
  for (double& s : out.samples) s = std::clamp(s + gauss(rng), -1.0, 1.0);
  return out;
}

struct GroundTruthFile {
  std::string file_id;
  std::string subset;
  Label label = Label::kBonafide;
  std::string phrase_id;
  bool corrupted = false;
  TimeSpan endpoints;
  std::vector<ArtefactRecord> artefacts;
};

struct GroundTruth {
  std::map<std::string, GroundTruthFile> files;
};

namespace detail {

inline void inject_bcs(AudioSignal& sig, double onset_ms, double dur_ms,
                       std::uint64_t seed) {
  std::mt19937_64 rng = make_rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::size_t at = ms_to_samples(onset_ms, sig.sample_rate);
  std::size_t len = std::max<std::size_t>(ms_to_samples(dur_ms, sig.sample_rate), 1);
  for (std::size_t i = at; i < std::min(at + len, sig.size()); ++i)
    sig.samples[i] = std::clamp(sig.samples[i] + 0.95 * u(rng), -1.0, 1.0);
}

inline char inject_dtmf(AudioSignal& sig, double onset_ms, double dur_ms,
                        std::uint64_t seed) {
  std::mt19937_64 rng = make_rng(seed);
  std::uniform_int_distribution<int> pick(0, 15);
  int key = pick(rng);
  int row = key / 4, col = key % 4;
  std::size_t at = ms_to_samples(onset_ms, sig.sample_rate);
  std::size_t len = ms_to_samples(dur_ms, sig.sample_rate);
  for (std::size_t i = at; i < std::min(at + len, sig.size()); ++i) {
    double t = static_cast<double>(i - at) / sig.sample_rate;
    double v = 0.4 * std::sin(2.0 * std::numbers::pi * kDtmfLow[row] * t) +
               0.4 * std::sin(2.0 * std::numbers::pi * kDtmfHigh[col] * t);
    sig.samples[i] = std::clamp(sig.samples[i] + v, -1.0, 1.0);
  }
  return kDtmfKeys[row][col];
}

}  // namespace detail

// Writes audio/, per-subset protocols, endpoint annotations, the ground-truth
// artefact side-info list, and a full ground-truth JSON. Byte-deterministic
// from the master seed.
inline GroundTruth generate_corpus(const CorpusSpec& spec, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir + "/audio");
  GroundTruth gt;
  std::map<std::string, std::vector<ProtocolEntry>> protocols;
  std::map<std::string, EndpointAnnotation> annotations;
  std::vector<ArtefactRecord> artefact_list;

  struct SubsetDef {
    std::string name;
    char prefix;
    int per_class;
  };
  std::vector<SubsetDef> subsets = {{"train", 'T', spec.train_per_class},
                                    {"dev", 'D', spec.dev_per_class},
                                    {"eval", 'E', spec.eval_per_class}};

  int serial = 0;
  for (const auto& sub : subsets) {
    for (int cls = 0; cls < 2; ++cls) {
      Label label = cls == 0 ? Label::kBonafide : Label::kSpoof;
      for (int i = 0; i < sub.per_class; ++i) {
        ++serial;
        char idbuf[32];
        std::snprintf(idbuf, sizeof idbuf, "%c_%06d", sub.prefix, serial);
        std::string file_id = idbuf;
        std::uint64_t fseed = derive_seed(spec.master_seed, file_id);
        std::mt19937_64 rng = make_rng(fseed);
        std::uniform_real_distribution<double> u(0.0, 1.0);

        const PhraseSpec& phrase =
            spec.phrases[static_cast<std::size_t>(u(rng) * spec.phrases.size()) %
                         spec.phrases.size()];
        double nominal = phrase.nominal_s;
        if (phrase.id == "S02" && u(rng) < spec.p_long_s02)
          nominal = 1.6 + 0.6 * u(rng);  // anomalously long takes

        bool want_bcs, want_dtmf = false, want_zero_silence = false, late_speech;
        if (label == Label::kBonafide) {
          want_bcs = u(rng) < spec.p_bcs_bonafide;
          want_zero_silence = u(rng) < spec.p_silence_bonafide;
          late_speech = u(rng) < spec.p_nonspeech300_bonafide;
        } else {
          want_bcs = u(rng) < spec.p_bcs_spoof;
          want_dtmf = u(rng) < spec.p_dtmf_spoof;
          // A tone in the click's RMS context masks the click entirely; the
          // two artefacts share the recording prefix, so keep them apart.
          if (want_dtmf) want_bcs = false;
          late_speech = u(rng) >= spec.p_early_speech_spoof;
        }
        // Leading zeros would push a click outside the detector's start
        // window, so a file carries at most one of the two prefix artefacts.
        if (want_zero_silence) want_bcs = false;
        double pad_before = late_speech ? 350.0 + 350.0 * u(rng) : 30.0 + 200.0 * u(rng);
        // Keep the click's surrounding context clear of speech.
        if (want_bcs) pad_before = std::max(pad_before, 125.0);
        double pad_after = 100.0 + 200.0 * u(rng);
        // Room tone varies per recording (+-6 dB) so an absolute noise level
        // is not a class cue; only the channel's shape separates the classes.
        double ambient = spec.ambient_noise * std::pow(10.0, 0.6 * (u(rng) - 0.5));

        // A replay is a quiet playback re-recorded in a room with its own
        // tone: the source ambient is attenuated and the recording room's
        // floor (same distribution as bonafide room tone) dominates, so the
        // noise spectrum is flat for both classes and only the channel's
        // effect on the speech itself separates them.
        double src_ambient = label == Label::kSpoof ? 0.3 * ambient : ambient;
        SynthResult synth = synth_utterance(nominal, derive_seed(fseed, "speech"),
                                            spec.sample_rate, pad_before, pad_after,
                                            src_ambient);
        AudioSignal sig = std::move(synth.signal);
        TimeSpan endpoints = synth.endpoints;
        if (label == Label::kSpoof) {
          ChannelParams ch = spec.channel;
          ch.noise_floor = ambient;
          sig = simulate_replay(sig, ch, derive_seed(fseed, "channel"));
        }

        GroundTruthFile g;
        g.file_id = file_id;
        g.subset = sub.name;
        g.label = label;
        g.phrase_id = phrase.id;

        // Part of the bonafide "nonspeech first" pattern is broadband room
        // noise rather than quiet padding. High zero-crossing rate keeps it
        // out of the VAD's speech class; it is flat (no BCS spike) and far
        // below the DTMF tone floor.
        if (label == Label::kBonafide && late_speech && !want_bcs &&
            u(rng) < 0.5) {
          double dur = 100.0 + 200.0 * u(rng);
          double amp = 0.05 + 0.10 * u(rng);
          std::size_t n = std::min(ms_to_samples(dur, spec.sample_rate), sig.size());
          std::mt19937_64 nrng = make_rng(derive_seed(fseed, "startnoise"));
          std::normal_distribution<double> ng(0.0, amp);
          for (std::size_t i = 0; i < n; ++i)
            sig.samples[i] = std::clamp(sig.samples[i] + ng(nrng), -1.0, 1.0);
        }
        if (want_bcs) {
          // A click marks the recorder coming alive: the capture starts with
          // digital zeros, the device click interrupts them, then room tone
          // runs until the speech. Both artefacts are recorded.
          double zeros_ms = 40.0 + 30.0 * u(rng);
          std::size_t nz = ms_to_samples(zeros_ms, spec.sample_rate);
          for (std::size_t i = 0; i < nz && i < sig.size(); ++i)
            sig.samples[i] = 0.0;
          double onset = 75.0 + 20.0 * u(rng);
          double dur = 1.0 + 2.0 * u(rng);
          detail::inject_bcs(sig, onset, dur, derive_seed(fseed, "bcs"));
          g.artefacts.push_back({file_id, "SILENCE", 0.0, zeros_ms});
          g.artefacts.push_back({file_id, "BCS", onset, dur});
        }
        if (want_dtmf) {
          double dur = 60.0 + 40.0 * u(rng);
          double onset = u(rng) * (250.0 - dur);
          detail::inject_dtmf(sig, onset, dur, derive_seed(fseed, "dtmf"));
          g.artefacts.push_back({file_id, "DTMF", onset, dur});
        }
        if (want_zero_silence) {
          double dur = 20.0 + 130.0 * u(rng);
          std::size_t n = ms_to_samples(dur, spec.sample_rate);
          AudioSignal zeros;
          zeros.sample_rate = spec.sample_rate;
          zeros.samples.assign(n, 0.0);
          sig = concat(zeros, sig);
          endpoints.start_ms += dur;
          endpoints.end_ms += dur;
          for (auto& a : g.artefacts) a.onset_ms += dur;
          g.artefacts.insert(g.artefacts.begin(), {file_id, "SILENCE", 0.0, dur});
        }
        g.endpoints = endpoints;

        save_wav(sig, out_dir + "/audio/" + file_id + ".wav");
        protocols[sub.name].push_back({file_id, label, phrase.id});
        annotations[file_id] = {file_id, endpoints.start_ms, endpoints.end_ms,
                                EndpointAnnotation::Source::kManual};
        for (const auto& a : g.artefacts) artefact_list.push_back(a);
        gt.files[file_id] = std::move(g);
      }
    }
  }

  // Corrupted recordings: ambient noise only, no speech; bonafide train files.
  for (int i = 0; i < spec.n_corrupted; ++i) {
    ++serial;
    char idbuf[32];
    std::snprintf(idbuf, sizeof idbuf, "T_%06d", serial);
    std::string file_id = idbuf;
    std::uint64_t fseed = derive_seed(spec.master_seed, file_id);
    std::mt19937_64 rng = make_rng(fseed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, spec.ambient_noise);
    AudioSignal sig;
    sig.sample_rate = spec.sample_rate;
    sig.samples.resize(s_to_samples(1.0 + u(rng), spec.sample_rate));
    for (double& s : sig.samples) s = gauss(rng);
    save_wav(sig, out_dir + "/audio/" + file_id + ".wav");
    protocols["train"].push_back({file_id, Label::kBonafide, "S01"});
    GroundTruthFile g;
    g.file_id = file_id;
    g.subset = "train";
    g.label = Label::kBonafide;
    g.phrase_id = "S01";
    g.corrupted = true;
    gt.files[file_id] = std::move(g);
  }

  for (const auto& [name, entries] : protocols)
    write_protocol(entries, out_dir + "/protocol_" + name + ".txt");
  write_annotations(annotations, out_dir + "/annotations.txt");
  write_artefact_list(artefact_list, out_dir + "/artefacts_ground_truth.txt");

  nlohmann::json j;
  for (const auto& [id, g] : gt.files) {
    nlohmann::json arts = nlohmann::json::array();
    for (const auto& a : g.artefacts)
      arts.push_back({{"kind", a.kind}, {"onset_ms", a.onset_ms},
                      {"duration_ms", a.duration_ms}});
    j[id] = {{"subset", g.subset},
             {"class", label_name(g.label)},
             {"phrase", g.phrase_id},
             {"corrupted", g.corrupted},
             {"speech_start_ms", g.endpoints.start_ms},
             {"speech_end_ms", g.endpoints.end_ms},
             {"artefacts", arts}};
  }
  std::ofstream f(out_dir + "/ground_truth.json", std::ios::trunc);
  if (!f) throw Error("generate_corpus: cannot write ground truth");
  f << j.dump(2);
  return gt;
}

}  // namespace spoofaudit

#endif  // SPOOFAUDIT_CORPUS_HPP
