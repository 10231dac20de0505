#ifndef SPOOFAUDIT_HARNESS_HPP
#define SPOOFAUDIT_HARNESS_HPP

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "spoofaudit/artefact.hpp"
#include "spoofaudit/audio.hpp"
#include "spoofaudit/common.hpp"
#include "spoofaudit/corpus.hpp"
#include "spoofaudit/dsp.hpp"
#include "spoofaudit/embed.hpp"
#include "spoofaudit/gmm.hpp"
#include "spoofaudit/intervene.hpp"
#include "spoofaudit/metrics.hpp"
#include "spoofaudit/neural.hpp"
#include "spoofaudit/protocol.hpp"
#include "spoofaudit/vad.hpp"
#include "spoofaudit/wav.hpp"

namespace spoofaudit {

enum class EndpointMode { kNone, kManual, kAutomatic };

inline std::string endpoint_mode_name(EndpointMode m) {
  switch (m) {
    case EndpointMode::kNone: return "none";
    case EndpointMode::kManual: return "manual";
    case EndpointMode::kAutomatic: return "automatic";
  }
  return "?";
}

inline EndpointMode parse_endpoint_mode(const std::string& s) {
  if (s == "none") return EndpointMode::kNone;
  if (s == "manual") return EndpointMode::kManual;
  if (s == "automatic") return EndpointMode::kAutomatic;
  throw ValidationError("unknown endpoint mode: " + s);
}

// Fixed-size log-power spectrogram input for the image-style networks.
struct SpectrogramConfig {
  double unify_s = 3.0;
  int n_fft = 256;
  double win_ms = 16.0;
  double hop_ms = 32.0;
  double log_floor = 1e-10;
};

// Intervention plus its target selection: which confusion cell, which class,
// optionally restricted to files carrying a given artefact flag.
struct InterventionSpec {
  Intervention iv;
  std::string target = "all";        // TP | TN | FP | FN | all
  std::string target_class = "both"; // bonafide | spoof | both
  std::string artefact_flag;         // "" | BCS | DTMF | SILENCE
};

struct ExperimentConfig {
  std::string corpus_dir;
  std::string output_dir = ".";
  std::string model_kind = "gmm";    // gmm | cosine | svm | cnn1 | cnn2 | dnn
  CqccConfig cqcc;
  SpectrogramConfig spec;
  EndpointMode train_endpoints = EndpointMode::kNone;
  EndpointMode test_endpoints = EndpointMode::kNone;
  std::string eval_subset = "eval";
  std::optional<InterventionSpec> intervention;
  std::uint64_t seed = 1;

  int gmm_k = 32;
  GmmTrainConfig gmm_train;
  EmbeddingTrainConfig embed;
  int embed_frame_stride = 2;        // pooled-frame subsampling for the UBM
  SvmTrainConfig svm;
  TrainConfig net;                   // shared optimizer settings for cnn/dnn
  int dnn_frame_stride = 2;
  int dnn_dev_frame_stride = 4;

  CorpusSpec corpus_spec;            // used by the synth stage only

  ExperimentConfig() {
    // Desk-scale CQCC: 6 octaves above 125 Hz keep the analysis window and
    // per-frame cost small while spanning the band the corpus occupies.
    cqcc.f_min_hz = 125.0;
    cqcc.bins_per_octave = 12;
    cqcc.n_uniform_bins = 64;
    cqcc.frame_hop_ms = 20.0;
    embed.power_iters = 50;
    net.max_epochs = 20;
    net.patience = 4;
  }
};

inline nlohmann::json intervention_spec_to_json(const InterventionSpec& s) {
  return {{"kind", intervention_kind_name(s.iv.kind)},
          {"params",
           {{"prefix_ms", s.iv.prefix_ms},
            {"duration_ms", s.iv.duration_ms},
            {"snr_exponent", s.iv.snr_exponent},
            {"location", s.iv.location == InsertLocation::kStart ? "start" : "random"},
            {"mix_noise", s.iv.mix_noise},
            {"seed", s.iv.seed}}},
          {"target", s.target},
          {"class", s.target_class},
          {"artefact_flag", s.artefact_flag}};
}

inline InterventionSpec intervention_spec_from_json(const nlohmann::json& j) {
  InterventionSpec s;
  s.iv.kind = parse_intervention_kind(j.at("kind"));
  if (j.contains("params")) {
    const auto& p = j.at("params");
    s.iv.prefix_ms = p.value("prefix_ms", s.iv.prefix_ms);
    s.iv.duration_ms = p.value("duration_ms", s.iv.duration_ms);
    s.iv.snr_exponent = p.value("snr_exponent", s.iv.snr_exponent);
    std::string loc = p.value("location", "start");
    if (loc != "start" && loc != "random")
      throw ValidationError("intervention location must be start or random");
    s.iv.location = loc == "start" ? InsertLocation::kStart : InsertLocation::kRandom;
    s.iv.mix_noise = p.value("mix_noise", false);
    s.iv.seed = p.value("seed", std::uint64_t{0});
  }
  s.target = j.value("target", "all");
  if (s.target != "TP" && s.target != "TN" && s.target != "FP" &&
      s.target != "FN" && s.target != "all")
    throw ValidationError("intervention target must be TP|TN|FP|FN|all");
  s.target_class = j.value("class", "both");
  if (s.target_class != "bonafide" && s.target_class != "spoof" &&
      s.target_class != "both")
    throw ValidationError("intervention class must be bonafide|spoof|both");
  s.artefact_flag = j.value("artefact_flag", "");
  return s;
}

inline nlohmann::json experiment_config_to_json(const ExperimentConfig& c) {
  nlohmann::json j = {
      {"corpus_dir", c.corpus_dir},
      {"output_dir", c.output_dir},
      {"model_kind", c.model_kind},
      {"cqcc",
       {{"f_min_hz", c.cqcc.f_min_hz},
        {"bins_per_octave", c.cqcc.bins_per_octave},
        {"n_uniform_bins", c.cqcc.n_uniform_bins},
        {"n_ceps", c.cqcc.n_ceps},
        {"delta_window", c.cqcc.delta_window},
        {"frame_hop_ms", c.cqcc.frame_hop_ms},
        {"frame_win_ms", c.cqcc.frame_win_ms}}},
      {"spectrogram",
       {{"unify_s", c.spec.unify_s},
        {"n_fft", c.spec.n_fft},
        {"win_ms", c.spec.win_ms},
        {"hop_ms", c.spec.hop_ms}}},
      {"train_endpoints", endpoint_mode_name(c.train_endpoints)},
      {"test_endpoints", endpoint_mode_name(c.test_endpoints)},
      {"eval_subset", c.eval_subset},
      {"seed", c.seed},
      {"gmm_k", c.gmm_k},
      {"embed",
       {{"k_ubm", c.embed.k_ubm}, {"embed_dim", c.embed.embed_dim}}},
      {"net",
       {{"max_epochs", c.net.max_epochs},
        {"batch_size", c.net.batch_size},
        {"learning_rate", c.net.learning_rate},
        {"patience", c.net.patience}}},
      {"corpus_spec",
       {{"train_per_class", c.corpus_spec.train_per_class},
        {"dev_per_class", c.corpus_spec.dev_per_class},
        {"eval_per_class", c.corpus_spec.eval_per_class},
        {"n_corrupted", c.corpus_spec.n_corrupted},
        {"master_seed", c.corpus_spec.master_seed}}}};
  if (c.intervention)
    j["intervention"] = intervention_spec_to_json(*c.intervention);
  return j;
}

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.corpus_dir = j.value("corpus_dir", "");
  c.output_dir = j.value("output_dir", ".");
  c.model_kind = j.value("model_kind", "gmm");
  static const std::set<std::string> kinds = {"gmm", "cosine", "svm",
                                             "cnn1", "cnn2", "dnn"};
  if (!kinds.count(c.model_kind))
    throw ValidationError("unknown model kind: " + c.model_kind);
  if (j.contains("cqcc")) {
    const auto& q = j.at("cqcc");
    c.cqcc.f_min_hz = q.value("f_min_hz", c.cqcc.f_min_hz);
    c.cqcc.bins_per_octave = q.value("bins_per_octave", c.cqcc.bins_per_octave);
    c.cqcc.n_uniform_bins = q.value("n_uniform_bins", c.cqcc.n_uniform_bins);
    c.cqcc.n_ceps = q.value("n_ceps", c.cqcc.n_ceps);
    c.cqcc.delta_window = q.value("delta_window", c.cqcc.delta_window);
    c.cqcc.frame_hop_ms = q.value("frame_hop_ms", c.cqcc.frame_hop_ms);
    c.cqcc.frame_win_ms = q.value("frame_win_ms", c.cqcc.frame_win_ms);
  }
  if (j.contains("spectrogram")) {
    const auto& s = j.at("spectrogram");
    c.spec.unify_s = s.value("unify_s", c.spec.unify_s);
    c.spec.n_fft = s.value("n_fft", c.spec.n_fft);
    c.spec.win_ms = s.value("win_ms", c.spec.win_ms);
    c.spec.hop_ms = s.value("hop_ms", c.spec.hop_ms);
  }
  c.train_endpoints = parse_endpoint_mode(j.value("train_endpoints", "none"));
  c.test_endpoints = parse_endpoint_mode(j.value("test_endpoints", "none"));
  c.eval_subset = j.value("eval_subset", "eval");
  c.seed = j.value("seed", std::uint64_t{1});
  c.gmm_k = j.value("gmm_k", c.gmm_k);
  if (j.contains("embed")) {
    c.embed.k_ubm = j.at("embed").value("k_ubm", c.embed.k_ubm);
    c.embed.embed_dim = j.at("embed").value("embed_dim", c.embed.embed_dim);
  }
  if (j.contains("net")) {
    const auto& n = j.at("net");
    c.net.max_epochs = n.value("max_epochs", c.net.max_epochs);
    c.net.batch_size = n.value("batch_size", c.net.batch_size);
    c.net.learning_rate = n.value("learning_rate", c.net.learning_rate);
    c.net.patience = n.value("patience", c.net.patience);
  }
  if (j.contains("corpus_spec")) {
    const auto& s = j.at("corpus_spec");
    c.corpus_spec.train_per_class =
        s.value("train_per_class", c.corpus_spec.train_per_class);
    c.corpus_spec.dev_per_class =
        s.value("dev_per_class", c.corpus_spec.dev_per_class);
    c.corpus_spec.eval_per_class =
        s.value("eval_per_class", c.corpus_spec.eval_per_class);
    c.corpus_spec.n_corrupted = s.value("n_corrupted", c.corpus_spec.n_corrupted);
    c.corpus_spec.master_seed = s.value("master_seed", c.corpus_spec.master_seed);
  }
  if (j.contains("intervention"))
    c.intervention = intervention_spec_from_json(j.at("intervention"));
  return c;
}

// Hash of everything that influences features and models; stored with models
// so train/score mismatches fail loudly instead of silently mixing settings.
inline std::string feature_fingerprint(const ExperimentConfig& c) {
  nlohmann::json j = experiment_config_to_json(c);
  j.erase("corpus_dir");
  j.erase("output_dir");
  j.erase("intervention");
  j.erase("test_endpoints");
  j.erase("eval_subset");
  j.erase("corpus_spec");
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(stable_hash(j.dump())));
  return buf;
}

inline std::string config_hash(const ExperimentConfig& c) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(
                    stable_hash(experiment_config_to_json(c).dump())));
  return buf;
}

struct CorpusData {
  std::string audio_dir;
  std::map<std::string, std::vector<ProtocolEntry>> protocols;
  std::map<std::string, Label> labels;
  std::map<std::string, std::string> phrase_of;
  std::map<std::string, EndpointAnnotation> annotations;
};

inline CorpusData load_corpus(const std::string& dir) {
  namespace fs = std::filesystem;
  CorpusData c;
  c.audio_dir = dir + "/audio";
  if (!fs::exists(c.audio_dir))
    throw PrerequisiteError("corpus audio directory missing: " + c.audio_dir);
  for (const std::string& name : {"train", "dev", "eval"}) {
    std::string path = dir + "/protocol_" + name + ".txt";
    if (!fs::exists(path)) continue;
    c.protocols[name] = parse_protocol(path);
    for (const auto& e : c.protocols[name]) {
      c.labels[e.file_id] = e.label;
      c.phrase_of[e.file_id] = e.phrase_id;
    }
  }
  if (c.protocols.empty())
    throw PrerequisiteError("no protocol files found in " + dir);
  std::string anno = dir + "/annotations.txt";
  if (fs::exists(anno)) c.annotations = parse_annotations(anno);
  return c;
}

// One loaded corpus plus per-(file, endpoint-mode) feature caches. All audio
// and CQCC matrices for the canonical corpus fit comfortably in memory.
class Session {
 public:
  ExperimentConfig cfg;
  CorpusData corpus;

  explicit Session(ExperimentConfig config)
      : cfg(std::move(config)), corpus(load_corpus(cfg.corpus_dir)) {}

  AudioSignal load_audio(const std::string& file_id) const {
    return load_wav(corpus.audio_dir + "/" + file_id + ".wav");
  }

  // Endpoint trimming per mode. Returns nullopt when the file cannot be
  // endpointed (no annotation / no detectable speech): callers exclude such
  // files during training and fall back to the untrimmed signal at test.
  std::optional<AudioSignal> trim_for_mode(const AudioSignal& sig,
                                           const std::string& file_id,
                                           EndpointMode mode) const {
    switch (mode) {
      case EndpointMode::kNone:
        return sig;
      case EndpointMode::kManual: {
        auto it = corpus.annotations.find(file_id);
        if (it == corpus.annotations.end()) return std::nullopt;
        TimeSpan span{it->second.speech_start_ms,
                      std::min(it->second.speech_end_ms, sig.duration_ms())};
        return trim_to_endpoints(sig, span);
      }
      case EndpointMode::kAutomatic: {
        try {
          return trim_to_endpoints(sig, detect_endpoints(sig, vad_));
        } catch (const NoSpeechError&) {
          return std::nullopt;
        } catch (const ValidationError&) {
          return std::nullopt;
        }
      }
    }
    return std::nullopt;
  }

  const FeatureMatrix* cqcc_features(const std::string& file_id, EndpointMode mode) {
    std::string key = file_id + "|" + endpoint_mode_name(mode);
    auto it = cqcc_cache_.find(key);
    if (it != cqcc_cache_.end()) return it->second ? &*it->second : nullptr;
    AudioSignal raw = load_audio(file_id);
    std::optional<AudioSignal> prepared = trim_for_mode(raw, file_id, mode);
    auto [ins, _] = cqcc_cache_.emplace(
        key, prepared ? std::optional<FeatureMatrix>(cqcc(*prepared, cfg.cqcc))
                      : std::nullopt);
    return ins->second ? &*ins->second : nullptr;
  }

  FeatureMatrix spectrogram_features(const AudioSignal& sig) const {
    AudioSignal uni = unify_duration(sig, cfg.spec.unify_s);
    Spectrogram sp = power_spectrogram(uni, cfg.spec.n_fft, cfg.spec.win_ms,
                                       cfg.spec.hop_ms);
    FeatureMatrix out = sp.values;
    for (double& v : out.data) v = std::log(v + cfg.spec.log_floor);
    return out;
  }

  const FeatureMatrix* spec_features(const std::string& file_id, EndpointMode mode) {
    std::string key = file_id + "|" + endpoint_mode_name(mode);
    auto it = spec_cache_.find(key);
    if (it != spec_cache_.end()) return it->second ? &*it->second : nullptr;
    AudioSignal raw = load_audio(file_id);
    std::optional<AudioSignal> prepared = trim_for_mode(raw, file_id, mode);
    auto [ins, _] = spec_cache_.emplace(
        key, prepared ? std::optional<FeatureMatrix>(spectrogram_features(*prepared))
                      : std::nullopt);
    return ins->second ? &*ins->second : nullptr;
  }

  TensorShape spec_input_shape() const {
    std::size_t win = ms_to_samples(cfg.spec.win_ms, 16000);
    std::size_t hop = ms_to_samples(cfg.spec.hop_ms, 16000);
    std::size_t n = s_to_samples(cfg.spec.unify_s, 16000);
    int frames = static_cast<int>((n - win) / hop + 1);
    int bins = cfg.spec.n_fft / 2 + 1;
    return {1, frames, bins};
  }

  const VadConfig& vad() const { return vad_; }

 private:
  VadConfig vad_;
  std::map<std::string, std::optional<FeatureMatrix>> cqcc_cache_;
  std::map<std::string, std::optional<FeatureMatrix>> spec_cache_;
};

struct TrainedModel {
  std::string kind;
  std::string fingerprint;
  EndpointMode train_endpoints = EndpointMode::kNone;
  std::vector<std::string> excluded_files;  // unendpointable at train time

  GmmPairModel gmm;
  EmbeddingExtractor extractor;
  Embedding bona_mean, spoof_mean;
  LinearSvm svm;
  Network net;
  NormStats frame_norm;  // dnn input normalization
  NormStats spec_norm;   // per-bin spectrogram normalization
};

namespace detail {

inline bool uses_cqcc(const std::string& kind) {
  return kind == "gmm" || kind == "cosine" || kind == "svm" || kind == "dnn";
}

inline NetworkSpec dnn_spec(int dims) {
  NetworkSpec s;
  s.input = {1, 1, dims};
  s.layers = {dense(64), relu(), dense(64), relu(), dense(1), sigmoid_layer()};
  return s;
}

inline NetworkSpec cnn_spec(const std::string& kind, TensorShape input) {
  NetworkSpec s;
  s.input = input;
  if (kind == "cnn1") {
    s.layers = {conv2d(4, 5, 5, 3), relu(), maxpool(2, 2), flatten(),
                dense(16),          relu(), dense(1),      sigmoid_layer()};
  } else {
    s.layers = {conv2d(8, 5, 5, 3),  relu(), conv2d(16, 3, 3, 2), relu(),
                flatten(),           dense(32), relu(), dense(1),
                sigmoid_layer()};
  }
  return s;
}

inline FeatureMatrix normalize_rows(const FeatureMatrix& f, const NormStats& s) {
  return mean_variance_normalize(f, s);
}

}  // namespace detail

// Trains the configured model kind on the train subset, endpoint-trimming per
// cfg.train_endpoints first (pipeline order: endpoints -> features -> model).
// Files that cannot be endpointed (the corrupted recordings) are excluded
// whenever an endpoint mode is active.
inline TrainedModel train_model(Session& ses) {
  const ExperimentConfig& cfg = ses.cfg;
  auto proto_it = ses.corpus.protocols.find("train");
  if (proto_it == ses.corpus.protocols.end())
    throw PrerequisiteError("train_model: no train protocol in corpus");
  const std::vector<ProtocolEntry>& train = proto_it->second;

  TrainedModel model;
  model.kind = cfg.model_kind;
  model.fingerprint = feature_fingerprint(cfg);
  model.train_endpoints = cfg.train_endpoints;

  if (detail::uses_cqcc(cfg.model_kind)) {
    std::vector<const FeatureMatrix*> feats(train.size(), nullptr);
    std::size_t bona_frames = 0, spoof_frames = 0, dims = 0;
    for (std::size_t i = 0; i < train.size(); ++i) {
      const FeatureMatrix* f = ses.cqcc_features(train[i].file_id, cfg.train_endpoints);
      if (!f) {
        model.excluded_files.push_back(train[i].file_id);
        continue;
      }
      feats[i] = f;
      dims = f->cols;
      (train[i].label == Label::kBonafide ? bona_frames : spoof_frames) += f->rows;
    }
    if (bona_frames == 0 || spoof_frames == 0)
      throw PrerequisiteError("train_model: a class has no usable train frames");

    auto pool_class = [&](Label want) {
      std::size_t total = want == Label::kBonafide ? bona_frames : spoof_frames;
      FeatureMatrix pool(total, dims);
      std::size_t row = 0;
      for (std::size_t i = 0; i < train.size(); ++i) {
        if (!feats[i] || train[i].label != want) continue;
        std::copy(feats[i]->data.begin(), feats[i]->data.end(),
                  pool.row(row));
        row += feats[i]->rows;
      }
      return pool;
    };

    if (cfg.model_kind == "gmm") {
      FeatureMatrix bona = pool_class(Label::kBonafide);
      FeatureMatrix spoof = pool_class(Label::kSpoof);
      model.gmm.bonafide =
          train_gmm(bona, cfg.gmm_k, derive_seed(cfg.seed, "gmm-bona"), cfg.gmm_train);
      model.gmm.spoof =
          train_gmm(spoof, cfg.gmm_k, derive_seed(cfg.seed, "gmm-spoof"), cfg.gmm_train);
      model.gmm.feature_fingerprint = model.fingerprint;
    } else if (cfg.model_kind == "cosine" || cfg.model_kind == "svm") {
      // UBM pool: both classes, subsampled frames.
      std::size_t stride = std::max(cfg.embed_frame_stride, 1);
      std::size_t n_sub = 0;
      for (const auto* f : feats)
        if (f) n_sub += (f->rows + stride - 1) / stride;
      FeatureMatrix pool(n_sub, dims);
      std::size_t row = 0;
      std::vector<FeatureMatrix> utts;
      std::vector<Label> labels;
      for (std::size_t i = 0; i < train.size(); ++i) {
        if (!feats[i]) continue;
        for (std::size_t t = 0; t < feats[i]->rows; t += stride) {
          std::copy(feats[i]->row(t), feats[i]->row(t) + dims, pool.row(row));
          ++row;
        }
        utts.push_back(*feats[i]);
        labels.push_back(train[i].label);
      }
      model.extractor = train_embedding_extractor(
          pool, utts, derive_seed(cfg.seed, "embed"), cfg.embed);
      std::vector<Embedding> embs(utts.size());
      for (std::size_t i = 0; i < utts.size(); ++i)
        embs[i] = embed_utterance(model.extractor, utts[i]);
      model.bona_mean.assign(cfg.embed.embed_dim, 0.0);
      model.spoof_mean.assign(cfg.embed.embed_dim, 0.0);
      int nb = 0, nsp = 0;
      for (std::size_t i = 0; i < embs.size(); ++i) {
        Embedding& mean =
            labels[i] == Label::kBonafide ? model.bona_mean : model.spoof_mean;
        (labels[i] == Label::kBonafide ? nb : nsp)++;
        for (int d = 0; d < cfg.embed.embed_dim; ++d) mean[d] += embs[i][d];
      }
      for (double& v : model.bona_mean) v /= std::max(nb, 1);
      for (double& v : model.spoof_mean) v /= std::max(nsp, 1);
      if (cfg.model_kind == "svm")
        model.svm = train_linear_svm(embs, labels, derive_seed(cfg.seed, "svm"),
                                     cfg.svm);
    } else {  // dnn
      std::size_t total = bona_frames + spoof_frames;
      FeatureMatrix all(total, dims);
      std::size_t row = 0;
      for (const auto* f : feats) {
        if (!f) continue;
        std::copy(f->data.begin(), f->data.end(), all.row(row));
        row += f->rows;
      }
      model.frame_norm = compute_norm_stats(all);

      auto frame_samples = [&](const std::string& subset, int stride,
                               std::vector<std::string>* excluded) {
        std::vector<TrainSample> out;
        auto it = ses.corpus.protocols.find(subset);
        if (it == ses.corpus.protocols.end())
          throw PrerequisiteError("train_model: no " + subset + " protocol");
        for (const auto& e : it->second) {
          const FeatureMatrix* f = ses.cqcc_features(e.file_id, cfg.train_endpoints);
          if (!f) {
            if (excluded) excluded->push_back(e.file_id);
            continue;
          }
          FeatureMatrix norm = detail::normalize_rows(*f, model.frame_norm);
          for (std::size_t t = 0; t < norm.rows;
               t += static_cast<std::size_t>(std::max(stride, 1))) {
            TrainSample s;
            s.input = Tensor({1, 1, static_cast<int>(dims)});
            std::copy(norm.row(t), norm.row(t) + dims, s.input.v.begin());
            s.label = e.label == Label::kBonafide ? 1.0 : 0.0;
            out.push_back(std::move(s));
          }
        }
        return out;
      };
      std::vector<TrainSample> tr =
          frame_samples("train", cfg.dnn_frame_stride, nullptr);
      std::vector<TrainSample> dv =
          frame_samples("dev", cfg.dnn_dev_frame_stride, nullptr);
      TrainConfig tc = cfg.net;
      tc.seed = derive_seed(cfg.seed, "dnn");
      model.net = network_train(detail::dnn_spec(static_cast<int>(dims)), tr, dv, tc);
    }
    return model;
  }

  // cnn1 / cnn2: one fixed-size spectrogram sample per file.
  TensorShape in_shape = ses.spec_input_shape();
  std::vector<const FeatureMatrix*> feats(train.size(), nullptr);
  std::size_t n_used = 0;
  for (std::size_t i = 0; i < train.size(); ++i) {
    const FeatureMatrix* f = ses.spec_features(train[i].file_id, cfg.train_endpoints);
    if (!f) {
      model.excluded_files.push_back(train[i].file_id);
      continue;
    }
    feats[i] = f;
    ++n_used;
  }
  if (n_used == 0) throw PrerequisiteError("train_model: no usable train files");

  // Per-bin normalization over time frames of all training spectrograms.
  std::size_t bins = static_cast<std::size_t>(in_shape.w);
  model.spec_norm.mean.assign(bins, 0.0);
  model.spec_norm.stddev.assign(bins, 0.0);
  std::size_t n_rows = 0;
  for (const auto* f : feats) {
    if (!f) continue;
    for (std::size_t t = 0; t < f->rows; ++t)
      for (std::size_t b = 0; b < bins; ++b)
        model.spec_norm.mean[b] += f->at(t, b);
    n_rows += f->rows;
  }
  for (double& m : model.spec_norm.mean) m /= static_cast<double>(n_rows);
  for (const auto* f : feats) {
    if (!f) continue;
    for (std::size_t t = 0; t < f->rows; ++t)
      for (std::size_t b = 0; b < bins; ++b) {
        double d = f->at(t, b) - model.spec_norm.mean[b];
        model.spec_norm.stddev[b] += d * d;
      }
  }
  for (double& v : model.spec_norm.stddev)
    v = std::max(std::sqrt(v / static_cast<double>(n_rows)), 1e-8);

  auto to_sample = [&](const FeatureMatrix& f, Label label) {
    TrainSample s;
    s.input = Tensor(in_shape);
    FeatureMatrix norm = detail::normalize_rows(f, model.spec_norm);
    s.input.v = norm.data;
    s.label = label == Label::kBonafide ? 1.0 : 0.0;
    return s;
  };
  std::vector<TrainSample> tr;
  for (std::size_t i = 0; i < train.size(); ++i)
    if (feats[i]) tr.push_back(to_sample(*feats[i], train[i].label));
  std::vector<TrainSample> dv;
  auto dev_it = ses.corpus.protocols.find("dev");
  if (dev_it != ses.corpus.protocols.end())
    for (const auto& e : dev_it->second) {
      const FeatureMatrix* f = ses.spec_features(e.file_id, cfg.train_endpoints);
      if (f) dv.push_back(to_sample(*f, e.label));
    }
  TrainConfig tc = cfg.net;
  tc.seed = derive_seed(cfg.seed, cfg.model_kind);
  model.net = network_train(detail::cnn_spec(cfg.model_kind, in_shape), tr, dv, tc);
  return model;
}

// Scores one prepared (already endpoint-trimmed / intervened) signal.
inline double score_signal(Session& ses, const TrainedModel& model,
                           const AudioSignal& sig) {
  const ExperimentConfig& cfg = ses.cfg;
  if (model.kind == "gmm") return score_llr(model.gmm, cqcc(sig, cfg.cqcc));
  if (model.kind == "cosine" || model.kind == "svm") {
    Embedding e = embed_utterance(model.extractor, cqcc(sig, cfg.cqcc));
    return model.kind == "cosine"
               ? cosine_backend_score(e, model.bona_mean, model.spoof_mean)
               : svm_score(model.svm, e);
  }
  if (model.kind == "dnn") {
    FeatureMatrix f = detail::normalize_rows(cqcc(sig, cfg.cqcc), model.frame_norm);
    return score_utterance(model.net, ScoreKind::kDnn, f);
  }
  FeatureMatrix f =
      detail::normalize_rows(ses.spectrogram_features(sig), model.spec_norm);
  return score_utterance(model.net, ScoreKind::kCnn, f);
}

// Scores a whole subset using the cached features; test endpoint mode falls
// back to the untrimmed signal when a file cannot be endpointed.
inline ScoreSet score_subset(Session& ses, const TrainedModel& model,
                             const std::string& subset, EndpointMode test_mode) {
  if (model.fingerprint != feature_fingerprint(ses.cfg))
    throw ValidationError(
        "score_subset: model feature settings do not match the current config");
  auto it = ses.corpus.protocols.find(subset);
  if (it == ses.corpus.protocols.end())
    throw PrerequisiteError("score_subset: no protocol for subset " + subset);
  ScoreSet out;
  for (const auto& e : it->second) {
    double s;
    if (model.kind == "cnn1" || model.kind == "cnn2") {
      const FeatureMatrix* f = ses.spec_features(e.file_id, test_mode);
      FeatureMatrix feat = f ? *f : *ses.spec_features(e.file_id, EndpointMode::kNone);
      s = score_utterance(model.net, ScoreKind::kCnn,
                          detail::normalize_rows(feat, model.spec_norm));
    } else {
      const FeatureMatrix* f = ses.cqcc_features(e.file_id, test_mode);
      const FeatureMatrix& feat =
          f ? *f : *ses.cqcc_features(e.file_id, EndpointMode::kNone);
      if (model.kind == "gmm") {
        s = score_llr(model.gmm, feat);
      } else if (model.kind == "dnn") {
        s = score_utterance(model.net, ScoreKind::kDnn,
                            detail::normalize_rows(feat, model.frame_norm));
      } else {
        Embedding emb = embed_utterance(model.extractor, feat);
        s = model.kind == "cosine"
                ? cosine_backend_score(emb, model.bona_mean, model.spoof_mean)
                : svm_score(model.svm, emb);
      }
    }
    out.push_back({e.file_id, e.label, s});
  }
  return out;
}

// Confusion-cell target selection at a frozen threshold, optionally restricted
// to files carrying a given artefact flag. Deterministic (protocol order).
inline std::vector<std::string> select_targets(
    const ScoreSet& baseline, double theta, const InterventionSpec& spec,
    const std::vector<ArtefactRecord>& artefacts) {
  std::set<std::string> flagged;
  for (const auto& a : artefacts)
    if (spec.artefact_flag.empty() || a.kind == spec.artefact_flag)
      flagged.insert(a.file_id);
  if (!spec.artefact_flag.empty() && flagged.empty())
    throw PrerequisiteError("select_targets: no files carry artefact flag " +
                            spec.artefact_flag);
  std::vector<std::string> out;
  for (const auto& r : baseline) {
    if (spec.target_class == "bonafide" && r.label != Label::kBonafide) continue;
    if (spec.target_class == "spoof" && r.label != Label::kSpoof) continue;
    if (!spec.artefact_flag.empty() && !flagged.count(r.file_id)) continue;
    bool accept = r.score >= theta;
    std::string cell = r.label == Label::kBonafide ? (accept ? "TP" : "FN")
                                                   : (accept ? "FP" : "TN");
    if (spec.target != "all" && cell != spec.target) continue;
    out.push_back(r.file_id);
  }
  return out;
}

// Applies the intervention to each target file, re-applies test endpoint
// trimming (the system under test sees the attacked waveform), and rescores.
inline ScoreSet rescore_intervened(Session& ses, const TrainedModel& model,
                                   const std::vector<std::string>& targets,
                                   const Intervention& iv, const SideInfo& side,
                                   EndpointMode test_mode) {
  ScoreSet out;
  for (const std::string& id : targets) {
    AudioSignal raw = ses.load_audio(id);
    AudioSignal edited = apply_intervention(iv, raw, side, id);
    std::optional<AudioSignal> prepared = ses.trim_for_mode(edited, id, test_mode);
    const AudioSignal& final_sig = prepared ? *prepared : edited;
    auto lbl = ses.corpus.labels.find(id);
    if (lbl == ses.corpus.labels.end())
      throw ValidationError("rescore_intervened: unknown file " + id);
    out.push_back({id, lbl->second, score_signal(ses, model, final_sig)});
  }
  return out;
}

// Side info for interventions: manual endpoints from the corpus annotations,
// artefact flags from a detected or ground-truth list, signature from the
// first (lowest file id) train bonafide file flagged BCS.
inline SideInfo build_side_info(Session& ses,
                                const std::vector<ArtefactRecord>& artefacts,
                                double signature_ms = 100.0) {
  SideInfo side;
  side.endpoints = ses.corpus.annotations;
  side.artefacts = artefacts;
  std::vector<std::string> bcs_files;
  for (const auto& a : artefacts)
    if (a.kind == "BCS" && ses.corpus.labels.count(a.file_id) &&
        ses.corpus.labels.at(a.file_id) == Label::kBonafide)
      bcs_files.push_back(a.file_id);
  std::sort(bcs_files.begin(), bcs_files.end());
  if (!bcs_files.empty())
    side.signature = extract_signature(ses.load_audio(bcs_files.front()),
                                       signature_ms);
  return side;
}

inline std::vector<ArtefactRecord> load_artefact_side_info(const Session& ses) {
  namespace fs = std::filesystem;
  for (const std::string& name :
       {"artefacts_detected.txt", "artefacts_ground_truth.txt"}) {
    std::string path = ses.cfg.corpus_dir + "/" + name;
    if (fs::exists(path)) return parse_artefact_list(path);
  }
  throw PrerequisiteError("no artefact list found in " + ses.cfg.corpus_dir +
                          " (run the audit stage first)");
}

// ---------------------------------------------------------------------------
// Stage runner and manifests
// ---------------------------------------------------------------------------

struct RunManifest {
  std::string stage;
  std::string config_hash;
  std::map<std::string, std::string> artifacts;  // name -> path
  nlohmann::json report;
  double wall_s = 0.0;
};

inline void write_manifest(const RunManifest& m, const std::string& path) {
  nlohmann::json j = {{"stage", m.stage},
                      {"config_hash", m.config_hash},
                      {"artifacts", m.artifacts},
                      {"report", m.report},
                      {"wall_s", m.wall_s}};
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error("write_manifest: cannot open " + path);
  f << j.dump(2) << "\n";
}

inline nlohmann::json model_to_json(const TrainedModel& m) {
  nlohmann::json j = {{"kind", m.kind},
                      {"fingerprint", m.fingerprint},
                      {"train_endpoints", endpoint_mode_name(m.train_endpoints)},
                      {"excluded_files", m.excluded_files}};
  if (m.kind == "gmm") {
    j["bonafide"] = gmm_to_json(m.gmm.bonafide);
    j["spoof"] = gmm_to_json(m.gmm.spoof);
  } else if (m.kind == "cosine" || m.kind == "svm") {
    j["extractor"] = extractor_to_json(m.extractor);
    j["bona_mean"] = m.bona_mean;
    j["spoof_mean"] = m.spoof_mean;
    if (m.kind == "svm") j["svm"] = svm_to_json(m.svm);
  } else {
    j["net"] = network_to_json(m.net);
    if (m.kind == "dnn") {
      j["norm_mean"] = m.frame_norm.mean;
      j["norm_std"] = m.frame_norm.stddev;
    } else {
      j["norm_mean"] = m.spec_norm.mean;
      j["norm_std"] = m.spec_norm.stddev;
    }
  }
  return j;
}

inline TrainedModel model_from_json(const nlohmann::json& j) {
  TrainedModel m;
  m.kind = j.at("kind");
  m.fingerprint = j.at("fingerprint");
  m.train_endpoints = parse_endpoint_mode(j.value("train_endpoints", "none"));
  m.excluded_files = j.value("excluded_files", std::vector<std::string>{});
  if (m.kind == "gmm") {
    m.gmm.bonafide = gmm_from_json(j.at("bonafide"));
    m.gmm.spoof = gmm_from_json(j.at("spoof"));
    m.gmm.feature_fingerprint = m.fingerprint;
  } else if (m.kind == "cosine" || m.kind == "svm") {
    m.extractor = extractor_from_json(j.at("extractor"));
    m.bona_mean = j.at("bona_mean").get<Embedding>();
    m.spoof_mean = j.at("spoof_mean").get<Embedding>();
    if (m.kind == "svm") m.svm = svm_from_json(j.at("svm"));
  } else {
    m.net = network_from_json(j.at("net"));
    NormStats ns;
    ns.mean = j.at("norm_mean").get<std::vector<double>>();
    ns.stddev = j.at("norm_std").get<std::vector<double>>();
    if (m.kind == "dnn")
      m.frame_norm = ns;
    else
      m.spec_norm = ns;
  }
  return m;
}

inline TrainedModel load_model(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw PrerequisiteError("load_model: cannot open " + path);
  return model_from_json(nlohmann::json::parse(f));
}

inline void save_model(const TrainedModel& m, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error("save_model: cannot open " + path);
  f << model_to_json(m).dump() << "\n";
}

namespace detail {

inline std::map<std::string, Label> subset_labels(const Session& ses,
                                                  const std::string& subset) {
  auto it = ses.corpus.protocols.find(subset);
  if (it == ses.corpus.protocols.end())
    throw PrerequisiteError("no protocol for subset " + subset);
  std::map<std::string, Label> out;
  for (const auto& e : it->second) out[e.file_id] = e.label;
  return out;
}

}  // namespace detail

// Filesystem stage runner: each stage reads its prerequisites from the output
// directory of earlier stages and writes its own artifacts plus a manifest.
inline RunManifest run_stage(const std::string& stage, const ExperimentConfig& cfg) {
  namespace fs = std::filesystem;
  auto t0 = std::chrono::steady_clock::now();
  fs::create_directories(cfg.output_dir);
  RunManifest man;
  man.stage = stage;
  man.config_hash = config_hash(cfg);
  std::string prefix = cfg.output_dir + "/" + cfg.model_kind + "_";

  if (stage == "synth") {
    if (cfg.corpus_dir.empty())
      throw ValidationError("synth: corpus_dir must be set");
    generate_corpus(cfg.corpus_spec, cfg.corpus_dir);
    man.artifacts["corpus"] = cfg.corpus_dir;
  } else if (stage == "audit") {
    Session ses(cfg);
    AuditConfig acfg;
    ArtefactReport rep = audit_corpus(ses.corpus.protocols, ses.corpus.audio_dir, acfg);
    std::string report_path = cfg.output_dir + "/artefact_report.json";
    {
      std::ofstream f(report_path, std::ios::trunc);
      f << artefact_report_json(rep).dump(2) << "\n";
    }
    std::string side_path = cfg.corpus_dir + "/artefacts_detected.txt";
    write_artefact_list(rep.side_info, side_path);
    man.artifacts["report"] = report_path;
    man.artifacts["side_info"] = side_path;
    man.report = artefact_report_json(rep);
  } else if (stage == "train") {
    Session ses(cfg);
    TrainedModel model = train_model(ses);
    std::string path = prefix + "model.json";
    save_model(model, path);
    man.artifacts["model"] = path;
    man.report = {{"kind", model.kind},
                  {"fingerprint", model.fingerprint},
                  {"excluded_files", model.excluded_files}};
  } else if (stage == "score") {
    Session ses(cfg);
    TrainedModel model = load_model(prefix + "model.json");
    ScoreSet scores = score_subset(ses, model, cfg.eval_subset, cfg.test_endpoints);
    std::string path = prefix + "scores_" + cfg.eval_subset + ".txt";
    write_scores(scores, path);
    man.artifacts["scores"] = path;
    man.report = {{"n_scored", scores.size()}};
  } else if (stage == "evaluate") {
    Session ses(cfg);
    ScoreSet scores = read_scores(prefix + "scores_" + cfg.eval_subset + ".txt",
                                  detail::subset_labels(ses, cfg.eval_subset));
    EvalResult r = compute_eer(scores);
    std::string path = prefix + "eval_" + cfg.eval_subset + ".json";
    {
      std::ofstream f(path, std::ios::trunc);
      f << eval_result_json(r).dump(2) << "\n";
    }
    man.artifacts["eval"] = path;
    man.report = eval_result_json(r);
  } else if (stage == "intervene") {
    if (!cfg.intervention)
      throw ValidationError("intervene: config has no intervention spec");
    Session ses(cfg);
    TrainedModel model = load_model(prefix + "model.json");
    std::string eval_path = prefix + "eval_" + cfg.eval_subset + ".json";
    std::ifstream ef(eval_path);
    if (!ef) throw PrerequisiteError("intervene: missing eval report " + eval_path);
    nlohmann::json ej = nlohmann::json::parse(ef);
    double theta = ej.at("theta");
    ScoreSet baseline =
        read_scores(prefix + "scores_" + cfg.eval_subset + ".txt",
                    detail::subset_labels(ses, cfg.eval_subset));
    std::vector<ArtefactRecord> arts = load_artefact_side_info(ses);
    SideInfo side = build_side_info(ses, arts);
    std::vector<std::string> targets =
        select_targets(baseline, theta, *cfg.intervention, arts);
    ScoreSet after = rescore_intervened(ses, model, targets,
                                        cfg.intervention->iv, side,
                                        cfg.test_endpoints);
    DeltaReport rep = diff_report(baseline, after, theta);
    std::string path = prefix + "delta_" + cfg.eval_subset + ".json";
    {
      std::ofstream f(path, std::ios::trunc);
      f << delta_report_json(rep).dump(2) << "\n";
    }
    std::string scores_path = prefix + "scores_intervened_" + cfg.eval_subset + ".txt";
    write_scores(after, scores_path);
    man.artifacts["delta"] = path;
    man.artifacts["scores"] = scores_path;
    man.report = delta_report_json(rep);
  } else {
    throw ValidationError("unknown stage: " + stage);
  }

  man.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                   .count();
  write_manifest(man, cfg.output_dir + "/manifest_" + stage + "_" +
                          cfg.model_kind + ".json");
  return man;
}

// ---------------------------------------------------------------------------
// Named experiments (in-memory composition of the stage logic)
// ---------------------------------------------------------------------------

struct ExperimentResult {
  nlohmann::json report;
  std::string text;
};

namespace detail {

struct BaselineRun {
  TrainedModel model;
  ScoreSet scores;
  EvalResult eval;
};

inline BaselineRun baseline_run(Session& ses) {
  BaselineRun r;
  r.model = train_model(ses);
  r.scores = score_subset(ses, r.model, ses.cfg.eval_subset, ses.cfg.test_endpoints);
  r.eval = compute_eer(r.scores);
  return r;
}

inline nlohmann::json intervention_piece(Session& ses, const BaselineRun& base,
                                         const InterventionSpec& spec,
                                         const SideInfo& side,
                                         const std::vector<ArtefactRecord>& arts,
                                         std::string* text) {
  std::vector<std::string> targets =
      select_targets(base.scores, base.eval.theta, spec, arts);
  ScoreSet after = rescore_intervened(ses, base.model, targets, spec.iv, side,
                                      ses.cfg.test_endpoints);
  DeltaReport rep = diff_report(base.scores, after, base.eval.theta);
  std::string title = intervention_kind_name(spec.iv.kind) + " on " + spec.target +
                      " (" + spec.target_class + ")";
  if (!spec.artefact_flag.empty()) title += " flagged " + spec.artefact_flag;
  if (text) *text += delta_report_table(title, rep);
  nlohmann::json j = delta_report_json(rep);
  j["targets"] = targets.size();
  j["spec"] = intervention_spec_to_json(spec);
  return j;
}

}  // namespace detail

// Runs one named end-to-end experiment on the configured model kind. Each
// experiment trains a baseline, freezes its EER threshold, and reports the
// intervention deltas at that frozen threshold.
inline ExperimentResult run_experiment(const std::string& name,
                                       const ExperimentConfig& cfg_in) {
  ExperimentConfig cfg = cfg_in;
  ExperimentResult out;
  Session ses(cfg);
  std::vector<ArtefactRecord> arts = load_artefact_side_info(ses);
  SideInfo side = build_side_info(ses, arts);

  auto finish = [&](nlohmann::json j) {
    j["experiment"] = name;
    j["model_kind"] = cfg.model_kind;
    j["config_hash"] = config_hash(cfg);
    out.report = std::move(j);
  };

  if (name == "bcs-removal" || name == "dtmf-removal" ||
      name == "pattern-difference" || name == "bcs-attack" ||
      name == "silence-attack") {
    detail::BaselineRun base = detail::baseline_run(ses);
    nlohmann::json j;
    j["baseline"] = eval_result_json(base.eval);
    out.text += "baseline EER " + std::to_string(base.eval.eer) + " theta " +
                std::to_string(base.eval.theta) + "\n";

    std::vector<InterventionSpec> pieces;
    if (name == "bcs-removal") {
      InterventionSpec s;
      s.iv.kind = InterventionKind::kRemovePrefix;
      s.iv.prefix_ms = 100.0;
      s.target = "TP";
      s.target_class = "bonafide";
      s.artefact_flag = "BCS";
      pieces.push_back(s);
    } else if (name == "dtmf-removal") {
      InterventionSpec s;
      s.iv.kind = InterventionKind::kRemovePrefix;
      s.iv.prefix_ms = 250.0;
      s.target = "TN";
      s.target_class = "spoof";
      s.artefact_flag = "DTMF";
      pieces.push_back(s);
    } else if (name == "pattern-difference") {
      InterventionSpec tp;
      tp.iv.kind = InterventionKind::kTrimEndpoints;
      tp.target = "TP";
      tp.target_class = "bonafide";
      pieces.push_back(tp);
      InterventionSpec fp = tp;
      fp.target = "FP";
      fp.target_class = "spoof";
      pieces.push_back(fp);
    } else if (name == "bcs-attack") {
      InterventionSpec tn;
      tn.iv.kind = InterventionKind::kPrependSignature;
      tn.target = "TN";
      tn.target_class = "spoof";
      pieces.push_back(tn);
      InterventionSpec fn = tn;
      fn.target = "FN";
      fn.target_class = "bonafide";
      pieces.push_back(fn);
    } else {  // silence-attack
      for (const char* target : {"TN", "FN"}) {
        InterventionSpec s;
        s.iv.kind = InterventionKind::kInjectSilence;
        s.iv.duration_ms = 100.0;
        s.iv.location = InsertLocation::kStart;
        s.target = target;
        s.target_class = target == std::string("TN") ? "spoof" : "bonafide";
        pieces.push_back(s);
      }
    }
    nlohmann::json deltas = nlohmann::json::array();
    for (const auto& p : pieces)
      deltas.push_back(detail::intervention_piece(ses, base, p, side, arts, &out.text));
    j["deltas"] = deltas;
    finish(std::move(j));
    return out;
  }

  if (name == "noise-attack") {
    detail::BaselineRun base = detail::baseline_run(ses);
    nlohmann::json j;
    j["baseline"] = eval_result_json(base.eval);
    nlohmann::json sweeps = nlohmann::json::array();
    for (double exponent : {0.0, 6.0}) {
      InterventionSpec s;
      s.iv.kind = InterventionKind::kInjectNoise;
      s.iv.duration_ms = 100.0;
      s.iv.snr_exponent = exponent;
      s.iv.location = InsertLocation::kStart;
      s.iv.seed = derive_seed(cfg.seed, "noise");
      s.target = "TN";
      s.target_class = "spoof";
      nlohmann::json piece =
          detail::intervention_piece(ses, base, s, side, arts, &out.text);
      piece["snr_exponent"] = exponent;
      sweeps.push_back(piece);
    }
    j["deltas"] = sweeps;
    finish(std::move(j));
    return out;
  }

  if (name == "robustness") {
    // Baseline (no endpoint handling) vs retrained (endpoint trimming at
    // train and test), both attacked with TrimThenPrepend on every eval file.
    auto attacked_eer = [&](Session& s, const TrainedModel& model,
                            EndpointMode test_mode) {
      auto it = s.corpus.protocols.find(cfg.eval_subset);
      if (it == s.corpus.protocols.end())
        throw PrerequisiteError("robustness: no subset " + cfg.eval_subset);
      std::vector<std::string> all_files;
      for (const auto& e : it->second) all_files.push_back(e.file_id);
      Intervention iv;
      iv.kind = InterventionKind::kTrimThenPrepend;
      ScoreSet attacked =
          rescore_intervened(s, model, all_files, iv, side, test_mode);
      return compute_eer(attacked).eer;
    };

    ExperimentConfig base_cfg = cfg;
    base_cfg.train_endpoints = EndpointMode::kNone;
    base_cfg.test_endpoints = EndpointMode::kNone;
    Session base_ses(base_cfg);
    TrainedModel base_model = train_model(base_ses);
    double base_eer =
        compute_eer(score_subset(base_ses, base_model, cfg.eval_subset,
                                 EndpointMode::kNone))
            .eer;
    double base_attacked = attacked_eer(base_ses, base_model, EndpointMode::kNone);

    ExperimentConfig new_cfg = cfg;
    new_cfg.train_endpoints = EndpointMode::kAutomatic;
    new_cfg.test_endpoints = EndpointMode::kAutomatic;
    Session new_ses(new_cfg);
    TrainedModel new_model = train_model(new_ses);
    double new_eer = compute_eer(score_subset(new_ses, new_model, cfg.eval_subset,
                                              EndpointMode::kAutomatic))
                         .eer;
    double new_attacked =
        attacked_eer(new_ses, new_model, EndpointMode::kAutomatic);

    nlohmann::json j = {
        {"baseline", {{"eer", base_eer}, {"attacked_eer", base_attacked},
                      {"delta", std::abs(base_attacked - base_eer)}}},
        {"retrained", {{"eer", new_eer}, {"attacked_eer", new_attacked},
                       {"delta", std::abs(new_attacked - new_eer)}}}};
    out.text += cfg.model_kind + " baseline EER " + std::to_string(base_eer) +
                " -> attacked " + std::to_string(base_attacked) + "\n" +
                cfg.model_kind + " retrained EER " + std::to_string(new_eer) +
                " -> attacked " + std::to_string(new_attacked) + "\n";
    finish(std::move(j));
    return out;
  }

  throw ValidationError("unknown experiment: " + name);
}

}  // namespace spoofaudit

#endif  // SPOOFAUDIT_HARNESS_HPP
