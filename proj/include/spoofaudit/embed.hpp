#ifndef SPOOFAUDIT_EMBED_HPP
#define SPOOFAUDIT_EMBED_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "spoofaudit/common.hpp"
#include "spoofaudit/dsp.hpp"
#include "spoofaudit/gmm.hpp"
#include "spoofaudit/protocol.hpp"

namespace spoofaudit {

// Fixed-length utterance embedding: MAP-adapted mean supervector against a
// shared UBM, centered and projected by PCA to E dims. Occupancies are
// normalized to a fixed effective frame budget so the embedding is invariant
// to duplicating the frame sequence.
struct EmbeddingExtractor {
  GmmModel ubm;
  double map_relevance = 16.0;
  double effective_frames = 300.0;
  int embed_dim = 100;
  std::vector<double> projection;       // (K*D) x E column-major by component
  std::vector<double> projection_mean;  // K*D
  std::uint64_t seed = 0;

  std::size_t supervector_dim() const {
    return static_cast<std::size_t>(ubm.k) * ubm.dims;
  }
};

using Embedding = std::vector<double>;

namespace detail {

inline std::vector<double> map_supervector(const GmmModel& ubm,
                                           const FeatureMatrix& feats,
                                           double relevance,
                                           double effective_frames) {
  if (feats.rows == 0) throw ValidationError("map_supervector: empty features");
  if (static_cast<int>(feats.cols) != ubm.dims)
    throw ValidationError("map_supervector: dimension mismatch");
  int k = ubm.k, d = ubm.dims;
  std::vector<double> occ(k, 0.0), first(static_cast<std::size_t>(k) * d, 0.0);
  std::vector<double> resp;
  for (std::size_t t = 0; t < feats.rows; ++t) {
    const double* x = feats.row(t);
    gmm_responsibilities(ubm, x, resp);
    for (int c = 0; c < k; ++c) {
      occ[c] += resp[c];
      double* f = first.data() + static_cast<std::size_t>(c) * d;
      for (int j = 0; j < d; ++j) f[j] += resp[c] * x[j];
    }
  }
  double scale = effective_frames / static_cast<double>(feats.rows);
  std::vector<double> sv(static_cast<std::size_t>(k) * d);
  for (int c = 0; c < k; ++c) {
    double n = occ[c] * scale;
    const double* mu = ubm.means.data() + static_cast<std::size_t>(c) * d;
    double* out = sv.data() + static_cast<std::size_t>(c) * d;
    if (occ[c] > 1e-12) {
      for (int j = 0; j < d; ++j) {
        double xbar = first[static_cast<std::size_t>(c) * d + j] / occ[c];
        out[j] = (n * xbar + relevance * mu[j]) / (n + relevance);
      }
    } else {
      for (int j = 0; j < d; ++j) out[j] = mu[j];
    }
  }
  return sv;
}

}  // namespace detail

struct EmbeddingTrainConfig {
  int k_ubm = 64;
  int embed_dim = 100;
  double map_relevance = 16.0;
  double effective_frames = 300.0;
  int power_iters = 100;
  GmmTrainConfig ubm;
};

// UBM on pooled classes, MAP supervector per utterance, PCA via the Gram
// matrix of centered supervectors. Eigenpairs come from power iteration with
// deflation at a fixed iteration count; eigenvalue ties break by index order.
inline EmbeddingExtractor train_embedding_extractor(
    const FeatureMatrix& pooled_frames,
    const std::vector<FeatureMatrix>& utterances, std::uint64_t seed,
    const EmbeddingTrainConfig& cfg = {}) {
  EmbeddingExtractor ex;
  ex.seed = seed;
  ex.map_relevance = cfg.map_relevance;
  ex.effective_frames = cfg.effective_frames;
  ex.embed_dim = cfg.embed_dim;
  ex.ubm = train_gmm(pooled_frames, cfg.k_ubm, derive_seed(seed, "ubm"), cfg.ubm);

  std::size_t m = ex.supervector_dim();
  std::size_t n = utterances.size();
  if (n < 2) throw ValidationError("train_embedding_extractor: need >= 2 utterances");
  std::vector<std::vector<double>> svs(n);
  for (std::size_t i = 0; i < n; ++i)
    svs[i] = detail::map_supervector(ex.ubm, utterances[i], cfg.map_relevance,
                                     cfg.effective_frames);

  ex.projection_mean.assign(m, 0.0);
  for (const auto& sv : svs)
    for (std::size_t j = 0; j < m; ++j) ex.projection_mean[j] += sv[j];
  for (double& v : ex.projection_mean) v /= static_cast<double>(n);
  for (auto& sv : svs)
    for (std::size_t j = 0; j < m; ++j) sv[j] -= ex.projection_mean[j];

  int e = cfg.embed_dim;
  if (static_cast<std::size_t>(e) >= n)
    throw ValidationError(
        "train_embedding_extractor: embed_dim exceeds supervector rank");

  // Gram matrix G = S S^T (n x n); principal directions u = S^T v / |S^T v|.
  std::vector<double> gram(n * n, 0.0);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a; b < n; ++b) {
      double dot = 0.0;
      for (std::size_t j = 0; j < m; ++j) dot += svs[a][j] * svs[b][j];
      gram[a * n + b] = gram[b * n + a] = dot;
    }

  std::mt19937_64 rng = make_rng(derive_seed(seed, "pca"));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::vector<std::vector<double>> eigvecs;
  std::vector<double> eigvals;
  std::vector<double> work(n), v(n);
  for (int comp = 0; comp < e; ++comp) {
    for (double& x : v) x = unit(rng);
    double lambda = 0.0;
    for (int it = 0; it < cfg.power_iters; ++it) {
      // Deflate previously found directions.
      for (std::size_t p = 0; p < eigvecs.size(); ++p) {
        double dot = std::inner_product(v.begin(), v.end(), eigvecs[p].begin(), 0.0);
        for (std::size_t a = 0; a < n; ++a) v[a] -= dot * eigvecs[p][a];
      }
      for (std::size_t a = 0; a < n; ++a) {
        double acc = 0.0;
        for (std::size_t b = 0; b < n; ++b) acc += gram[a * n + b] * v[b];
        work[a] = acc;
      }
      lambda = std::sqrt(std::inner_product(work.begin(), work.end(), work.begin(), 0.0));
      if (lambda < 1e-12) break;
      for (std::size_t a = 0; a < n; ++a) v[a] = work[a] / lambda;
    }
    if (lambda < 1e-10)
      throw ValidationError(
          "train_embedding_extractor: supervector covariance rank below embed_dim");
    eigvecs.push_back(v);
    eigvals.push_back(lambda);
  }

  ex.projection.assign(m * e, 0.0);
  std::vector<std::vector<double>> cols(e, std::vector<double>(m, 0.0));
  for (int comp = 0; comp < e; ++comp) {
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t j = 0; j < m; ++j)
        cols[comp][j] += eigvecs[comp][a] * svs[a][j];
    // Gram-Schmidt against earlier columns keeps them orthonormal to 1e-6.
    for (int p = 0; p < comp; ++p) {
      double dot = std::inner_product(cols[comp].begin(), cols[comp].end(),
                                      cols[p].begin(), 0.0);
      for (std::size_t j = 0; j < m; ++j) cols[comp][j] -= dot * cols[p][j];
    }
    double norm = std::sqrt(std::inner_product(cols[comp].begin(), cols[comp].end(),
                                               cols[comp].begin(), 0.0));
    if (norm < 1e-12)
      throw ValidationError("train_embedding_extractor: degenerate principal axis");
    for (std::size_t j = 0; j < m; ++j) cols[comp][j] /= norm;
    for (std::size_t j = 0; j < m; ++j) ex.projection[j * e + comp] = cols[comp][j];
  }
  return ex;
}

inline Embedding embed_utterance(const EmbeddingExtractor& ex,
                                 const FeatureMatrix& feats) {
  std::vector<double> sv = detail::map_supervector(ex.ubm, feats, ex.map_relevance,
                                                   ex.effective_frames);
  std::size_t m = ex.supervector_dim();
  int e = ex.embed_dim;
  Embedding out(e, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    double c = sv[j] - ex.projection_mean[j];
    const double* prow = ex.projection.data() + j * e;
    for (int k = 0; k < e; ++k) out[k] += c * prow[k];
  }
  return out;
}

inline double cosine_similarity(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size()) throw ValidationError("cosine: dimension mismatch");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na <= 0.0 || nb <= 0.0) throw ValidationError("cosine: zero-norm vector");
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

inline double cosine_backend_score(const Embedding& test, const Embedding& bona_mean,
                                   const Embedding& spoof_mean) {
  return cosine_similarity(test, bona_mean) - cosine_similarity(test, spoof_mean);
}

struct LinearSvm {
  std::vector<double> weights;
  double bias = 0.0;
  double lambda = 1e-3;
  NormStats norm;  // training-set mean/std per dimension
};

struct SvmTrainConfig {
  double lambda = 1e-3;
  int epochs = 50;
};

// Pegasos-style subgradient descent on the hinge loss, deterministic
// epoch-shuffled order, step 1/(lambda * t). Bias is unregularized.
inline LinearSvm train_linear_svm(const std::vector<Embedding>& embeddings,
                                  const std::vector<Label>& labels,
                                  std::uint64_t seed,
                                  const SvmTrainConfig& cfg = {}) {
  if (embeddings.size() != labels.size() || embeddings.empty())
    throw ValidationError("train_linear_svm: bad inputs");
  bool has_b = false, has_s = false;
  for (Label l : labels) (l == Label::kBonafide ? has_b : has_s) = true;
  if (!has_b || !has_s)
    throw ValidationError("train_linear_svm: both classes required");

  std::size_t n = embeddings.size(), d = embeddings[0].size();
  FeatureMatrix all(n, d);
  for (std::size_t i = 0; i < n; ++i)
    std::copy(embeddings[i].begin(), embeddings[i].end(), all.row(i));
  LinearSvm svm;
  svm.lambda = cfg.lambda;
  svm.norm = compute_norm_stats(all);
  FeatureMatrix x = mean_variance_normalize(all, svm.norm);

  svm.weights.assign(d, 0.0);
  std::mt19937_64 rng = make_rng(seed);
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  long t = 1;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i : order) {
      double eta = 1.0 / (cfg.lambda * t);
      double y = labels[i] == Label::kBonafide ? 1.0 : -1.0;
      const double* xi = x.row(i);
      double margin = svm.bias;
      for (std::size_t j = 0; j < d; ++j) margin += svm.weights[j] * xi[j];
      margin *= y;
      for (std::size_t j = 0; j < d; ++j)
        svm.weights[j] *= (1.0 - eta * cfg.lambda);
      if (margin < 1.0) {
        for (std::size_t j = 0; j < d; ++j) svm.weights[j] += eta * y * xi[j];
        svm.bias += eta * y;
      }
      ++t;
    }
  }
  return svm;
}

inline double svm_score(const LinearSvm& svm, const Embedding& x) {
  if (x.size() != svm.weights.size())
    throw ValidationError("svm_score: dimension mismatch");
  double acc = svm.bias;
  for (std::size_t j = 0; j < x.size(); ++j)
    acc += svm.weights[j] * (x[j] - svm.norm.mean[j]) / svm.norm.stddev[j];
  return acc;
}

inline double svm_objective(const LinearSvm& svm, const std::vector<Embedding>& xs,
                            const std::vector<Label>& labels) {
  double wsq = 0.0;
  for (double w : svm.weights) wsq += w * w;
  double hinge = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double y = labels[i] == Label::kBonafide ? 1.0 : -1.0;
    hinge += std::max(0.0, 1.0 - y * svm_score(svm, xs[i]));
  }
  return 0.5 * svm.lambda * wsq + hinge / static_cast<double>(xs.size());
}

inline nlohmann::json extractor_to_json(const EmbeddingExtractor& ex) {
  return {{"ubm", gmm_to_json(ex.ubm)},
          {"map_relevance", ex.map_relevance},
          {"effective_frames", ex.effective_frames},
          {"embed_dim", ex.embed_dim},
          {"projection", ex.projection},
          {"projection_mean", ex.projection_mean},
          {"seed", ex.seed}};
}

inline EmbeddingExtractor extractor_from_json(const nlohmann::json& j) {
  EmbeddingExtractor ex;
  ex.ubm = gmm_from_json(j.at("ubm"));
  ex.map_relevance = j.at("map_relevance");
  ex.effective_frames = j.at("effective_frames");
  ex.embed_dim = j.at("embed_dim");
  ex.projection = j.at("projection").get<std::vector<double>>();
  ex.projection_mean = j.at("projection_mean").get<std::vector<double>>();
  ex.seed = j.at("seed");
  return ex;
}

inline nlohmann::json svm_to_json(const LinearSvm& svm) {
  return {{"weights", svm.weights},
          {"bias", svm.bias},
          {"lambda", svm.lambda},
          {"norm_mean", svm.norm.mean},
          {"norm_std", svm.norm.stddev}};
}

inline LinearSvm svm_from_json(const nlohmann::json& j) {
  LinearSvm svm;
  svm.weights = j.at("weights").get<std::vector<double>>();
  svm.bias = j.at("bias");
  svm.lambda = j.at("lambda");
  svm.norm.mean = j.at("norm_mean").get<std::vector<double>>();
  svm.norm.stddev = j.at("norm_std").get<std::vector<double>>();
  return svm;
}

}  // namespace spoofaudit

#endif  // SPOOFAUDIT_EMBED_HPP
