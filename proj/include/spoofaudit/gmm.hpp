#ifndef SPOOFAUDIT_GMM_HPP
#define SPOOFAUDIT_GMM_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include <json.hpp>

#include "spoofaudit/common.hpp"
#include "spoofaudit/dsp.hpp"

namespace spoofaudit {

struct GmmModel {
  int k = 0;
  int dims = 0;
  std::vector<double> weights;    // K
  std::vector<double> means;      // K x D row-major
  std::vector<double> variances;  // K x D diagonal
  std::uint64_t seed = 0;

  // Cached per-component constants: log w_k - 0.5*(D log 2pi + sum log var).
  std::vector<double> log_const;
  std::vector<double> inv_var;

  void refresh_cache() {
    log_const.assign(k, 0.0);
    inv_var.assign(static_cast<std::size_t>(k) * dims, 0.0);
    for (int c = 0; c < k; ++c) {
      double acc = std::log(weights[c]) -
                   0.5 * dims * std::log(2.0 * std::numbers::pi);
      for (int d = 0; d < dims; ++d) {
        double v = variances[c * dims + d];
        acc -= 0.5 * std::log(v);
        inv_var[c * dims + d] = 1.0 / v;
      }
      log_const[c] = acc;
    }
  }
};

struct GmmTrainConfig {
  int max_iters = 50;
  double tol = 1e-4;  // nats per frame
  double variance_floor_factor = 1e-3;  // x per-dim global variance
};

inline double gmm_log_likelihood(const GmmModel& m, const double* x) {
  double best = -std::numeric_limits<double>::infinity();
  thread_local std::vector<double> lp;
  lp.resize(m.k);
  for (int c = 0; c < m.k; ++c) {
    double acc = m.log_const[c];
    const double* mu = m.means.data() + static_cast<std::size_t>(c) * m.dims;
    const double* iv = m.inv_var.data() + static_cast<std::size_t>(c) * m.dims;
    for (int d = 0; d < m.dims; ++d) {
      double diff = x[d] - mu[d];
      acc -= 0.5 * diff * diff * iv[d];
    }
    lp[c] = acc;
    if (acc > best) best = acc;
  }
  double sum = 0.0;
  for (int c = 0; c < m.k; ++c) sum += std::exp(lp[c] - best);
  return best + std::log(sum);
}

inline double gmm_log_likelihood(const GmmModel& m, const std::vector<double>& x) {
  if (static_cast<int>(x.size()) != m.dims)
    throw ValidationError("gmm_log_likelihood: dimension mismatch");
  return gmm_log_likelihood(m, x.data());
}

namespace detail {

// E-step responsibilities for one frame; returns the frame log-likelihood.
inline double gmm_responsibilities(const GmmModel& m, const double* x,
                                   std::vector<double>& resp) {
  resp.resize(m.k);
  double best = -std::numeric_limits<double>::infinity();
  for (int c = 0; c < m.k; ++c) {
    double acc = m.log_const[c];
    const double* mu = m.means.data() + static_cast<std::size_t>(c) * m.dims;
    const double* iv = m.inv_var.data() + static_cast<std::size_t>(c) * m.dims;
    for (int d = 0; d < m.dims; ++d) {
      double diff = x[d] - mu[d];
      acc -= 0.5 * diff * diff * iv[d];
    }
    resp[c] = acc;
    if (acc > best) best = acc;
  }
  double sum = 0.0;
  for (int c = 0; c < m.k; ++c) {
    resp[c] = std::exp(resp[c] - best);
    sum += resp[c];
  }
  for (int c = 0; c < m.k; ++c) resp[c] /= sum;
  return best + std::log(sum);
}

}  // namespace detail

// Diagonal-covariance EM. Init: K random distinct frames as means, global
// variance as variances, uniform weights. Variances floored each M-step.
inline GmmModel train_gmm(const FeatureMatrix& pool, int k, std::uint64_t seed,
                          const GmmTrainConfig& cfg = {},
                          std::vector<double>* ll_trace = nullptr) {
  if (pool.rows < static_cast<std::size_t>(10 * k))
    throw ValidationError("train_gmm: pool too small for K=" + std::to_string(k));
  std::size_t n = pool.rows;
  int dims = static_cast<int>(pool.cols);

  std::vector<double> gmean(dims, 0.0), gvar(dims, 0.0);
  for (std::size_t t = 0; t < n; ++t)
    for (int d = 0; d < dims; ++d) gmean[d] += pool.at(t, d);
  for (double& v : gmean) v /= static_cast<double>(n);
  for (std::size_t t = 0; t < n; ++t)
    for (int d = 0; d < dims; ++d) {
      double diff = pool.at(t, d) - gmean[d];
      gvar[d] += diff * diff;
    }
  for (double& v : gvar) v = std::max(v / static_cast<double>(n), 1e-12);
  std::vector<double> var_floor(dims);
  for (int d = 0; d < dims; ++d)
    var_floor[d] = std::max(cfg.variance_floor_factor * gvar[d], 1e-12);

  GmmModel m;
  m.k = k;
  m.dims = dims;
  m.seed = seed;
  m.weights.assign(k, 1.0 / k);
  m.means.resize(static_cast<std::size_t>(k) * dims);
  m.variances.resize(static_cast<std::size_t>(k) * dims);
  std::mt19937_64 rng = make_rng(seed);
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (int c = 0; c < k; ++c) {
    std::uniform_int_distribution<std::size_t> dist(c, n - 1);
    std::swap(idx[c], idx[dist(rng)]);
    for (int d = 0; d < dims; ++d) {
      m.means[static_cast<std::size_t>(c) * dims + d] = pool.at(idx[c], d);
      m.variances[static_cast<std::size_t>(c) * dims + d] = gvar[d];
    }
  }
  m.refresh_cache();

  double prev_ll = -std::numeric_limits<double>::infinity();
  std::vector<double> resp;
  std::vector<double> acc_w(k), acc_mu(static_cast<std::size_t>(k) * dims),
      acc_var(static_cast<std::size_t>(k) * dims);
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    std::fill(acc_w.begin(), acc_w.end(), 0.0);
    std::fill(acc_mu.begin(), acc_mu.end(), 0.0);
    std::fill(acc_var.begin(), acc_var.end(), 0.0);
    double total_ll = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double* x = pool.row(t);
      total_ll += detail::gmm_responsibilities(m, x, resp);
      for (int c = 0; c < k; ++c) {
        double r = resp[c];
        if (r < 1e-14) continue;
        acc_w[c] += r;
        double* am = acc_mu.data() + static_cast<std::size_t>(c) * dims;
        double* av = acc_var.data() + static_cast<std::size_t>(c) * dims;
        for (int d = 0; d < dims; ++d) {
          am[d] += r * x[d];
          av[d] += r * x[d] * x[d];
        }
      }
    }
    if (!std::isfinite(total_ll))
      throw Error("train_gmm: non-finite log-likelihood at iteration " +
                  std::to_string(iter));
    double per_frame = total_ll / static_cast<double>(n);
    if (ll_trace) ll_trace->push_back(per_frame);

    for (int c = 0; c < k; ++c) {
      double nk = acc_w[c];
      if (nk < 1e-10) {
        // Dead component: keep its parameters, tiny weight.
        m.weights[c] = 1e-10;
        continue;
      }
      m.weights[c] = nk / static_cast<double>(n);
      double* mu = m.means.data() + static_cast<std::size_t>(c) * dims;
      double* var = m.variances.data() + static_cast<std::size_t>(c) * dims;
      const double* am = acc_mu.data() + static_cast<std::size_t>(c) * dims;
      const double* av = acc_var.data() + static_cast<std::size_t>(c) * dims;
      for (int d = 0; d < dims; ++d) {
        mu[d] = am[d] / nk;
        var[d] = std::max(av[d] / nk - mu[d] * mu[d], var_floor[d]);
      }
    }
    double wsum = 0.0;
    for (double w : m.weights) wsum += w;
    for (double& w : m.weights) w /= wsum;
    m.refresh_cache();

    if (per_frame - prev_ll < cfg.tol && iter > 0) break;
    prev_ll = per_frame;
  }
  return m;
}

struct GmmPairModel {
  GmmModel bonafide;
  GmmModel spoof;
  std::string feature_fingerprint;
};

// Mean per-frame log-likelihood ratio of the two class models.
inline double score_llr(const GmmPairModel& pair, const FeatureMatrix& feats) {
  if (feats.rows == 0) throw ValidationError("score_llr: empty feature matrix");
  if (static_cast<int>(feats.cols) != pair.bonafide.dims)
    throw ValidationError("score_llr: dimension mismatch");
  double b = 0.0, s = 0.0;
  for (std::size_t t = 0; t < feats.rows; ++t) {
    b += gmm_log_likelihood(pair.bonafide, feats.row(t));
    s += gmm_log_likelihood(pair.spoof, feats.row(t));
  }
  double n = static_cast<double>(feats.rows);
  return b / n - s / n;
}

inline nlohmann::json gmm_to_json(const GmmModel& m) {
  return {{"k", m.k},         {"dims", m.dims},       {"weights", m.weights},
          {"means", m.means}, {"variances", m.variances}, {"seed", m.seed}};
}

inline GmmModel gmm_from_json(const nlohmann::json& j) {
  GmmModel m;
  m.k = j.at("k");
  m.dims = j.at("dims");
  m.weights = j.at("weights").get<std::vector<double>>();
  m.means = j.at("means").get<std::vector<double>>();
  m.variances = j.at("variances").get<std::vector<double>>();
  m.seed = j.at("seed");
  m.refresh_cache();
  return m;
}

inline void save_gmm_pair(const GmmPairModel& pair, const std::string& path) {
  nlohmann::json j = {{"bonafide", gmm_to_json(pair.bonafide)},
                      {"spoof", gmm_to_json(pair.spoof)},
                      {"feature_fingerprint", pair.feature_fingerprint}};
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error("save_gmm_pair: cannot open " + path);
  f << j.dump(2);
}

inline GmmPairModel load_gmm_pair(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("load_gmm_pair: cannot open " + path);
  nlohmann::json j = nlohmann::json::parse(f);
  GmmPairModel pair;
  pair.bonafide = gmm_from_json(j.at("bonafide"));
  pair.spoof = gmm_from_json(j.at("spoof"));
  pair.feature_fingerprint = j.value("feature_fingerprint", "");
  return pair;
}

}  // namespace spoofaudit

#endif  // SPOOFAUDIT_GMM_HPP
