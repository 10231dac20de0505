#ifndef SPOOFAUDIT_NEURAL_HPP
#define SPOOFAUDIT_NEURAL_HPP

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "spoofaudit/common.hpp"
#include "spoofaudit/dsp.hpp"
#include "spoofaudit/metrics.hpp"

namespace spoofaudit {

struct TensorShape {
  int c = 1, h = 1, w = 1;
  int size() const { return c * h * w; }
  bool operator==(const TensorShape&) const = default;
};

struct Tensor {
  TensorShape shape;
  std::vector<double> v;

  Tensor() = default;
  explicit Tensor(TensorShape s) : shape(s), v(s.size(), 0.0) {}
};

struct LayerSpec {
  enum class Type { kDense, kConv, kMaxPool, kRelu, kSigmoid, kFlatten, kDropout };
  Type type = Type::kDense;
  int out_dim = 0;                  // dense
  int filters = 0, kh = 0, kw = 0;  // conv
  int stride = 1;
  int ph = 0, pw = 0;               // maxpool
  double p = 0.0;                   // dropout
};

inline LayerSpec dense(int out) { return {LayerSpec::Type::kDense, out}; }
inline LayerSpec conv2d(int filters, int kh, int kw, int stride = 1) {
  LayerSpec l;
  l.type = LayerSpec::Type::kConv;
  l.filters = filters;
  l.kh = kh;
  l.kw = kw;
  l.stride = stride;
  return l;
}
inline LayerSpec maxpool(int h, int w) {
  LayerSpec l;
  l.type = LayerSpec::Type::kMaxPool;
  l.ph = h;
  l.pw = w;
  return l;
}
inline LayerSpec relu() { return {LayerSpec::Type::kRelu}; }
inline LayerSpec sigmoid_layer() { return {LayerSpec::Type::kSigmoid}; }
inline LayerSpec flatten() { return {LayerSpec::Type::kFlatten}; }
inline LayerSpec dropout(double p) {
  LayerSpec l;
  l.type = LayerSpec::Type::kDropout;
  l.p = p;
  return l;
}

struct NetworkSpec {
  TensorShape input;
  std::vector<LayerSpec> layers;
};

inline TensorShape layer_output_shape(const LayerSpec& l, TensorShape in) {
  switch (l.type) {
    case LayerSpec::Type::kDense:
      return {1, 1, l.out_dim};
    case LayerSpec::Type::kConv: {
      int oh = (in.h - l.kh) / l.stride + 1;
      int ow = (in.w - l.kw) / l.stride + 1;
      if (oh < 1 || ow < 1) throw ValidationError("conv: kernel larger than input");
      return {l.filters, oh, ow};
    }
    case LayerSpec::Type::kMaxPool: {
      int oh = in.h / l.ph;
      int ow = in.w / l.pw;
      if (oh < 1 || ow < 1) throw ValidationError("maxpool: pool larger than input");
      return {in.c, oh, ow};
    }
    case LayerSpec::Type::kFlatten:
      return {1, 1, in.size()};
    default:
      return in;
  }
}

inline void validate_spec(const NetworkSpec& spec) {
  TensorShape s = spec.input;
  for (const auto& l : spec.layers) s = layer_output_shape(l, s);
  if (s.size() != 1)
    throw ValidationError("network spec must end in a single output unit");
  if (spec.layers.empty() || spec.layers.back().type != LayerSpec::Type::kSigmoid)
    throw ValidationError("network spec must end with a sigmoid");
}

struct Network {
  NetworkSpec spec;
  std::vector<std::vector<double>> weights;  // per layer; empty if parameterless
  std::vector<std::vector<double>> biases;
  std::uint64_t seed = 0;
};

inline Network init_network(const NetworkSpec& spec, std::uint64_t seed) {
  validate_spec(spec);
  Network net;
  net.spec = spec;
  net.seed = seed;
  std::mt19937_64 rng = make_rng(seed);
  TensorShape in = spec.input;
  for (const auto& l : spec.layers) {
    TensorShape out = layer_output_shape(l, in);
    std::vector<double> w, b;
    if (l.type == LayerSpec::Type::kDense) {
      int fan_in = in.size();
      double scale = std::sqrt(2.0 / fan_in);
      std::normal_distribution<double> dist(0.0, scale);
      w.resize(static_cast<std::size_t>(l.out_dim) * fan_in);
      for (double& x : w) x = dist(rng);
      b.assign(l.out_dim, 0.0);
    } else if (l.type == LayerSpec::Type::kConv) {
      int fan_in = in.c * l.kh * l.kw;
      double scale = std::sqrt(2.0 / fan_in);
      std::normal_distribution<double> dist(0.0, scale);
      w.resize(static_cast<std::size_t>(l.filters) * fan_in);
      for (double& x : w) x = dist(rng);
      b.assign(l.filters, 0.0);
    }
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
    in = out;
  }
  return net;
}

namespace detail {

struct ForwardCache {
  std::vector<Tensor> acts;                 // acts[i] = input to layer i; back = output
  std::vector<std::vector<int>> pool_argmax;
  std::vector<std::vector<char>> drop_mask;
};

inline Tensor layer_forward(const Network& net, std::size_t li, const Tensor& in,
                            bool training, std::mt19937_64* rng,
                            ForwardCache* cache) {
  const LayerSpec& l = net.spec.layers[li];
  TensorShape os = layer_output_shape(l, in.shape);
  Tensor out(os);
  switch (l.type) {
    case LayerSpec::Type::kDense: {
      int fan_in = in.shape.size();
      for (int o = 0; o < l.out_dim; ++o) {
        const double* wr = net.weights[li].data() + static_cast<std::size_t>(o) * fan_in;
        double acc = net.biases[li][o];
        for (int i = 0; i < fan_in; ++i) acc += wr[i] * in.v[i];
        out.v[o] = acc;
      }
      break;
    }
    case LayerSpec::Type::kConv: {
      int s = l.stride;
      for (int f = 0; f < l.filters; ++f) {
        const double* wf = net.weights[li].data() +
                           static_cast<std::size_t>(f) * in.shape.c * l.kh * l.kw;
        for (int oy = 0; oy < os.h; ++oy)
          for (int ox = 0; ox < os.w; ++ox) {
            double acc = net.biases[li][f];
            for (int c = 0; c < in.shape.c; ++c) {
              const double* plane = in.v.data() +
                                    static_cast<std::size_t>(c) * in.shape.h * in.shape.w;
              const double* wc = wf + static_cast<std::size_t>(c) * l.kh * l.kw;
              for (int ky = 0; ky < l.kh; ++ky) {
                const double* row = plane + (oy * s + ky) * in.shape.w + ox * s;
                const double* wrow = wc + ky * l.kw;
                for (int kx = 0; kx < l.kw; ++kx) acc += row[kx] * wrow[kx];
              }
            }
            out.v[(static_cast<std::size_t>(f) * os.h + oy) * os.w + ox] = acc;
          }
      }
      break;
    }
    case LayerSpec::Type::kMaxPool: {
      std::vector<int> argmax(os.size());
      for (int c = 0; c < in.shape.c; ++c)
        for (int oy = 0; oy < os.h; ++oy)
          for (int ox = 0; ox < os.w; ++ox) {
            double best = -std::numeric_limits<double>::infinity();
            int best_idx = -1;
            for (int ky = 0; ky < l.ph; ++ky)
              for (int kx = 0; kx < l.pw; ++kx) {
                int iy = oy * l.ph + ky, ix = ox * l.pw + kx;
                int idx = (c * in.shape.h + iy) * in.shape.w + ix;
                // First-index winner on ties (strict >): deterministic grads.
                if (in.v[idx] > best) {
                  best = in.v[idx];
                  best_idx = idx;
                }
              }
            int oidx = (c * os.h + oy) * os.w + ox;
            out.v[oidx] = best;
            argmax[oidx] = best_idx;
          }
      if (cache) cache->pool_argmax[li] = std::move(argmax);
      break;
    }
    case LayerSpec::Type::kRelu:
      for (int i = 0; i < os.size(); ++i) out.v[i] = std::max(in.v[i], 0.0);
      break;
    case LayerSpec::Type::kSigmoid:
      for (int i = 0; i < os.size(); ++i) out.v[i] = 1.0 / (1.0 + std::exp(-in.v[i]));
      break;
    case LayerSpec::Type::kFlatten:
      out.v = in.v;
      break;
    case LayerSpec::Type::kDropout: {
      if (training && l.p > 0.0) {
        std::vector<char> mask(os.size());
        std::uniform_real_distribution<double> u(0.0, 1.0);
        double keep = 1.0 - l.p;
        for (int i = 0; i < os.size(); ++i) {
          mask[i] = u(*rng) < keep;
          out.v[i] = mask[i] ? in.v[i] / keep : 0.0;
        }
        if (cache) cache->drop_mask[li] = std::move(mask);
      } else {
        out.v = in.v;
      }
      break;
    }
  }
  return out;
}

inline double forward_impl(const Network& net, const Tensor& input, bool training,
                           std::mt19937_64* rng, ForwardCache* cache) {
  if (!(input.shape == net.spec.input))
    throw ValidationError("network_forward: input shape mismatch");
  if (cache) {
    cache->acts.clear();
    cache->pool_argmax.assign(net.spec.layers.size(), {});
    cache->drop_mask.assign(net.spec.layers.size(), {});
  }
  Tensor cur = input;
  for (std::size_t li = 0; li < net.spec.layers.size(); ++li) {
    if (cache) cache->acts.push_back(cur);
    cur = layer_forward(net, li, cur, training, rng, cache);
  }
  if (cache) cache->acts.push_back(cur);
  return cur.v[0];
}

struct Gradients {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> biases;
};

inline Gradients zero_like(const Network& net) {
  Gradients g;
  for (std::size_t li = 0; li < net.weights.size(); ++li) {
    g.weights.emplace_back(net.weights[li].size(), 0.0);
    g.biases.emplace_back(net.biases[li].size(), 0.0);
  }
  return g;
}

// Backprop dL/dp through the cached forward pass, accumulating into grads.
inline void backward_impl(const Network& net, const ForwardCache& cache,
                          double dLdp, Gradients& grads) {
  std::vector<double> delta(1, dLdp);
  for (std::size_t li = net.spec.layers.size(); li-- > 0;) {
    const LayerSpec& l = net.spec.layers[li];
    const Tensor& in = cache.acts[li];
    const Tensor& out = cache.acts[li + 1];
    std::vector<double> dprev(in.shape.size(), 0.0);
    switch (l.type) {
      case LayerSpec::Type::kDense: {
        int fan_in = in.shape.size();
        for (int o = 0; o < l.out_dim; ++o) {
          double d = delta[o];
          grads.biases[li][o] += d;
          double* gw = grads.weights[li].data() + static_cast<std::size_t>(o) * fan_in;
          const double* wr = net.weights[li].data() + static_cast<std::size_t>(o) * fan_in;
          for (int i = 0; i < fan_in; ++i) {
            gw[i] += d * in.v[i];
            dprev[i] += d * wr[i];
          }
        }
        break;
      }
      case LayerSpec::Type::kConv: {
        TensorShape os = out.shape;
        int s = l.stride;
        for (int f = 0; f < l.filters; ++f) {
          const double* wf = net.weights[li].data() +
                             static_cast<std::size_t>(f) * in.shape.c * l.kh * l.kw;
          double* gwf = grads.weights[li].data() +
                        static_cast<std::size_t>(f) * in.shape.c * l.kh * l.kw;
          for (int oy = 0; oy < os.h; ++oy)
            for (int ox = 0; ox < os.w; ++ox) {
              double d = delta[(static_cast<std::size_t>(f) * os.h + oy) * os.w + ox];
              if (d == 0.0) continue;
              grads.biases[li][f] += d;
              for (int c = 0; c < in.shape.c; ++c) {
                std::size_t plane = static_cast<std::size_t>(c) * in.shape.h * in.shape.w;
                std::size_t wc = static_cast<std::size_t>(c) * l.kh * l.kw;
                for (int ky = 0; ky < l.kh; ++ky) {
                  std::size_t irow = plane + (oy * s + ky) * in.shape.w + ox * s;
                  std::size_t wrow = wc + static_cast<std::size_t>(ky) * l.kw;
                  for (int kx = 0; kx < l.kw; ++kx) {
                    gwf[wrow + kx] += d * in.v[irow + kx];
                    dprev[irow + kx] += d * wf[wrow + kx];
                  }
                }
              }
            }
        }
        break;
      }
      case LayerSpec::Type::kMaxPool: {
        const std::vector<int>& argmax = cache.pool_argmax[li];
        for (std::size_t i = 0; i < delta.size(); ++i)
          dprev[argmax[i]] += delta[i];
        break;
      }
      case LayerSpec::Type::kRelu:
        for (std::size_t i = 0; i < delta.size(); ++i)
          dprev[i] = in.v[i] > 0.0 ? delta[i] : 0.0;
        break;
      case LayerSpec::Type::kSigmoid:
        for (std::size_t i = 0; i < delta.size(); ++i)
          dprev[i] = delta[i] * out.v[i] * (1.0 - out.v[i]);
        break;
      case LayerSpec::Type::kFlatten:
        dprev = delta;
        break;
      case LayerSpec::Type::kDropout: {
        const std::vector<char>& mask = cache.drop_mask[li];
        if (mask.empty()) {
          dprev = delta;
        } else {
          double keep = 1.0 - l.p;
          for (std::size_t i = 0; i < delta.size(); ++i)
            dprev[i] = mask[i] ? delta[i] / keep : 0.0;
        }
        break;
      }
    }
    delta = std::move(dprev);
  }
}

}  // namespace detail

inline double network_forward(const Network& net, const Tensor& input) {
  return detail::forward_impl(net, input, /*training=*/false, nullptr, nullptr);
}

inline double bce_loss(double p, double y) {
  double c = std::clamp(p, 1e-12, 1.0 - 1e-12);
  return -(y * std::log(c) + (1.0 - y) * std::log(1.0 - c));
}

inline double bce_dLdp(double p, double y) {
  double c = std::clamp(p, 1e-12, 1.0 - 1e-12);
  return -y / c + (1.0 - y) / (1.0 - c);
}

struct TrainSample {
  Tensor input;
  double label = 0.0;  // 1 = bonafide
};

struct TrainConfig {
  enum class Optimizer { kSgd, kAdam };
  Optimizer optimizer = Optimizer::kAdam;
  double learning_rate = 1e-3;
  double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  int batch_size = 32;
  int max_epochs = 30;
  int patience = 5;  // epochs without dev EER improvement
  std::uint64_t seed = 0;
};

struct TrainLog {
  std::vector<double> epoch_loss;
  std::vector<double> dev_eer;
};

inline void write_train_log_csv(const TrainLog& log, const std::string& path) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error("write_train_log_csv: cannot open " + path);
  f << "epoch,train_loss,dev_eer\n";
  for (std::size_t i = 0; i < log.epoch_loss.size(); ++i) {
    f << i << "," << log.epoch_loss[i] << ",";
    if (i < log.dev_eer.size()) f << log.dev_eer[i];
    f << "\n";
  }
}

// Mini-batch backprop on binary cross-entropy; early stop on dev EER.
// Single logical thread, fixed accumulation order: bit-exact per seed.
inline Network network_train(const NetworkSpec& spec,
                             const std::vector<TrainSample>& train,
                             const std::vector<TrainSample>& dev,
                             const TrainConfig& cfg, TrainLog* log = nullptr) {
  bool has_pos = false, has_neg = false;
  for (const auto& s : train) (s.label > 0.5 ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg)
    throw ValidationError("network_train: both classes required");

  Network net = init_network(spec, derive_seed(cfg.seed, "init"));
  detail::Gradients m = detail::zero_like(net), v = detail::zero_like(net);
  std::mt19937_64 order_rng = make_rng(derive_seed(cfg.seed, "order"));
  std::mt19937_64 drop_rng = make_rng(derive_seed(cfg.seed, "dropout"));

  std::vector<std::size_t> order(train.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  Network best = net;
  double best_eer = std::numeric_limits<double>::infinity();
  int since_best = 0;
  long step = 0;

  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), order_rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(cfg.batch_size)) {
      std::size_t end = std::min(order.size(),
                                 start + static_cast<std::size_t>(cfg.batch_size));
      detail::Gradients grads = detail::zero_like(net);
      detail::ForwardCache cache;
      for (std::size_t i = start; i < end; ++i) {
        const TrainSample& s = train[order[i]];
        double p = detail::forward_impl(net, s.input, true, &drop_rng, &cache);
        double loss = bce_loss(p, s.label);
        if (!std::isfinite(loss))
          throw Error("network_train: non-finite loss at epoch " +
                      std::to_string(epoch));
        epoch_loss += loss;
        detail::backward_impl(net, cache, bce_dLdp(p, s.label) / (end - start),
                              grads);
      }
      ++step;
      for (std::size_t li = 0; li < net.weights.size(); ++li) {
        auto update = [&](std::vector<double>& param, std::vector<double>& g,
                          std::vector<double>& mm, std::vector<double>& vv) {
          for (std::size_t j = 0; j < param.size(); ++j) {
            if (cfg.optimizer == TrainConfig::Optimizer::kSgd) {
              param[j] -= cfg.learning_rate * g[j];
            } else {
              mm[j] = cfg.beta1 * mm[j] + (1.0 - cfg.beta1) * g[j];
              vv[j] = cfg.beta2 * vv[j] + (1.0 - cfg.beta2) * g[j] * g[j];
              double mhat = mm[j] / (1.0 - std::pow(cfg.beta1, step));
              double vhat = vv[j] / (1.0 - std::pow(cfg.beta2, step));
              param[j] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.adam_eps);
            }
          }
        };
        update(net.weights[li], grads.weights[li], m.weights[li], v.weights[li]);
        update(net.biases[li], grads.biases[li], m.biases[li], v.biases[li]);
      }
    }
    if (log) log->epoch_loss.push_back(epoch_loss / train.size());

    if (!dev.empty()) {
      ScoreSet dev_scores;
      for (std::size_t i = 0; i < dev.size(); ++i) {
        double p = network_forward(net, dev[i].input);
        dev_scores.push_back({"d" + std::to_string(i),
                              dev[i].label > 0.5 ? Label::kBonafide : Label::kSpoof,
                              p});
      }
      double eer = compute_eer(dev_scores).eer;
      if (log) log->dev_eer.push_back(eer);
      if (eer < best_eer - 1e-12) {
        best_eer = eer;
        best = net;
        since_best = 0;
      } else if (++since_best >= cfg.patience) {
        return best;
      }
    }
  }
  return dev.empty() ? net : best;
}

// Central-difference check of every parameter against the analytic gradient.
inline double gradient_check(const Network& net_in, const TrainSample& sample,
                             double eps = 1e-5) {
  Network net = net_in;
  detail::ForwardCache cache;
  double p = detail::forward_impl(net, sample.input, false, nullptr, &cache);
  detail::Gradients grads = detail::zero_like(net);
  detail::backward_impl(net, cache, bce_dLdp(p, sample.label), grads);

  double max_err = 0.0;
  auto check = [&](std::vector<double>& param, const std::vector<double>& g) {
    for (std::size_t j = 0; j < param.size(); ++j) {
      double orig = param[j];
      param[j] = orig + eps;
      double lp = bce_loss(network_forward(net, sample.input), sample.label);
      param[j] = orig - eps;
      double lm = bce_loss(network_forward(net, sample.input), sample.label);
      param[j] = orig;
      double numeric = (lp - lm) / (2.0 * eps);
      double denom = std::max({std::abs(g[j]), std::abs(numeric), 1e-12});
      // Absolute agreement at tiny magnitudes counts as a pass.
      double err = std::abs(g[j] - numeric);
      if (err > 1e-10) err /= denom;
      max_err = std::max(max_err, err);
    }
  };
  for (std::size_t li = 0; li < net.weights.size(); ++li) {
    check(net.weights[li], grads.weights[li]);
    check(net.biases[li], grads.biases[li]);
  }
  return max_err;
}

enum class ScoreKind { kCnn, kDnn };

// CNN: one forward pass on the fixed-duration input. DNN: bag-of-frames mean
// log-odds over per-frame probabilities.
inline double score_utterance(const Network& net, ScoreKind kind,
                              const FeatureMatrix& features) {
  if (kind == ScoreKind::kCnn) {
    Tensor in(net.spec.input);
    if (static_cast<std::size_t>(in.shape.size()) != features.data.size())
      throw ValidationError("score_utterance: spectrogram shape mismatch");
    in.v = features.data;
    return network_forward(net, in);
  }
  if (features.rows == 0) throw ValidationError("score_utterance: no frames");
  Tensor in(net.spec.input);
  if (static_cast<std::size_t>(in.shape.size()) != features.cols)
    throw ValidationError("score_utterance: frame dimension mismatch");
  double acc = 0.0;
  for (std::size_t t = 0; t < features.rows; ++t) {
    std::copy(features.row(t), features.row(t) + features.cols, in.v.begin());
    double p = std::clamp(network_forward(net, in), 1e-12, 1.0 - 1e-12);
    acc += std::log(p / (1.0 - p));
  }
  return acc / static_cast<double>(features.rows);
}

inline nlohmann::json layer_to_json(const LayerSpec& l) {
  return {{"type", static_cast<int>(l.type)}, {"out_dim", l.out_dim},
          {"filters", l.filters},             {"kh", l.kh},
          {"kw", l.kw},                       {"stride", l.stride},
          {"ph", l.ph},                       {"pw", l.pw},
          {"p", l.p}};
}

inline LayerSpec layer_from_json(const nlohmann::json& j) {
  LayerSpec l;
  l.type = static_cast<LayerSpec::Type>(j.at("type").get<int>());
  l.out_dim = j.at("out_dim");
  l.filters = j.at("filters");
  l.kh = j.at("kh");
  l.kw = j.at("kw");
  l.stride = j.at("stride");
  l.ph = j.at("ph");
  l.pw = j.at("pw");
  l.p = j.at("p");
  return l;
}

inline nlohmann::json network_to_json(const Network& net) {
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net.spec.layers) layers.push_back(layer_to_json(l));
  return {{"input", {net.spec.input.c, net.spec.input.h, net.spec.input.w}},
          {"layers", layers},
          {"weights", net.weights},
          {"biases", net.biases},
          {"seed", net.seed}};
}

inline Network network_from_json(const nlohmann::json& j) {
  Network net;
  auto in = j.at("input");
  net.spec.input = {in[0], in[1], in[2]};
  for (const auto& lj : j.at("layers")) net.spec.layers.push_back(layer_from_json(lj));
  net.weights = j.at("weights").get<std::vector<std::vector<double>>>();
  net.biases = j.at("biases").get<std::vector<std::vector<double>>>();
  net.seed = j.at("seed");
  return net;
}

}  // namespace spoofaudit

#endif  // SPOOFAUDIT_NEURAL_HPP
