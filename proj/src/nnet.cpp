#include "maniapipe/nnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

namespace maniapipe::nnet {

namespace {

struct Tensor {
  std::size_t b = 0, c = 0, l = 0;
  std::vector<double> v;

  Tensor() = default;
  Tensor(std::size_t nb, std::size_t nc, std::size_t nl)
      : b(nb), c(nc), l(nl), v(nb * nc * nl, 0.0) {}

  double& at(std::size_t bi, std::size_t ci, std::size_t ti) {
    return v[(bi * c + ci) * l + ti];
  }
  double at(std::size_t bi, std::size_t ci, std::size_t ti) const {
    return v[(bi * c + ci) * l + ti];
  }
};

void conv_forward(const Tensor& x, const std::vector<double>& w,
                  const std::vector<double>& bias, int kernel, Tensor& y) {
  const std::size_t out_c = y.c, in_c = x.c, out_l = y.l;
  for (std::size_t bi = 0; bi < x.b; ++bi) {
    for (std::size_t f = 0; f < out_c; ++f) {
      for (std::size_t t = 0; t < out_l; ++t) {
        double acc = bias[f];
        for (std::size_t ci = 0; ci < in_c; ++ci) {
          const double* wf = w.data() + (f * in_c + ci) * kernel;
          for (int k = 0; k < kernel; ++k) {
            acc += wf[k] * x.at(bi, ci, t + k);
          }
        }
        y.at(bi, f, t) = acc;
      }
    }
  }
}

void conv_backward(const Tensor& x, const std::vector<double>& w, int kernel,
                   const Tensor& dy, std::vector<double>& dw,
                   std::vector<double>& db, Tensor* dx) {
  const std::size_t out_c = dy.c, in_c = x.c, out_l = dy.l;
  std::fill(dw.begin(), dw.end(), 0.0);
  std::fill(db.begin(), db.end(), 0.0);
  for (std::size_t bi = 0; bi < x.b; ++bi) {
    for (std::size_t f = 0; f < out_c; ++f) {
      for (std::size_t t = 0; t < out_l; ++t) {
        const double g = dy.at(bi, f, t);
        db[f] += g;
        for (std::size_t ci = 0; ci < in_c; ++ci) {
          double* dwf = dw.data() + (f * in_c + ci) * kernel;
          for (int k = 0; k < kernel; ++k) {
            dwf[k] += g * x.at(bi, ci, t + k);
          }
        }
      }
    }
  }
  if (dx == nullptr) return;
  *dx = Tensor(x.b, x.c, x.l);
  for (std::size_t bi = 0; bi < x.b; ++bi) {
    for (std::size_t f = 0; f < out_c; ++f) {
      for (std::size_t t = 0; t < out_l; ++t) {
        const double g = dy.at(bi, f, t);
        for (std::size_t ci = 0; ci < in_c; ++ci) {
          const double* wf = w.data() + (f * in_c + ci) * kernel;
          for (int k = 0; k < kernel; ++k) {
            dx->at(bi, ci, t + k) += g * wf[k];
          }
        }
      }
    }
  }
}

struct BnCache {
  Tensor xhat;
  std::vector<double> inv_std;  // per channel
};

void bn_forward(Tensor& x, const std::vector<double>& gamma,
                const std::vector<double>& beta, std::vector<double>& running_mean,
                std::vector<double>& running_var, double momentum, double epsilon,
                Mode mode, BnCache* cache) {
  const std::size_t n = x.b * x.l;
  if (cache) {
    cache->xhat = Tensor(x.b, x.c, x.l);
    cache->inv_std.assign(x.c, 0.0);
  }
  for (std::size_t ci = 0; ci < x.c; ++ci) {
    double mean, var;
    if (mode == Mode::Train) {
      double sum = 0.0;
      for (std::size_t bi = 0; bi < x.b; ++bi) {
        for (std::size_t t = 0; t < x.l; ++t) sum += x.at(bi, ci, t);
      }
      mean = sum / static_cast<double>(n);
      double sq = 0.0;
      for (std::size_t bi = 0; bi < x.b; ++bi) {
        for (std::size_t t = 0; t < x.l; ++t) {
          const double d = x.at(bi, ci, t) - mean;
          sq += d * d;
        }
      }
      var = sq / static_cast<double>(n);
      running_mean[ci] = (1.0 - momentum) * running_mean[ci] + momentum * mean;
      running_var[ci] = (1.0 - momentum) * running_var[ci] + momentum * var;
    } else {
      mean = running_mean[ci];
      var = running_var[ci];
    }
    const double inv_std = 1.0 / std::sqrt(var + epsilon);
    if (cache) cache->inv_std[ci] = inv_std;
    for (std::size_t bi = 0; bi < x.b; ++bi) {
      for (std::size_t t = 0; t < x.l; ++t) {
        const double xhat = (x.at(bi, ci, t) - mean) * inv_std;
        if (cache) cache->xhat.at(bi, ci, t) = xhat;
        x.at(bi, ci, t) = gamma[ci] * xhat + beta[ci];
      }
    }
  }
}

/// Batch-stat backward: dx folds in the mean/variance dependence.
void bn_backward(const Tensor& dy, const BnCache& cache,
                 const std::vector<double>& gamma, std::vector<double>& dgamma,
                 std::vector<double>& dbeta, Tensor& dx) {
  const std::size_t n = dy.b * dy.l;
  dx = Tensor(dy.b, dy.c, dy.l);
  for (std::size_t ci = 0; ci < dy.c; ++ci) {
    double sum_dy = 0.0, sum_dy_xhat = 0.0;
    for (std::size_t bi = 0; bi < dy.b; ++bi) {
      for (std::size_t t = 0; t < dy.l; ++t) {
        const double g = dy.at(bi, ci, t);
        sum_dy += g;
        sum_dy_xhat += g * cache.xhat.at(bi, ci, t);
      }
    }
    dgamma[ci] = sum_dy_xhat;
    dbeta[ci] = sum_dy;
    const double scale = gamma[ci] * cache.inv_std[ci] / static_cast<double>(n);
    for (std::size_t bi = 0; bi < dy.b; ++bi) {
      for (std::size_t t = 0; t < dy.l; ++t) {
        dx.at(bi, ci, t) = scale * (static_cast<double>(n) * dy.at(bi, ci, t) -
                                    sum_dy -
                                    cache.xhat.at(bi, ci, t) * sum_dy_xhat);
      }
    }
  }
}

struct ForwardCache {
  Tensor x0;
  Tensor a1, a2;          // post-dropout activations feeding the next stage
  Tensor relu1_in, relu2_in;
  Tensor drop1_mask, drop2_mask;
  BnCache bn1, bn2;
  Matrix pooled;
  Matrix probs;
};

void validate_config(const CnnConfig& cfg) {
  if (cfg.conv1.stride != 1 || cfg.conv2.stride != 1) {
    throw Error(ErrorCode::InvalidConfig, "only stride 1 convolutions are supported");
  }
  if (cfg.dropout_p < 0.0 || cfg.dropout_p >= 1.0) {
    throw Error(ErrorCode::InvalidConfig, "dropout_p must be in [0, 1)");
  }
  if (cfg.conv1.kernel > cfg.input_dim || cfg.conv2.kernel > cfg.conv1_out_len()) {
    throw Error(ErrorCode::InvalidConfig, "kernel exceeds the layer input length");
  }
  if (cfg.n_classes != corpus::kNumLabels) {
    throw Error(ErrorCode::InvalidConfig, "this artifact classifies 3 states");
  }
}

void apply_dropout(Tensor& x, double p, Rng& rng, Tensor& mask) {
  mask = Tensor(x.b, x.c, x.l);
  if (p <= 0.0) {
    std::fill(mask.v.begin(), mask.v.end(), 1.0);
    return;
  }
  const double keep_scale = 1.0 / (1.0 - p);
  for (std::size_t i = 0; i < x.v.size(); ++i) {
    mask.v[i] = rng.uniform() < p ? 0.0 : keep_scale;
    x.v[i] *= mask.v[i];
  }
}

Matrix forward_impl(CnnModel& model, const Matrix& batch, Mode mode,
                    ForwardCache* cache) {
  const CnnConfig& cfg = model.config;
  validate_config(cfg);
  if (batch.cols != static_cast<std::size_t>(cfg.input_dim)) {
    throw Error(ErrorCode::ShapeMismatch,
                "batch of " + std::to_string(batch.cols) + " dims vs input_dim " +
                    std::to_string(cfg.input_dim));
  }
  if (batch.rows == 0) {
    throw Error(ErrorCode::ShapeMismatch, "empty batch");
  }
  if (mode == Mode::Train && batch.rows < 2) {
    throw Error(ErrorCode::BatchTooSmall, "batch norm needs at least 2 rows");
  }
  model.mode = mode;
  const std::size_t B = batch.rows;

  Tensor x0(B, 1, cfg.input_dim);
  for (std::size_t bi = 0; bi < B; ++bi) {
    for (int t = 0; t < cfg.input_dim; ++t) x0.at(bi, 0, t) = batch(bi, t);
  }

  ForwardCache local;
  ForwardCache& fc = cache ? *cache : local;
  fc.x0 = x0;

  Tensor h1(B, cfg.conv1.filters, cfg.conv1_out_len());
  conv_forward(x0, model.conv1_w, model.conv1_b, cfg.conv1.kernel, h1);
  bn_forward(h1, model.bn1_gamma, model.bn1_beta, model.bn1_mean, model.bn1_var,
             model.bn_momentum, model.bn_epsilon, mode, cache ? &fc.bn1 : nullptr);
  fc.relu1_in = h1;
  for (double& v : h1.v) v = std::max(0.0, v);
  if (mode == Mode::Train) {
    apply_dropout(h1, cfg.dropout_p, model.dropout_rng, fc.drop1_mask);
  }
  fc.a1 = h1;

  Tensor h2(B, cfg.conv2.filters, cfg.conv2_out_len());
  conv_forward(h1, model.conv2_w, model.conv2_b, cfg.conv2.kernel, h2);
  bn_forward(h2, model.bn2_gamma, model.bn2_beta, model.bn2_mean, model.bn2_var,
             model.bn_momentum, model.bn_epsilon, mode, cache ? &fc.bn2 : nullptr);
  fc.relu2_in = h2;
  for (double& v : h2.v) v = std::max(0.0, v);
  if (mode == Mode::Train) {
    apply_dropout(h2, cfg.dropout_p, model.dropout_rng, fc.drop2_mask);
  }
  fc.a2 = h2;

  const std::size_t pooled_dim = cfg.pooled_dim();
  Matrix pooled(B, pooled_dim);
  if (cfg.pooling == Pooling::GlobalAverage) {
    for (std::size_t bi = 0; bi < B; ++bi) {
      for (int f = 0; f < cfg.conv2.filters; ++f) {
        double acc = 0.0;
        for (int t = 0; t < cfg.conv2_out_len(); ++t) acc += h2.at(bi, f, t);
        pooled(bi, f) = acc / cfg.conv2_out_len();
      }
    }
  } else {
    for (std::size_t bi = 0; bi < B; ++bi) {
      std::size_t j = 0;
      for (int f = 0; f < cfg.conv2.filters; ++f) {
        for (int t = 0; t < cfg.conv2_out_len(); ++t) {
          pooled(bi, j++) = h2.at(bi, f, t);
        }
      }
    }
  }
  fc.pooled = pooled;

  Matrix probs(B, cfg.n_classes);
  for (std::size_t bi = 0; bi < B; ++bi) {
    std::vector<double> logits(cfg.n_classes);
    for (int c = 0; c < cfg.n_classes; ++c) {
      double acc = model.dense_b[c];
      const double* wc = model.dense_w.data() + static_cast<std::size_t>(c) * pooled_dim;
      for (std::size_t j = 0; j < pooled_dim; ++j) acc += wc[j] * pooled(bi, j);
      logits[c] = acc;
    }
    const double max_logit = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (int c = 0; c < cfg.n_classes; ++c) {
      logits[c] = std::exp(logits[c] - max_logit);
      sum += logits[c];
    }
    for (int c = 0; c < cfg.n_classes; ++c) probs(bi, c) = logits[c] / sum;
  }
  fc.probs = probs;
  return probs;
}

Gradients zero_gradients(const CnnModel& model) {
  Gradients g;
  g.conv1_w.assign(model.conv1_w.size(), 0.0);
  g.conv1_b.assign(model.conv1_b.size(), 0.0);
  g.bn1_gamma.assign(model.bn1_gamma.size(), 0.0);
  g.bn1_beta.assign(model.bn1_beta.size(), 0.0);
  g.conv2_w.assign(model.conv2_w.size(), 0.0);
  g.conv2_b.assign(model.conv2_b.size(), 0.0);
  g.bn2_gamma.assign(model.bn2_gamma.size(), 0.0);
  g.bn2_beta.assign(model.bn2_beta.size(), 0.0);
  g.dense_w.assign(model.dense_w.size(), 0.0);
  g.dense_b.assign(model.dense_b.size(), 0.0);
  return g;
}

}  // namespace

CnnModel::CnnModel(const CnnConfig& cfg, std::uint64_t seed)
    : config(cfg), dropout_rng(mix_seed(seed, "dropout")) {
  validate_config(cfg);
  Rng rng(mix_seed(seed, "init"));
  auto he_uniform = [&rng](std::vector<double>& w, int fan_in) {
    const double limit = std::sqrt(6.0 / fan_in);
    for (double& v : w) v = rng.uniform(-limit, limit);
  };

  conv1_w.assign(static_cast<std::size_t>(cfg.conv1.filters) * cfg.conv1.kernel, 0.0);
  conv1_b.assign(cfg.conv1.filters, 0.0);
  he_uniform(conv1_w, cfg.conv1.kernel);
  bn1_gamma.assign(cfg.conv1.filters, 1.0);
  bn1_beta.assign(cfg.conv1.filters, 0.0);
  bn1_mean.assign(cfg.conv1.filters, 0.0);
  bn1_var.assign(cfg.conv1.filters, 1.0);

  conv2_w.assign(static_cast<std::size_t>(cfg.conv2.filters) * cfg.conv1.filters *
                     cfg.conv2.kernel,
                 0.0);
  conv2_b.assign(cfg.conv2.filters, 0.0);
  he_uniform(conv2_w, cfg.conv1.filters * cfg.conv2.kernel);
  bn2_gamma.assign(cfg.conv2.filters, 1.0);
  bn2_beta.assign(cfg.conv2.filters, 0.0);
  bn2_mean.assign(cfg.conv2.filters, 0.0);
  bn2_var.assign(cfg.conv2.filters, 1.0);

  dense_w.assign(static_cast<std::size_t>(cfg.n_classes) * cfg.pooled_dim(), 0.0);
  dense_b.assign(cfg.n_classes, 0.0);
  he_uniform(dense_w, cfg.pooled_dim());
}

std::vector<ParamRef> parameters(CnnModel& model) {
  return {{"conv1_w", &model.conv1_w},     {"conv1_b", &model.conv1_b},
          {"bn1_gamma", &model.bn1_gamma}, {"bn1_beta", &model.bn1_beta},
          {"conv2_w", &model.conv2_w},     {"conv2_b", &model.conv2_b},
          {"bn2_gamma", &model.bn2_gamma}, {"bn2_beta", &model.bn2_beta},
          {"dense_w", &model.dense_w},     {"dense_b", &model.dense_b}};
}

std::vector<ParamRef> gradient_refs(Gradients& grads) {
  return {{"conv1_w", &grads.conv1_w},     {"conv1_b", &grads.conv1_b},
          {"bn1_gamma", &grads.bn1_gamma}, {"bn1_beta", &grads.bn1_beta},
          {"conv2_w", &grads.conv2_w},     {"conv2_b", &grads.conv2_b},
          {"bn2_gamma", &grads.bn2_gamma}, {"bn2_beta", &grads.bn2_beta},
          {"dense_w", &grads.dense_w},     {"dense_b", &grads.dense_b}};
}

Matrix forward(CnnModel& model, const Matrix& batch, Mode mode) {
  return forward_impl(model, batch, mode, nullptr);
}

double cross_entropy(const Matrix& probabilities,
                     const std::vector<corpus::Label>& labels,
                     const std::vector<double>& class_weights) {
  if (probabilities.rows != labels.size()) {
    throw Error(ErrorCode::ShapeMismatch, "probability rows vs labels");
  }
  double loss = 0.0, weight_sum = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int y = static_cast<int>(labels[i]);
    const double w = class_weights.empty() ? 1.0 : class_weights[y];
    loss -= w * std::log(std::max(probabilities(i, y), 1e-300));
    weight_sum += w;
  }
  return loss / std::max(weight_sum, 1e-12);
}

std::pair<double, Gradients> loss_and_grad(CnnModel& model, const Matrix& batch,
                                           const std::vector<corpus::Label>& labels,
                                           const std::vector<double>& class_weights) {
  if (labels.size() != batch.rows) {
    throw Error(ErrorCode::ShapeMismatch, "labels vs batch rows");
  }
  ForwardCache fc;
  const Matrix probs = forward_impl(model, batch, Mode::Train, &fc);
  const double loss = cross_entropy(probs, labels, class_weights);

  const CnnConfig& cfg = model.config;
  const std::size_t B = batch.rows;
  const std::size_t pooled_dim = cfg.pooled_dim();
  Gradients grads = zero_gradients(model);

  double weight_sum = 0.0;
  for (std::size_t i = 0; i < B; ++i) {
    weight_sum += class_weights.empty() ? 1.0
                                        : class_weights[static_cast<int>(labels[i])];
  }

  // Softmax + cross-entropy in one step.
  Matrix dlogits(B, cfg.n_classes);
  for (std::size_t i = 0; i < B; ++i) {
    const int y = static_cast<int>(labels[i]);
    const double w = class_weights.empty() ? 1.0 : class_weights[y];
    for (int c = 0; c < cfg.n_classes; ++c) {
      dlogits(i, c) = w * (probs(i, c) - (c == y ? 1.0 : 0.0)) / weight_sum;
    }
  }

  Matrix dpooled(B, pooled_dim);
  for (std::size_t i = 0; i < B; ++i) {
    for (int c = 0; c < cfg.n_classes; ++c) {
      const double g = dlogits(i, c);
      grads.dense_b[c] += g;
      double* dwc = grads.dense_w.data() + static_cast<std::size_t>(c) * pooled_dim;
      const double* wc = model.dense_w.data() + static_cast<std::size_t>(c) * pooled_dim;
      for (std::size_t j = 0; j < pooled_dim; ++j) {
        dwc[j] += g * fc.pooled(i, j);
        dpooled(i, j) += g * wc[j];
      }
    }
  }

  const int L2 = cfg.conv2_out_len();
  Tensor da2(B, cfg.conv2.filters, L2);
  if (cfg.pooling == Pooling::GlobalAverage) {
    for (std::size_t bi = 0; bi < B; ++bi) {
      for (int f = 0; f < cfg.conv2.filters; ++f) {
        const double g = dpooled(bi, f) / L2;
        for (int t = 0; t < L2; ++t) da2.at(bi, f, t) = g;
      }
    }
  } else {
    for (std::size_t bi = 0; bi < B; ++bi) {
      std::size_t j = 0;
      for (int f = 0; f < cfg.conv2.filters; ++f) {
        for (int t = 0; t < L2; ++t) da2.at(bi, f, t) = dpooled(bi, j++);
      }
    }
  }

  // Dropout and ReLU backward for the second block.
  for (std::size_t i = 0; i < da2.v.size(); ++i) {
    da2.v[i] *= fc.drop2_mask.v[i];
    if (fc.relu2_in.v[i] <= 0.0) da2.v[i] = 0.0;
  }
  Tensor dz2;
  bn_backward(da2, fc.bn2, model.bn2_gamma, grads.bn2_gamma, grads.bn2_beta, dz2);
  Tensor da1;
  conv_backward(fc.a1, model.conv2_w, cfg.conv2.kernel, dz2, grads.conv2_w,
                grads.conv2_b, &da1);

  for (std::size_t i = 0; i < da1.v.size(); ++i) {
    da1.v[i] *= fc.drop1_mask.v[i];
    if (fc.relu1_in.v[i] <= 0.0) da1.v[i] = 0.0;
  }
  Tensor dz1;
  bn_backward(da1, fc.bn1, model.bn1_gamma, grads.bn1_gamma, grads.bn1_beta, dz1);
  conv_backward(fc.x0, model.conv1_w, cfg.conv1.kernel, dz1, grads.conv1_w,
                grads.conv1_b, nullptr);

  return {loss, grads};
}

void adam_step(CnnModel& model, Gradients& grads, AdamState& state,
               const AdamConfig& cfg) {
  std::vector<ParamRef> params = parameters(model);
  std::vector<ParamRef> gradient = gradient_refs(grads);
  if (state.m.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (std::size_t p = 0; p < params.size(); ++p) {
      state.m[p].assign(params[p].values->size(), 0.0);
      state.v[p].assign(params[p].values->size(), 0.0);
    }
  }
  if (state.m.size() != params.size()) {
    throw Error(ErrorCode::ShapeMismatch, "optimizer state does not match model");
  }
  state.t++;
  const double bias1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bias2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t p = 0; p < params.size(); ++p) {
    std::vector<double>& w = *params[p].values;
    const std::vector<double>& g = *gradient[p].values;
    std::vector<double>& m = state.m[p];
    std::vector<double>& v = state.v[p];
    if (w.size() != g.size() || w.size() != m.size()) {
      throw Error(ErrorCode::ShapeMismatch,
                  "gradient/state size mismatch for " + params[p].name);
    }
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
      const double m_hat = m[j] / bias1;
      const double v_hat = v[j] / bias2;
      w[j] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
  }
}

bool EarlyStopper::feed(double dev_loss) {
  ++epoch_;
  improved_last_ = dev_loss < best_loss_;
  if (improved_last_) {
    best_loss_ = dev_loss;
    best_epoch_ = epoch_;
    if (consecutive_) counter_ = 0;
  } else if (dev_loss > best_loss_) {
    ++counter_;
  }
  return counter_ >= patience_;
}

std::pair<CnnModel, TrainHistory> train(const features::FeatureTable& trainset,
                                        const features::FeatureTable& devset,
                                        const CnnConfig& ccfg, const TrainConfig& tcfg) {
  if (trainset.size() == 0 || devset.size() == 0) {
    throw Error(ErrorCode::EmptySet, "train and dev sets must be non-empty");
  }
  if (trainset.dims() != static_cast<std::size_t>(ccfg.input_dim) ||
      devset.dims() != static_cast<std::size_t>(ccfg.input_dim)) {
    throw Error(ErrorCode::ShapeMismatch, "table dims vs configured input_dim");
  }
  if (tcfg.patience < 1 || tcfg.batch_size < 1 || tcfg.max_epochs < 1) {
    throw Error(ErrorCode::InvalidConfig, "patience, batch_size, max_epochs must be >= 1");
  }
  if (trainset.size() < 2) {
    throw Error(ErrorCode::BatchTooSmall, "batch norm needs at least 2 training rows");
  }

  std::vector<double> class_weights;
  if (tcfg.class_weighting) {
    std::array<long, corpus::kNumLabels> counts{};
    for (corpus::Label label : trainset.labels) counts[static_cast<int>(label)]++;
    class_weights.assign(corpus::kNumLabels, 0.0);
    for (int c = 0; c < corpus::kNumLabels; ++c) {
      if (counts[c] > 0) {
        class_weights[c] = static_cast<double>(trainset.size()) /
                           (corpus::kNumLabels * static_cast<double>(counts[c]));
      }
    }
  }

  CnnModel model(ccfg, tcfg.seed);
  AdamState adam;
  Rng shuffle_rng(mix_seed(tcfg.seed, "shuffle"));
  EarlyStopper stopper(tcfg.patience, tcfg.consecutive_patience);

  Matrix dev_x = devset.values;
  CnnModel best = model;
  TrainHistory history;

  std::vector<std::size_t> order(trainset.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= tcfg.max_epochs; ++epoch) {
    shuffle_rng.shuffle(order);

    // Batch boundaries; a trailing singleton is folded into the previous
    // batch so batch norm always sees at least two rows.
    std::vector<std::pair<std::size_t, std::size_t>> batches;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(tcfg.batch_size)) {
      batches.emplace_back(start,
                           std::min(order.size(),
                                    start + static_cast<std::size_t>(tcfg.batch_size)));
    }
    if (batches.size() > 1 && batches.back().second - batches.back().first < 2) {
      batches[batches.size() - 2].second = batches.back().second;
      batches.pop_back();
    }

    double epoch_loss = 0.0;
    for (const auto& [lo, hi] : batches) {
      const std::size_t bsize = hi - lo;
      Matrix batch(bsize, trainset.dims());
      std::vector<corpus::Label> labels(bsize);
      for (std::size_t i = 0; i < bsize; ++i) {
        const std::size_t src = order[lo + i];
        std::copy_n(trainset.values.row(src).data(), trainset.dims(),
                    batch.row(i).data());
        labels[i] = trainset.labels[src];
      }
      auto [loss, grads] = loss_and_grad(model, batch, labels, class_weights);
      adam_step(model, grads, adam, tcfg.adam);
      epoch_loss += loss * static_cast<double>(bsize);
    }
    history.train_loss.push_back(epoch_loss / static_cast<double>(trainset.size()));

    const Matrix dev_probs = forward(model, dev_x, Mode::Eval);
    const double dev_loss = cross_entropy(dev_probs, devset.labels);
    std::vector<corpus::Label> dev_pred(devset.size());
    for (std::size_t i = 0; i < devset.size(); ++i) {
      int arg = 0;
      for (int c = 1; c < ccfg.n_classes; ++c) {
        if (dev_probs(i, c) > dev_probs(i, arg)) arg = c;
      }
      dev_pred[i] = static_cast<corpus::Label>(arg);
    }
    history.dev_loss.push_back(dev_loss);
    history.dev_uar.push_back(
        eval::uar(eval::ConfusionMatrix::from_pairs(devset.labels, dev_pred)));

    const bool stop = stopper.feed(dev_loss);
    if (stopper.improved_last()) best = model;
    history.stopped_epoch = epoch;
    if (stop) break;
  }
  history.best_epoch = stopper.best_epoch();
  best.mode = Mode::Eval;
  return {std::move(best), std::move(history)};
}

std::vector<corpus::Label> predict(CnnModel& model, const features::FeatureTable& table) {
  if (table.dims() != static_cast<std::size_t>(model.config.input_dim)) {
    throw Error(ErrorCode::ShapeMismatch, "table dims vs model input_dim");
  }
  const Matrix probs = forward(model, table.values, Mode::Eval);
  std::vector<corpus::Label> out(table.size());
  for (std::size_t i = 0; i < table.size(); ++i) {
    int arg = 0;
    for (int c = 1; c < model.config.n_classes; ++c) {
      if (probs(i, c) > probs(i, arg)) arg = c;  // ties keep the lower index
    }
    out[i] = static_cast<corpus::Label>(arg);
  }
  return out;
}

void save_model(const CnnModel& model, const std::filesystem::path& path) {
  nlohmann::json doc;
  const CnnConfig& cfg = model.config;
  doc["config"] = {
      {"input_dim", cfg.input_dim},
      {"conv1", {{"filters", cfg.conv1.filters}, {"kernel", cfg.conv1.kernel}, {"stride", cfg.conv1.stride}}},
      {"conv2", {{"filters", cfg.conv2.filters}, {"kernel", cfg.conv2.kernel}, {"stride", cfg.conv2.stride}}},
      {"dropout_p", cfg.dropout_p},
      {"n_classes", cfg.n_classes},
      {"pooling", cfg.pooling == Pooling::GlobalAverage ? "global_average" : "flatten"},
  };
  doc["bn_momentum"] = model.bn_momentum;
  doc["bn_epsilon"] = model.bn_epsilon;
  CnnModel& mutable_model = const_cast<CnnModel&>(model);
  for (const ParamRef& p : parameters(mutable_model)) {
    doc["params"][p.name] = *p.values;
  }
  doc["running"]["bn1_mean"] = model.bn1_mean;
  doc["running"]["bn1_var"] = model.bn1_var;
  doc["running"]["bn2_mean"] = model.bn2_mean;
  doc["running"]["bn2_var"] = model.bn2_var;

  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << doc.dump(2) << "\n";
}

CnnModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "no such model: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
    CnnConfig cfg;
    const auto& jc = doc.at("config");
    cfg.input_dim = jc.at("input_dim").get<int>();
    cfg.conv1 = {jc.at("conv1").at("filters").get<int>(),
                 jc.at("conv1").at("kernel").get<int>(),
                 jc.at("conv1").at("stride").get<int>()};
    cfg.conv2 = {jc.at("conv2").at("filters").get<int>(),
                 jc.at("conv2").at("kernel").get<int>(),
                 jc.at("conv2").at("stride").get<int>()};
    cfg.dropout_p = jc.at("dropout_p").get<double>();
    cfg.n_classes = jc.at("n_classes").get<int>();
    cfg.pooling = jc.at("pooling").get<std::string>() == "flatten"
                      ? Pooling::Flatten
                      : Pooling::GlobalAverage;

    CnnModel model(cfg, 0);
    model.bn_momentum = doc.at("bn_momentum").get<double>();
    model.bn_epsilon = doc.at("bn_epsilon").get<double>();
    for (const ParamRef& p : parameters(model)) {
      std::vector<double> values = doc.at("params").at(p.name).get<std::vector<double>>();
      if (values.size() != p.values->size()) {
        throw Error(ErrorCode::ShapeMismatch,
                    "checkpoint param " + p.name + " has wrong size");
      }
      *p.values = std::move(values);
    }
    model.bn1_mean = doc.at("running").at("bn1_mean").get<std::vector<double>>();
    model.bn1_var = doc.at("running").at("bn1_var").get<std::vector<double>>();
    model.bn2_mean = doc.at("running").at("bn2_mean").get<std::vector<double>>();
    model.bn2_var = doc.at("running").at("bn2_var").get<std::vector<double>>();
    model.mode = Mode::Eval;
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaViolation,
                "bad checkpoint " + path.string() + ": " + e.what());
  }
}

void save_history(const TrainHistory& history, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << "epoch,train_loss,dev_loss,dev_uar\n";
  char buf[64];
  for (std::size_t e = 0; e < history.train_loss.size(); ++e) {
    out << (e + 1);
    for (double v : {history.train_loss[e], history.dev_loss[e], history.dev_uar[e]}) {
      std::snprintf(buf, sizeof(buf), "%.17g", v);
      out << "," << buf;
    }
    out << "\n";
  }
}

}  // namespace maniapipe::nnet
