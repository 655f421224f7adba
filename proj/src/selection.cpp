#include "maniapipe/selection.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>

#include <json.hpp>

namespace maniapipe::selection {

namespace {

constexpr int kNumClasses = corpus::kNumLabels;

void check_trainable(const features::FeatureTable& table) {
  if (table.size() == 0) {
    throw Error(ErrorCode::EmptyTable, "no rows to train on");
  }
  std::set<corpus::Label> classes(table.labels.begin(), table.labels.end());
  if (classes.size() < 2) {
    throw Error(ErrorCode::SingleClass, "all rows carry the same label");
  }
}

// Rough z-norm sniff: post-normalization columns have |mean| and spread near
// 0/1, so very large magnitudes suggest the caller skipped znorm.
void warn_if_unnormalized(const features::FeatureTable& table) {
  double max_abs = 0.0;
  for (double v : table.values.data) max_abs = std::max(max_abs, std::abs(v));
  if (max_abs > 100.0) {
    std::cerr << "warning: feature magnitudes up to " << max_abs
              << " suggest the table was not z-normalized\n";
  }
}

}  // namespace

int LinearSvmModel::predict(std::span<const double> x) const {
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < weights.rows; ++c) {
    double score = bias[c];
    for (std::size_t j = 0; j < weights.cols; ++j) score += weights(c, j) * x[j];
    if (score > best_score) {
      best_score = score;
      best = static_cast<int>(c);
    }
  }
  return best;
}

double svm_objective(const Matrix& x, const std::vector<int>& y,
                     std::span<const double> w, double b, double c_reg) {
  double obj = 0.0;
  for (double v : w) obj += 0.5 * v * v;
  for (std::size_t i = 0; i < x.rows; ++i) {
    double score = b;
    for (std::size_t j = 0; j < x.cols; ++j) score += w[j] * x(i, j);
    obj += c_reg * std::max(0.0, 1.0 - y[i] * score);
  }
  return obj;
}

void svm_subgradient(const Matrix& x, const std::vector<int>& y,
                     std::span<const double> w, double b, double c_reg,
                     std::span<double> grad_w, double& grad_b) {
  for (std::size_t j = 0; j < w.size(); ++j) grad_w[j] = w[j];
  grad_b = 0.0;
  for (std::size_t i = 0; i < x.rows; ++i) {
    double score = b;
    for (std::size_t j = 0; j < x.cols; ++j) score += w[j] * x(i, j);
    if (y[i] * score < 1.0) {
      for (std::size_t j = 0; j < x.cols; ++j) grad_w[j] -= c_reg * y[i] * x(i, j);
      grad_b -= c_reg * y[i];
    }
  }
}

LinearSvmModel train_linear_svm(const features::FeatureTable& table,
                                const SvmTrainConfig& cfg,
                                std::vector<double>* objective_history) {
  check_trainable(table);
  warn_if_unnormalized(table);

  const std::size_t n = table.size();
  const std::size_t d = table.dims();
  const double lambda = 1.0 / (cfg.c_reg * static_cast<double>(n));

  LinearSvmModel model;
  model.weights = Matrix(kNumClasses, d, 0.0);
  model.bias.assign(kNumClasses, 0.0);
  model.c_reg = cfg.c_reg;
  model.seed = cfg.seed;

  std::vector<std::vector<int>> targets(kNumClasses, std::vector<int>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (int c = 0; c < kNumClasses; ++c) {
      targets[c][i] = static_cast<int>(table.labels[i]) == c ? 1 : -1;
    }
  }

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (int c = 0; c < kNumClasses; ++c) {
      double* w = model.weights.data.data() + static_cast<std::size_t>(c) * d;
      double& b = model.bias[c];
      const std::vector<int>& y = targets[c];
      for (std::size_t step = 0; step < n; ++step) {
        const std::size_t t = static_cast<std::size_t>(epoch) * n + step + 1;
        const double eta = 1.0 / (lambda * static_cast<double>(t));
        const std::size_t i = order[step];
        double score = b;
        const double* xi = table.values.data.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) score += w[j] * xi[j];
        const double shrink = 1.0 - 1.0 / static_cast<double>(t);  // = 1 - eta*lambda
        for (std::size_t j = 0; j < d; ++j) w[j] *= shrink;
        if (y[i] * score < 1.0) {
          const double push = eta * y[i];
          for (std::size_t j = 0; j < d; ++j) w[j] += push * xi[j];
          // Bias step scaled by lambda (i.e. 1/t): the 1/(lambda t) step is
          // unusable for the unregularized bias term.
          b += y[i] / static_cast<double>(t);
        }
      }
    }
    if (objective_history) {
      double obj = 0.0;
      for (int c = 0; c < kNumClasses; ++c) {
        obj += svm_objective(table.values, targets[c],
                             model.weights.row(static_cast<std::size_t>(c)),
                             model.bias[c], cfg.c_reg);
      }
      objective_history->push_back(obj);
    }
  }
  if (!all_finite(model.weights.data)) {
    throw Error(ErrorCode::NumericFailure, "non-finite SVM weights");
  }
  return model;
}

SelectionMask rfe(const features::FeatureTable& table, const RfeConfig& cfg) {
  check_trainable(table);
  if (cfg.target_k >= table.dims()) {
    throw Error(ErrorCode::TargetTooLarge,
                "target_k " + std::to_string(cfg.target_k) + " >= " +
                    std::to_string(table.dims()) + " dims");
  }

  std::vector<std::size_t> remaining(table.dims());
  std::iota(remaining.begin(), remaining.end(), 0);

  SelectionMask mask;
  int round = 0;
  features::FeatureTable current = table;
  while (remaining.size() > cfg.target_k) {
    ++round;
    SvmTrainConfig svm_cfg = cfg.svm;
    svm_cfg.seed = mix_seed(cfg.svm.seed, "rfe_round_" + std::to_string(round));
    const LinearSvmModel model = train_linear_svm(current, svm_cfg);

    std::size_t correct = 0;
    for (std::size_t i = 0; i < current.size(); ++i) {
      if (model.predict(current.values.row(i)) == static_cast<int>(current.labels[i])) {
        ++correct;
      }
    }
    const double score = static_cast<double>(correct) / current.size();

    // Rank by summed squared one-vs-rest weight; drop the weakest block.
    std::vector<double> criterion(remaining.size(), 0.0);
    for (std::size_t c = 0; c < model.weights.rows; ++c) {
      for (std::size_t j = 0; j < remaining.size(); ++j) {
        criterion[j] += model.weights(c, j) * model.weights(c, j);
      }
    }
    std::vector<std::size_t> ranked(remaining.size());
    std::iota(ranked.begin(), ranked.end(), 0);
    std::sort(ranked.begin(), ranked.end(), [&](std::size_t a, std::size_t b) {
      if (criterion[a] != criterion[b]) return criterion[a] < criterion[b];
      return remaining[a] < remaining[b];
    });

    std::size_t drop = std::max<std::size_t>(
        1, static_cast<std::size_t>(cfg.step_frac * remaining.size()));
    drop = std::min(drop, remaining.size() - cfg.target_k);

    std::vector<bool> dropped(remaining.size(), false);
    EliminationRound entry;
    entry.round = round;
    entry.score = score;
    for (std::size_t k = 0; k < drop; ++k) {
      dropped[ranked[k]] = true;
      entry.removed.push_back(remaining[ranked[k]]);
    }
    std::sort(entry.removed.begin(), entry.removed.end());
    mask.elimination_trace.push_back(std::move(entry));

    std::vector<std::size_t> kept_local;
    std::vector<std::size_t> next_remaining;
    for (std::size_t j = 0; j < remaining.size(); ++j) {
      if (!dropped[j]) {
        kept_local.push_back(j);
        next_remaining.push_back(remaining[j]);
      }
    }
    features::FeatureTable next = current;
    next.values = Matrix(current.size(), kept_local.size());
    next.names.clear();
    for (std::size_t j : kept_local) next.names.push_back(current.names[j]);
    for (std::size_t r = 0; r < current.size(); ++r) {
      for (std::size_t j = 0; j < kept_local.size(); ++j) {
        next.values(r, j) = current.values(r, kept_local[j]);
      }
    }
    current = std::move(next);
    remaining = std::move(next_remaining);
  }

  mask.selected = remaining;  // already ascending
  return mask;
}

features::FeatureTable apply_mask(const features::FeatureTable& table,
                                  const SelectionMask& mask) {
  for (std::size_t j : mask.selected) {
    if (j >= table.dims()) {
      throw Error(ErrorCode::DimensionMismatch,
                  "mask index " + std::to_string(j) + " outside " +
                      std::to_string(table.dims()) + " dims");
    }
  }
  features::FeatureTable out = table;
  out.values = Matrix(table.size(), mask.selected.size());
  out.names.clear();
  for (std::size_t j : mask.selected) out.names.push_back(table.names[j]);
  for (std::size_t r = 0; r < table.size(); ++r) {
    for (std::size_t k = 0; k < mask.selected.size(); ++k) {
      out.values(r, k) = table.values(r, mask.selected[k]);
    }
  }
  return out;
}

void save_mask(const SelectionMask& mask, const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["selected"] = mask.selected;
  doc["trace"] = nlohmann::json::array();
  for (const EliminationRound& round : mask.elimination_trace) {
    nlohmann::json jr;
    jr["round"] = round.round;
    jr["removed"] = round.removed;
    jr["score"] = round.score;
    doc["trace"].push_back(jr);
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << doc.dump(2) << "\n";
}

SelectionMask load_mask(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::MissingFile, "no such mask: " + path.string());
  nlohmann::json doc;
  try {
    in >> doc;
    SelectionMask mask;
    mask.selected = doc.at("selected").get<std::vector<std::size_t>>();
    for (const auto& jr : doc.at("trace")) {
      EliminationRound round;
      round.round = jr.at("round").get<int>();
      round.removed = jr.at("removed").get<std::vector<std::size_t>>();
      round.score = jr.at("score").get<double>();
      mask.elimination_trace.push_back(std::move(round));
    }
    return mask;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, "bad mask " + path.string() + ": " + e.what());
  }
}

}  // namespace maniapipe::selection
