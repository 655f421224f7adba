#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "maniapipe/common.hpp"
#include "maniapipe/features.hpp"
#include "maniapipe/metrics.hpp"

namespace maniapipe::nnet {

enum class Mode { Train, Eval };
enum class Pooling { GlobalAverage, Flatten };

struct ConvSpec {
  int filters = 16;
  int kernel = 5;
  int stride = 1;  // only stride 1 is supported
};

struct CnnConfig {
  int input_dim = 100;
  ConvSpec conv1{16, 5, 1};
  ConvSpec conv2{25, 5, 1};
  double dropout_p = 0.3;
  int n_classes = 3;
  Pooling pooling = Pooling::GlobalAverage;

  int conv1_out_len() const { return input_dim - conv1.kernel + 1; }
  int conv2_out_len() const { return conv1_out_len() - conv2.kernel + 1; }
  int pooled_dim() const {
    return pooling == Pooling::GlobalAverage ? conv2.filters
                                             : conv2.filters * conv2_out_len();
  }
};

/// Sequence model over the selected-feature axis:
/// conv -> batch norm -> ReLU -> dropout, twice, then pooling and a dense
/// 3-way softmax head.
struct CnnModel {
  CnnConfig config;
  Mode mode = Mode::Train;

  std::vector<double> conv1_w, conv1_b, bn1_gamma, bn1_beta;
  std::vector<double> conv2_w, conv2_b, bn2_gamma, bn2_beta;
  std::vector<double> dense_w, dense_b;

  std::vector<double> bn1_mean, bn1_var, bn2_mean, bn2_var;  // running stats
  double bn_momentum = 0.1;
  double bn_epsilon = 1e-5;

  Rng dropout_rng{0};

  CnnModel() = default;
  CnnModel(const CnnConfig& cfg, std::uint64_t seed);
};

struct Gradients {
  std::vector<double> conv1_w, conv1_b, bn1_gamma, bn1_beta;
  std::vector<double> conv2_w, conv2_b, bn2_gamma, bn2_beta;
  std::vector<double> dense_w, dense_b;
};

struct ParamRef {
  std::string name;
  std::vector<double>* values;
};

/// Parameter arrays in a fixed order (matching gradient_refs).
std::vector<ParamRef> parameters(CnnModel& model);
std::vector<ParamRef> gradient_refs(Gradients& grads);

/// Class probabilities, rows x n_classes. Train mode uses batch statistics
/// and dropout (and requires batch >= 2); Eval mode is deterministic.
Matrix forward(CnnModel& model, const Matrix& batch, Mode mode);

/// Weighted mean cross-entropy of a probability matrix against labels.
double cross_entropy(const Matrix& probabilities,
                     const std::vector<corpus::Label>& labels,
                     const std::vector<double>& class_weights = {});

/// Mean cross-entropy over the batch plus gradients for every parameter,
/// including the batch-norm scale/shift. Runs in Train mode. Optional
/// per-class weights rescale each sample's loss term.
std::pair<double, Gradients> loss_and_grad(CnnModel& model, const Matrix& batch,
                                           const std::vector<corpus::Label>& labels,
                                           const std::vector<double>& class_weights = {});

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  long t = 0;
};

void adam_step(CnnModel& model, Gradients& grads, AdamState& state,
               const AdamConfig& cfg);

/// Early-stopping rule: the counter advances on every epoch whose dev loss
/// exceeds the best seen so far; in consecutive mode a new best resets it.
class EarlyStopper {
 public:
  EarlyStopper(int patience, bool consecutive)
      : patience_(patience), consecutive_(consecutive) {}

  /// Feeds one epoch's dev loss; returns true when training should stop.
  bool feed(double dev_loss);

  bool improved_last() const { return improved_last_; }
  int best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }
  int counter() const { return counter_; }

 private:
  int patience_;
  bool consecutive_;
  int epoch_ = 0;
  int counter_ = 0;
  int best_epoch_ = 0;
  bool improved_last_ = false;
  double best_loss_ = std::numeric_limits<double>::infinity();
};

struct TrainConfig {
  int max_epochs = 100;
  int patience = 5;
  bool consecutive_patience = false;  // default: cumulative counting
  int batch_size = 16;
  AdamConfig adam;
  std::uint64_t seed = 0;
  bool class_weighting = false;
};

struct TrainHistory {
  std::vector<double> train_loss;
  std::vector<double> dev_loss;
  std::vector<double> dev_uar;
  int stopped_epoch = 0;  // 1-based index of the last epoch run
  int best_epoch = 0;
};

/// Trains with seeded shuffling and Adam, evaluating the dev set each epoch.
/// Returns the best-dev-loss snapshot (in Eval mode) and the history.
std::pair<CnnModel, TrainHistory> train(const features::FeatureTable& trainset,
                                        const features::FeatureTable& devset,
                                        const CnnConfig& ccfg, const TrainConfig& tcfg);

/// Argmax of forward probabilities in Eval mode; ties break toward the lower
/// class index.
std::vector<corpus::Label> predict(CnnModel& model, const features::FeatureTable& table);

void save_model(const CnnModel& model, const std::filesystem::path& path);
CnnModel load_model(const std::filesystem::path& path);

void save_history(const TrainHistory& history, const std::filesystem::path& path);

}  // namespace maniapipe::nnet
