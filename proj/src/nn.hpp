#pragma once

#include "common.hpp"
#include "qmc.hpp"

#include <cstdint>
#include <vector>

namespace podnn::nn {

/// Per-coordinate affine map x -> (x - shift) / scale with positive scales.
struct AffineNorm {
  Vec shift;
  Vec scale;

  static AffineNorm identity(Eigen::Index dim);
  /// Maps the row-wise range of the samples (dim x N) onto [-1,1]; degenerate
  /// coordinates (constant rows) are shifted to zero with unit scale.
  static AffineNorm from_minmax(const Mat& samples);

  Eigen::Index dim() const { return shift.size(); }
  Vec apply(const Vec& x) const;
  Mat apply(const Mat& x) const;
  Vec invert(const Vec& x) const;
  Mat invert(const Mat& x) const;
};

/// Tanh multilayer perceptron. The activation acts between the affine layers;
/// the output layer is affine. Normalization statistics travel with the
/// parameters so a stored model evaluates identically after reload.
struct Mlp {
  std::vector<int> dims;         // layer widths, dims[0] inputs .. dims[L] outputs
  std::vector<Mat> weights;      // weights[k]: dims[k+1] x dims[k]
  std::vector<Vec> biases;       // biases[k]: dims[k+1]
  AffineNorm input_norm;
  AffineNorm output_norm;

  int input_dim() const { return dims.front(); }
  int output_dim() const { return dims.back(); }
  int n_layers() const { return static_cast<int>(weights.size()); }
  std::size_t parameter_count() const;
  void validate() const;
};

/// Glorot-uniform weights, zero biases, deterministic in the seed.
Mlp mlp_init(const std::vector<int>& dims, std::uint64_t seed);

/// Network output for an input-normalized evaluation; no output
/// de-normalization (training space). Batch version takes samples as columns.
Vec forward(const Mlp& m, const Vec& x);
Mat forward(const Mlp& m, const Mat& x);

/// forward() followed by output de-normalization.
Vec predict(const Mlp& m, const Vec& y);

struct Gradients {
  std::vector<Mat> weights;
  std::vector<Vec> biases;

  static Gradients zero_like(const Mlp& m);
};

/// Mean squared error over the batch (inputs/targets as columns) and its
/// gradient with respect to every parameter, by reverse-mode differentiation.
double loss_and_grad(const Mlp& m, const Mat& inputs, const Mat& targets,
                     Gradients& grads);

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-12;
  double weight_decay = 1.0;
};

struct AdamWState {
  std::vector<Mat> m_w, v_w;
  std::vector<Vec> m_b, v_b;
  long step = 0;

  static AdamWState zero_like(const Mlp& m);
};

/// One decoupled-weight-decay Adam update:
///   p <- p - lr * ( m_hat / (sqrt(v_hat) + eps) + weight_decay * p ).
void adamw_step(Mlp& m, const Gradients& grads, AdamWState& state,
                const AdamWConfig& cfg);

struct TrainConfig {
  long max_epochs = 50000;
  long batch_size = 0;  // 0 = full batch
  double lr_initial = 1e-3;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-12;
  double weight_decay = 1.0;
  int plateau_patience = 10;
  double plateau_factor = 0.1;
  double plateau_eps = 1e-20;
  double stop_threshold = 1e-8;  // stop once the epoch loss drops below this
  std::uint64_t seed = 0;

  void validate() const;
};

enum class StopReason { threshold, max_epochs };

struct TrainHistory {
  std::vector<double> loss;           // per-epoch L_MSE on the training set
  std::vector<double> learning_rate;  // per-epoch learning rate in effect
  StopReason stop_reason = StopReason::max_epochs;
  double best_loss = 0.0;
  long best_epoch = 0;
};

/// MSE training with the plateau learning-rate schedule. Sets the model's
/// normalization from the training data, trains on normalized targets, stops
/// once the loss falls below the threshold, and leaves the best-loss
/// parameters in the model. Deterministic for a fixed config.
TrainHistory train(Mlp& m, const Mat& inputs, const Mat& targets,
                   const TrainConfig& cfg);

/// Width/depth schedule derived from the sample count:
///   n = ceil(N^(alpha p / (2 - p))), width n^2,
///   hidden layers ceil(max(1, log2(n)/2)) + 2.
struct SizingConfig {
  int n = 1;
  int width = 1;
  int hidden_layers = 3;
};

SizingConfig size_apriori(long n_samples, const qmc::RateConfig& rates);

/// Layer widths for a sized network: inputs, hidden_layers x width, outputs.
std::vector<int> layer_dims(const SizingConfig& sizing, int inputs, int outputs);

}  // namespace podnn::nn
