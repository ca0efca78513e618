#include "nn.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace podnn::nn {

namespace {

// Uniform double in [0,1) from the raw 64-bit stream; avoids
// std::uniform_real_distribution so that seeded draws are identical across
// standard-library implementations.
double next_unit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

AffineNorm AffineNorm::identity(Eigen::Index dim) {
  return AffineNorm{Vec::Zero(dim), Vec::Ones(dim)};
}

AffineNorm AffineNorm::from_minmax(const Mat& samples) {
  require(samples.cols() >= 1, Error::Code::invalid_argument,
          "from_minmax: empty sample set");
  AffineNorm norm;
  norm.shift.resize(samples.rows());
  norm.scale.resize(samples.rows());
  for (Eigen::Index i = 0; i < samples.rows(); ++i) {
    const double lo = samples.row(i).minCoeff();
    const double hi = samples.row(i).maxCoeff();
    if (hi > lo) {
      norm.shift(i) = 0.5 * (hi + lo);
      norm.scale(i) = 0.5 * (hi - lo);
    } else {
      norm.shift(i) = lo;
      norm.scale(i) = 1.0;
    }
  }
  return norm;
}

Vec AffineNorm::apply(const Vec& x) const {
  require(x.size() == dim(), Error::Code::invalid_argument, "norm: dimension mismatch");
  return (x - shift).cwiseQuotient(scale);
}

Mat AffineNorm::apply(const Mat& x) const {
  require(x.rows() == dim(), Error::Code::invalid_argument, "norm: dimension mismatch");
  return ((x.colwise() - shift).array().colwise() / scale.array()).matrix();
}

Vec AffineNorm::invert(const Vec& x) const {
  require(x.size() == dim(), Error::Code::invalid_argument, "norm: dimension mismatch");
  return x.cwiseProduct(scale) + shift;
}

Mat AffineNorm::invert(const Mat& x) const {
  require(x.rows() == dim(), Error::Code::invalid_argument, "norm: dimension mismatch");
  return ((x.array().colwise() * scale.array()).colwise() + shift.array()).matrix();
}

std::size_t Mlp::parameter_count() const {
  std::size_t count = 0;
  for (const auto& w : weights) count += static_cast<std::size_t>(w.size());
  for (const auto& b : biases) count += static_cast<std::size_t>(b.size());
  return count;
}

void Mlp::validate() const {
  require(dims.size() >= 2, Error::Code::invalid_argument, "mlp: need at least one layer");
  require(weights.size() == dims.size() - 1 && biases.size() == weights.size(),
          Error::Code::invalid_argument, "mlp: layer count mismatch");
  for (std::size_t k = 0; k < weights.size(); ++k) {
    require(dims[k] >= 1 && dims[k + 1] >= 1, Error::Code::invalid_argument,
            "mlp: layer widths must be positive");
    require(weights[k].rows() == dims[k + 1] && weights[k].cols() == dims[k],
            Error::Code::invalid_argument, "mlp: weight shape mismatch");
    require(biases[k].size() == dims[k + 1], Error::Code::invalid_argument,
            "mlp: bias shape mismatch");
    require(weights[k].allFinite() && biases[k].allFinite(), Error::Code::numeric,
            "mlp: non-finite parameters");
  }
  require(input_norm.dim() == dims.front() && output_norm.dim() == dims.back(),
          Error::Code::invalid_argument, "mlp: normalization dimension mismatch");
}

Mlp mlp_init(const std::vector<int>& dims, std::uint64_t seed) {
  require(dims.size() >= 2, Error::Code::invalid_argument, "mlp_init: need >= 2 dims");
  for (int d : dims) {
    require(d >= 1, Error::Code::invalid_argument, "mlp_init: widths must be >= 1");
  }
  std::mt19937_64 rng(seed);
  Mlp m;
  m.dims = dims;
  m.weights.reserve(dims.size() - 1);
  m.biases.reserve(dims.size() - 1);
  for (std::size_t k = 0; k + 1 < dims.size(); ++k) {
    const int fan_in = dims[k];
    const int fan_out = dims[k + 1];
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    Mat w(fan_out, fan_in);
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      w.data()[i] = limit * (2.0 * next_unit(rng) - 1.0);
    }
    m.weights.push_back(std::move(w));
    m.biases.push_back(Vec::Zero(fan_out));
  }
  m.input_norm = AffineNorm::identity(dims.front());
  m.output_norm = AffineNorm::identity(dims.back());
  return m;
}

Mat forward(const Mlp& m, const Mat& x) {
  require(x.rows() == m.input_dim(), Error::Code::invalid_argument,
          "forward: input dimension mismatch");
  Mat a = m.input_norm.apply(x);
  const int layers = m.n_layers();
  for (int k = 0; k < layers; ++k) {
    a = (m.weights[static_cast<std::size_t>(k)] * a).colwise() +
        m.biases[static_cast<std::size_t>(k)];
    if (k + 1 < layers) a = a.array().tanh().matrix();
  }
  return a;
}

Vec forward(const Mlp& m, const Vec& x) {
  return forward(m, Mat(x)).col(0);
}

Vec predict(const Mlp& m, const Vec& y) {
  return m.output_norm.invert(forward(m, y));
}

Gradients Gradients::zero_like(const Mlp& m) {
  Gradients g;
  g.weights.reserve(m.weights.size());
  g.biases.reserve(m.biases.size());
  for (const auto& w : m.weights) g.weights.push_back(Mat::Zero(w.rows(), w.cols()));
  for (const auto& b : m.biases) g.biases.push_back(Vec::Zero(b.size()));
  return g;
}

double loss_and_grad(const Mlp& m, const Mat& inputs, const Mat& targets,
                     Gradients& grads) {
  require(inputs.cols() >= 1, Error::Code::invalid_argument, "loss: empty batch");
  require(inputs.cols() == targets.cols(), Error::Code::invalid_argument,
          "loss: batch size mismatch");
  require(inputs.rows() == m.input_dim() && targets.rows() == m.output_dim(),
          Error::Code::invalid_argument, "loss: shape mismatch");

  const int layers = m.n_layers();
  const double batch = static_cast<double>(inputs.cols());

  std::vector<Mat> activations;
  activations.reserve(static_cast<std::size_t>(layers) + 1);
  activations.push_back(m.input_norm.apply(inputs));
  for (int k = 0; k < layers; ++k) {
    Mat z = (m.weights[static_cast<std::size_t>(k)] * activations.back()).colwise() +
            m.biases[static_cast<std::size_t>(k)];
    if (k + 1 < layers) z = z.array().tanh().matrix();
    activations.push_back(std::move(z));
  }

  const Mat diff = activations.back() - targets;
  const double loss = diff.squaredNorm() / batch;

  Mat delta = (2.0 / batch) * diff;  // gradient w.r.t. the last pre-activation
  for (int k = layers - 1; k >= 0; --k) {
    const auto ku = static_cast<std::size_t>(k);
    grads.weights[ku].noalias() = delta * activations[ku].transpose();
    grads.biases[ku] = delta.rowwise().sum();
    if (k > 0) {
      delta = m.weights[ku].transpose() * delta;
      // activations[k] is the post-tanh output of layer k-1.
      delta.array() *= 1.0 - activations[ku].array().square();
    }
  }
  return loss;
}

AdamWState AdamWState::zero_like(const Mlp& m) {
  AdamWState st;
  st.m_w.reserve(m.weights.size());
  st.v_w.reserve(m.weights.size());
  st.m_b.reserve(m.biases.size());
  st.v_b.reserve(m.biases.size());
  for (const auto& w : m.weights) {
    st.m_w.push_back(Mat::Zero(w.rows(), w.cols()));
    st.v_w.push_back(Mat::Zero(w.rows(), w.cols()));
  }
  for (const auto& b : m.biases) {
    st.m_b.push_back(Vec::Zero(b.size()));
    st.v_b.push_back(Vec::Zero(b.size()));
  }
  return st;
}

namespace {

template <typename T>
void adamw_update(T& param, const T& grad, T& m1, T& m2, double bc1, double bc2,
                  const AdamWConfig& cfg) {
  m1 = cfg.beta1 * m1 + (1.0 - cfg.beta1) * grad;
  m2.array() = cfg.beta2 * m2.array() + (1.0 - cfg.beta2) * grad.array().square();
  param.array() -= cfg.lr * ((m1.array() / bc1) / ((m2.array() / bc2).sqrt() + cfg.eps) +
                             cfg.weight_decay * param.array());
}

}  // namespace

void adamw_step(Mlp& m, const Gradients& grads, AdamWState& state,
                const AdamWConfig& cfg) {
  require(grads.weights.size() == m.weights.size() &&
              state.m_w.size() == m.weights.size(),
          Error::Code::invalid_argument, "adamw: shape mismatch");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  for (std::size_t k = 0; k < m.weights.size(); ++k) {
    adamw_update(m.weights[k], grads.weights[k], state.m_w[k], state.v_w[k], bc1, bc2, cfg);
    adamw_update(m.biases[k], grads.biases[k], state.m_b[k], state.v_b[k], bc1, bc2, cfg);
  }
}

void TrainConfig::validate() const {
  require(max_epochs >= 1, Error::Code::config, "train: max_epochs must be >= 1");
  require(batch_size >= 0, Error::Code::config, "train: batch_size must be >= 0");
  require(lr_initial > 0.0, Error::Code::config, "train: lr_initial must be > 0");
  require(adam_beta1 > 0.0 && adam_beta1 < 1.0 && adam_beta2 > 0.0 && adam_beta2 < 1.0,
          Error::Code::config, "train: betas must lie in (0,1)");
  require(adam_eps > 0.0, Error::Code::config, "train: adam_eps must be > 0");
  require(weight_decay >= 0.0, Error::Code::config, "train: weight_decay must be >= 0");
  require(plateau_patience >= 1, Error::Code::config, "train: patience must be >= 1");
  require(plateau_factor > 0.0 && plateau_factor < 1.0, Error::Code::config,
          "train: plateau_factor must lie in (0,1)");
  require(plateau_eps >= 0.0, Error::Code::config, "train: plateau_eps must be >= 0");
  require(stop_threshold > 0.0, Error::Code::config, "train: stop_threshold must be > 0");
}

TrainHistory train(Mlp& m, const Mat& inputs, const Mat& targets,
                   const TrainConfig& cfg) {
  cfg.validate();
  require(inputs.cols() == targets.cols() && inputs.cols() >= 1,
          Error::Code::invalid_argument, "train: empty or inconsistent dataset");
  require(inputs.rows() == m.input_dim() && targets.rows() == m.output_dim(),
          Error::Code::invalid_argument, "train: dataset width mismatch");

  m.input_norm = AffineNorm::identity(m.input_dim());
  m.output_norm = AffineNorm::from_minmax(targets);
  const Mat targets_norm = m.output_norm.apply(targets);

  const long n = inputs.cols();
  const long batch = (cfg.batch_size == 0 || cfg.batch_size > n) ? n : cfg.batch_size;

  AdamWConfig adam;
  adam.lr = cfg.lr_initial;
  adam.beta1 = cfg.adam_beta1;
  adam.beta2 = cfg.adam_beta2;
  adam.eps = cfg.adam_eps;
  adam.weight_decay = cfg.weight_decay;

  AdamWState state = AdamWState::zero_like(m);
  Gradients grads = Gradients::zero_like(m);

  TrainHistory history;
  history.stop_reason = StopReason::max_epochs;
  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<Mat> best_weights = m.weights;
  std::vector<Vec> best_biases = m.biases;

  double plateau_best = std::numeric_limits<double>::infinity();
  int bad_epochs = 0;

  for (long epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    for (long begin = 0; begin < n; begin += batch) {
      const long count = std::min(batch, n - begin);
      const double batch_loss = loss_and_grad(m, inputs.middleCols(begin, count),
                                              targets_norm.middleCols(begin, count), grads);
      require(std::isfinite(batch_loss), Error::Code::numeric,
              "train: non-finite loss at epoch " + std::to_string(epoch));
      adamw_step(m, grads, state, adam);
    }

    // Epoch loss of the updated parameters over the whole training set.
    const double epoch_loss =
        (forward(m, inputs) - targets_norm).squaredNorm() / static_cast<double>(n);
    require(std::isfinite(epoch_loss), Error::Code::numeric,
            "train: non-finite loss at epoch " + std::to_string(epoch));
    history.loss.push_back(epoch_loss);
    history.learning_rate.push_back(adam.lr);

    if (epoch_loss < best_loss) {
      best_loss = epoch_loss;
      best_weights = m.weights;
      best_biases = m.biases;
      history.best_epoch = epoch;
    }

    if (epoch_loss < cfg.stop_threshold) {
      history.stop_reason = StopReason::threshold;
      break;
    }

    if (epoch_loss < plateau_best - cfg.plateau_eps) {
      plateau_best = epoch_loss;
      bad_epochs = 0;
    } else if (++bad_epochs > cfg.plateau_patience) {
      adam.lr *= cfg.plateau_factor;
      bad_epochs = 0;
    }
  }

  m.weights = std::move(best_weights);
  m.biases = std::move(best_biases);
  history.best_loss = best_loss;
  return history;
}

SizingConfig size_apriori(long n_samples, const qmc::RateConfig& rates) {
  rates.validate();
  require(n_samples >= 1, Error::Code::invalid_argument, "size_apriori: N must be >= 1");
  const double exponent = rates.alpha * rates.p / (2.0 - rates.p);
  SizingConfig sizing;
  sizing.n = static_cast<int>(
      std::ceil(std::pow(static_cast<double>(n_samples), exponent)));
  sizing.width = sizing.n * sizing.n;
  const double depth = std::max(1.0, std::log2(static_cast<double>(sizing.n)) / 2.0);
  sizing.hidden_layers = static_cast<int>(std::ceil(depth)) + 2;
  return sizing;
}

std::vector<int> layer_dims(const SizingConfig& sizing, int inputs, int outputs) {
  require(inputs >= 1 && outputs >= 1, Error::Code::invalid_argument,
          "layer_dims: widths must be positive");
  std::vector<int> dims;
  dims.reserve(static_cast<std::size_t>(sizing.hidden_layers) + 2);
  dims.push_back(inputs);
  for (int i = 0; i < sizing.hidden_layers; ++i) dims.push_back(sizing.width);
  dims.push_back(outputs);
  return dims;
}

}  // namespace podnn::nn
