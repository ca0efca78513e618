#include <doctest.h>

#include "nn.hpp"

#include <cmath>
#include <limits>
#include <random>

using namespace podnn;

namespace {

// Central finite differences through every parameter of the network.
double fd_gradient(nn::Mlp& m, double* param, const Mat& x, const Mat& t, double h) {
  nn::Gradients scratch = nn::Gradients::zero_like(m);
  const double saved = *param;
  *param = saved + h;
  const double up = nn::loss_and_grad(m, x, t, scratch);
  *param = saved - h;
  const double down = nn::loss_and_grad(m, x, t, scratch);
  *param = saved;
  return (up - down) / (2.0 * h);
}

struct ParamRef {
  double* value;
  double analytic;
};

std::vector<ParamRef> collect_params(nn::Mlp& m, const nn::Gradients& grads) {
  std::vector<ParamRef> refs;
  for (std::size_t k = 0; k < m.weights.size(); ++k) {
    for (Eigen::Index i = 0; i < m.weights[k].size(); ++i) {
      refs.push_back({m.weights[k].data() + i, grads.weights[k].data()[i]});
    }
    for (Eigen::Index i = 0; i < m.biases[k].size(); ++i) {
      refs.push_back({m.biases[k].data() + i, grads.biases[k].data()[i]});
    }
  }
  return refs;
}

}  // namespace

TEST_CASE("initialization is seeded and shaped") {
  const std::vector<int> dims{3, 5, 4};
  const nn::Mlp a = nn::mlp_init(dims, 99);
  const nn::Mlp b = nn::mlp_init(dims, 99);
  const nn::Mlp c = nn::mlp_init(dims, 100);
  CHECK(a.weights[0].rows() == 5);
  CHECK(a.weights[0].cols() == 3);
  CHECK(a.weights[1].rows() == 4);
  CHECK(a.weights[1].cols() == 5);
  CHECK((a.weights[0].array() == b.weights[0].array()).all());
  CHECK((a.weights[1].array() == b.weights[1].array()).all());
  CHECK(!(a.weights[0].array() == c.weights[0].array()).all());
  CHECK(a.biases[0].cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.biases[1].cwiseAbs().maxCoeff() == 0.0);
  // Glorot bound
  CHECK(a.weights[0].cwiseAbs().maxCoeff() <= std::sqrt(6.0 / (3 + 5)));
  CHECK_THROWS_AS(nn::mlp_init({3}, 0), Error);
  CHECK_THROWS_AS(nn::mlp_init({3, 0, 2}, 0), Error);
}

TEST_CASE("forward pass special cases") {
  SUBCASE("single layer is a pure affine map") {
    nn::Mlp m = nn::mlp_init({2, 3}, 1);
    m.weights[0] << 1, 2, 3, 4, 5, 6;
    m.biases[0] << 0.5, -0.5, 0.25;
    Vec x(2);
    x << 0.3, -0.7;
    const Vec out = nn::forward(m, x);
    const Vec expected = m.weights[0] * x + m.biases[0];
    CHECK((out - expected).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("zero weights yield the constant output bias") {
    nn::Mlp m = nn::mlp_init({3, 4, 2}, 2);
    m.weights[0].setZero();
    m.weights[1].setZero();
    m.biases[1] << 1.5, -2.5;
    Vec x = Vec::Random(3);
    const Vec out = nn::forward(m, x);
    CHECK(out(0) == 1.5);
    CHECK(out(1) == -2.5);
  }

  SUBCASE("odd activation fixes the origin") {
    nn::Mlp m = nn::mlp_init({1, 1, 1}, 3);
    m.weights[0](0, 0) = 1.0;
    m.weights[1](0, 0) = 1.0;
    Vec zero = Vec::Zero(1);
    CHECK(nn::forward(m, zero)(0) == 0.0);
  }
}

TEST_CASE("loss and gradient basics") {
  nn::Mlp m = nn::mlp_init({2, 2}, 4);
  nn::Gradients grads = nn::Gradients::zero_like(m);

  SUBCASE("matching targets give zero loss and zero gradients") {
    const Mat x = Mat::Random(2, 5);
    const Mat t = nn::forward(m, x);
    CHECK(nn::loss_and_grad(m, x, t, grads) == 0.0);
    CHECK(grads.weights[0].cwiseAbs().maxCoeff() == 0.0);
    CHECK(grads.biases[0].cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("hand-differentiated scalar affine case") {
    nn::Mlp scalar = nn::mlp_init({1, 1}, 5);
    scalar.weights[0](0, 0) = 0.8;
    scalar.biases[0](0) = -0.1;
    Mat x(1, 1), t(1, 1);
    x << 0.4;
    t << 0.9;
    nn::Gradients g = nn::Gradients::zero_like(scalar);
    const double loss = nn::loss_and_grad(scalar, x, t, g);
    const double residual = 0.9 - (0.8 * 0.4 - 0.1);
    CHECK(loss == doctest::Approx(residual * residual).epsilon(1e-14));
    CHECK(g.biases[0](0) == doctest::Approx(-2.0 * residual).epsilon(1e-14));
    CHECK(g.weights[0](0, 0) == doctest::Approx(-2.0 * residual * 0.4).epsilon(1e-14));
  }

  SUBCASE("shape mismatches are rejected") {
    CHECK_THROWS_AS(nn::loss_and_grad(m, Mat::Zero(2, 0), Mat::Zero(2, 0), grads), Error);
    CHECK_THROWS_AS(nn::loss_and_grad(m, Mat::Zero(2, 3), Mat::Zero(1, 3), grads), Error);
  }
}

TEST_CASE("backpropagation matches central finite differences") {
  nn::Mlp m = nn::mlp_init({3, 5, 4}, 6);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  Mat x(3, 4), t(4, 4);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = 0.5 * normal(rng);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = normal(rng);

  nn::Gradients grads = nn::Gradients::zero_like(m);
  nn::loss_and_grad(m, x, t, grads);
  auto refs = collect_params(m, grads);

  double worst = 0.0;
  std::uniform_int_distribution<std::size_t> pick(0, refs.size() - 1);
  for (int trial = 0; trial < 50; ++trial) {
    auto& ref = refs[pick(rng)];
    const double fd = fd_gradient(m, ref.value, x, t, 1e-5);
    const double denom = std::max({std::abs(fd), std::abs(ref.analytic), 1e-10});
    worst = std::max(worst, std::abs(fd - ref.analytic) / denom);
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("adamw update rule") {
  nn::Mlp m = nn::mlp_init({1, 1}, 8);
  m.weights[0](0, 0) = 1.0;
  m.biases[0](0) = 1.0;
  nn::AdamWState state = nn::AdamWState::zero_like(m);
  nn::Gradients zero = nn::Gradients::zero_like(m);

  SUBCASE("no gradient and no decay leaves parameters alone") {
    nn::AdamWConfig cfg;
    cfg.weight_decay = 0.0;
    nn::adamw_step(m, zero, state, cfg);
    CHECK(m.weights[0](0, 0) == 1.0);
    CHECK(state.step == 1);
  }

  SUBCASE("pure decoupled decay") {
    nn::AdamWConfig cfg;
    cfg.lr = 0.1;
    cfg.weight_decay = 1.0;
    nn::adamw_step(m, zero, state, cfg);
    CHECK(m.weights[0](0, 0) == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(m.biases[0](0) == doctest::Approx(0.9).epsilon(1e-15));
  }

  SUBCASE("step counter increments once per call") {
    nn::AdamWConfig cfg;
    nn::adamw_step(m, zero, state, cfg);
    nn::adamw_step(m, zero, state, cfg);
    CHECK(state.step == 2);
  }
}

TEST_CASE("training memorizes tiny datasets") {
  SUBCASE("single sample stops immediately at any threshold") {
    nn::Mlp m = nn::mlp_init({2, 4, 2}, 9);
    Mat x(2, 1), t(2, 1);
    x << 0.25, -0.5;
    t << 1.0, -2.0;
    nn::TrainConfig cfg;
    cfg.max_epochs = 1000;
    cfg.stop_threshold = 1e-8;
    const nn::TrainHistory history = nn::train(m, x, t, cfg);
    CHECK(history.stop_reason == nn::StopReason::threshold);
    CHECK(history.best_loss < 1e-8);
  }

  SUBCASE("four samples are driven below 1e-6 without weight decay") {
    nn::Mlp m = nn::mlp_init({1, 16, 1}, 10);
    Mat x(1, 4), t(1, 4);
    x << -0.75, -0.25, 0.25, 0.75;
    t << 0.3, -0.1, 0.4, -0.2;
    nn::TrainConfig cfg;
    cfg.max_epochs = 20000;
    cfg.weight_decay = 0.0;
    cfg.stop_threshold = 1e-6;
    const nn::TrainHistory history = nn::train(m, x, t, cfg);
    CHECK(history.stop_reason == nn::StopReason::threshold);
    CHECK(history.best_loss < 1e-6);
  }
}

TEST_CASE("infinite threshold stops after the first epoch") {
  nn::Mlp m = nn::mlp_init({1, 2, 1}, 11);
  Mat x(1, 3), t(1, 3);
  x << -0.5, 0.0, 0.5;
  t << 1.0, 2.0, 3.0;
  nn::TrainConfig cfg;
  cfg.max_epochs = 500;
  cfg.stop_threshold = std::numeric_limits<double>::infinity();
  const nn::TrainHistory history = nn::train(m, x, t, cfg);
  CHECK(history.loss.size() == 1);
  CHECK(history.stop_reason == nn::StopReason::threshold);
}

TEST_CASE("training is deterministic and tracks the best epoch") {
  Mat x(2, 6), t(3, 6);
  x.setRandom();
  t.setRandom();
  nn::TrainConfig cfg;
  cfg.max_epochs = 120;
  cfg.stop_threshold = 1e-14;

  nn::Mlp a = nn::mlp_init({2, 6, 3}, 12);
  nn::Mlp b = nn::mlp_init({2, 6, 3}, 12);
  const nn::TrainHistory ha = nn::train(a, x, t, cfg);
  const nn::TrainHistory hb = nn::train(b, x, t, cfg);
  CHECK(ha.loss == hb.loss);
  CHECK(ha.learning_rate == hb.learning_rate);
  for (std::size_t k = 0; k < a.weights.size(); ++k) {
    CHECK((a.weights[k].array() == b.weights[k].array()).all());
    CHECK((a.biases[k].array() == b.biases[k].array()).all());
  }

  double best = std::numeric_limits<double>::infinity();
  for (double v : ha.loss) best = std::min(best, v);
  CHECK(ha.best_loss == best);
  CHECK(ha.best_loss <= ha.loss.back());

  // The plateau schedule can only lower the learning rate.
  for (std::size_t i = 1; i < ha.learning_rate.size(); ++i) {
    CHECK(ha.learning_rate[i] <= ha.learning_rate[i - 1]);
  }

  // Mini-batching with the full count matches full-batch training.
  nn::Mlp c = nn::mlp_init({2, 6, 3}, 12);
  nn::TrainConfig batched = cfg;
  batched.batch_size = 6;
  const nn::TrainHistory hc = nn::train(c, x, t, batched);
  CHECK(hc.loss == ha.loss);
}

TEST_CASE("mini-batch epochs traverse the whole set") {
  Mat x(1, 5), t(1, 5);
  x << -0.8, -0.4, 0.0, 0.4, 0.8;
  t << 1, 2, 3, 2, 1;
  nn::Mlp m = nn::mlp_init({1, 4, 1}, 13);
  nn::TrainConfig cfg;
  cfg.max_epochs = 50;
  cfg.batch_size = 2;  // uneven split: chunks of 2,2,1
  cfg.stop_threshold = 1e-14;
  const nn::TrainHistory history = nn::train(m, x, t, cfg);
  CHECK(history.loss.size() == 50);
  CHECK(history.loss.back() < history.loss.front());
}

TEST_CASE("a-priori network sizing") {
  qmc::RateConfig rates;  // alpha 1, p 4/9
  const nn::SizingConfig big = nn::size_apriori(4096, rates);
  CHECK(big.n == 11);
  CHECK(big.width == 121);
  CHECK(big.hidden_layers == 4);

  const nn::SizingConfig tiny = nn::size_apriori(1, rates);
  CHECK(tiny.n == 1);
  CHECK(tiny.width == 1);
  CHECK(tiny.hidden_layers == 3);

  const nn::SizingConfig mid = nn::size_apriori(256, rates);
  CHECK(mid.n == 5);
  CHECK(mid.width == 25);

  const auto dims = nn::layer_dims(big, 64, 2 * 28);
  CHECK(dims.size() == 6);
  CHECK(dims.front() == 64);
  CHECK(dims.back() == 56);
  for (std::size_t i = 1; i + 1 < dims.size(); ++i) CHECK(dims[i] == 121);
}

TEST_CASE("prediction denormalizes the network output") {
  nn::Mlp m = nn::mlp_init({2, 3, 4}, 14);
  m.weights[0].setZero();
  m.weights[1].setZero();
  m.biases[1] << 0.5, -0.5, 0.25, 0.0;
  SUBCASE("identity normalization passes the bias through") {
    const Vec out = nn::predict(m, Vec::Zero(2));
    CHECK(out(0) == 0.5);
    CHECK(out(3) == 0.0);
    CHECK(out.size() == 4);
  }
  SUBCASE("trained normalization round-trips the targets") {
    Mat t(4, 6);
    t.setRandom();
    const nn::AffineNorm norm = nn::AffineNorm::from_minmax(t);
    const Mat round = norm.invert(norm.apply(t));
    CHECK((round - t).cwiseAbs().maxCoeff() <= 1e-12);
    const Mat normalized = norm.apply(t);
    CHECK(normalized.maxCoeff() <= 1.0 + 1e-12);
    CHECK(normalized.minCoeff() >= -1.0 - 1e-12);
  }
  SUBCASE("degenerate target rows map to zero") {
    Mat t = Mat::Ones(2, 3) * 7.0;
    const nn::AffineNorm norm = nn::AffineNorm::from_minmax(t);
    CHECK(norm.apply(t).cwiseAbs().maxCoeff() == 0.0);
    CHECK((norm.invert(norm.apply(t)) - t).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("train validates its configuration") {
  nn::Mlp m = nn::mlp_init({1, 1}, 15);
  Mat x(1, 1), t(1, 1);
  x << 0.0;
  t << 1.0;
  nn::TrainConfig cfg;
  cfg.stop_threshold = 0.0;
  CHECK_THROWS_AS(nn::train(m, x, t, cfg), Error);
  cfg.stop_threshold = 1e-3;
  cfg.plateau_factor = 1.5;
  CHECK_THROWS_AS(nn::train(m, x, t, cfg), Error);
}
