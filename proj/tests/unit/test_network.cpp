#include "oracles.hpp"

#include "ntkcv/error.hpp"
#include "ntkcv/network.hpp"

#include <doctest.h>

using namespace ntkcv;

TEST_CASE("parameter count and layout") {
  NetworkSpec spec{{3, 4, 2}};
  CHECK(spec.param_count() == 3 * 4 + 4 + 4 * 2 + 2);
  const auto layout = layer_layout(spec);
  REQUIRE(layout.size() == 2);
  CHECK(layout[0].weight_offset == 0);
  CHECK(layout[0].bias_offset == 12);
  CHECK(layout[1].weight_offset == 16);
  CHECK(layout[1].bias_offset == 24);

  spec.bias = false;
  CHECK(spec.param_count() == 3 * 4 + 4 * 2);
  CHECK(layer_layout(spec)[1].weight_offset == 12);
}

TEST_CASE("invalid specs are rejected") {
  CHECK_THROWS_AS(NetworkSpec{{3}}.validate(), ValidationError);
  CHECK_THROWS_AS(NetworkSpec({3, 0, 1}).validate(), ValidationError);
  CHECK_THROWS_AS(parse_activation("tanh"), ValidationError);
  CHECK_THROWS_AS(parse_parametrization("xavier"), ValidationError);
}

TEST_CASE("forward pass by hand") {
  // 2 -> 2 relu -> 1, weights set explicitly.
  NetworkState state{NetworkSpec{{2, 2, 1}}, Eigen::VectorXd(9), 0};
  state.params << 1, -1,  // W1 row 0
      2, 0.5,             // W1 row 1
      0.1, -0.2,          // b1
      3, -2,              // W2
      0.5;                // b2
  Eigen::MatrixXd x(2, 2);
  x << 1, 2, -1, 0;
  // sample 0: z1 = (1-2+0.1, 2+1-0.2) = (-0.9, 2.8) -> a = (0, 2.8) -> 3*0 - 2*2.8 + 0.5 = -5.1
  // sample 1: z1 = (-1+0.1, -2-0.2) = (-0.9, -2.2) -> a = (0, 0) -> 0.5
  const Eigen::MatrixXd y = forward(state, x);
  CHECK(y(0, 0) == doctest::Approx(-5.1).epsilon(1e-14));
  CHECK(y(1, 0) == doctest::Approx(0.5).epsilon(1e-14));

  state.spec.parametrization = Parametrization::ntk;
  // Each layer's weight term is scaled by 1/sqrt(fan_in); fan_in is 2 for both.
  const double s = 1.0 / std::sqrt(2.0);
  const double a1 = std::max(0.0, s * (2 + 1) - 0.2);
  const double a0 = std::max(0.0, s * (1 - 2) + 0.1);
  CHECK(forward(state, x)(0, 0) == doctest::Approx(s * (3 * a0 - 2 * a1) + 0.5).epsilon(1e-14));
}

TEST_CASE("relu derivative at zero is zero") {
  NetworkState state{NetworkSpec{{1, 1, 1}}, Eigen::VectorXd(4), 0};
  state.params << 1, 0, 1, 0;
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(1);
  const RowMatrix j = param_jacobian(state, x);
  // Preactivation is exactly 0, so nothing upstream of the relu gets gradient.
  CHECK(j(0, 0) == 0.0);
  CHECK(j(0, 1) == 0.0);
  CHECK(j(0, 3) == 1.0);
}

TEST_CASE("jacobian matches finite differences") {
  std::mt19937_64 rng(7);
  for (auto par : {Parametrization::lecun, Parametrization::ntk}) {
    for (auto act : {Activation::relu, Activation::linear}) {
      const NetworkSpec spec{{3, 5, 4, 2}, act, par};
      const NetworkState state = init_network(spec, 11);
      Eigen::MatrixXd x = oracles::random_matrix(1, 3, rng);
      while (oracles::kink_distance(state, x) < 1e-3) x = oracles::random_matrix(1, 3, rng);
      const Eigen::MatrixXd fd = oracles::fd_jacobian(state, x.row(0));
      const Eigen::VectorXd xv = x.row(0).transpose();
      const Eigen::MatrixXd j = param_jacobian(state, xv);
      CHECK((j - fd).norm() / fd.norm() < 1e-7);

      const auto blocks = batch_param_jacobians(state, x);
      REQUIRE(blocks.size() == 2);
      CHECK((Eigen::MatrixXd(blocks[1]).row(0) - j.row(1)).norm() == 0.0);
    }
  }
}

TEST_CASE("loss gradients match finite differences") {
  std::mt19937_64 rng(8);
  const NetworkSpec spec{{3, 6, 3}, Activation::relu, Parametrization::ntk};
  const NetworkState state = init_network(spec, 3);
  Eigen::MatrixXd x = oracles::random_matrix(5, 3, rng);
  while (oracles::kink_distance(state, x) < 1e-3) x = oracles::random_matrix(5, 3, rng);

  SUBCASE("mse") {
    const Eigen::MatrixXd y = oracles::random_matrix(5, 3, rng);
    const auto lg = loss_and_grad(state, x, y, LossKind::mse);
    const auto fd = oracles::fd_gradient(state, [&](const NetworkState& s) { return loss_value(s, x, y, LossKind::mse); });
    CHECK((lg.grad - fd).norm() / fd.norm() < 1e-7);
    CHECK(lg.loss == doctest::Approx((forward(state, x) - y).array().square().mean()).epsilon(1e-14));
  }
  SUBCASE("softmax cross-entropy with class indices and one-hot targets") {
    Eigen::MatrixXd idx(5, 1);
    idx << 0, 2, 1, 1, 0;
    Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(5, 3);
    for (int i = 0; i < 5; ++i) onehot(i, static_cast<int>(idx(i, 0))) = 1.0;
    const auto a = loss_and_grad(state, x, idx, LossKind::softmax_cross_entropy);
    const auto b = loss_and_grad(state, x, onehot, LossKind::softmax_cross_entropy);
    CHECK(a.loss == doctest::Approx(b.loss).epsilon(1e-14));
    const auto fd = oracles::fd_gradient(
        state, [&](const NetworkState& s) { return loss_value(s, x, idx, LossKind::softmax_cross_entropy); });
    CHECK((a.grad - fd).norm() / fd.norm() < 1e-7);

    // Direct evaluation of -mean log softmax.
    const Eigen::MatrixXd out = forward(state, x);
    double expected = 0.0;
    for (int i = 0; i < 5; ++i) {
      const double lse = std::log(out.row(i).array().exp().sum());
      expected += lse - out(i, static_cast<int>(idx(i, 0)));
    }
    CHECK(a.loss == doctest::Approx(expected / 5).epsilon(1e-12));
  }
}

TEST_CASE("accuracy counts argmax hits") {
  Eigen::MatrixXd out(4, 3);
  out << 1, 2, 3, 5, 0, 0, 0, 1, 0, 0, 0, 9;
  Eigen::MatrixXd y(4, 1);
  y << 2, 0, 0, 2;
  CHECK(accuracy_percent(out, y) == 75.0);
}

TEST_CASE("initialization statistics") {
  const NetworkState lecun = init_network(NetworkSpec{{400, 300, 1}}, 1);
  const auto layout = layer_layout(lecun.spec);
  const Eigen::VectorXd w = lecun.params.segment(0, 400 * 300);
  const double var = (w.array() - w.mean()).square().mean();
  // 120000 draws: the sample variance is within a few percent of 1/400.
  CHECK(var == doctest::Approx(1.0 / 400).epsilon(0.03));
  CHECK(lecun.params.segment(static_cast<Eigen::Index>(layout[0].bias_offset), 300).isZero(0.0));

  const NetworkState ntk = init_network(NetworkSpec{{400, 300, 1}, Activation::relu, Parametrization::ntk}, 1);
  const Eigen::VectorXd wn = ntk.params.segment(0, 400 * 300);
  CHECK((wn.array() - wn.mean()).square().mean() == doctest::Approx(1.0).epsilon(0.03));
  CHECK(init_network(lecun.spec, 1).params == lecun.params);
  CHECK(init_network(lecun.spec, 2).params != lecun.params);
}

TEST_CASE("dimension errors") {
  const NetworkState state = init_network(NetworkSpec{{3, 2}}, 0);
  CHECK_THROWS_AS(forward(state, Eigen::MatrixXd::Zero(2, 4)), DimensionError);
  CHECK_THROWS_AS(batch_param_jacobian(state, Eigen::MatrixXd::Zero(2, 3), 2), DimensionError);
}
