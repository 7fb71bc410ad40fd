#include <doctest.h>

#include <cmath>

#include "adbs/error.hpp"
#include "adbs/mlp.hpp"
#include "adbs/rng.hpp"

using namespace adbs;

namespace {

Eigen::VectorXd random_vector(Eigen::Index n, Rng& rng) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

RewardHistory random_history(int n, int dim, Rng& rng) {
  RewardHistory h;
  for (int i = 0; i < n; ++i) h.push(random_vector(dim, rng), rng.normal());
  return h;
}

}  // namespace

TEST_CASE("parameter count") {
  CHECK(NetShape{260, 32, 3}.param_count() == 32 * 260 + 32 * 32 + 32);
  CHECK(NetShape{2, 1, 2}.param_count() == 3);
  CHECK(MlpParams::zeros({5, 4, 4}).size() == 4 * 5 + 2 * 16 + 4);
  CHECK_THROWS_AS(MlpParams({3, 2, 2}, Eigen::VectorXd::Zero(3)), InvalidInput);
  CHECK_THROWS_AS(MlpParams::zeros({3, 2, 1}), InvalidInput);
}

TEST_CASE("hand-computed forward pass and gradient") {
  const NetShape shape{2, 1, 2};
  Eigen::VectorXd flat(3);
  flat << 1.0, 0.0, 2.0;  // W_1 = (1, 0), W_2 = (2)
  const MlpParams p(shape, flat);
  const Eigen::Vector2d x(3.0, 5.0);
  CHECK(forward(x, p) == doctest::Approx(6.0));

  const Eigen::VectorXd g = param_gradient(x, p);
  CHECK(g[0] == doctest::Approx(6.0));  // W_2 * x_1
  CHECK(g[1] == doctest::Approx(10.0)); // W_2 * x_2
  CHECK(g[2] == doctest::Approx(3.0));  // relu(W_1 x)

  // A negative pre-activation switches the unit off, so every partial vanishes.
  Eigen::VectorXd off(3);
  off << -1.0, 0.0, 2.0;
  const MlpParams q(shape, off);
  CHECK(forward(x, q) == 0.0);
  CHECK(param_gradient(x, q).isZero());

  CHECK_THROWS_AS(forward(Eigen::Vector3d::Ones(), p), InvalidInput);
}

TEST_CASE("gradient agrees with central finite differences") {
  Rng rng(17);
  double worst = 0.0;
  for (int instance = 0; instance < 24; ++instance) {
    const NetShape shape{6, 8, instance % 2 ? 3 : 4};
    const MlpParams p = MlpParams::gaussian(shape, rng);
    const Eigen::VectorXd x = random_vector(shape.input_dim, rng);
    const Eigen::VectorXd g = param_gradient(x, p);
    const double h = 1e-5;
    Eigen::VectorXd fd(p.size());
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      Eigen::VectorXd up = p.flat(), down = p.flat();
      up[i] += h;
      down[i] -= h;
      fd[i] = (forward(x, MlpParams(shape, up)) - forward(x, MlpParams(shape, down))) / (2 * h);
    }
    worst = std::max(worst, (g - fd).norm() / std::max(fd.norm(), 1e-12));
    CHECK(forward_with_gradient(x, p).value == doctest::Approx(forward(x, p)));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("initialization scale follows fan-in") {
  Rng rng(1);
  const NetShape shape{400, 64, 3};
  const MlpParams p = MlpParams::gaussian(shape, rng);
  for (int l = 0; l < shape.depth; ++l) {
    const auto w = p.layer(l);
    const double var = w.squaredNorm() / static_cast<double>(w.size());
    CHECK(var * static_cast<double>(p.layer_cols(l)) == doctest::Approx(1.0).epsilon(0.1));
  }
  Rng a(9), b(9);
  CHECK(MlpParams::gaussian(shape, a).flat() == MlpParams::gaussian(shape, b).flat());
}

TEST_CASE("regularized fit descends the loss") {
  Rng rng(4);
  const NetShape shape{6, 8, 3};
  const MlpParams theta0 = MlpParams::gaussian(shape, rng);
  const RewardHistory h = random_history(10, shape.input_dim, rng);

  FitOptions opt;
  opt.steps = 200;
  opt.learning_rate = 0.01;
  const FitResult r = fit_regularized(h, theta0, theta0, opt);
  REQUIRE(r.loss_trace.size() == 201);
  CHECK(r.initial_loss == doctest::Approx(regularized_loss(h, theta0, theta0, opt.lambda)));
  CHECK(r.final_loss == doctest::Approx(regularized_loss(h, r.params, theta0, opt.lambda)));
  CHECK(r.final_loss <= r.initial_loss);
  for (std::size_t i = 10; i < r.loss_trace.size(); ++i) {
    CHECK(r.loss_trace[i] <= r.loss_trace[i - 10]);
  }
  for (std::size_t i = 1; i < r.loss_trace.size(); ++i) {
    CHECK(r.loss_trace[i] <= r.loss_trace[i - 1]);
  }

  SUBCASE("warm start continues from the previous solution") {
    const FitResult again = fit_regularized(h, theta0, r.params, opt);
    CHECK(again.initial_loss == doctest::Approx(r.final_loss));
    CHECK(again.final_loss <= r.final_loss);
  }
  SUBCASE("the anchor is theta_0, not the warm start") {
    MlpParams far(shape, (theta0.flat().array() + 0.05).matrix());
    FitOptions strong = opt;
    strong.lambda = 10.0;
    const double at_far = regularized_loss(h, far, theta0, strong.lambda);
    const FitResult from_far = fit_regularized(h, theta0, far, strong);
    CHECK(from_far.initial_loss == doctest::Approx(at_far));
    CHECK((from_far.params.flat() - theta0.flat()).norm() < (far.flat() - theta0.flat()).norm());
  }
}

TEST_CASE("fixed-step descent reports divergence with the step") {
  Rng rng(8);
  const NetShape shape{6, 8, 3};
  const MlpParams theta0 = MlpParams::gaussian(shape, rng);
  RewardHistory h;
  for (int i = 0; i < 5; ++i) h.push(30.0 * random_vector(6, rng), 100.0);
  FitOptions opt;
  opt.learning_rate = 10.0;
  opt.backtracking = false;
  try {
    (void)fit_regularized(h, theta0, theta0, opt);
    FAIL("expected divergence");
  } catch (const DivergenceError& e) {
    CHECK(e.step() >= 1);
    CHECK(std::string(e.what()).find(std::to_string(e.step())) != std::string::npos);
  }

  opt.backtracking = true;
  const FitResult safe = fit_regularized(h, theta0, theta0, opt);
  CHECK(std::isfinite(safe.final_loss));
  CHECK(safe.final_loss <= safe.initial_loss);
  CHECK(safe.rejected_steps > 0);
  CHECK(safe.final_learning_rate < opt.learning_rate);
}

TEST_CASE("fit arguments are validated") {
  Rng rng(2);
  const NetShape shape{3, 4, 3};
  const MlpParams theta0 = MlpParams::gaussian(shape, rng);
  RewardHistory empty;
  FitOptions opt;
  CHECK_THROWS_AS(fit_regularized(empty, theta0, theta0, opt), InvalidInput);
  RewardHistory h = random_history(3, 3, rng);
  opt.lambda = 0.0;
  CHECK_THROWS_AS(fit_regularized(h, theta0, theta0, opt), InvalidInput);
  opt = {};
  opt.steps = 0;
  CHECK_THROWS_AS(fit_regularized(h, theta0, theta0, opt), InvalidInput);
  opt = {};
  opt.learning_rate = -1.0;
  CHECK_THROWS_AS(fit_regularized(h, theta0, theta0, opt), InvalidInput);
  CHECK_THROWS_AS(h.push(Eigen::VectorXd::Zero(4), 0.0), InvalidInput);
  CHECK_THROWS_AS(h.push(Eigen::VectorXd::Zero(3), std::nan("")), InvalidInput);
}
