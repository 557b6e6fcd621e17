#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "support/oracles.hpp"
#include "tagsum/autodiff.hpp"

using namespace tagsum;
using ad::Tensor;

namespace {

Tensor random_param(std::mt19937_64& rng, ad::Shape shape, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(ad::num_elements(shape));
  for (auto& x : v) x = u(rng);
  return Tensor::parameter(std::move(shape), std::move(v));
}

// Backward through f() once, then compare every input gradient with central
// differences of the same scalar function.
double max_group_error(const std::function<Tensor()>& f, std::vector<Tensor> inputs) {
  for (auto& x : inputs) x.zero_grad();
  Tensor loss = f();
  ad::backward(loss);
  double worst = 0.0;
  for (auto& x : inputs) {
    std::vector<double> analytic(x.grad().begin(), x.grad().end());
    ad::NoGradGuard guard;
    auto numeric = oracle::numeric_gradient([&] { return f().item(); }, x);
    worst = std::max(worst, oracle::group_relative_error(analytic, numeric));
  }
  return worst;
}

}  // namespace

TEST_SUITE("autodiff") {

TEST_CASE("x + x has gradient 2") {
  Tensor x = Tensor::parameter({3}, {1.0, -2.0, 0.5});
  ad::backward(ad::sum(ad::add(x, x)));
  for (double g : x.grad()) CHECK(g == 2.0);
}

TEST_CASE("gradients accumulate across backward calls until zeroed") {
  Tensor x = Tensor::parameter({2}, {1.0, 2.0});
  ad::backward(ad::sum(ad::mul(x, x)));
  ad::backward(ad::sum(ad::mul(x, x)));
  CHECK(x.grad()[0] == doctest::Approx(4.0));
  CHECK(x.grad()[1] == doctest::Approx(8.0));
  x.zero_grad();
  CHECK(x.grad()[0] == 0.0);
}

TEST_CASE("sum of a softmax has zero gradient") {
  Tensor x = Tensor::parameter({4}, {0.3, -1.0, 2.0, 0.0});
  ad::backward(ad::sum(ad::softmax(x)));
  for (double g : x.grad()) CHECK(std::abs(g) < 1e-15);
}

TEST_CASE("sigmoid derivative at zero is a quarter") {
  Tensor x = Tensor::parameter({1}, {0.0});
  ad::backward(ad::sum(ad::sigmoid(x)));
  CHECK(x.grad()[0] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("softmax values sum to one and are stable for large logits") {
  Tensor x = Tensor::constant({3}, {1000.0, 1000.0, 999.0});
  Tensor s = ad::softmax(x);
  double total = 0;
  for (double v : s.values()) {
    CHECK(std::isfinite(v));
    total += v;
  }
  CHECK(total == doctest::Approx(1.0));
  CHECK(s[0] == doctest::Approx(s[1]));
}

TEST_CASE("primitive gradients agree with finite differences") {
  std::mt19937_64 rng(3);
  Tensor a = random_param(rng, {3, 4});
  Tensor b = random_param(rng, {4, 2});
  Tensor v = random_param(rng, {4});
  Tensor w = random_param(rng, {4});
  Tensor pos = random_param(rng, {4}, 0.5, 2.0);
  Tensor s = random_param(rng, {1});
  const double tol = 1e-7;

  SUBCASE("matmul") {
    CHECK(max_group_error([&] { return ad::sum(ad::tanh(ad::matmul(a, b))); }, {a, b}) < tol);
  }
  SUBCASE("vector-matrix matmul") {
    CHECK(max_group_error([&] { return ad::sum(ad::sigmoid(ad::matmul(v, b))); }, {v, b}) < tol);
  }
  SUBCASE("elementwise") {
    auto f = [&] {
      return ad::sum(ad::add(ad::mul(v, w), ad::div(ad::sub(v, w), pos)));
    };
    CHECK(max_group_error(f, {v, w, pos}) < tol);
  }
  SUBCASE("exp, log, minimum, clamp") {
    auto f = [&] {
      return ad::sum(ad::add(ad::log(ad::exp(ad::minimum(v, w))), ad::clamp_min(ad::log(pos), -0.3)));
    };
    CHECK(max_group_error(f, {v, w, pos}) < tol);
  }
  SUBCASE("scale and scalar_mul") {
    CHECK(max_group_error([&] { return ad::sum(ad::scale(ad::scalar_mul(v, 1.7), s)); }, {v, s}) < tol);
  }
  SUBCASE("softmax over rows of a matrix") {
    auto f = [&] { return ad::sum(ad::log(ad::softmax(a, 1))); };
    Tensor weights = random_param(rng, {3, 4});
    auto g = [&] { return ad::sum(ad::mul(ad::softmax(a, 1), weights)); };
    CHECK(max_group_error(g, {a}) < tol);
    CHECK(max_group_error(f, {a}) < tol);
  }
  SUBCASE("concat, slice, row, reshape, stack") {
    auto f = [&] {
      Tensor c = ad::concat({v, w});
      Tensor m = ad::reshape(ad::slice(c, 0, 8), {2, 4});
      std::vector<Tensor> rows{ad::row(m, 1), ad::row(a, 2)};
      return ad::sum(ad::tanh(ad::matmul(ad::stack(rows), b)));
    };
    CHECK(max_group_error(f, {v, w, a, b}) < tol);
  }
  SUBCASE("embedding lookup with repeated ids") {
    std::vector<int> ids{2, 0, 2};
    CHECK(max_group_error([&] { return ad::sum(ad::tanh(ad::embedding_lookup(a, ids))); }, {a}) < tol);
  }
  SUBCASE("broadcast rows and columns") {
    auto f = [&] {
      return ad::sum(ad::tanh(ad::add(ad::broadcast_rows(v, 3), ad::broadcast_cols(ad::slice(w, 0, 3), 4))));
    };
    CHECK(max_group_error(f, {v, w}) < tol);
  }
  SUBCASE("scatter_add with collisions") {
    std::vector<int> idx{1, 3, 1, 0};
    Tensor weights = random_param(rng, {5});
    auto f = [&] { return ad::sum(ad::mul(ad::tanh(ad::scatter_add(v, idx, 5)), weights)); };
    CHECK(max_group_error(f, {v}) < tol);
  }
}

TEST_CASE("scatter_add sums values landing on the same index") {
  Tensor v = Tensor::constant({3}, {0.2, 0.5, 0.3});
  std::vector<int> idx{0, 1, 0};
  Tensor out = ad::scatter_add(v, idx, 3);
  CHECK(out[0] == doctest::Approx(0.5));
  CHECK(out[1] == doctest::Approx(0.5));
  CHECK(out[2] == 0.0);
}

TEST_CASE("grad_check reports small error on a smooth function") {
  Tensor x = Tensor::parameter({3}, {0.1, -0.4, 0.9});
  const double err = ad::grad_check([](const Tensor& t) { return ad::sum(ad::tanh(ad::mul(t, t))); }, x);
  CHECK(err < 1e-6);
}

TEST_CASE("shape mismatches throw ShapeError") {
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({2, 3});
  Tensor c = Tensor::zeros({4});
  CHECK_THROWS_AS(ad::matmul(a, b), ad::ShapeError);
  CHECK_THROWS_AS(ad::add(a, c), ad::ShapeError);
  CHECK_THROWS_AS(ad::reshape(a, {5}), ad::ShapeError);
  CHECK_THROWS_AS(ad::scale(a, c), ad::ShapeError);
}

TEST_CASE("backward requires a scalar loss") {
  Tensor x = Tensor::parameter({2}, {1.0, 2.0});
  Tensor y = ad::mul(x, x);
  CHECK_THROWS(ad::backward(y));
  ad::Tape::current().clear();
}

TEST_CASE("NoGradGuard records nothing") {
  ad::Tape::current().clear();
  Tensor x = Tensor::parameter({2}, {1.0, 2.0});
  {
    ad::NoGradGuard guard;
    CHECK_FALSE(ad::grad_enabled());
    Tensor y = ad::sum(ad::mul(x, x));
    CHECK(y.item() == 5.0);
    CHECK(ad::Tape::current().size() == 0);
  }
  CHECK(ad::grad_enabled());
}

TEST_CASE("backward clears the tape") {
  Tensor x = Tensor::parameter({2}, {1.0, 2.0});
  Tensor y = ad::sum(ad::exp(x));
  CHECK(ad::Tape::current().size() > 0);
  ad::backward(y);
  CHECK(ad::Tape::current().size() == 0);
}

}  // TEST_SUITE
