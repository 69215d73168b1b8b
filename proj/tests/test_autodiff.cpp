#include <cmath>
#include <functional>
#include <vector>

#include "doctest.h"
#include "mbrlab/autodiff.hpp"
#include "mbrlab/rng.hpp"

using namespace mbrlab;

namespace {

Tensor random_tensor(Rng& rng, std::vector<std::size_t> shape, double lo = -2.0, double hi = 2.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& v : t.data) v = rng.next_uniform(lo, hi);
  return t;
}

// Scalar-valued function of one leaf tensor; gradient checked against central
// finite differences element by element.
using ScalarFn = std::function<Value(Graph&, Value)>;

void check_gradient(const ScalarFn& fn, const Tensor& x0, double h = 1e-6, double tol = 1e-6) {
  Graph g;
  Value x = g.input(x0, /*requires_grad=*/true);
  Value y = fn(g, x);
  REQUIRE(y.tensor().is_scalar());
  g.backward(y);
  Tensor grad = x.grad();
  REQUIRE(grad.shape == x0.shape);

  for (std::size_t i = 0; i < x0.numel(); ++i) {
    auto eval_at = [&](double delta) {
      Tensor xp = x0;
      xp.data[i] += delta;
      Graph g2;
      return fn(g2, g2.input(xp)).item();
    };
    double fd = (eval_at(h) - eval_at(-h)) / (2.0 * h);
    double scale = std::max({1.0, std::fabs(fd), std::fabs(grad.data[i])});
    CHECK(std::fabs(grad.data[i] - fd) / scale < tol);
  }
}

}  // namespace

TEST_CASE("forward values: basic ops") {
  Graph g;
  Value a = g.input(Tensor::vector1d({1.0, 2.0, 3.0}));
  Value b = g.input(Tensor::vector1d({-1.0, 0.5, 2.0}));
  CHECK(g.add(a, b).tensor().data == std::vector<double>{0.0, 2.5, 5.0});
  CHECK(g.mul(a, b).tensor().data == std::vector<double>{-1.0, 1.0, 6.0});
  CHECK(g.sum(a).item() == doctest::Approx(6.0));
  CHECK(g.mean(a).item() == doctest::Approx(2.0));
  CHECK(g.scale(a, -2.0).tensor().data == std::vector<double>{-2.0, -4.0, -6.0});
}

TEST_CASE("softmax rows sum to one and are invariant to shifts") {
  Graph g;
  Tensor t({2, 3}, {1.0, 2.0, 3.0, 1000.0, 1001.0, 1002.0});  // big row: stability
  Tensor s = g.softmax(g.input(t)).tensor();
  for (std::size_t r = 0; r < 2; ++r) {
    double total = s.at(r, 0) + s.at(r, 1) + s.at(r, 2);
    CHECK(total == doctest::Approx(1.0));
  }
  // Both rows are shifted copies of each other, so the probabilities match.
  for (std::size_t j = 0; j < 3; ++j) CHECK(s.at(0, j) == doctest::Approx(s.at(1, j)));
}

TEST_CASE("log_softmax equals log of softmax and is finite for extreme logits") {
  Graph g;
  Tensor t({1, 4}, {-700.0, 0.0, 700.0, 699.0});
  Tensor ls = g.log_softmax(g.input(t)).tensor();
  Tensor s = g.softmax(g.input(t)).tensor();
  CHECK(ls.all_finite());
  for (std::size_t j = 0; j < 4; ++j) {
    if (s.data[j] > 0.0) CHECK(ls.data[j] == doctest::Approx(std::log(s.data[j])).epsilon(1e-9));
  }
}

TEST_CASE("log_sigmoid is stable in both tails") {
  Graph g;
  Tensor t = Tensor::vector1d({-745.0, -50.0, 0.0, 50.0, 745.0});
  Tensor v = g.log_sigmoid(g.input(t)).tensor();
  CHECK(v.all_finite());
  CHECK(v.data[2] == doctest::Approx(std::log(0.5)));
  CHECK(v.data[0] == doctest::Approx(-745.0).epsilon(1e-12));  // log sigma(x) -> x
  CHECK(v.data[4] == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("matmul forward against a hand computation") {
  Graph g;
  Tensor a({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor b({3, 2}, {7, 8, 9, 10, 11, 12});
  Tensor c = g.matmul(g.input(a), g.input(b)).tensor();
  CHECK(c.shape == std::vector<std::size_t>{2, 2});
  CHECK(c.at(0, 0) == doctest::Approx(58));
  CHECK(c.at(0, 1) == doctest::Approx(64));
  CHECK(c.at(1, 0) == doctest::Approx(139));
  CHECK(c.at(1, 1) == doctest::Approx(154));

  Tensor bt({2, 3}, {7, 9, 11, 8, 10, 12});
  Tensor c2 = g.matmul(g.input(a), g.input(bt), /*transpose_b=*/true).tensor();
  CHECK(c2.data == c.data);
}

TEST_CASE("gather_rows picks rows, including duplicates") {
  Graph g;
  Tensor a({3, 2}, {1, 2, 3, 4, 5, 6});
  Tensor got = g.gather_rows(g.input(a), {2, 0, 2}).tensor();
  CHECK(got.shape == std::vector<std::size_t>{3, 2});
  CHECK(got.data == std::vector<double>{5, 6, 1, 2, 5, 6});
}

TEST_CASE("concat along both axes") {
  Graph g;
  Tensor a({2, 2}, {1, 2, 3, 4});
  Tensor b({2, 1}, {9, 10});
  Tensor c1 = g.concat(g.input(a), g.input(b), 1).tensor();
  CHECK(c1.shape == std::vector<std::size_t>{2, 3});
  CHECK(c1.data == std::vector<double>{1, 2, 9, 3, 4, 10});
  Tensor d({1, 2}, {7, 8});
  Tensor c0 = g.concat(g.input(a), g.input(d), 0).tensor();
  CHECK(c0.shape == std::vector<std::size_t>{3, 2});
  CHECK(c0.data == std::vector<double>{1, 2, 3, 4, 7, 8});
}

TEST_CASE("gradients match finite differences for every op") {
  Rng rng(0x5eed);
  for (int rep = 0; rep < 5; ++rep) {
    Tensor v = random_tensor(rng, {4});
    Tensor m = random_tensor(rng, {3, 4});

    check_gradient([](Graph& g, Value x) { return g.sum(x); }, v);
    check_gradient([](Graph& g, Value x) { return g.mean(x); }, m);
    check_gradient([](Graph& g, Value x) { return g.sum(g.mul(x, x)); }, v);
    check_gradient([](Graph& g, Value x) { return g.sum(g.scale(x, -1.7)); }, m);
    check_gradient([](Graph& g, Value x) { return g.sum(g.sigmoid(x)); }, v);
    check_gradient([](Graph& g, Value x) { return g.sum(g.log_sigmoid(x)); }, v);
    check_gradient([](Graph& g, Value x) { return g.sum(g.softmax(x)); }, m, 1e-6, 1e-5);
    check_gradient([](Graph& g, Value x) { return g.mean(g.log_softmax(x)); }, m, 1e-6, 1e-5);
    check_gradient([](Graph& g, Value x) { return g.sum(g.gather_rows(x, {1, 1, 0})); }, m);
    Tensor addend = random_tensor(rng, {3, 4});
    check_gradient([&](Graph& g, Value x) { return g.sum(g.add(x, g.input(addend))); }, m);

    // matmul: gradient w.r.t. each side, both orientations
    Tensor b = random_tensor(rng, {4, 2});
    check_gradient([&](Graph& g, Value x) { return g.sum(g.matmul(x, g.input(b))); }, m);
    check_gradient([&](Graph& g, Value x) { return g.sum(g.matmul(g.input(m), x)); }, b);
    Tensor bt = random_tensor(rng, {2, 4});
    check_gradient(
        [&](Graph& g, Value x) { return g.sum(g.matmul(x, g.input(bt), true)); }, m);
    check_gradient(
        [&](Graph& g, Value x) { return g.sum(g.matmul(g.input(m), x, true)); }, bt);

    Tensor c = random_tensor(rng, {3, 2});
    check_gradient([&](Graph& g, Value x) { return g.sum(g.concat(x, g.input(c), 1)); }, m);
    check_gradient([&](Graph& g, Value x) { return g.sum(g.concat(g.input(c), x, 1)); }, m);
  }
}

TEST_CASE("gradient of a composite expression (softmax attention-like)") {
  Rng rng(42);
  Tensor q = random_tensor(rng, {2, 3});
  Tensor k = random_tensor(rng, {4, 3});
  Tensor vv = random_tensor(rng, {4, 3});
  check_gradient(
      [&](Graph& g, Value x) {
        Value att = g.softmax(g.matmul(x, g.input(k), true));
        return g.mean(g.matmul(att, g.input(vv)));
      },
      q, 1e-6, 1e-5);
}

TEST_CASE("backward accumulates into reused nodes") {
  Graph g;
  Value x = g.input(Tensor::vector1d({3.0}), true);
  Value y = g.add(g.mul(x, x), x);  // x^2 + x, d/dx = 2x + 1 = 7
  g.backward(g.sum(y));
  CHECK(x.grad().data[0] == doctest::Approx(7.0));
}

TEST_CASE("grad is zero for non-participating leaves and cleared between calls") {
  Graph g;
  Value a = g.input(Tensor::vector1d({1.0, 2.0}), true);
  Value b = g.input(Tensor::vector1d({5.0}), true);
  g.backward(g.sum(a));
  CHECK(a.grad().data == std::vector<double>{1.0, 1.0});
  CHECK(b.grad().data == std::vector<double>{0.0});
  g.backward(g.sum(g.scale(a, 3.0)));
  CHECK(a.grad().data == std::vector<double>{3.0, 3.0});  // not 1+3
}

TEST_CASE("backward requires a scalar root") {
  Graph g;
  Value a = g.input(Tensor::vector1d({1.0, 2.0}), true);
  CHECK_THROWS(g.backward(a));
}

TEST_CASE("shape mismatches are rejected") {
  Graph g;
  Value a = g.input(Tensor::vector1d({1.0, 2.0}));
  Value b = g.input(Tensor::vector1d({1.0, 2.0, 3.0}));
  CHECK_THROWS(g.add(a, b));
  CHECK_THROWS(g.mul(a, b));
  Value m = g.input(Tensor::zeros({2, 3}));
  Value n = g.input(Tensor::zeros({2, 3}));
  CHECK_THROWS(g.matmul(m, n));  // inner dims disagree without transpose
}
