#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>

#include "support.h"
#include "tsnmt/autodiff/gradient_check.h"
#include "tsnmt/errors.h"

using namespace tsnmt;
using namespace tsnmt::ad;
using testing::random_param;
using testing::random_tensor;

namespace {

// Reduces x to a scalar with fixed random weights so that every output
// coordinate affects the loss differently.
Expr<double> weighted_sum(Expr<double> x, std::uint64_t seed) {
  Rng rng(seed);
  auto w = x.graph().input(random_tensor(x.shape(), rng));
  return sum(cmul(x, w));
}

void expect_passes(const std::function<Expr<double>(Graph<double>&)>& f, std::vector<Parameter<double>*> params,
                   double tol = 1e-5) {
  GradientCheckOptions opt;
  opt.tolerance = tol;
  const auto report = gradient_check(f, params, opt);
  INFO(report.summary());
  CHECK(report.passed);
  CHECK(report.checked > 0);
}

}  // namespace

TEST_CASE("matmul follows the definition") {
  Graph<double> g;
  auto a = g.input(Tensor<double>::matrix({{1, 2}, {3, 4}}));
  auto b = g.input(Tensor<double>::matrix({{1}, {1}}));
  auto c = matmul(a, b);
  CHECK(c.shape() == Shape{2, 1});
  CHECK(c.value()[0] == 3);
  CHECK(c.value()[1] == 7);

  auto id = g.input(Tensor<double>::matrix({{1, 0}, {0, 1}}));
  auto v = matmul(id, g.input(Tensor<double>::matrix({{5}, {6}})));
  CHECK(v.value()[0] == 5);
  CHECK(v.value()[1] == 6);
}

TEST_CASE("matmul agrees with a triple loop") {
  Rng rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const auto a = random_tensor(Shape{3, 4}, rng);
    const auto b = random_tensor(Shape{4, 2}, rng);
    Graph<double> g;
    const auto c = matmul(g.input(a), g.input(b)).value();
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 2; ++j) {
        double s = 0;
        for (std::size_t k = 0; k < 4; ++k) s += a.at(i, k) * b.at(k, j);
        CHECK(c.at(i, j) == doctest::Approx(s).epsilon(1e-12));
      }
  }
}

TEST_CASE("matmul shape mismatch names both shapes") {
  Graph<double> g;
  auto a = g.input(Tensor<double>(Shape{2, 3}));
  auto b = g.input(Tensor<double>(Shape{2, 3}));
  try {
    matmul(a, b);
    FAIL("expected a dimension error");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("2x3") != std::string::npos);
    CHECK(msg.find("2x3", msg.find("2x3") + 1) != std::string::npos);
  }
}

TEST_CASE("elementwise ops") {
  Graph<double> g;
  auto zero = g.input(Tensor<double>::vector({0}));
  CHECK(sigmoid(zero).value()[0] == 0.5);
  CHECK(ad::tanh(zero).value()[0] == 0);
  auto s = add(g.input(Tensor<double>::vector({1, 2})), g.input(Tensor<double>::vector({3, 4})));
  CHECK(s.value()[0] == 4);
  CHECK(s.value()[1] == 6);
  auto m = cmul(g.input(Tensor<double>::vector({2, 3})), g.input(Tensor<double>::vector({4, 5})));
  CHECK(m.value()[0] == 8);
  CHECK(m.value()[1] == 15);
  auto d = sub(g.input(Tensor<double>::vector({2, 3})), g.input(Tensor<double>::vector({4, 5})));
  CHECK(d.value()[0] == -2);

  auto three = g.input(Tensor<double>::vector({1, 2, 3}));
  CHECK_THROWS_AS(add(three, g.input(Tensor<double>(Shape{2, 3}))), DimensionError);
  CHECK_THROWS_AS(cmul(three, g.input(Tensor<double>::vector({1, 2}))), DimensionError);
  CHECK_THROWS_AS(sub(three, g.input(Tensor<double>::vector({1, 2}))), DimensionError);
}

TEST_CASE("sigmoid is stable for large inputs") {
  Graph<double> g;
  auto x = g.input(Tensor<double>::vector({-800, 800}));
  auto y = sigmoid(x).value();
  CHECK(y[0] == doctest::Approx(0.0));
  CHECK(y[1] == doctest::Approx(1.0));
  CHECK(y.all_finite());
}

TEST_CASE("softmax") {
  Graph<double> g;
  auto half = softmax(g.input(Tensor<double>::vector({0, 0}))).value();
  CHECK(half[0] == doctest::Approx(0.5));
  CHECK(half[1] == doctest::Approx(0.5));

  auto big = softmax(g.input(Tensor<double>::vector({1000, 1000, 1000}))).value();
  CHECK(big.all_finite());
  for (auto v : big.values()) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-12));

  auto p = softmax(g.input(Tensor<double>::vector({1, 2, 3}))).value();
  const long double z = std::exp(1.0L) + std::exp(2.0L) + std::exp(3.0L);
  for (int i = 0; i < 3; ++i)
    CHECK(std::abs(p[i] - static_cast<double>(std::exp(static_cast<long double>(i + 1)) / z)) < 1e-6);

  CHECK_THROWS_AS(softmax(g.input(Tensor<double>())), DimensionError);
}

TEST_CASE("softmax sums to one and ignores shifts") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Graph<double> g;
    auto x = random_tensor(Shape{7, 3}, rng, -20, 20);
    auto shifted = x;
    for (auto& v : shifted.values()) v += 123.5;
    const auto p = softmax(g.input(x)).value();
    const auto q = softmax(g.input(shifted)).value();
    for (std::size_t c = 0; c < 3; ++c) {
      double total = 0;
      for (std::size_t r = 0; r < 7; ++r) {
        total += p.at(r, c);
        CHECK(std::abs(p.at(r, c) - q.at(r, c)) < 1e-6);
      }
      CHECK(std::abs(total - 1) < 1e-6);
    }
  }
}

TEST_CASE("masked softmax gives masked positions exactly zero") {
  Graph<double> g;
  auto x = g.input(Tensor<double>::matrix({{1, 5}, {2, 6}, {3, 7}}));
  auto p = softmax(x, {1, 1, 1, 0, 0, 1}).value();
  CHECK(p.at(1, 1) == 0);
  CHECK(p.at(2, 0) == 0);
  CHECK(p.at(0, 0) + p.at(1, 0) == doctest::Approx(1));
  CHECK(p.at(0, 1) + p.at(2, 1) == doctest::Approx(1));
  CHECK_THROWS_AS(softmax(x, {0, 1, 0, 1, 0, 1}), ContractError);
}

TEST_CASE("cross entropy") {
  Graph<double> g;
  auto uniform = cross_entropy(g.input(Tensor<double>::vector({0.3, 0.3, 0.3, 0.3})), {2});
  CHECK(uniform.value()[0] == doctest::Approx(std::log(4.0)).epsilon(1e-12));

  auto sure = cross_entropy(g.input(Tensor<double>::vector({0, 30, 0})), {1});
  CHECK(sure.value()[0] == doctest::Approx(0).epsilon(1e-10));
  CHECK(sure.value()[0] < 1e-12);

  auto direct = cross_entropy(g.input(Tensor<double>::vector({1, 2, 3})), {0});
  const long double oracle = -(1.0L - std::log(std::exp(1.0L) + std::exp(2.0L) + std::exp(3.0L)));
  CHECK(std::abs(direct.value()[0] - static_cast<double>(oracle)) < 1e-12);

  CHECK_THROWS_AS(cross_entropy(g.input(Tensor<double>::vector({1, 2, 3})), {3}), IndexError);
  CHECK_THROWS_AS(cross_entropy(g.input(Tensor<double>::vector({1, 2, 3})), {-1}), IndexError);
}

TEST_CASE("cross entropy gradient is softmax minus one-hot") {
  Parameter<double> logits("logits", Shape{3});
  logits.value = Tensor<double>::vector({1, 2, 3});
  Graph<double> g;
  auto loss = cross_entropy(g.parameter(logits), {0});
  g.backward(loss);
  const long double z = std::exp(1.0L) + std::exp(2.0L) + std::exp(3.0L);
  for (int i = 0; i < 3; ++i) {
    const double expected = static_cast<double>(std::exp(static_cast<long double>(i + 1)) / z) - (i == 0 ? 1 : 0);
    CHECK(logits.grad[i] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("cross entropy mask drops columns") {
  Graph<double> g;
  auto x = g.input(Tensor<double>::matrix({{0, 5}, {0, 0}}));
  auto all = cross_entropy(x, {0, 1}).value()[0];
  auto first = cross_entropy(x, {0, 1}, {1, 0}).value()[0];
  CHECK(first == doctest::Approx(std::log(2.0)));
  CHECK(all > first);
  CHECK_NOTHROW(cross_entropy(x, {0, 99}, {1, 0}));
}

TEST_CASE("lookup") {
  Parameter<double> table("table", Shape{4, 2});
  table.value = Tensor<double>::matrix({{1, 2}, {3, 4}, {5, 6}, {7, 8}});
  Graph<double> g;
  auto t = g.parameter(table);
  auto row = lookup(t, {3});
  CHECK(row.shape() == Shape{2, 1});
  CHECK(row.value()[0] == 7);
  CHECK(row.value()[1] == 8);
  CHECK_THROWS_AS(lookup(t, {4}), IndexError);
  CHECK_THROWS_AS(lookup(t, {-1}), IndexError);

  // Two uses of the same id accumulate.
  auto u = lookup(t, {1});
  auto w = lookup(t, {1});
  auto loss = sum(add(cmul(u, g.input(Tensor<double>::vector({1, 1}))), cmul(w, g.input(Tensor<double>::vector({2, 3})))));
  g.backward(loss);
  CHECK(table.grad.at(1, 0) == 3);
  CHECK(table.grad.at(1, 1) == 4);
  CHECK(table.grad.at(0, 0) == 0);
  CHECK(table.grad.at(3, 0) == 0);
}

TEST_CASE("lookup gradient of a summed row is a one-hot row of ones") {
  Rng rng(5);
  auto table = random_param("table", Shape{5, 3}, rng);
  const int k = 2;
  auto f = [&](Graph<double>& g) { return sum(lookup(g.parameter(table), {k})); };
  expect_passes(f, {&table});
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 0; c < 3; ++c) CHECK(table.grad.at(r, c) == (r == k ? 1.0 : 0.0));
}

TEST_CASE("backward basics") {
  Rng rng(9);
  auto w = random_param("w", Shape{3, 2}, rng);
  {
    Graph<double> g;
    g.parameter(w);
    auto c = g.input(Tensor<double>::vector({4.0}));
    w.zero_grad();
    g.backward(c);
    for (auto v : w.grad.values()) CHECK(v == 0);
  }
  {
    Graph<double> g;
    auto p = g.parameter(w);
    w.zero_grad();
    g.backward(sum(cmul(p, p)));
    for (std::size_t i = 0; i < w.size(); ++i) CHECK(w.grad[i] == doctest::Approx(2 * w.value[i]));
  }
  {
    Graph<double> g;
    auto p = g.parameter(w);
    CHECK_THROWS_AS(g.backward(p), ContractError);
  }
}

TEST_CASE("a parameter used several times receives the sum of its path gradients") {
  Rng rng(21);
  auto w = random_param("w", Shape{2, 2}, rng);
  auto x = random_tensor(Shape{2, 3}, rng);
  auto loss_of = [&](int uses, int only) {
    Graph<double> g;
    auto xe = g.input(x);
    Expr<double> total;
    for (int k = 0; k < uses; ++k) {
      auto term = weighted_sum(ad::tanh(matmul(k == only || only < 0 ? g.parameter(w) : g.input(w.value), xe)), 100 + k);
      total = total.valid() ? total + term : term;
    }
    w.zero_grad();
    g.backward(total);
    return w.grad;
  };
  const auto combined = loss_of(3, -1);
  Tensor<double> parts(w.value.shape());
  for (int k = 0; k < 3; ++k) {
    auto gk = loss_of(3, k);
    for (std::size_t i = 0; i < parts.size(); ++i) parts[i] += gk[i];
  }
  for (std::size_t i = 0; i < parts.size(); ++i) CHECK(combined[i] == doctest::Approx(parts[i]).epsilon(1e-12));
}

TEST_CASE("evaluation is deterministic") {
  auto run = [] {
    Rng rng(77);
    Graph<float> g;
    auto a = g.input(random_tensor(Shape{8, 8}, rng).cast<float>());
    auto b = g.input(random_tensor(Shape{8, 4}, rng).cast<float>());
    auto y = softmax(ad::tanh(matmul(a, b)));
    return std::vector<float>(y.value().values().begin(), y.value().values().end());
  };
  CHECK(run() == run());
}

TEST_CASE("single sigmoid neuron passes at 1e-6") {
  Rng rng(1);
  auto w = random_param("w", Shape{1, 3}, rng);
  auto b = random_param("b", Shape{1}, rng);
  auto x = random_tensor(Shape{3, 1}, rng);
  expect_passes([&](Graph<double>& g) { return sum(sigmoid(add(matmul(g.parameter(w), g.input(x)), g.parameter(b)))); },
                {&w, &b}, 1e-6);
}

TEST_CASE("every op passes finite differences over ten seeds") {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    CAPTURE(seed);
    Rng rng(seed);
    auto a = random_param("a", Shape{3, 4}, rng);
    auto b = random_param("b", Shape{4, 2}, rng);
    auto c = random_param("c", Shape{3, 4}, rng);
    auto col = random_param("col", Shape{3}, rng);
    auto row = random_param("row", Shape{1, 4}, rng);
    auto table = random_param("table", Shape{6, 3}, rng);
    auto logits = random_param("logits", Shape{5, 3}, rng, -3, 3);

    SUBCASE("matmul") { expect_passes([&](Graph<double>& g) { return weighted_sum(matmul(g.parameter(a), g.parameter(b)), seed); }, {&a, &b}); }
    SUBCASE("add") { expect_passes([&](Graph<double>& g) { return weighted_sum(add(g.parameter(a), g.parameter(c)), seed); }, {&a, &c}); }
    SUBCASE("add broadcast") { expect_passes([&](Graph<double>& g) { return weighted_sum(add(g.parameter(a), g.parameter(col)), seed); }, {&a, &col}); }
    SUBCASE("sub") { expect_passes([&](Graph<double>& g) { return weighted_sum(sub(g.parameter(a), g.parameter(c)), seed); }, {&a, &c}); }
    SUBCASE("cmul") { expect_passes([&](Graph<double>& g) { return weighted_sum(cmul(g.parameter(a), g.parameter(c)), seed); }, {&a, &c}); }
    SUBCASE("mul_columns") { expect_passes([&](Graph<double>& g) { return weighted_sum(mul_columns(g.parameter(a), g.parameter(row)), seed); }, {&a, &row}); }
    SUBCASE("tanh") { expect_passes([&](Graph<double>& g) { return weighted_sum(ad::tanh(g.parameter(a)), seed); }, {&a}); }
    SUBCASE("sigmoid") { expect_passes([&](Graph<double>& g) { return weighted_sum(sigmoid(g.parameter(a)), seed); }, {&a}); }
    SUBCASE("softmax") { expect_passes([&](Graph<double>& g) { return weighted_sum(softmax(g.parameter(logits)), seed); }, {&logits}); }
    SUBCASE("masked softmax") {
      std::vector<std::uint8_t> mask(15, 1);
      mask[3] = mask[7] = mask[14] = 0;
      expect_passes([&](Graph<double>& g) { return weighted_sum(softmax(g.parameter(logits), mask), seed); }, {&logits});
    }
    SUBCASE("cross_entropy") {
      expect_passes([&](Graph<double>& g) { return cross_entropy(g.parameter(logits), {0, 4, 2}, {1, 0, 1}); }, {&logits});
    }
    SUBCASE("lookup") { expect_passes([&](Graph<double>& g) { return weighted_sum(lookup(g.parameter(table), {5, 0, 5, 2}), seed); }, {&table}); }
    SUBCASE("concat_rows") {
      expect_passes([&](Graph<double>& g) {
        const Expr<double> parts[] = {g.parameter(a), g.parameter(c), g.parameter(a)};
        return weighted_sum(concat_rows<double>(parts), seed);
      }, {&a, &c});
    }
    SUBCASE("pick_row") { expect_passes([&](Graph<double>& g) { return weighted_sum(pick_row(g.parameter(a), 1), seed); }, {&a}); }
    SUBCASE("select_columns") {
      expect_passes([&](Graph<double>& g) { return weighted_sum(select_columns({1, 0, 0, 1}, g.parameter(a), g.parameter(c)), seed); }, {&a, &c});
    }
    SUBCASE("sum") { expect_passes([&](Graph<double>& g) { return sum(cmul(g.parameter(a), g.parameter(a))); }, {&a}); }
  }
}

TEST_CASE("a corrupted backward rule is caught at the right coordinate") {
  Rng rng(4);
  auto x = random_param("x", Shape{4}, rng);
  // y = x^2 elementwise, with the gradient of coordinate 2 deliberately wrong.
  auto square = [](Expr<double> in, bool corrupt) {
    Tensor<double> out(in.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = in.value()[i] * in.value()[i];
    return custom<double>({in}, out, [corrupt](std::span<const Tensor<double>* const> inputs, const Tensor<double>&,
                                                const Tensor<double>& gout, std::span<Tensor<double>* const> gin) {
      for (std::size_t i = 0; i < gout.size(); ++i) {
        const double d = 2 * (*inputs[0])[i];
        (*gin[0])[i] += gout[i] * (corrupt && i == 2 ? 1.5 * d : d);
      }
    });
  };
  const auto good = gradient_check([&](Graph<double>& g) { return sum(square(g.parameter(x), false)); }, {&x});
  CHECK(good.passed);
  const auto bad = gradient_check([&](Graph<double>& g) { return sum(square(g.parameter(x), true)); }, {&x});
  CHECK_FALSE(bad.passed);
  CHECK(bad.worst_parameter == "x");
  CHECK(bad.worst_index == 2);
}

TEST_CASE("sampled coordinates") {
  Rng rng(8);
  auto big = random_param("big", Shape{30, 30}, rng);
  GradientCheckOptions opt;
  opt.max_coordinates = 50;
  const auto r = gradient_check([&](Graph<double>& g) { return weighted_sum(ad::tanh(g.parameter(big)), 3); }, {&big}, opt);
  CHECK(r.passed);
  CHECK(r.checked == 200);
}

TEST_CASE("shape parsing") {
  CHECK(Shape::parse("3x4") == Shape{3, 4});
  CHECK(Shape::parse("7") == Shape{7});
  CHECK(Shape{3, 4}.str() == "3x4");
  CHECK_THROWS_AS(Shape::parse("0x2"), DimensionError);
  CHECK_THROWS_AS(Shape::parse("x"), DimensionError);
  CHECK_THROWS_AS(Tensor<double>(Shape{2, 2}, std::vector<double>{1, 2, 3}), DimensionError);
}
