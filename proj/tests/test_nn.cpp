#include <catch2/catch_amalgamated.hpp>

#include "lodgepp/core/rng.hpp"
#include "lodgepp/nn/adam.hpp"
#include "lodgepp/nn/gradcheck.hpp"
#include "lodgepp/nn/graph.hpp"

using namespace lodgepp;
using namespace lodgepp::nn;

namespace {

Mat randn(Rng& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  return rng.gaussian_matrix(r, c) * scale;
}

}  // namespace

TEST_CASE("elementwise and matmul gradients match finite differences") {
  Rng rng(1);
  Param a(randn(rng, 3, 4));
  Param b(randn(rng, 4, 5));
  Param c(randn(rng, 3, 5));
  std::vector<Param*> params{&a, &b, &c};
  auto run = [&]() {
    Graph g;
    Var va = g.param(a), vb = g.param(b), vc = g.param(c);
    Var prod = g.matmul(va, vb);
    Var mixed = g.add(g.mul(prod, vc), g.scale(vc, 0.3));
    Var loss = g.mean_all(g.mul(mixed, mixed));
    g.backward(loss);
    return g.value(loss)(0, 0);
  };
  Rng pick(2);
  auto report = check_parameter_gradients(params, run, pick, 30);
  CHECK(report.rel_error < 1e-6);
}

TEST_CASE("activation gradients match finite differences") {
  Rng rng(3);
  Param w(randn(rng, 4, 4));
  Param x(randn(rng, 5, 4));
  std::vector<Param*> params{&w, &x};
  for (int act = 0; act < 3; ++act) {
    auto run = [&, act]() {
      Graph g;
      Var h = g.matmul(g.param(x), g.param(w));
      Var y = act == 0 ? g.gelu(h) : act == 1 ? g.sigmoid(h) : g.relu(h);
      Var loss = g.mean_all(g.mul(y, y));
      g.backward(loss);
      return g.value(loss)(0, 0);
    };
    Rng pick(4 + act);
    auto report = check_parameter_gradients(params, run, pick, 20);
    CHECK(report.rel_error < 1e-5);
  }
}

TEST_CASE("softmax, layernorm and cross entropy gradients") {
  Rng rng(5);
  Param w(randn(rng, 6, 7));
  Param x(randn(rng, 4, 6));
  std::vector<int> targets{2, 0, 6, 3};
  std::vector<Param*> params{&w, &x};
  auto run = [&]() {
    Graph g;
    Var h = g.layernorm_rows(g.matmul(g.param(x), g.param(w)));
    Var sm = g.softmax_rows(h);
    Var ce = g.cross_entropy_rows(h, targets);
    Var loss = g.add(ce, g.mean_all(g.mul(sm, sm)));
    g.backward(loss);
    return g.value(loss)(0, 0);
  };
  Rng pick(6);
  auto report = check_parameter_gradients(params, run, pick, 30);
  CHECK(report.rel_error < 1e-5);
}

TEST_CASE("broadcast, slicing, concat and gather gradients") {
  Rng rng(7);
  Param table(randn(rng, 9, 5));
  Param bias(randn(rng, 1, 5));
  Param gain(randn(rng, 1, 5));
  std::vector<int> ids{3, 1, 8, 1};
  std::vector<Param*> params{&table, &bias, &gain};
  auto run = [&]() {
    Graph g;
    Var e = g.gather_rows(g.param(table), ids);
    Var h = g.mul_row_broadcast(g.add_row_broadcast(e, g.param(bias)),
                                g.param(gain));
    Var left = g.slice_cols(h, 0, 2);
    Var right = g.slice_cols(h, 2, 3);
    Var joined = g.concat_cols({right, left});
    Var stacked = g.concat_rows({g.slice_rows(joined, 0, 2),
                                 g.slice_rows(joined, 2, 2)});
    Var loss = g.mse(stacked, g.constant(Mat::Zero(4, 5)));
    g.backward(loss);
    return g.value(loss)(0, 0);
  };
  Rng pick(8);
  auto report = check_parameter_gradients(params, run, pick, 30);
  CHECK(report.rel_error < 1e-6);
}

TEST_CASE("vector geometry node gradients") {
  Rng rng(9);
  Param a(randn(rng, 3, 1));
  Param b(randn(rng, 3, 1));
  std::vector<Param*> params{&a, &b};
  auto run = [&]() {
    Graph g;
    Var va = g.param(a), vb = g.param(b);
    Var n = normalize3(g, va);
    Var c = g.cross3(n, vb);
    Var d = g.dot(c, vb);
    Var mixed = g.add(g.scale_by_scalar(c, d), g.sqrt_elem(g.mul(vb, vb)));
    Var loss = g.mean_all(g.mul(mixed, mixed));
    g.backward(loss);
    return g.value(loss)(0, 0);
  };
  Rng pick(10);
  auto report = check_parameter_gradients(params, run, pick, 24);
  CHECK(report.rel_error < 1e-6);
}

TEST_CASE("transpose and sum gradients") {
  Rng rng(11);
  Param x(randn(rng, 3, 5));
  std::vector<Param*> params{&x};
  auto run = [&]() {
    Graph g;
    Var t = g.transpose(g.param(x));
    Var loss = g.sum_all(g.mul(t, t));
    g.backward(loss);
    return g.value(loss)(0, 0);
  };
  Rng pick(12);
  auto report = check_parameter_gradients(params, run, pick, 15);
  CHECK(report.rel_error < 1e-6);
}

TEST_CASE("adam reduces a quadratic objective") {
  Rng rng(13);
  Param x(randn(rng, 4, 4));
  Mat target = randn(rng, 4, 4);
  Adam opt({&x}, 0.05);
  double first = 0.0, last = 0.0;
  for (int step = 0; step < 200; ++step) {
    opt.zero_grad();
    Graph g;
    Var loss = g.mse(g.param(x), g.constant(target));
    g.backward(loss);
    if (step == 0) first = g.value(loss)(0, 0);
    last = g.value(loss)(0, 0);
    opt.step();
  }
  CHECK(last < first * 1e-3);
}

TEST_CASE("backward rejects non-scalar losses") {
  Graph g;
  Param x(Mat::Ones(2, 2));
  Var v = g.param(x);
  CHECK_THROWS_AS(g.backward(v), ShapeMismatch);
}
