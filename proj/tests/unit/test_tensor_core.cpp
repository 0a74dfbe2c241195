#include <sstream>
#include <vector>

#include "doctest.h"
#include "robustformer/gradcheck.hpp"
#include "robustformer/ops.hpp"
#include "robustformer/rftn.hpp"
#include "robustformer/rng.hpp"
#include "test_util.hpp"

using namespace rf;
using rf::test::max_abs_diff;
using rf::test::random_tensor;

namespace {

TensorD identity(std::size_t n) {
  TensorD m({n, n});
  for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

const std::vector<Shape> kMatrixShapes = {{3, 4}, {5, 2}, {1, 7}};

}  // namespace

TEST_CASE("tensor rejects zero dimensions and mismatched buffers") {
  CHECK_THROWS_AS(TensorD(Shape{2, 0}), ShapeError);
  CHECK_THROWS_AS(TensorD(Shape{2, 2}, std::vector<double>(3)), ShapeError);
  TensorD t({2, 3});
  CHECK(t.size() == 6);
  CHECK_THROWS_AS(t.reshaped({4, 2}), ShapeError);
  CHECK(t.reshaped({3, 2}).shape() == Shape{3, 2});
}

TEST_CASE("check_finite flags NaN and infinity") {
  TensorD t = TensorD::vector({1.0, 2.0});
  CHECK_NOTHROW(check_finite(t, "t"));
  t[1] = std::nan("");
  CHECK_THROWS_AS(check_finite(t, "t"), ContractError);
  t[1] = INFINITY;
  CHECK_THROWS_AS(check_finite(t, "t"), ContractError);
}

TEST_CASE("mode_product with identity leaves every axis unchanged") {
  const TensorD x = random_tensor({3, 4, 5}, 1);
  for (std::size_t axis = 0; axis < 3; ++axis) {
    CHECK(max_abs_diff(mode_product(x, identity(x.dim(axis)), axis), x) == 0.0);
  }
  const TensorD m = random_tensor({2, 4}, 2);
  CHECK(max_abs_diff(mode_product(m, identity(2), 0), m) == 0.0);
}

TEST_CASE("mode_product haar pair sums") {
  const double r = 0.7071;
  const TensorD m = TensorD::matrix({{r, r, 0, 0}, {0, 0, r, r}});
  const TensorD y = mode_product(TensorD::vector({1, 2, 3, 4}), m, 0);
  REQUIRE(y.shape() == Shape{2});
  CHECK(y[0] == doctest::Approx(2.1213).epsilon(1e-3));
  CHECK(y[1] == doctest::Approx(4.9497).epsilon(1e-3));
}

TEST_CASE("mode_product shape contract and mismatch") {
  const TensorD x = random_tensor({3, 4, 5}, 3);
  CHECK(mode_product(x, random_tensor({2, 4}, 4), 1).shape() == Shape{3, 2, 5});
  CHECK_THROWS_AS(mode_product(x, random_tensor({2, 3}, 4), 1), ShapeError);
  CHECK_THROWS_AS(mode_product(x, random_tensor({2, 3}, 4), 7), ShapeError);
}

TEST_CASE("mode products along distinct axes commute") {
  const TensorD x = random_tensor({3, 4, 5}, 5);
  const TensorD a = random_tensor({2, 3}, 6);
  const TensorD b = random_tensor({6, 5}, 7);
  const TensorD ab = mode_product(mode_product(x, a, 0), b, 2);
  const TensorD ba = mode_product(mode_product(x, b, 2), a, 0);
  CHECK(max_abs_diff(ab, ba) <= 1e-10);
}

TEST_CASE("softmax examples") {
  const TensorD u = softmax(TensorD::vector({0, 0, 0}), 0);
  for (double v : u.data()) CHECK(v == doctest::Approx(1.0 / 3.0));
  CHECK(softmax(TensorD::vector({5.0}), 0)[0] == 1.0);
  const TensorD big = softmax(TensorD::vector({1000, 0}), 0);
  CHECK(big.all_finite());
  CHECK(big[0] == doctest::Approx(1.0));
  CHECK(big[1] < 1e-300);
}

TEST_CASE("softmax rows sum to one along the chosen axis") {
  const TensorD x = random_tensor({3, 4, 2}, 8, -5, 5);
  const TensorD y = softmax(x, 1);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < 2; ++k) {
      double s = 0;
      for (std::size_t j = 0; j < 4; ++j) s += y.at(i, j, k);
      CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("check_gradient requires a backward") {
  DifferentiableOp<double> op{"no-backward", [](const TensorD& x) { return x; }, nullptr};
  CHECK_THROWS_AS(check_gradient(op, TensorD::vector({1.0}), 1e-5), ContractError);
}

TEST_CASE("check_gradient on a linear map is exact") {
  const TensorD m = random_tensor({3, 4}, 9);
  DifferentiableOp<double> op{
      "matvec", [&](const TensorD& x) { return mode_product(x, m, 0); },
      [&](const TensorD&, const TensorD& g) { return mode_product(g, transpose(m), 0); }};
  CHECK(check_gradient(op, random_tensor({4}, 10), 1e-5) <= 1e-7);
}

TEST_CASE("gradient checks: softmax") {
  for (std::size_t axis : {0u, 1u}) {
    for (const Shape& s : kMatrixShapes) {
      DifferentiableOp<double> op{
          "softmax", [&](const TensorD& x) { return softmax(x, axis); },
          [&](const TensorD& x, const TensorD& g) { return softmax_backward(softmax(x, axis), g, axis); }};
      CHECK(check_gradient(op, random_tensor(s, 11, -2, 2), 1e-5) <= 1e-6);
    }
  }
}

TEST_CASE("gradient checks: mode_product") {
  for (std::size_t axis = 0; axis < 3; ++axis) {
    const Shape s{3, 4, 2};
    const TensorD m = random_tensor({5, s[axis]}, 12 + axis);
    DifferentiableOp<double> op{
        "mode_product", [&](const TensorD& x) { return mode_product(x, m, axis); },
        [&](const TensorD&, const TensorD& g) { return mode_product_backward(g, m, axis); }};
    CHECK(check_gradient(op, random_tensor(s, 13), 1e-5) <= 1e-5);
  }
}

TEST_CASE("gradient checks: matmul variants") {
  for (const Shape& s : kMatrixShapes) {
    const TensorD b = random_tensor({s[1], 3}, 14);
    const TensorD bt = transpose(b);
    DifferentiableOp<double> mm{
        "matmul", [&](const TensorD& x) { return matmul(x, b); },
        [&](const TensorD&, const TensorD& g) { return matmul_nt(g, b); }};
    CHECK(check_gradient(mm, random_tensor(s, 15), 1e-5) <= 1e-5);
    DifferentiableOp<double> nt{
        "matmul_nt", [&](const TensorD& x) { return matmul_nt(x, bt); },
        [&](const TensorD&, const TensorD& g) { return matmul(g, bt); }};
    CHECK(check_gradient(nt, random_tensor(s, 16), 1e-5) <= 1e-5);
    const TensorD a = random_tensor({s[0], 2}, 17);
    DifferentiableOp<double> tn{
        "matmul_tn", [&](const TensorD& x) { return matmul_tn(a, x); },
        [&](const TensorD&, const TensorD& g) { return matmul(a, g); }};
    CHECK(check_gradient(tn, random_tensor(s, 18), 1e-5) <= 1e-5);
  }
}

TEST_CASE("gradient checks: linear") {
  for (const Shape& s : kMatrixShapes) {
    const TensorD w = random_tensor({s[1], 3}, 19);
    const TensorD b = random_tensor({3}, 20);
    const TensorD x0 = random_tensor(s, 21);
    DifferentiableOp<double> dx{
        "linear/x", [&](const TensorD& x) { return linear(x, w, b); },
        [&](const TensorD& x, const TensorD& g) {
          TensorD dw(w.shape()), db(b.shape());
          return linear_backward(x, w, g, dw, db);
        }};
    CHECK(check_gradient(dx, x0, 1e-5) <= 1e-5);
    DifferentiableOp<double> dw{
        "linear/w", [&](const TensorD& wv) { return linear(x0, wv, b); },
        [&](const TensorD& wv, const TensorD& g) {
          TensorD gw(wv.shape()), gb(b.shape());
          linear_backward(x0, wv, g, gw, gb);
          return gw;
        }};
    CHECK(check_gradient(dw, w, 1e-5) <= 1e-5);
    DifferentiableOp<double> dbias{
        "linear/b", [&](const TensorD& bv) { return linear(x0, w, bv); },
        [&](const TensorD& bv, const TensorD& g) {
          TensorD gw(w.shape()), gb(bv.shape());
          linear_backward(x0, w, g, gw, gb);
          return gb;
        }};
    CHECK(check_gradient(dbias, b, 1e-5) <= 1e-5);
  }
}

TEST_CASE("gradient checks: layer_norm") {
  for (const Shape& s : std::vector<Shape>{{3, 4}, {5, 6}, {2, 9}}) {
    const TensorD gamma = random_tensor({s[1]}, 22, 0.5, 1.5);
    const TensorD beta = random_tensor({s[1]}, 23);
    const TensorD x0 = random_tensor(s, 24, -2, 2);
    DifferentiableOp<double> dx{
        "layer_norm/x", [&](const TensorD& x) { return layer_norm<double>(x, gamma, beta, nullptr); },
        [&](const TensorD& x, const TensorD& g) {
          LayerNormCache<double> cache;
          layer_norm(x, gamma, beta, &cache);
          TensorD dg(gamma.shape()), db(beta.shape());
          return layer_norm_backward(g, gamma, cache, dg, db);
        }};
    CHECK(check_gradient(dx, x0, 1e-5) <= 1e-5);
    DifferentiableOp<double> dgamma{
        "layer_norm/gamma", [&](const TensorD& gm) { return layer_norm<double>(x0, gm, beta, nullptr); },
        [&](const TensorD& gm, const TensorD& g) {
          LayerNormCache<double> cache;
          layer_norm(x0, gm, beta, &cache);
          TensorD dg(gm.shape()), db(beta.shape());
          layer_norm_backward(g, gm, cache, dg, db);
          return dg;
        }};
    CHECK(check_gradient(dgamma, gamma, 1e-5) <= 1e-5);
    DifferentiableOp<double> dbeta{
        "layer_norm/beta", [&](const TensorD& bt) { return layer_norm<double>(x0, gamma, bt, nullptr); },
        [&](const TensorD& bt, const TensorD& g) {
          LayerNormCache<double> cache;
          layer_norm(x0, gamma, bt, &cache);
          TensorD dg(gamma.shape()), db(bt.shape());
          layer_norm_backward(g, gamma, cache, dg, db);
          return db;
        }};
    CHECK(check_gradient(dbeta, beta, 1e-5) <= 1e-5);
  }
}

TEST_CASE("gradient checks: gelu, mean, variance") {
  for (const Shape& s : std::vector<Shape>{{3, 4}, {5}, {2, 3, 2}}) {
    DifferentiableOp<double> g{
        "gelu", [](const TensorD& x) { return gelu(x); },
        [](const TensorD& x, const TensorD& up) { return gelu_backward(x, up); }};
    CHECK(check_gradient(g, random_tensor(s, 25, -3, 3), 1e-5) <= 1e-5);
    for (std::size_t axis = 0; axis < s.size(); ++axis) {
      DifferentiableOp<double> m{
          "mean", [&](const TensorD& x) { return mean(x, axis); },
          [&](const TensorD& x, const TensorD& up) { return mean_backward(x.shape(), up, axis); }};
      CHECK(check_gradient(m, random_tensor(s, 26), 1e-5) <= 1e-5);
      DifferentiableOp<double> v{
          "variance", [&](const TensorD& x) { return variance(x, axis); },
          [&](const TensorD& x, const TensorD& up) { return variance_backward(x, up, axis); }};
      CHECK(check_gradient(v, random_tensor(s, 27), 1e-5) <= 1e-5);
    }
  }
}

TEST_CASE("gradient checks: gather_rows and elementwise ops") {
  const std::vector<std::size_t> rows{2, 0, 3};
  for (const Shape& s : std::vector<Shape>{{4, 3}, {5, 1}, {4, 6}}) {
    DifferentiableOp<double> g{
        "gather_rows", [&](const TensorD& x) { return gather_rows<double>(x, rows); },
        [&](const TensorD& x, const TensorD& up) {
          TensorD dx(x.shape());
          scatter_add_rows<double>(dx, up, rows);
          return dx;
        }};
    CHECK(check_gradient(g, random_tensor(s, 28), 1e-5) <= 1e-5);
    const TensorD other = random_tensor(s, 29);
    DifferentiableOp<double> h{
        "hadamard", [&](const TensorD& x) { return hadamard(x, other); },
        [&](const TensorD&, const TensorD& up) { return hadamard(up, other); }};
    CHECK(check_gradient(h, random_tensor(s, 30), 1e-5) <= 1e-5);
    DifferentiableOp<double> t{
        "transpose", [](const TensorD& x) { return transpose(x); },
        [](const TensorD&, const TensorD& up) { return transpose(up); }};
    CHECK(check_gradient(t, random_tensor(s, 31), 1e-5) <= 1e-5);
  }
}

TEST_CASE("gradient checks: cross_entropy and mse") {
  for (const Shape& s : kMatrixShapes) {
    std::vector<int> labels(s[0]);
    for (std::size_t i = 0; i < s[0]; ++i) labels[i] = static_cast<int>((i * 3) % s[1]);
    DifferentiableOp<double> ce{
        "cross_entropy",
        [&](const TensorD& x) { return TensorD::scalar(cross_entropy<double>(x, labels, nullptr)); },
        [&](const TensorD& x, const TensorD& up) {
          TensorD g;
          cross_entropy<double>(x, labels, &g);
          return scale(g, up[0]);
        }};
    CHECK(check_gradient(ce, random_tensor(s, 32, -3, 3), 1e-5) <= 1e-5);
    const TensorD target = random_tensor(s, 33);
    DifferentiableOp<double> m{
        "mse", [&](const TensorD& x) { return TensorD::scalar(mse<double>(x, target, nullptr)); },
        [&](const TensorD& x, const TensorD& up) {
          TensorD g;
          mse<double>(x, target, &g);
          return scale(g, up[0]);
        }};
    CHECK(check_gradient(m, random_tensor(s, 34), 1e-5) <= 1e-5);
  }
}

TEST_CASE("cross_entropy of uniform logits is log(classes)") {
  const TensorD logits({4, 5});
  const std::vector<int> labels{0, 1, 2, 4};
  CHECK(cross_entropy<double>(logits, labels, nullptr) == doctest::Approx(std::log(5.0)));
  const std::vector<int> bad{0, 1, 2, 5};
  CHECK_THROWS(cross_entropy<double>(logits, bad, nullptr));
}

TEST_CASE("rng streams are deterministic and distinct") {
  Rng a(42, "purpose"), b(42, "purpose"), c(42, "other"), d(43, "purpose");
  std::vector<std::uint64_t> va, vb, vc, vd;
  for (int i = 0; i < 16; ++i) {
    va.push_back(a.next_u64());
    vb.push_back(b.next_u64());
    vc.push_back(c.next_u64());
    vd.push_back(d.next_u64());
  }
  CHECK(va == vb);
  CHECK(va != vc);
  CHECK(va != vd);
  CHECK(random_tensor<double>({3, 3}, 7) == random_tensor<double>({3, 3}, 7));
  CHECK(Rng(1, "x").fork("y").next_u64() == Rng(1, "x").fork("y").next_u64());
  CHECK(Rng(1, "x").fork("y").next_u64() != Rng(1, "x").fork("z").next_u64());
}

TEST_CASE("rng helpers stay in range") {
  Rng rng(5, "range");
  double sum = 0;
  for (int i = 0; i < 4000; ++i) {
    const double u = rng.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    CHECK(rng.below(7) < 7);
    const double t = rng.truncated_normal(1.0, 2.0);
    CHECK(std::abs(t) <= 2.0);
    sum += rng.normal();
  }
  CHECK(std::abs(sum / 4000) < 0.1);
  std::vector<int> perm{0, 1, 2, 3, 4, 5};
  rng.shuffle(perm.begin(), perm.end());
  std::vector<int> sorted = perm;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>{0, 1, 2, 3, 4, 5});
}

TEST_CASE("rftn layout and round trip") {
  const TensorF small = TensorF::vector({1.5f, -2.0f});
  std::ostringstream out;
  write_rftn(out, small);
  const std::string bytes = out.str();
  REQUIRE(bytes.size() == 23);
  CHECK(rftn_encoded_size({2}, DType::float32) == 23);
  CHECK(bytes.substr(0, 4) == "RFTN");
  CHECK(bytes[4] == 1);
  CHECK(bytes[5] == 0);
  CHECK(bytes[6] == 1);
  CHECK(static_cast<unsigned char>(bytes[7]) == 2);
  for (int i = 8; i < 15; ++i) CHECK(bytes[static_cast<std::size_t>(i)] == 0);

  std::istringstream in(bytes);
  CHECK(std::get<TensorF>(read_rftn(in)) == small);

  const TensorD big = random_tensor({2, 3, 4}, 35);
  std::ostringstream out64;
  write_rftn(out64, big);
  std::istringstream in64(out64.str());
  CHECK(std::get<TensorD>(read_rftn(in64)) == big);
}

TEST_CASE("rftn rejects malformed input") {
  std::istringstream magic(std::string("RFTX\x01\x00\x01", 7));
  CHECK_THROWS_AS(read_rftn(magic), FormatError);
  std::ostringstream out;
  write_rftn(out, TensorF::vector({1.0f, 2.0f}));
  std::string truncated = out.str().substr(0, 20);
  std::istringstream cut(truncated);
  CHECK_THROWS_AS(read_rftn(cut), FormatError);
  std::string version = out.str();
  version[4] = 9;
  std::istringstream bad_version(version);
  CHECK_THROWS_AS(read_rftn(bad_version), FormatError);
}
