#include "doctest.h"

#include <cmath>

#include "emorec/autodiff.hpp"
#include "emorec/gradcheck.hpp"
#include "emorec/layers.hpp"
#include "emorec/rng.hpp"
#include "test_util.hpp"

using namespace emorec;
using namespace emorec::nn;

namespace {

Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0,
                     double hi = 1.0) {
  Tensor t = Tensor::zeros(std::move(shape));
  for (double& x : t.v) x = rng.uniform(lo, hi);
  return t;
}

}  // namespace

TEST_CASE("relu forward") {
  auto x = constant(Tensor({3}, {-1.0, 0.0, 2.0}));
  auto y = relu(x);
  CHECK(y->value.v == std::vector<double>{0.0, 0.0, 2.0});
}

TEST_CASE("conv2d shape arithmetic") {
  Rng rng(1);
  // 3x3 stride-1 same-padding on 1x48x48 with 32 output channels.
  Conv2d conv("c", 1, 32, 3, rng);
  auto y = conv.apply(constant(random_tensor({1, 48, 48}, rng)));
  CHECK(y->value.shape == std::vector<int>{32, 48, 48});

  // Shape mismatch reports expected vs actual extents.
  try {
    (void)conv.apply(constant(random_tensor({2, 48, 48}, rng)));
    FAIL("expected ShapeError");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("1") != std::string::npos);
    CHECK(msg.find("2") != std::string::npos);
  }
}

TEST_CASE("conv2d matches a direct dot product on a known kernel") {
  // 1x3x3 input, identity-ish kernel: output center = weighted sum.
  auto x = constant(Tensor({1, 3, 3}, {1, 2, 3, 4, 5, 6, 7, 8, 9}));
  auto w = parameter(Tensor({1, 1, 3, 3}, {0, 0, 0, 0, 2, 0, 0, 0, 0}), "w");
  auto b = parameter(Tensor({1}, {0.5}), "b");
  auto y = conv2d(x, w, b);
  // Doubling kernel: every output is 2*input + 0.5 (padding contributes 0).
  for (int i = 0; i < 9; ++i) {
    CHECK(y->value.v[static_cast<size_t>(i)] ==
          doctest::Approx(2.0 * (i + 1) + 0.5));
  }
}

TEST_CASE("maxpool2d shape and indices") {
  Rng rng(2);
  auto x = constant(random_tensor({32, 48, 48}, rng));
  auto pooled = maxpool2d(x, 2, 2);
  CHECK(pooled.out->value.shape == std::vector<int>{32, 24, 24});
  CHECK(pooled.indices->argmax.size() == 32u * 24 * 24);
  CHECK(pooled.indices->input_shape == std::vector<int>{32, 48, 48});

  // Odd extents are covered with clipped windows.
  auto odd = maxpool2d(constant(random_tensor({1, 7, 7}, rng)), 2, 2);
  CHECK(odd.out->value.shape == std::vector<int>{1, 4, 4});

  // Stride-1 pooling keeps the spatial size.
  auto same = maxpool2d(constant(random_tensor({4, 12, 12}, rng)), 2, 1);
  CHECK(same.out->value.shape == std::vector<int>{4, 12, 12});
}

TEST_CASE("unpool places values at memorized positions") {
  auto x = constant(Tensor({1, 2, 2}, {1, 2, 3, 4}));
  auto pooled = maxpool2d(x, 2, 2);
  CHECK(pooled.out->value.v == std::vector<double>{4.0});

  auto y = unpool2d(constant(Tensor({1, 1, 1}, {7.0})), pooled.indices);
  CHECK(y->value.shape == std::vector<int>{1, 2, 2});
  CHECK(y->value.v == std::vector<double>{0, 0, 0, 7});

  // Zero input unpools to a zero tensor of the pre-pool shape.
  auto z = unpool2d(constant(Tensor::zeros({1, 1, 1})), pooled.indices);
  CHECK(z->value.v == std::vector<double>{0, 0, 0, 0});

  // Mismatched record.
  CHECK_THROWS_AS(unpool2d(constant(Tensor::zeros({1, 2, 2})), pooled.indices),
                  ShapeError);
}

TEST_CASE("pool-unpool nonzeros sit at window maxima") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor t = random_tensor({1, 4, 4}, rng);
    auto x = constant(t);
    auto pooled = maxpool2d(x, 2, 2);
    auto back = unpool2d(pooled.out, pooled.indices);

    // Direct argmax oracle: per 2x2 window, the maximum position.
    for (int wy = 0; wy < 2; ++wy) {
      for (int wx = 0; wx < 2; ++wx) {
        double best = -1e300;
        int best_at = -1;
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const int at = (2 * wy + dy) * 4 + (2 * wx + dx);
            if (t.v[static_cast<size_t>(at)] > best) {
              best = t.v[static_cast<size_t>(at)];
              best_at = at;
            }
          }
        }
        for (int dy = 0; dy < 2; ++dy) {
          for (int dx = 0; dx < 2; ++dx) {
            const int at = (2 * wy + dy) * 4 + (2 * wx + dx);
            if (at == best_at) {
              CHECK(back->value.v[static_cast<size_t>(at)] == best);
            } else {
              CHECK(back->value.v[static_cast<size_t>(at)] == 0.0);
            }
          }
        }
      }
    }
  }
}

TEST_CASE("maxpool3d covers the gait pooling schedule") {
  Rng rng(4);
  auto x = constant(random_tensor({2, 16, 8, 8}, rng));
  auto p1 = maxpool3d(x, 1, 2, 2);
  CHECK(p1.out->value.shape == std::vector<int>{2, 16, 4, 4});
  auto p2 = maxpool3d(p1.out, 2, 2, 2);
  CHECK(p2.out->value.shape == std::vector<int>{2, 8, 2, 2});
}

TEST_CASE("softmax sums to one and shifts cancel") {
  Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    Tensor logits = random_tensor({7}, rng, -4.0, 4.0);
    auto p = softmax(constant(logits));
    double sum = 0.0;
    for (double x : p->value.v) sum += x;
    CHECK_NEAR(sum, 1.0, 1e-6);

    Tensor shifted = logits;
    const double c = rng.uniform(-10.0, 10.0);
    for (double& x : shifted.v) x += c;
    auto q = softmax(constant(shifted));
    for (size_t i = 0; i < p->value.v.size(); ++i) {
      CHECK_NEAR(p->value.v[i], q->value.v[i], 1e-6);
    }
  }
}

TEST_CASE("cross entropy of a one-hot prediction against itself") {
  auto probs = constant(Tensor({4}, {0.0, 0.0, 1.0, 0.0}));
  auto ce = cross_entropy(probs, 2);
  CHECK(ce->value.v[0] < 1e-6);
  CHECK(ce->value.v[0] >= 0.0);
  CHECK_THROWS_AS(cross_entropy(probs, 4), InvalidInputError);
}

TEST_CASE("forward passes stay finite under random weights") {
  Rng rng(6);
  for (int trial = 0; trial < 10; ++trial) {
    auto x = constant(random_tensor({2, 10, 10}, rng));
    auto w = parameter(random_tensor({3, 2, 3, 3}, rng), "w");
    auto b = parameter(random_tensor({3}, rng), "b");
    auto y = maxpool2d(relu(conv2d(x, w, b)), 2, 2).out;
    auto z = sigmoid(tanh_op(flatten(y)));
    CHECK_NOTHROW(z->value.require_finite("forward"));

    auto x3 = constant(random_tensor({1, 4, 6, 6}, rng));
    auto w3 = parameter(random_tensor({2, 1, 3, 3, 3}, rng), "w3");
    auto b3 = parameter(random_tensor({2}, rng), "b3");
    auto y3 = maxpool3d(relu(conv3d(x3, w3, b3)), 2, 2, 2).out;
    CHECK_NOTHROW(y3->value.require_finite("conv3d forward"));

    LstmStack stack("s", 2, 5, 4, rng);
    std::vector<NodeRef> seq;
    for (int t = 0; t < 4; ++t) seq.push_back(constant(random_tensor({5}, rng)));
    CHECK_NOTHROW(stack.apply(seq)->value.require_finite("lstm forward"));
  }
}

TEST_CASE("broadcast_mul insists on a covering single-channel map") {
  Rng rng(60);
  auto x = constant(random_tensor({3, 5, 5}, rng));
  auto good = constant(random_tensor({1, 5, 5}, rng));
  CHECK_NOTHROW(broadcast_mul(good, x));
  auto two_channel = constant(random_tensor({2, 5, 5}, rng));
  CHECK_THROWS_AS(broadcast_mul(two_channel, x), ShapeError);
  auto wrong_extent = constant(random_tensor({1, 4, 5}, rng));
  CHECK_THROWS_AS(broadcast_mul(wrong_extent, x), ShapeError);
}

TEST_CASE("affine matches manual matrix-vector product") {
  auto w = parameter(Tensor({2, 3}, {1, 2, 3, 4, 5, 6}), "w");
  auto b = parameter(Tensor({2}, {0.5, -0.5}), "b");
  auto x = constant(Tensor({3}, {1, 0, -1}));
  auto y = affine(w, b, x);
  CHECK(y->value.v[0] == doctest::Approx(1 - 3 + 0.5));
  CHECK(y->value.v[1] == doctest::Approx(4 - 6 - 0.5));
}

TEST_CASE("lstm stack basics") {
  Rng rng(7);
  SUBCASE("zero weights and biases freeze the hidden state at zero") {
    LstmStack stack("l", 4, 6, 5, rng);
    for (const auto& p : stack.parameters()) {
      std::fill(p.node->value.v.begin(), p.node->value.v.end(), 0.0);
    }
    std::vector<NodeRef> seq;
    for (int t = 0; t < 9; ++t) seq.push_back(constant(random_tensor({6}, rng)));
    auto h = stack.apply(seq);
    for (double x : h->value.v) CHECK(x == 0.0);
  }

  SUBCASE("hidden size sets the output length") {
    LstmStack stack("l", 4, 1024, 128, rng);
    auto h = stack.apply({constant(random_tensor({1024}, rng))});
    CHECK(h->value.shape == std::vector<int>{128});
  }

  SUBCASE("empty sequence is rejected") {
    LstmStack stack("l", 2, 4, 4, rng);
    CHECK_THROWS_AS(stack.apply({}), InvalidInputError);
  }

  SUBCASE("length-1 sequence equals a hand-computed single cell") {
    LstmCell cell("cell", 3, 2, rng);
    const auto params = cell.parameters();  // w_ih, w_hh, bias
    const auto& w_ih = params[0].node->value.v;  // [8 x 3]
    const auto& bias = params[2].node->value.v;  // [8]
    const Tensor xt = random_tensor({3}, rng);

    // Cell equations evaluated directly (h0 = c0 = 0 so w_hh drops out).
    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    double gates[8];
    for (int g = 0; g < 8; ++g) {
      double acc = bias[static_cast<size_t>(g)];
      for (int i = 0; i < 3; ++i) acc += w_ih[static_cast<size_t>(g * 3 + i)] * xt.v[static_cast<size_t>(i)];
      gates[g] = acc;
    }
    double expected[2];
    for (int u = 0; u < 2; ++u) {
      const double in_g = sig(gates[u]);
      const double cell_g = std::tanh(gates[4 + u]);
      const double out_g = sig(gates[6 + u]);
      const double c = in_g * cell_g;
      expected[u] = out_g * std::tanh(c);
    }

    auto state = cell.step(constant(xt), cell.initial_state());
    CHECK_NEAR(state.h->value.v[0], expected[0], 1e-12);
    CHECK_NEAR(state.h->value.v[1], expected[1], 1e-12);
  }
}

TEST_CASE("gradient check: dense + softmax + cross entropy") {
  Rng rng(8);
  Dense fc("fc", 6, 4, rng);
  const Tensor input = random_tensor({6}, rng);
  auto build = [&]() {
    return cross_entropy(softmax(fc.apply(constant(input))), 1);
  };
  const double err = grad_check(build, param_nodes(fc.parameters()), {});
  CHECK(err < 1e-5);
}

TEST_CASE("gradient check: identity-initialized relu chain") {
  Rng rng(9);
  Dense fc1("fc1", 4, 4, rng);
  Dense fc2("fc2", 4, 4, rng);
  for (const auto* d : {&fc1, &fc2}) {
    auto params = d->parameters();
    auto& w = params[0].node->value.v;
    std::fill(w.begin(), w.end(), 0.0);
    for (int i = 0; i < 4; ++i) w[static_cast<size_t>(i * 4 + i)] = 1.0;
  }
  const Tensor input = Tensor({4}, {0.3, 1.2, 0.7, 2.1});  // strictly positive
  auto build = [&]() {
    auto h = relu(fc1.apply(constant(input)));
    return cross_entropy(softmax(fc2.apply(h)), 2);
  };
  std::vector<NodeRef> params = param_nodes(fc1.parameters());
  for (auto& p : param_nodes(fc2.parameters())) params.push_back(p);
  const double err = grad_check(build, params, {});
  CHECK(err < 1e-5);
}

TEST_CASE("gradient check: conv, pooling, unpooling and gating") {
  Rng rng(10);
  Conv2d conv("conv", 1, 2, 3, rng);
  Conv2d deconv("deconv", 2, 1, 3, rng);
  const Tensor input = random_tensor({1, 6, 6}, rng);
  auto build = [&]() {
    auto t = relu(conv.apply(constant(input)));
    auto pooled = maxpool2d(t, 2, 2);
    auto up = unpool2d(pooled.out, pooled.indices);
    auto att = sigmoid(deconv.apply(up));
    auto gated = broadcast_mul(att, t);
    return cross_entropy(softmax(slice(flatten(gated), 0, 5)), 3);
  };
  std::vector<NodeRef> params = param_nodes(conv.parameters());
  for (auto& p : param_nodes(deconv.parameters())) params.push_back(p);
  const double err = grad_check(build, params, {});
  CHECK(err < 1e-4);
}

TEST_CASE("gradient check: lstm stack through time") {
  Rng rng(11);
  LstmStack stack("l", 2, 3, 4, rng);
  Dense out("out", 4, 3, rng);
  std::vector<Tensor> inputs;
  for (int t = 0; t < 5; ++t) inputs.push_back(random_tensor({3}, rng));
  auto build = [&]() {
    std::vector<NodeRef> seq;
    for (const auto& x : inputs) seq.push_back(constant(x));
    return cross_entropy(softmax(out.apply(stack.apply(seq))), 0);
  };
  std::vector<NodeRef> params = param_nodes(stack.parameters());
  for (auto& p : param_nodes(out.parameters())) params.push_back(p);
  const double err = grad_check(build, params, {});
  CHECK(err < 1e-4);
}

TEST_CASE("gradient check rejects an empty parameter set") {
  auto build = [] { return constant(Tensor::scalar(1.0)); };
  CHECK_THROWS_AS(grad_check(build, {}, {}), InvalidInputError);
}

TEST_CASE("orthogonal init yields orthonormal rows") {
  Rng rng(12);
  const Tensor q = orthogonal(5, 5, rng);
  for (int r1 = 0; r1 < 5; ++r1) {
    for (int r2 = 0; r2 < 5; ++r2) {
      double dot = 0.0;
      for (int c = 0; c < 5; ++c) {
        dot += q.v[static_cast<size_t>(r1 * 5 + c)] * q.v[static_cast<size_t>(r2 * 5 + c)];
      }
      CHECK_NEAR(dot, r1 == r2 ? 1.0 : 0.0, 1e-9);
    }
  }
}

TEST_CASE("backward accumulates into shared parameters") {
  // y = w*x + w*x reuses w twice; dy/dw = 2x.
  auto w = parameter(Tensor({1}, {1.5}), "w");
  auto x = constant(Tensor({1}, {3.0}));
  auto y = add(mul(w, x), mul(w, x));
  zero_grads({w});
  backward(y);
  CHECK(w->grad().v[0] == doctest::Approx(6.0));
}
