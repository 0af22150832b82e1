#include <doctest.h>

#include <cmath>
#include <random>

#include "flowhawk/nn/layers.hpp"
#include "flowhawk/nn/loss.hpp"
#include "flowhawk/nn/optimizer.hpp"
#include "support/gradcheck.hpp"
#include "support/tensor_util.hpp"

using namespace flowhawk::nn;
using testsupport::dot;
using testsupport::max_abs_diff;
using testsupport::random_tensor;

namespace {

// Naive O(T*k) depthwise + pointwise + ReLU reference, independent of the
// layer implementation.
Tensor3<double> dsc_reference(const Tensor3<double>& x, const Mat<double>& depthwise,
                              const Mat<double>& pointwise, const Mat<double>& bias) {
  const Index T = x.timesteps(), B = x.batch();
  const Index cin = x.channels(), cout = pointwise.cols(), k = depthwise.rows();
  const Index half = k / 2;
  Tensor3<double> y(B, T, cout);
  for (Index b = 0; b < B; ++b) {
    for (Index t = 0; t < T; ++t) {
      std::vector<double> mid(static_cast<size_t>(cin), 0.0);
      for (Index c = 0; c < cin; ++c)
        for (Index u = 0; u < k; ++u) {
          const Index s = t + u - half;
          if (s >= 0 && s < T) mid[static_cast<size_t>(c)] += depthwise(u, c) * x.step(s)(b, c);
        }
      for (Index o = 0; o < cout; ++o) {
        double acc = bias(0, o);
        for (Index c = 0; c < cin; ++c) acc += mid[static_cast<size_t>(c)] * pointwise(c, o);
        y.step(t)(b, o) = std::max(acc, 0.0);
      }
    }
  }
  return y;
}

double sigmoid_scalar(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Step-by-step scalar GRU reference over one batch row.
std::vector<std::vector<double>> gru_reference_row(
    const Tensor3<double>& x, Index row, const Mat<double>& wz, const Mat<double>& wr,
    const Mat<double>& wc, const Mat<double>& uz, const Mat<double>& ur, const Mat<double>& uc,
    const Mat<double>& bz, const Mat<double>& br, const Mat<double>& bc) {
  const Index H = wz.cols(), C = wz.rows(), T = x.timesteps();
  std::vector<double> h(static_cast<size_t>(H), 0.0);
  std::vector<std::vector<double>> out;
  for (Index t = 0; t < T; ++t) {
    std::vector<double> z(H), r(H), c(H), hn(H);
    for (Index j = 0; j < H; ++j) {
      double az = bz(0, j), ar = br(0, j);
      for (Index i = 0; i < C; ++i) {
        az += x.step(t)(row, i) * wz(i, j);
        ar += x.step(t)(row, i) * wr(i, j);
      }
      for (Index i = 0; i < H; ++i) {
        az += h[static_cast<size_t>(i)] * uz(i, j);
        ar += h[static_cast<size_t>(i)] * ur(i, j);
      }
      z[static_cast<size_t>(j)] = sigmoid_scalar(az);
      r[static_cast<size_t>(j)] = sigmoid_scalar(ar);
    }
    for (Index j = 0; j < H; ++j) {
      double ac = bc(0, j);
      for (Index i = 0; i < C; ++i) ac += x.step(t)(row, i) * wc(i, j);
      for (Index i = 0; i < H; ++i)
        ac += r[static_cast<size_t>(i)] * h[static_cast<size_t>(i)] * uc(i, j);
      c[static_cast<size_t>(j)] = std::tanh(ac);
    }
    for (Index j = 0; j < H; ++j)
      hn[static_cast<size_t>(j)] = z[static_cast<size_t>(j)] * h[static_cast<size_t>(j)] +
                                   (1.0 - z[static_cast<size_t>(j)]) * c[static_cast<size_t>(j)];
    h = hn;
    out.push_back(h);
  }
  return out;
}

}  // namespace

TEST_CASE("separable conv: zero weights give zero output") {
  std::mt19937_64 rng(1);
  SeparableConv1D<double> conv("dsc", 3, 4, 3);
  Tensor3<double> x = random_tensor(2, 6, 3, rng);
  Tensor3<double> y = conv.forward(x, RunMode::kTrain);
  for (Index t = 0; t < y.timesteps(); ++t) CHECK(y.step(t).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("separable conv: delta depthwise + identity pointwise equals relu(x)") {
  SeparableConv1D<double> conv("dsc", 2, 2, 3);
  std::vector<ParamRef<double>> ps;
  conv.collect_params(ps);
  // depthwise rows: [k x C]; center tap = 1
  ps[0].value->setZero();
  ps[0].value->row(1).setOnes();
  ps[1].value->setIdentity();
  std::mt19937_64 rng(2);
  Tensor3<double> x = random_tensor(3, 5, 2, rng);
  Tensor3<double> y = conv.forward(x, RunMode::kInfer);
  for (Index t = 0; t < x.timesteps(); ++t)
    CHECK((y.step(t) - x.step(t).cwiseMax(0.0)).cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("separable conv matches nested-loop reference") {
  std::mt19937_64 rng(3);
  SeparableConv1D<double> conv("dsc", 3, 5, 5);
  conv.init(rng);
  std::vector<ParamRef<double>> ps;
  conv.collect_params(ps);
  testsupport::Mat<double> dw = *ps[0].value, pw = *ps[1].value, b = *ps[2].value;
  b.setRandom();
  *ps[2].value = b;
  Tensor3<double> x = random_tensor(4, 9, 3, rng);
  Tensor3<double> got = conv.forward(x, RunMode::kInfer);
  Tensor3<double> want = dsc_reference(x, dw, pw, b);
  CHECK(max_abs_diff(got, want) < 1e-12);
}

TEST_CASE("gru: zero weights keep the state at zero") {
  Gru<double> gru("gru", 3, 4);
  std::mt19937_64 rng(4);
  Tensor3<double> x = random_tensor(2, 5, 3, rng);
  Tensor3<double> y = gru.forward(x, RunMode::kInfer);
  for (Index t = 0; t < y.timesteps(); ++t) CHECK(y.step(t).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("gru: one timestep matches closed-form gate arithmetic") {
  Gru<double> gru("gru", 1, 1);
  std::vector<ParamRef<double>> ps;
  gru.collect_params(ps);
  auto set = [&](const std::string& n, double v) {
    for (auto& p : ps)
      if (p.name == "gru/" + n) p.value->setConstant(v);
  };
  set("wz", 0.5);
  set("wr", -0.3);
  set("wc", 0.8);
  set("bz", 0.1);
  set("bc", -0.2);
  Tensor3<double> x(1, 1, 1);
  x.step(0)(0, 0) = 0.7;
  const double z = sigmoid_scalar(0.5 * 0.7 + 0.1);
  const double c = std::tanh(0.8 * 0.7 - 0.2);
  const double want = (1.0 - z) * c;  // h0 = 0
  Tensor3<double> y = gru.forward(x, RunMode::kInfer);
  CHECK(y.step(0)(0, 0) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("gru matches unrolled scalar reference") {
  std::mt19937_64 rng(5);
  Gru<double> gru("gru", 3, 4);
  gru.init(rng);
  std::vector<ParamRef<double>> ps;
  gru.collect_params(ps);
  Tensor3<double> x = random_tensor(2, 7, 3, rng);
  Tensor3<double> y = gru.forward(x, RunMode::kInfer);
  for (Index row = 0; row < 2; ++row) {
    auto ref = gru_reference_row(x, row, *ps[0].value, *ps[1].value, *ps[2].value, *ps[3].value,
                                 *ps[4].value, *ps[5].value, *ps[6].value, *ps[7].value,
                                 *ps[8].value);
    for (Index t = 0; t < x.timesteps(); ++t)
      for (Index j = 0; j < 4; ++j)
        CHECK(y.step(t)(row, j) ==
              doctest::Approx(ref[static_cast<size_t>(t)][static_cast<size_t>(j)]).epsilon(1e-12));
  }
}

TEST_CASE("batchnorm: inference with unit stats is the identity") {
  BatchNorm1D<double> bn("bn", 3);
  std::mt19937_64 rng(6);
  Tensor3<double> x = random_tensor(4, 5, 3, rng);
  Tensor3<double> y = bn.forward(x, RunMode::kInfer);
  CHECK(max_abs_diff(x, y) < 1e-4);  // identity up to the variance eps
}

TEST_CASE("batchnorm: training normalizes per channel") {
  BatchNorm1D<double> bn("bn", 2);
  std::mt19937_64 rng(7);
  Tensor3<double> x = random_tensor(8, 6, 2, rng, 3.0);
  Tensor3<double> y = bn.forward(x, RunMode::kTrain);
  for (Index c = 0; c < 2; ++c) {
    double mean = 0.0, var = 0.0;
    const double n = 8.0 * 6.0;
    for (Index t = 0; t < 6; ++t) mean += y.step(t).col(c).sum();
    mean /= n;
    for (Index t = 0; t < 6; ++t)
      var += (y.step(t).col(c).array() - mean).square().sum();
    var /= n;
    CHECK(mean == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(var == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("batchnorm: running stats follow the momentum recurrence") {
  BatchNorm1D<double> bn("bn", 1, 0.9);
  Tensor3<double> a(2, 1, 1), b(2, 1, 1);
  a.step(0) << 1.0, 3.0;  // mean 2, var 1
  b.step(0) << -2.0, 2.0; // mean 0, var 4
  bn.forward(a, RunMode::kTrain);
  bn.forward(b, RunMode::kTrain);
  std::vector<ParamRef<double>> st;
  bn.collect_state(st);
  // mean: 0.9*(0.9*0 + 0.1*2) + 0.1*0 ; var: 0.9*(0.9*1 + 0.1*1) + 0.1*4
  CHECK((*st[0].value)(0, 0) == doctest::Approx(0.9 * 0.2).epsilon(1e-12));
  CHECK((*st[1].value)(0, 0) == doctest::Approx(0.9 * (0.9 + 0.1) + 0.1 * 4.0).epsilon(1e-12));
}

TEST_CASE("maxpool of a constant tensor is the same constant") {
  MaxPool1D<double> mp("mp", 2, 2, PadMode::kSame);
  Tensor3<double> x(3, 7, 2);
  for (Index t = 0; t < 7; ++t) x.step(t).setConstant(4.25);
  Tensor3<double> y = mp.forward(x, RunMode::kInfer);
  CHECK(y.timesteps() == 4);
  for (Index t = 0; t < y.timesteps(); ++t)
    CHECK((y.step(t).array() == 4.25).all());
}

TEST_CASE("global average pool computes channel means over timesteps") {
  GlobalAvgPool<double> gap;
  Tensor3<double> x(1, 2, 2);
  x.step(0) << 1.0, 5.0;
  x.step(1) << 3.0, 7.0;
  Mat<double> y = gap.forward(x);
  CHECK(y(0, 0) == doctest::Approx(2.0));
  CHECK(y(0, 1) == doctest::Approx(6.0));
}

TEST_CASE("dense softmax rows sum to one") {
  std::mt19937_64 rng(8);
  DenseSoftmax<double> head("head", 5, 7);
  head.init(rng);
  Mat<double> x = Mat<double>::Random(6, 5) * 3.0;
  Mat<double> p = head.forward(x);
  for (Index r = 0; r < p.rows(); ++r) {
    CHECK(p.row(r).sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.row(r).minCoeff() >= 0.0);
  }
}

TEST_CASE("sparse cross entropy: exact and uniform cases") {
  Mat<double> perfect(2, 3);
  perfect << 1, 0, 0, 0, 0, 1;
  auto r1 = sparse_cross_entropy(perfect, {0, 2});
  CHECK(r1.value == doctest::Approx(0.0));

  Mat<double> uniform = Mat<double>::Constant(4, 5, 0.2);
  auto r2 = sparse_cross_entropy(uniform, {1, 2, 3, 4});
  CHECK(r2.value == doctest::Approx(std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("softmax+CE fused gradient equals (p - y)/batch and matches finite differences") {
  std::mt19937_64 rng(9);
  DenseSoftmax<double> head("head", 4, 3);
  head.init(rng);
  Mat<double> x = Mat<double>::Random(5, 4);
  std::vector<int> labels = {0, 2, 1, 1, 0};

  Mat<double> p = head.forward(x);
  auto res = sparse_cross_entropy(p, labels);
  Mat<double> expect = p;
  for (Index r = 0; r < 5; ++r) expect(r, labels[static_cast<size_t>(r)]) -= 1.0;
  expect /= 5.0;
  CHECK((res.dlogits - expect).cwiseAbs().maxCoeff() < 1e-15);

  // finite differences on the head weights through softmax+CE
  std::vector<ParamRef<double>> ps;
  head.collect_params(ps);
  zero_grads(ps);
  head.forward(x);
  head.backward(res.dlogits);
  auto eval = [&] { return sparse_cross_entropy(head.forward(x), labels).value; };
  auto check = testsupport::check_param_gradients(ps, eval);
  CHECK(check.max_rel_error < 1e-6);
}

TEST_CASE("rmsprop: zero gradient leaves parameters unchanged") {
  Mat<double> w = Mat<double>::Constant(2, 2, 1.5);
  Mat<double> g = Mat<double>::Zero(2, 2);
  std::vector<ParamRef<double>> ps{{"w", &w, &g}};
  RmsProp<double> opt;
  opt.step(ps);
  CHECK((w.array() == 1.5).all());
}

TEST_CASE("rmsprop: single step plug-in arithmetic") {
  Mat<double> w = Mat<double>::Zero(1, 1);
  Mat<double> g = Mat<double>::Constant(1, 1, 1.0);
  std::vector<ParamRef<double>> ps{{"w", &w, &g}};
  RmsProp<double> opt(0.001, 0.9, 1e-7);
  opt.step(ps);
  CHECK(w(0, 0) == doctest::Approx(-0.001 / (std::sqrt(0.1) + 1e-7)).epsilon(1e-12));
}

TEST_CASE("rmsprop: three steps match the hand recurrence") {
  Mat<double> w = Mat<double>::Constant(1, 1, 0.5);
  Mat<double> g(1, 1);
  std::vector<ParamRef<double>> ps{{"w", &w, &g}};
  RmsProp<double> opt(0.01, 0.9, 1e-7);
  const double grads[3] = {1.0, -2.0, 0.5};
  double acc = 0.0, ref = 0.5;
  for (double gv : grads) {
    g(0, 0) = gv;
    opt.step(ps);
    acc = 0.9 * acc + 0.1 * gv * gv;
    ref -= 0.01 * gv / (std::sqrt(acc) + 1e-7);
    CHECK(w(0, 0) == doctest::Approx(ref).epsilon(1e-12));
  }
}

TEST_CASE("dropout: inverted scaling preserves the expectation") {
  Dropout<double> drop("drop", 0.3);
  Tensor3<double> x(1, 1, 4);
  x.step(0) << 1.0, -2.0, 3.0, 0.5;
  Mat<double> acc = Mat<double>::Zero(1, 4);
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    drop.reseed(static_cast<uint64_t>(i) + 1);
    acc += drop.forward(x, RunMode::kTrain).step(0);
  }
  acc /= static_cast<double>(n);
  Mat<double> infer = drop.forward(x, RunMode::kInfer).step(0);
  CHECK(((acc - infer).cwiseAbs().array() / infer.cwiseAbs().array()).maxCoeff() < 0.02);
}

TEST_CASE("dropout: inference mode is the identity") {
  Dropout<double> drop("drop", 0.5);
  std::mt19937_64 rng(11);
  Tensor3<double> x = random_tensor(3, 4, 2, rng);
  CHECK(max_abs_diff(drop.forward(x, RunMode::kInfer), x) == 0.0);
}

// --------------------------------------------------------------------------
// Finite-difference audits, one per layer kind. The projection loss is
// sum(w . f(x)) with fixed random w.
namespace {

template <typename MakeLayer>
void audit_layer(MakeLayer make, Index batch, Index steps, Index channels, uint64_t seed,
                 double tol = 1e-4) {
  std::mt19937_64 rng(seed);
  auto layer = make(rng);
  Tensor3<double> x = random_tensor(batch, steps, channels, rng, 0.1);
  layer->reseed(77);
  Tensor3<double> y0 = layer->forward(x, RunMode::kTrain);
  Tensor3<double> w = random_tensor(batch, y0.timesteps(), y0.channels(), rng);

  std::vector<ParamRef<double>> ps;
  layer->collect_params(ps);
  zero_grads(ps);
  layer->reseed(77);
  layer->forward(x, RunMode::kTrain);
  Tensor3<double> dx = layer->backward(w);

  auto eval = [&] {
    layer->reseed(77);
    return dot(layer->forward(x, RunMode::kTrain), w);
  };
  if (!ps.empty()) {
    auto res = testsupport::check_param_gradients(ps, eval);
    INFO("worst param ", res.worst);
    CHECK(res.max_rel_error < tol);
  }

  // input gradient as well
  double worst = 0.0;
  std::mt19937_64 pick(seed ^ 0x5555);
  for (int probe = 0; probe < 12; ++probe) {
    const Index t = static_cast<Index>(pick() % static_cast<uint64_t>(steps));
    const Index b = static_cast<Index>(pick() % static_cast<uint64_t>(batch));
    const Index c = static_cast<Index>(pick() % static_cast<uint64_t>(channels));
    const double keep = x.step(t)(b, c);
    const double h = 1e-5;
    x.step(t)(b, c) = keep + h;
    const double up = eval();
    x.step(t)(b, c) = keep - h;
    const double dn = eval();
    x.step(t)(b, c) = keep;
    const double fd = (up - dn) / (2 * h);
    const double an = dx.step(t)(b, c);
    worst = std::max(worst, std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), 1e-8}));
  }
  CHECK(worst < tol);
}

}  // namespace

TEST_CASE("gradient audit: separable conv") {
  audit_layer(
      [](std::mt19937_64& rng) {
        auto l = std::make_unique<SeparableConv1D<double>>("dsc", 3, 4, 3);
        l->init(rng);
        return l;
      },
      2, 6, 3, 21);
}

TEST_CASE("gradient audit: gru") {
  audit_layer(
      [](std::mt19937_64& rng) {
        auto l = std::make_unique<Gru<double>>("gru", 3, 4);
        l->init(rng);
        return l;
      },
      2, 5, 3, 22);
}

TEST_CASE("gradient audit: batchnorm (train mode)") {
  audit_layer(
      [](std::mt19937_64&) { return std::make_unique<BatchNorm1D<double>>("bn", 3); }, 4, 5, 3,
      23);
}

TEST_CASE("gradient audit: maxpool") {
  audit_layer(
      [](std::mt19937_64&) {
        return std::make_unique<MaxPool1D<double>>("mp", 2, 2, PadMode::kSame);
      },
      2, 7, 3, 24);
}

TEST_CASE("gradient audit: adaptive maxpool") {
  audit_layer(
      [](std::mt19937_64&) { return std::make_unique<AdaptiveMaxPool1D<double>>("amp", 3); }, 2, 7,
      3, 25);
}

TEST_CASE("gradient audit: dropout (fixed mask)") {
  audit_layer(
      [](std::mt19937_64&) { return std::make_unique<Dropout<double>>("drop", 0.25); }, 2, 5, 3,
      26);
}

TEST_CASE("gradient audit: linear bridge") {
  audit_layer(
      [](std::mt19937_64& rng) {
        auto l = std::make_unique<LinearBridge<double>>("lb", 3);
        l->init(rng);
        return l;
      },
      2, 4, 3, 27);
}

TEST_CASE("maxpool: valid padding shortens the sequence") {
  MaxPool1D<double> mp("mp", 3, 2, PadMode::kValid);
  CHECK(mp.out_shape({9, 2}) == Shape2{4, 2});
  Tensor3<double> x(1, 9, 1);
  for (Index t = 0; t < 9; ++t) x.step(t)(0, 0) = static_cast<double>(t);
  Tensor3<double> y = mp.forward(x, RunMode::kInfer);
  REQUIRE(y.timesteps() == 4);
  CHECK(y.step(0)(0, 0) == 2.0);  // max of {0,1,2}
  CHECK(y.step(3)(0, 0) == 8.0);
  CHECK_THROWS_AS(MaxPool1D<double>("mp", 4, 1, PadMode::kValid).forward(
                      Tensor3<double>(1, 2, 1), RunMode::kInfer),
                  flowhawk::ShapeError);
}

TEST_CASE("even kernel sizes are rejected at construction") {
  CHECK_THROWS_AS(SeparableConv1D<double>("dsc", 2, 2, 4), flowhawk::ShapeError);
}
