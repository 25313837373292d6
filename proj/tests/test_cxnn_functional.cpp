#include <doctest.h>

#include <map>
#include <string>

#include "gradcheck.hpp"
#include "polsar/cxcore/ops.hpp"
#include "polsar/cxnn/functional.hpp"
#include "polsar/errors.hpp"

using namespace polsar;
using namespace polsar::cx;
using namespace polsar::nn;
using testing::C;

namespace {

// Direct nested-loop cross-correlation.
std::vector<C> naive_conv(const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>& b, int s,
                          int p) {
  const int B = int(x.dim(0)), Ci = int(x.dim(1)), H = int(x.dim(2)), W = int(x.dim(3));
  const int Co = int(w.dim(0)), k = int(w.dim(2));
  const int Ho = (H + 2 * p - k) / s + 1, Wo = (W + 2 * p - k) / s + 1;
  std::vector<C> out(std::size_t(B) * Co * Ho * Wo);
  auto X = x.data();
  auto Wt = w.data();
  for (int n = 0; n < B; ++n)
    for (int o = 0; o < Co; ++o)
      for (int i = 0; i < Ho; ++i)
        for (int j = 0; j < Wo; ++j) {
          C acc = b.defined() ? b.data()[o] : C{};
          for (int c = 0; c < Ci; ++c)
            for (int u = 0; u < k; ++u)
              for (int v = 0; v < k; ++v) {
                const int r = i * s + u - p, q = j * s + v - p;
                if (r < 0 || q < 0 || r >= H || q >= W) continue;
                acc += X[((n * Ci + c) * H + r) * W + q] * Wt[((o * Ci + c) * k + u) * k + v];
              }
          out[((n * Co + o) * Ho + i) * Wo + j] = acc;
        }
  return out;
}

// Random linear functional Re sum(conj(c) y): every output direction is probed
// with O(1) gradients, which keeps finite differences out of the rounding floor.
Tensor<double> probe(const Tensor<double>& y, const Tensor<double>& c) { return real(sum(mul(conj(c), y))); }

Tensor<double> target_like(const Tensor<double>& y, std::mt19937_64& rng) {
  return testing::random_tensor(y.shape(), rng);
}

}  // namespace

TEST_CASE("conv2d examples") {
  Tensor<double> x({1, 1, 1, 1}, {C(1, 1)});
  Tensor<double> w({1, 1, 1, 1}, {C(0, -1)});
  CHECK(conv2d(x, w, {}, 1, 0).data()[0] == C(1, -1));

  std::mt19937_64 rng(1);
  auto z = testing::random_tensor({2, 3, 5, 4}, rng);
  Tensor<double> id({1, 1, 1, 1}, {C(1, 0)});
  auto z1 = testing::random_tensor({1, 1, 4, 4}, rng);
  auto y = conv2d(z1, id, {}, 1, 0);
  for (std::size_t i = 0; i < z1.numel(); ++i) CHECK(y.data()[i] == z1.data()[i]);

  CHECK_THROWS_AS(conv2d(testing::random_tensor({1, 1, 2, 2}, rng), testing::random_tensor({1, 1, 5, 5}, rng),
                         {}, 1, 1),
                  ShapeError);
}

TEST_CASE("conv2d matches nested-loop oracle") {
  std::mt19937_64 rng(2);
  for (auto [s, p, k] : std::vector<std::tuple<int, int, int>>{{2, 0, 3}, {1, 1, 3}, {2, 1, 3}, {1, 0, 1}, {3, 2, 5}}) {
    auto x = testing::random_tensor({1, 2, 6, 6}, rng);
    auto w = testing::random_tensor({3, 2, std::size_t(k), std::size_t(k)}, rng);
    auto b = testing::random_tensor({3}, rng);
    auto y = conv2d(x, w, b, s, p);
    auto ref = naive_conv(x, w, b, s, p);
    REQUIRE(y.numel() == ref.size());
    double err = 0;
    for (std::size_t i = 0; i < ref.size(); ++i) err = std::max(err, std::abs(y.data()[i] - ref[i]));
    CHECK(err < 1e-6);
  }
}

TEST_CASE("strided conv equals stride-1 conv then subsampling") {
  std::mt19937_64 rng(3);
  for (int stride : {2, 3}) {
    auto x = testing::random_tensor({2, 3, 9, 8}, rng);
    auto w = testing::random_tensor({4, 3, 3, 3}, rng);
    auto a = conv2d(x, w, {}, stride, 1);
    auto b = subsample(conv2d(x, w, {}, 1, 1), stride);
    REQUIRE(a.shape() == b.shape());
    for (std::size_t i = 0; i < a.numel(); ++i) CHECK(std::abs(a.data()[i] - b.data()[i]) < 1e-6);
  }
}

TEST_CASE("real-field conv ignores imaginary parts") {
  std::mt19937_64 rng(4);
  auto x = testing::random_tensor({1, 2, 5, 5}, rng);
  auto w = testing::random_tensor({2, 2, 3, 3}, rng);
  auto y = conv2d(x, w, {}, 1, 1, Field::real);
  auto ref = conv2d(real(x), real(w), {}, 1, 1);
  for (std::size_t i = 0; i < y.numel(); ++i) {
    CHECK(y.data()[i].imag() == 0);
    CHECK(std::abs(y.data()[i] - ref.data()[i]) < 1e-12);
  }
}

TEST_CASE("linear examples") {
  std::mt19937_64 rng(5);
  auto z = testing::random_tensor({3}, rng);
  Tensor<double> I({3, 3}, {C(1, 0), {}, {}, {}, C(1, 0), {}, {}, {}, C(1, 0)});
  auto y = linear(z, I, Tensor<double>::zeros({3}));
  for (int i = 0; i < 3; ++i) CHECK(y.data()[i] == z.data()[i]);
  auto b = testing::random_tensor({3}, rng);
  auto c = linear(z, Tensor<double>::zeros({3, 3}), b);
  for (int i = 0; i < 3; ++i) CHECK(c.data()[i] == b.data()[i]);

  auto W = testing::random_tensor({4, 3}, rng);
  auto b4 = testing::random_tensor({4}, rng);
  auto got = linear(z, W, b4);
  auto ref = add(reshape(matmul(W, reshape(z, {3, 1})), {4}), b4);
  for (int i = 0; i < 4; ++i) CHECK(got.data()[i] == ref.data()[i]);
  CHECK_THROWS_AS(linear(z, testing::random_tensor({4, 2}, rng), b4), ShapeError);
}

TEST_CASE("activation examples") {
  auto one = [](C z, ActivationKind k, Tensor<double> b = {}) {
    return activation(Tensor<double>({1}, {z}), k, b).data()[0];
  };
  CHECK(one(C(-1, 2), ActivationKind::crelu) == C(0, 2));
  const C z = std::polar(2.0, M_PI / 3);
  const C m = one(z, ActivationKind::modrelu, Tensor<double>({1}, {C(-0.5, 0)}));
  CHECK(std::abs(m - std::polar(1.5, M_PI / 3)) < 1e-12);
  CHECK(one(C(0.2, 0.1), ActivationKind::modrelu, Tensor<double>({1}, {C(-0.5, 0)})) == C(0, 0));
  CHECK(one(C(-1, 1), ActivationKind::zrelu) == C(0, 0));
  CHECK(one(C(1, 1), ActivationKind::zrelu) == C(1, 1));
  CHECK(std::abs(one(C(0, 1), ActivationKind::cardioid) - C(0, 0.5)) < 1e-12);
  CHECK(one(C(0, 0), ActivationKind::cardioid) == C(0, 0));
  CHECK_THROWS_AS(one(C(1, 0), ActivationKind::modrelu), ConfigError);
  CHECK_THROWS_AS(one(C(1, 0), ActivationKind::crelu, Tensor<double>({1}, {C(1, 0)})), ConfigError);
  CHECK(parse_activation("cardioid") == ActivationKind::cardioid);
  CHECK_THROWS_AS(parse_activation("relu6"), ConfigError);
}

TEST_CASE("CReLU and zReLU agree with their real-pair formulations") {
  std::mt19937_64 rng(6);
  auto z = testing::random_tensor({200}, rng);
  auto c = activation(z, ActivationKind::crelu);
  auto q = activation(z, ActivationKind::zrelu);
  for (std::size_t i = 0; i < 200; ++i) {
    const C v = z.data()[i];
    CHECK(c.data()[i] == C(std::max(v.real(), 0.0), std::max(v.imag(), 0.0)));
    const bool first = v.real() >= 0 && v.imag() >= 0;
    CHECK(q.data()[i] == (first ? v : C{}));
  }
}

TEST_CASE("pooling examples") {
  Tensor<double> sq({1, 1, 2, 2}, {C(1, 0), C(0, 2), C(-1, -1), C(0.5, 0)});
  CHECK(max_pool2d(sq, 2, 2).data()[0] == C(0, 2));
  Tensor<double> tie({1, 1, 2, 2}, {C(1, 0), C(0, 1), C(0, -1), C(-1, 0)});
  CHECK(max_pool2d(tie, 2, 2).data()[0] == C(1, 0));
  Tensor<double> av({1, 1, 1, 2}, {C(1, 1), C(3, -1)});
  CHECK_THROWS_AS(avg_pool2d(av, 2, 2), ShapeError);
  Tensor<double> av2({1, 1, 2, 2}, {C(1, 1), C(3, -1), C(1, 1), C(3, -1)});
  CHECK(avg_pool2d(av2, 2, 2).data()[0] == C(2, 0));
}

TEST_CASE("upsampling examples") {
  std::mt19937_64 rng(7);
  auto x = testing::random_tensor({2, 3, 4, 5}, rng);
  auto u1 = upsample_nearest(x, 1);
  for (std::size_t i = 0; i < x.numel(); ++i) CHECK(u1.data()[i] == x.data()[i]);
  Tensor<double> q({1, 1, 2, 2}, {C(1, 0), C(2, 0), C(3, 0), C(4, 0)});
  auto u = upsample_nearest(q, 2);
  REQUIRE(u.shape() == Shape{1, 1, 4, 4});
  const double expect[16] = {1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4};
  for (int i = 0; i < 16; ++i) CHECK(u.data()[i] == C(expect[i], 0));
  for (int f : {2, 3}) {
    auto back = avg_pool2d(upsample_nearest(x, f), f, f);
    for (std::size_t i = 0; i < x.numel(); ++i) CHECK(std::abs(back.data()[i] - x.data()[i]) < 1e-12);
  }
  // bilinear keeps constants and works on Re/Im independently
  auto cst = Tensor<double>::full({1, 1, 3, 3}, C(2, -1));
  auto b = upsample_bilinear(cst, 2);
  for (auto v : b.data()) CHECK(std::abs(v - C(2, -1)) < 1e-12);
}

TEST_CASE("mse loss examples") {
  std::mt19937_64 rng(8);
  auto x = testing::random_tensor({3, 4}, rng);
  CHECK(mse_loss(x, x).item() == C(0, 0));
  auto shifted = add(x, Tensor<double>::full({1}, C(0, 1)));
  CHECK(mse_loss(shifted, x).item().real() == doctest::Approx(1.0).epsilon(1e-12));
  auto y = testing::random_tensor({3, 4}, rng);
  double ref = 0;
  for (std::size_t i = 0; i < 12; ++i) ref += std::norm(x.data()[i] - y.data()[i]);
  ref /= 12;
  CHECK(std::abs(mse_loss(x, y).item().real() - ref) / ref < 1e-7);
  CHECK_THROWS_AS(mse_loss(x, testing::random_tensor({4, 3}, rng)), ShapeError);
}

TEST_CASE("stack and combine Re/Im channels") {
  std::mt19937_64 rng(9);
  auto x = testing::random_tensor({2, 4, 3, 3}, rng);
  auto s = stack_re_im(x);
  REQUIRE(s.shape() == Shape{2, 8, 3, 3});
  for (auto v : s.data()) CHECK(v.imag() == 0);
  auto back = combine_re_im(s);
  REQUIRE(back.shape() == x.shape());
  for (std::size_t i = 0; i < x.numel(); ++i) CHECK(back.data()[i] == x.data()[i]);
}

TEST_CASE("complex batch norm: two-point whitening") {
  Tensor<double> x({2, 1}, {C(1, 1), C(-1, -1)});
  ComplexBNStats<double> st(1);
  const double s = 1 / std::sqrt(2.0);
  Tensor<double> gamma({1, 4}, {C(s, 0), {}, {}, C(s, 0)});
  auto y = complex_batch_norm(x, gamma, Tensor<double>::zeros({1}), st, Mode::train);
  CHECK(std::abs(y.data()[0] + y.data()[1]) < 1e-12);
  CHECK(std::abs(std::abs(y.data()[0]) - std::abs(y.data()[1])) < 1e-12);
  // rank-1 covariance: the whitened points lie on the (1,1) diagonal
  CHECK(std::abs(y.data()[0].real() - y.data()[0].imag()) < 1e-9);
}

TEST_CASE("complex batch norm: constant batch maps to beta") {
  auto x = Tensor<double>::full({16, 2}, C(3, -2));
  ComplexBNStats<double> st(2);
  Tensor<double> gamma({2, 4}, {C(1, 0), {}, {}, C(1, 0), C(1, 0), {}, {}, C(1, 0)});
  Tensor<double> beta({2}, {C(0.5, 0.25), C(-1, 0)});
  auto y = complex_batch_norm(x, gamma, beta, st, Mode::train);
  for (std::size_t i = 0; i < 32; ++i) CHECK(std::abs(y.data()[i] - beta.data()[i % 2]) < 1e-12);
}

TEST_CASE("complex whitening of a non-circular Gaussian") {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> n(0, 1);
  const std::size_t N = 1024;
  std::vector<C> v(N * 2);
  for (std::size_t i = 0; i < N; ++i) {
    const double a = n(rng), b = n(rng);
    v[2 * i] = C(3 + 2 * a, -1 + 1.5 * a + 0.3 * b);
    v[2 * i + 1] = C(0.1 * a, 5 * b);
  }
  auto y = complex_whiten(Tensor<double>({N, 2}, v));
  for (std::size_t c = 0; c < 2; ++c) {
    C mean{};
    double rr = 0, ri = 0, ii = 0;
    for (std::size_t i = 0; i < N; ++i) mean += y.data()[2 * i + c];
    mean /= double(N);
    for (std::size_t i = 0; i < N; ++i) {
      const C d = y.data()[2 * i + c] - mean;
      rr += d.real() * d.real();
      ri += d.real() * d.imag();
      ii += d.imag() * d.imag();
    }
    CHECK(std::abs(mean) < 1e-3);
    CHECK(std::abs(rr / N - 0.5) < 1e-2);
    CHECK(std::abs(ii / N - 0.5) < 1e-2);
    CHECK(std::abs(ri / N) < 1e-2);
  }
}

TEST_CASE("batch norm eval mode uses running statistics") {
  std::mt19937_64 rng(12);
  ComplexBNStats<double> st(3);
  Tensor<double> gamma({3, 4}, std::vector<C>(12));
  for (int c = 0; c < 3; ++c) gamma.mutable_data()[4 * c] = gamma.mutable_data()[4 * c + 3] = C(1, 0);
  auto beta = Tensor<double>::zeros({3});
  auto x = testing::random_tensor({4, 3, 5, 5}, rng, 2.0);
  for (int i = 0; i < 200; ++i) complex_batch_norm(x, gamma, beta, st, Mode::train, {1e-5, 0.1});
  auto tr = complex_batch_norm(x, gamma, beta, st, Mode::train);
  auto ev = complex_batch_norm(x, gamma, beta, st, Mode::eval);
  double err = 0;
  for (std::size_t i = 0; i < x.numel(); ++i) err = std::max(err, std::abs(tr.data()[i] - ev.data()[i]));
  // after 200 updates at momentum 0.1 the running stats equal the batch stats
  CHECK(err < 1e-6);
  auto ev2 = complex_batch_norm(x, gamma, beta, st, Mode::eval);
  for (std::size_t i = 0; i < x.numel(); ++i) CHECK(ev2.data()[i] == ev.data()[i]);
}

TEST_CASE("layer gradients match finite differences") {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> ext(2, 5);
  std::map<std::string, double> worst;
  auto track = [&](const char* op, const testing::GradReport& r) { worst[op] = std::max(worst[op], r.max_rel); };
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t B = ext(rng) - 1, Ci = ext(rng) - 1, Co = ext(rng) - 1;
    const std::size_t H = ext(rng) + 1, W = ext(rng) + 1;
    auto x = testing::random_tensor({B, Ci, H, W}, rng);
    auto w = testing::random_tensor({Co, Ci, 3, 3}, rng, 0.5);
    auto b = testing::random_tensor({Co}, rng);
    const int stride = 1 + trial % 2;
    auto t = target_like(conv2d(x, w, b, stride, 1), rng);
    track("conv", testing::gradcheck([&](auto& in) { return probe(conv2d(in[0], in[1], in[2], stride, 1), t); },
                                               {x, w, b}));
    auto tr = target_like(conv2d(x, w, b, stride, 1), rng);
    track("conv-real", testing::gradcheck(
                                [&](auto& in) { return probe(conv2d(in[0], in[1], in[2], stride, 1, Field::real), tr); },
                                {real(x), real(w), real(b)}, {}, {true, true, true})
                                );

    auto z = testing::random_tensor({B, Ci * W}, rng);
    auto L = testing::random_tensor({Co, Ci * W}, rng);
    auto tl = testing::random_tensor({B, Co}, rng);
    track("linear", testing::gradcheck([&](auto& in) { return probe(linear(in[0], in[1], in[2]), tl); },
                                               {z, L, b}));

    auto ta = target_like(x, rng);
    for (auto k : {ActivationKind::crelu, ActivationKind::cardioid, ActivationKind::zrelu})
      track("activation", testing::gradcheck([&](auto& in) { return probe(activation(in[0], k), ta); }, {x}));
    auto mb = testing::random_real_tensor({Ci}, rng, 0.3);
    track("modrelu", testing::gradcheck(
                                [&](auto& in) { return probe(activation(in[0], ActivationKind::modrelu, in[1]), ta); },
                                {x, mb}, {}, {false, true})
                                );

    const std::size_t He = H - H % 2, We = W - W % 2;
    auto xe = testing::random_tensor({B, Ci, He, We}, rng);
    auto tp = testing::random_tensor({B, Ci, He / 2, We / 2}, rng);
    track("maxpool", testing::gradcheck([&](auto& in) { return probe(max_pool2d(in[0], 2, 2), tp); }, {xe}));
    track("avgpool", testing::gradcheck([&](auto& in) { return probe(avg_pool2d(in[0], 2, 2), tp); }, {xe}));
    auto tu = testing::random_tensor({B, Ci, 2 * H, 2 * W}, rng);
    track("nearest", testing::gradcheck([&](auto& in) { return probe(upsample_nearest(in[0], 2), tu); }, {x}));
    track("bilinear", testing::gradcheck([&](auto& in) { return probe(upsample_bilinear(in[0], 2), tu); }, {x}));

    ComplexBNStats<double> st(Ci);
    auto gamma = testing::random_real_tensor({Ci, 4}, rng);
    auto beta = testing::random_tensor({Ci}, rng);
    track("complex-bn", testing::gradcheck(
                                [&](auto& in) {
                                  return probe(complex_batch_norm(in[0], in[1], in[2], st, Mode::train), ta);
                                },
                                {x, gamma, beta}, {}, {false, true, false})
                                );
    RealBNStats<double> rs(Ci);
    auto rg = testing::random_real_tensor({Ci}, rng);
    auto rb = testing::random_real_tensor({Ci}, rng);
    auto tre = real(ta);
    track("real-bn", testing::gradcheck(
                                [&](auto& in) { return probe(real_batch_norm(in[0], in[1], in[2], rs, Mode::train), tre); },
                                {real(x), rg, rb}, {}, {true, true, true})
                                );
    auto ts = testing::random_real_tensor({B, 2 * Ci, H, W}, rng);
    track("stack", testing::gradcheck([&](auto& in) { return probe(stack_re_im(in[0]), ts); }, {x}));
    auto tc = testing::random_tensor({B, Ci, H, W}, rng);
    track("combine", testing::gradcheck([&](auto& in) { return probe(combine_re_im(in[0]), tc); },
                                               {real(testing::random_tensor({B, 2 * Ci, H, W}, rng))}, {}, {true})
                                );
  }
  for (auto& [op, err] : worst) {
    INFO(op);
    CHECK(err < 1e-7);
  }
}
