#include "polsar/cxnn/functional.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

namespace polsar::nn {

ActivationKind parse_activation(std::string_view s) {
  if (s == "crelu") return ActivationKind::crelu;
  if (s == "cardioid") return ActivationKind::cardioid;
  if (s == "modrelu") return ActivationKind::modrelu;
  if (s == "zrelu") return ActivationKind::zrelu;
  throw ConfigError("unknown activation '" + std::string(s) + "'");
}

std::string_view to_string(ActivationKind k) {
  switch (k) {
    case ActivationKind::crelu: return "crelu";
    case ActivationKind::cardioid: return "cardioid";
    case ActivationKind::modrelu: return "modrelu";
    case ActivationKind::zrelu: return "zrelu";
  }
  return "?";
}

namespace {

template <class S>
using RowMat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct ConvGeom {
  int B, Cin, H, W, Cout, kh, kw, stride, pad, Ho, Wo;
  bool pointwise() const { return kh == 1 && kw == 1 && stride == 1 && pad == 0; }
  Eigen::Index K() const { return Eigen::Index(Cin) * kh * kw; }
  Eigen::Index P() const { return Eigen::Index(Ho) * Wo; }
};

template <class S>
void im2col(const ConvGeom& g, const S* x, S* cols) {
  const int P = g.Ho * g.Wo;
  for (int c = 0; c < g.Cin; ++c)
    for (int i = 0; i < g.kh; ++i)
      for (int j = 0; j < g.kw; ++j) {
        S* dst = cols + std::size_t((c * g.kh + i) * g.kw + j) * P;
        const S* src = x + std::size_t(c) * g.H * g.W;
        for (int oy = 0; oy < g.Ho; ++oy) {
          const int iy = oy * g.stride + i - g.pad;
          S* row = dst + std::size_t(oy) * g.Wo;
          if (iy < 0 || iy >= g.H) {
            std::fill(row, row + g.Wo, S{});
            continue;
          }
          const S* srow = src + std::size_t(iy) * g.W;
          for (int ox = 0; ox < g.Wo; ++ox) {
            const int ix = ox * g.stride + j - g.pad;
            row[ox] = (ix >= 0 && ix < g.W) ? srow[ix] : S{};
          }
        }
      }
}

template <class S>
void col2im(const ConvGeom& g, const S* cols, S* x) {
  const int P = g.Ho * g.Wo;
  for (int c = 0; c < g.Cin; ++c)
    for (int i = 0; i < g.kh; ++i)
      for (int j = 0; j < g.kw; ++j) {
        const S* src = cols + std::size_t((c * g.kh + i) * g.kw + j) * P;
        S* dst = x + std::size_t(c) * g.H * g.W;
        for (int oy = 0; oy < g.Ho; ++oy) {
          const int iy = oy * g.stride + i - g.pad;
          if (iy < 0 || iy >= g.H) continue;
          S* drow = dst + std::size_t(iy) * g.W;
          const S* row = src + std::size_t(oy) * g.Wo;
          for (int ox = 0; ox < g.Wo; ++ox) {
            const int ix = ox * g.stride + j - g.pad;
            if (ix >= 0 && ix < g.W) drow[ix] += row[ox];
          }
        }
      }
}

template <class S>
void conv_forward(const ConvGeom& g, const S* x, const S* w, const S* bias, S* out) {
  const auto K = g.K(), P = g.P();
  Eigen::Map<const RowMat<S>> Wm(w, g.Cout, K);
  std::vector<S> cols(g.pointwise() ? 0 : std::size_t(K * P));
  for (int b = 0; b < g.B; ++b) {
    const S* xb = x + std::size_t(b) * g.Cin * g.H * g.W;
    if (!g.pointwise()) im2col(g, xb, cols.data());
    Eigen::Map<const RowMat<S>> C(g.pointwise() ? xb : cols.data(), K, P);
    Eigen::Map<RowMat<S>> O(out + std::size_t(b) * g.Cout * P, g.Cout, P);
    O.noalias() = Wm * C;
    if (bias)
      for (int o = 0; o < g.Cout; ++o) O.row(o).array() += bias[o];
  }
}

template <class S>
void conv_backward(const ConvGeom& g, const S* x, const S* w, const S* gout, S* gx, S* gw, S* gb) {
  const auto K = g.K(), P = g.P();
  Eigen::Map<const RowMat<S>> Wm(w, g.Cout, K);
  std::vector<S> cols(g.pointwise() ? 0 : std::size_t(K * P));
  std::vector<S> gcols(g.pointwise() ? 0 : std::size_t(K * P));
  for (int b = 0; b < g.B; ++b) {
    Eigen::Map<const RowMat<S>> G(gout + std::size_t(b) * g.Cout * P, g.Cout, P);
    const S* xb = x + std::size_t(b) * g.Cin * g.H * g.W;
    if (gw) {
      if (!g.pointwise()) im2col(g, xb, cols.data());
      Eigen::Map<const RowMat<S>> C(g.pointwise() ? xb : cols.data(), K, P);
      Eigen::Map<RowMat<S>>(gw, g.Cout, K).noalias() += G * C.adjoint();
    }
    if (gb)
      for (int o = 0; o < g.Cout; ++o) {
        // plain loop: Eigen's vectorized sum peels by address, which breaks run-to-run reproducibility
        S acc{};
        for (Eigen::Index q = 0; q < P; ++q) acc += G(o, q);
        gb[o] += acc;
      }
    if (gx) {
      S* gxb = gx + std::size_t(b) * g.Cin * g.H * g.W;
      if (g.pointwise()) {
        Eigen::Map<RowMat<S>>(gxb, K, P).noalias() += Wm.adjoint() * G;
      } else {
        Eigen::Map<RowMat<S>>(gcols.data(), K, P).noalias() = Wm.adjoint() * G;
        col2im(g, gcols.data(), gxb);
      }
    }
  }
}

template <class T>
std::vector<T> real_parts(std::span<const cplx<T>> v) {
  std::vector<T> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i].real();
  return out;
}

template <class T>
std::vector<cplx<T>> to_complex(const std::vector<T>& v) {
  std::vector<cplx<T>> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = cplx<T>(v[i], 0);
  return out;
}

// (batch, channels, inner) view of a tensor whose channel axis is dim 1; a
// rank-1 tensor is one sample whose entries are the channels.
struct ChannelView {
  std::size_t B, C, inner;
  std::size_t channel(std::size_t n) const { return (n / inner) % C; }
};

template <class T>
ChannelView channel_view(const Tensor<T>& x) {
  if (x.rank() == 0) throw ShapeError("channel view of a scalar");
  if (x.rank() == 1) return {1, x.dim(0), 1};
  std::size_t inner = 1;
  for (std::size_t i = 2; i < x.rank(); ++i) inner *= x.dim(i);
  return {x.dim(0), x.dim(1), inner};
}

void require_4d(const Shape& s, const char* op) {
  if (s.size() != 4) throw ShapeError(std::string(op) + " expects B x C x H x W, got " + cx::to_string(s));
}

}  // namespace

template <class T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, int stride,
                 int padding, Field field) {
  require_4d(x.shape(), "conv2d");
  if (weight.rank() != 4 || weight.dim(1) != x.dim(1))
    throw ShapeError("conv2d weight " + cx::to_string(weight.shape()) + " incompatible with input " +
                     cx::to_string(x.shape()));
  if (stride < 1 || padding < 0) throw ShapeError("conv2d needs stride >= 1 and padding >= 0");
  ConvGeom g{};
  g.B = int(x.dim(0));
  g.Cin = int(x.dim(1));
  g.H = int(x.dim(2));
  g.W = int(x.dim(3));
  g.Cout = int(weight.dim(0));
  g.kh = int(weight.dim(2));
  g.kw = int(weight.dim(3));
  g.stride = stride;
  g.pad = padding;
  if (g.kh > g.H + 2 * padding || g.kw > g.W + 2 * padding)
    throw ShapeError("conv2d kernel " + cx::to_string(weight.shape()) + " larger than padded input " +
                     cx::to_string(x.shape()));
  g.Ho = (g.H + 2 * padding - g.kh) / stride + 1;
  g.Wo = (g.W + 2 * padding - g.kw) / stride + 1;
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != std::size_t(g.Cout)))
    throw ShapeError("conv2d bias must have shape [" + std::to_string(g.Cout) + "]");

  const Shape out_shape{std::size_t(g.B), std::size_t(g.Cout), std::size_t(g.Ho), std::size_t(g.Wo)};
  std::vector<cplx<T>> out(cx::numel(out_shape));
  if (field == Field::complex) {
    conv_forward<cplx<T>>(g, x.data().data(), weight.data().data(),
                          bias.defined() ? bias.data().data() : nullptr, out.data());
  } else {
    auto xr = real_parts<T>(x.data()), wr = real_parts<T>(weight.data());
    std::vector<T> br = bias.defined() ? real_parts<T>(bias.data()) : std::vector<T>{};
    std::vector<T> o(out.size());
    conv_forward<T>(g, xr.data(), wr.data(), bias.defined() ? br.data() : nullptr, o.data());
    out = to_complex(o);
  }

  std::vector<Tensor<T>> parents{x, weight};
  if (bias.defined()) parents.push_back(bias);
  return cx::make_result<T>("conv2d", out_shape, std::move(out), parents,
                            [x, weight, bias, g, field](std::span<const cplx<T>> gout) {
                              const bool wx = x.requires_grad();
                              const bool ww = weight.requires_grad();
                              const bool wb = bias.defined() && bias.requires_grad();
                              if (field == Field::complex) {
                                conv_backward<cplx<T>>(
                                    g, x.data().data(), weight.data().data(), gout.data(),
                                    wx ? x.impl()->grad_buffer().data() : nullptr,
                                    ww ? weight.impl()->grad_buffer().data() : nullptr,
                                    wb ? bias.impl()->grad_buffer().data() : nullptr);
                                return;
                              }
                              auto xr = real_parts<T>(x.data()), wr = real_parts<T>(weight.data());
                              auto gr = real_parts<T>(gout);
                              std::vector<T> gx(wx ? xr.size() : 0), gw(ww ? wr.size() : 0),
                                  gb(wb ? std::size_t(g.Cout) : 0);
                              conv_backward<T>(g, xr.data(), wr.data(), gr.data(), wx ? gx.data() : nullptr,
                                               ww ? gw.data() : nullptr, wb ? gb.data() : nullptr);
                              for (std::size_t i = 0; i < gx.size(); ++i) x.impl()->grad_buffer()[i] += gx[i];
                              for (std::size_t i = 0; i < gw.size(); ++i)
                                weight.impl()->grad_buffer()[i] += gw[i];
                              for (std::size_t i = 0; i < gb.size(); ++i) bias.impl()->grad_buffer()[i] += gb[i];
                            });
}

template <class T>
Tensor<T> linear(const Tensor<T>& z, const Tensor<T>& weight, const Tensor<T>& bias, Field field) {
  if (weight.rank() != 2) throw ShapeError("linear weight must be m x n");
  const auto m = Eigen::Index(weight.dim(0)), n = Eigen::Index(weight.dim(1));
  if (z.rank() < 1 || z.rank() > 2 || Eigen::Index(z.shape().back()) != n)
    throw ShapeError("linear input " + cx::to_string(z.shape()) + " incompatible with weight " +
                     cx::to_string(weight.shape()));
  if (bias.defined() && (bias.rank() != 1 || Eigen::Index(bias.dim(0)) != m))
    throw ShapeError("linear bias must have shape [" + std::to_string(m) + "]");
  const auto B = z.rank() == 2 ? Eigen::Index(z.dim(0)) : Eigen::Index(1);
  using M = RowMat<cplx<T>>;
  using CMap = Eigen::Map<const M>;

  auto project = [field](std::span<const cplx<T>> v) {
    std::vector<cplx<T>> out(v.begin(), v.end());
    if (field == Field::real)
      for (auto& e : out) e = cplx<T>(e.real(), 0);
    return out;
  };
  const auto zd = project(z.data()), wd = project(weight.data());
  std::vector<cplx<T>> out(std::size_t(B * m));
  Eigen::Map<M> O(out.data(), B, m);
  O.noalias() = CMap(zd.data(), B, n) * CMap(wd.data(), m, n).transpose();
  if (bias.defined()) {
    const auto bd = project(bias.data());
    for (Eigen::Index b = 0; b < B; ++b)
      for (Eigen::Index i = 0; i < m; ++i) O(b, i) += bd[std::size_t(i)];
  }
  Shape out_shape = z.rank() == 2 ? Shape{std::size_t(B), std::size_t(m)} : Shape{std::size_t(m)};
  std::vector<Tensor<T>> parents{z, weight};
  if (bias.defined()) parents.push_back(bias);
  return cx::make_result<T>(
      "linear", out_shape, std::move(out), parents,
      [z, weight, bias, zd, wd, B, m, n, field](std::span<const cplx<T>> g) {
        std::vector<cplx<T>> gv(g.begin(), g.end());
        if (field == Field::real)
          for (auto& e : gv) e = cplx<T>(e.real(), 0);
        CMap G(gv.data(), B, m);
        if (z.requires_grad())
          Eigen::Map<M>(z.impl()->grad_buffer().data(), B, n).noalias() += G * CMap(wd.data(), m, n).conjugate();
        if (weight.requires_grad())
          Eigen::Map<M>(weight.impl()->grad_buffer().data(), m, n).noalias() +=
              G.transpose() * CMap(zd.data(), B, n).conjugate();
        if (bias.defined() && bias.requires_grad()) {
          auto& gb = bias.impl()->grad_buffer();
          for (Eigen::Index b = 0; b < B; ++b)
            for (Eigen::Index i = 0; i < m; ++i) gb[std::size_t(i)] += G(b, i);
        }
      });
}

template <class T>
Tensor<T> activation(const Tensor<T>& z, ActivationKind kind, const Tensor<T>& bias) {
  const bool has_bias = bias.defined();
  if (kind == ActivationKind::modrelu && !has_bias) throw ConfigError("modReLU requires a bias parameter");
  if (kind != ActivationKind::modrelu && has_bias)
    throw ConfigError(std::string(to_string(kind)) + " takes no bias parameter");
  const auto cv = channel_view(z);
  if (has_bias && bias.numel() != cv.C && bias.numel() != 1)
    throw ShapeError("modReLU bias must have one entry per channel");
  auto bias_at = [&](std::size_t n) {
    return has_bias ? bias.data()[bias.numel() == 1 ? 0 : cv.channel(n)].real() : T(0);
  };

  const auto zd = z.data();
  std::vector<cplx<T>> out(zd.size());
  for (std::size_t n = 0; n < zd.size(); ++n) {
    const T x = zd[n].real(), y = zd[n].imag();
    switch (kind) {
      case ActivationKind::crelu:
        out[n] = {std::max(x, T(0)), std::max(y, T(0))};
        break;
      case ActivationKind::zrelu:
        out[n] = (x >= 0 && y >= 0) ? zd[n] : cplx<T>{};
        break;
      case ActivationKind::modrelu: {
        const T r = std::abs(zd[n]);
        const T b = bias_at(n);
        out[n] = (r > 0 && r + b > 0) ? zd[n] * ((r + b) / r) : cplx<T>{};
        break;
      }
      case ActivationKind::cardioid: {
        const T r = std::abs(zd[n]);
        out[n] = r > 0 ? zd[n] * (T(0.5) * (T(1) + x / r)) : cplx<T>{};
        break;
      }
    }
  }

  std::vector<Tensor<T>> parents{z};
  if (has_bias) parents.push_back(bias);
  return cx::make_result<T>(
      "activation", z.shape(), std::move(out), parents, [z, bias, kind, cv](std::span<const cplx<T>> g) {
        const auto zd = z.data();
        const bool gz = z.requires_grad();
        const bool gbias = bias.defined() && bias.requires_grad();
        for (std::size_t n = 0; n < g.size(); ++n) {
          const T x = zd[n].real(), y = zd[n].imag();
          cplx<T> d{};
          switch (kind) {
            case ActivationKind::crelu:
              d = {x > 0 ? g[n].real() : T(0), y > 0 ? g[n].imag() : T(0)};
              break;
            case ActivationKind::zrelu:
              d = (x >= 0 && y >= 0 && (x > 0 || y > 0)) ? g[n] : cplx<T>{};
              break;
            case ActivationKind::modrelu: {
              const T r = std::abs(zd[n]);
              const std::size_t c = bias.numel() == 1 ? 0 : cv.channel(n);
              const T b = bias.data()[c].real();
              if (r > 0 && r + b > 0) {
                const T r3 = r * r * r;
                d = cx::pullback(g[n], 1 + b * y * y / r3, -b * x * y / r3, -b * x * y / r3, 1 + b * x * x / r3);
                if (gbias) bias.impl()->grad_buffer()[c] += cplx<T>((g[n].real() * x + g[n].imag() * y) / r, 0);
              }
              break;
            }
            case ActivationKind::cardioid: {
              const T r = std::abs(zd[n]);
              if (r > 0) {
                const T r3 = 2 * r * r * r;
                d = cx::pullback(g[n], T(0.5) + x * (x * x + 2 * y * y) / r3, -x * x * y / r3, y * y * y / r3,
                                 T(0.5) + x * x * x / r3);
              }
              break;
            }
          }
          if (gz) z.impl()->grad_buffer()[n] += d;
        }
      });
}

template <class T>
Tensor<T> max_pool2d(const Tensor<T>& x, int window, int stride) {
  require_4d(x.shape(), "max_pool2d");
  const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (window < 1 || stride < 1 || std::size_t(window) > H || std::size_t(window) > W)
    throw ShapeError("max_pool2d window " + std::to_string(window) + " exceeds input " + cx::to_string(x.shape()));
  const std::size_t Ho = (H - window) / stride + 1, Wo = (W - window) / stride + 1;
  std::vector<cplx<T>> out(B * C * Ho * Wo);
  std::vector<std::size_t> arg(out.size());
  const auto xd = x.data();
  std::size_t o = 0;
  for (std::size_t bc = 0; bc < B * C; ++bc)
    for (std::size_t oy = 0; oy < Ho; ++oy)
      for (std::size_t ox = 0; ox < Wo; ++ox, ++o) {
        std::size_t best = bc * H * W + oy * stride * W + ox * stride;
        T best_mod = std::norm(xd[best]);
        for (int i = 0; i < window; ++i)
          for (int j = 0; j < window; ++j) {
            const std::size_t idx = bc * H * W + (oy * stride + i) * W + ox * stride + j;
            const T m = std::norm(xd[idx]);
            // strict comparison keeps the lowest flat index on modulus ties
            if (m > best_mod) {
              best_mod = m;
              best = idx;
            }
          }
        out[o] = xd[best];
        arg[o] = best;
      }
  return cx::make_result<T>("max_pool2d", {B, C, Ho, Wo}, std::move(out), {x},
                            [x, arg = std::move(arg)](std::span<const cplx<T>> g) {
                              for (std::size_t n = 0; n < g.size(); ++n) cx::accumulate(x, arg[n], g[n]);
                            });
}

template <class T>
Tensor<T> avg_pool2d(const Tensor<T>& x, int window, int stride) {
  require_4d(x.shape(), "avg_pool2d");
  const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  if (window < 1 || stride < 1 || std::size_t(window) > H || std::size_t(window) > W)
    throw ShapeError("avg_pool2d window " + std::to_string(window) + " exceeds input " + cx::to_string(x.shape()));
  const std::size_t Ho = (H - window) / stride + 1, Wo = (W - window) / stride + 1;
  const T inv = T(1) / T(window * window);
  std::vector<cplx<T>> out(B * C * Ho * Wo);
  const auto xd = x.data();
  std::size_t o = 0;
  for (std::size_t bc = 0; bc < B * C; ++bc)
    for (std::size_t oy = 0; oy < Ho; ++oy)
      for (std::size_t ox = 0; ox < Wo; ++ox, ++o) {
        cplx<T> s{};
        for (int i = 0; i < window; ++i)
          for (int j = 0; j < window; ++j) s += xd[bc * H * W + (oy * stride + i) * W + ox * stride + j];
        out[o] = s * inv;
      }
  return cx::make_result<T>("avg_pool2d", {B, C, Ho, Wo}, std::move(out), {x},
                            [x, B, C, H, W, Ho, Wo, window, stride, inv](std::span<const cplx<T>> g) {
                              if (!x.requires_grad()) return;
                              auto& gx = x.impl()->grad_buffer();
                              std::size_t o = 0;
                              for (std::size_t bc = 0; bc < B * C; ++bc)
                                for (std::size_t oy = 0; oy < Ho; ++oy)
                                  for (std::size_t ox = 0; ox < Wo; ++ox, ++o)
                                    for (int i = 0; i < window; ++i)
                                      for (int j = 0; j < window; ++j)
                                        gx[bc * H * W + (oy * stride + i) * W + ox * stride + j] += g[o] * inv;
                            });
}

template <class T>
Tensor<T> upsample_nearest(const Tensor<T>& x, int factor) {
  require_4d(x.shape(), "upsample_nearest");
  if (factor < 1) throw ShapeError("upsample factor must be >= 1");
  const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t f = std::size_t(factor), Ho = H * f, Wo = W * f;
  std::vector<cplx<T>> out(B * C * Ho * Wo);
  const auto xd = x.data();
  for (std::size_t bc = 0; bc < B * C; ++bc)
    for (std::size_t i = 0; i < Ho; ++i)
      for (std::size_t j = 0; j < Wo; ++j) out[(bc * Ho + i) * Wo + j] = xd[(bc * H + i / f) * W + j / f];
  return cx::make_result<T>("upsample_nearest", {B, C, Ho, Wo}, std::move(out), {x},
                            [x, B, C, H, W, f, Ho, Wo](std::span<const cplx<T>> g) {
                              if (!x.requires_grad()) return;
                              auto& gx = x.impl()->grad_buffer();
                              for (std::size_t bc = 0; bc < B * C; ++bc)
                                for (std::size_t i = 0; i < Ho; ++i)
                                  for (std::size_t j = 0; j < Wo; ++j)
                                    gx[(bc * H + i / f) * W + j / f] += g[(bc * Ho + i) * Wo + j];
                            });
}

namespace {

struct Tap {
  std::size_t i0, i1;
  double w1;  // weight of i1; i0 gets 1 - w1
};

std::vector<Tap> bilinear_taps(std::size_t in, std::size_t f) {
  std::vector<Tap> taps(in * f);
  for (std::size_t o = 0; o < taps.size(); ++o) {
    double src = (double(o) + 0.5) / double(f) - 0.5;
    if (src < 0) src = 0;
    auto i0 = std::size_t(std::floor(src));
    if (i0 > in - 1) i0 = in - 1;
    const std::size_t i1 = std::min(i0 + 1, in - 1);
    taps[o] = {i0, i1, src - double(i0)};
  }
  return taps;
}

}  // namespace

template <class T>
Tensor<T> upsample_bilinear(const Tensor<T>& x, int factor) {
  require_4d(x.shape(), "upsample_bilinear");
  if (factor < 1) throw ShapeError("upsample factor must be >= 1");
  const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
  const std::size_t f = std::size_t(factor), Ho = H * f, Wo = W * f;
  auto ty = bilinear_taps(H, f), tx = bilinear_taps(W, f);
  std::vector<cplx<T>> out(B * C * Ho * Wo);
  const auto xd = x.data();
  for (std::size_t bc = 0; bc < B * C; ++bc) {
    const cplx<T>* p = xd.data() + bc * H * W;
    for (std::size_t i = 0; i < Ho; ++i) {
      const T wy = T(ty[i].w1);
      for (std::size_t j = 0; j < Wo; ++j) {
        const T wx = T(tx[j].w1);
        const auto a = p[ty[i].i0 * W + tx[j].i0], b = p[ty[i].i0 * W + tx[j].i1];
        const auto c = p[ty[i].i1 * W + tx[j].i0], d = p[ty[i].i1 * W + tx[j].i1];
        out[(bc * Ho + i) * Wo + j] = (T(1) - wy) * ((T(1) - wx) * a + wx * b) + wy * ((T(1) - wx) * c + wx * d);
      }
    }
  }
  return cx::make_result<T>("upsample_bilinear", {B, C, Ho, Wo}, std::move(out), {x},
                            [x, B, C, H, W, Ho, Wo, ty, tx](std::span<const cplx<T>> g) {
                              if (!x.requires_grad()) return;
                              auto& gx = x.impl()->grad_buffer();
                              for (std::size_t bc = 0; bc < B * C; ++bc) {
                                cplx<T>* p = gx.data() + bc * H * W;
                                for (std::size_t i = 0; i < Ho; ++i) {
                                  const T wy = T(ty[i].w1);
                                  for (std::size_t j = 0; j < Wo; ++j) {
                                    const T wx = T(tx[j].w1);
                                    const auto gv = g[(bc * Ho + i) * Wo + j];
                                    p[ty[i].i0 * W + tx[j].i0] += (T(1) - wy) * (T(1) - wx) * gv;
                                    p[ty[i].i0 * W + tx[j].i1] += (T(1) - wy) * wx * gv;
                                    p[ty[i].i1 * W + tx[j].i0] += wy * (T(1) - wx) * gv;
                                    p[ty[i].i1 * W + tx[j].i1] += wy * wx * gv;
                                  }
                                }
                              }
                            });
}

template <class T>
Tensor<T> subsample(const Tensor<T>& x, int factor) {
  require_4d(x.shape(), "subsample");
  if (factor < 1) throw ShapeError("subsample factor must be >= 1");
  const std::size_t B = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3), f = std::size_t(factor);
  const std::size_t Ho = (H + f - 1) / f, Wo = (W + f - 1) / f;
  std::vector<cplx<T>> out(B * C * Ho * Wo);
  std::vector<std::size_t> src(out.size());
  const auto xd = x.data();
  for (std::size_t bc = 0, o = 0; bc < B * C; ++bc)
    for (std::size_t i = 0; i < Ho; ++i)
      for (std::size_t j = 0; j < Wo; ++j, ++o) {
        src[o] = (bc * H + i * f) * W + j * f;
        out[o] = xd[src[o]];
      }
  return cx::make_result<T>("subsample", {B, C, Ho, Wo}, std::move(out), {x},
                            [x, src = std::move(src)](std::span<const cplx<T>> g) {
                              for (std::size_t n = 0; n < g.size(); ++n) cx::accumulate(x, src[n], g[n]);
                            });
}

// ---------------------------------------------------------------------------
// Complex batch normalization


template <class T>
ComplexBNStats<T>::ComplexBNStats(std::size_t channels)
    : mean(channels), cov_rr(channels, T(0.5)), cov_ri(channels, T(0)), cov_ii(channels, T(0.5)) {}

template <class T>
RealBNStats<T>::RealBNStats(std::size_t channels) : mean(channels, T(0)), var(channels, T(1)) {}

namespace {

struct Sym2 {
  double rr, ri, ii;
};

struct Mat2 {
  double a, b, c, d;  // [[a, b], [c, d]]
};

// (1/sqrt 2) V^{-1/2} through the closed-form square root of a 2x2 SPD
// matrix: sqrt(V) = (V + sI)/t with s = sqrt(det V), t = sqrt(tr V + 2s).
// The extra 1/sqrt 2 targets a per-component variance of 1/2.
Mat2 whitening_matrix(const Sym2& v) {
  const double det = v.rr * v.ii - v.ri * v.ri;
  if (!std::isfinite(det)) throw NumericError("complex batch norm: non-finite batch covariance");
  if (!(det > 0)) throw InternalError("complex batch norm: covariance is singular after regularization");
  const double s = std::sqrt(det);
  const double t = std::sqrt(v.rr + v.ii + 2 * s);
  const double k = 1.0 / (s * t * std::sqrt(2.0));
  return {(v.ii + s) * k, -v.ri * k, -v.ri * k, (v.rr + s) * k};
}

// Adjoint of V -> (1/sqrt 2) V^{-1/2} in spectral form, using the divided
// differences of f(l) = l^{-1/2}, which stay finite for equal eigenvalues.
Mat2 whitening_adjoint(const Sym2& v, const Mat2& gw) {
  const double phi = 0.5 * std::atan2(2 * v.ri, v.rr - v.ii);
  const double c = std::cos(phi), s = std::sin(phi);
  const double l1 = v.rr * c * c + 2 * v.ri * s * c + v.ii * s * s;
  const double l2 = v.rr * s * s - 2 * v.ri * s * c + v.ii * c * c;
  const double r1 = std::sqrt(l1), r2 = std::sqrt(l2);
  const double f11 = -0.5 / (l1 * r1), f22 = -0.5 / (l2 * r2);
  const double f12 = -1.0 / (r1 * r2 * (r1 + r2));
  // columns of Q are the eigenvectors (c, s) and (-s, c)
  const double q[2][2] = {{c, -s}, {s, c}};
  const double g[2][2] = {{gw.a, gw.b}, {gw.c, gw.d}};
  double m[2][2];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      double acc = 0;
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) acc += q[k][i] * g[k][l] * q[l][j];
      m[i][j] = acc * (i == j ? (i == 0 ? f11 : f22) : f12);
    }
  double r[2][2];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      double acc = 0;
      for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) acc += q[i][k] * m[k][l] * q[j][l];
      r[i][j] = acc / std::sqrt(2.0);
    }
  return {r[0][0], r[0][1], r[1][0], r[1][1]};
}

}  // namespace

template <class T>
Tensor<T> complex_batch_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                             ComplexBNStats<T>& stats, Mode mode, const BNOptions& opt) {
  const auto cv = channel_view(x);
  const std::size_t C = cv.C, N = cv.B * cv.inner;
  if (gamma.numel() != 4 * C || beta.numel() != C)
    throw ShapeError("complex batch norm parameters do not match " + std::to_string(C) + " channels");
  if (stats.mean.size() != C) throw ShapeError("complex batch norm running statistics have wrong size");
  if (mode == Mode::train && N < 2)
    throw ContractViolation("complex batch norm needs at least 2 samples per channel in train mode");

  const auto xd = x.data();
  const auto gd = gamma.data();
  const auto bd = beta.data();
  auto index = [cv, C](std::size_t c, std::size_t i) {
    return ((i / cv.inner) * C + c) * cv.inner + i % cv.inner;
  };

  std::vector<cplx<double>> mu(C);
  std::vector<Sym2> vreg(C);
  std::vector<Mat2> wm(C);
  std::vector<cplx<T>> xt(xd.size());
  std::vector<cplx<T>> out(xd.size());
  for (std::size_t c = 0; c < C; ++c) {
    if (mode == Mode::train) {
      cplx<double> m{};
      for (std::size_t i = 0; i < N; ++i) m += cplx<double>(xd[index(c, i)]);
      m /= double(N);
      Sym2 v{0, 0, 0};
      for (std::size_t i = 0; i < N; ++i) {
        const auto z = xd[index(c, i)];
        const double a = double(z.real()) - m.real(), b = double(z.imag()) - m.imag();
        v.rr += a * a;
        v.ri += a * b;
        v.ii += b * b;
      }
      v = {v.rr / double(N), v.ri / double(N), v.ii / double(N)};
      const double k = opt.momentum;
      stats.mean[c] = cplx<T>((1 - k) * cplx<double>(stats.mean[c]) + k * m);
      stats.cov_rr[c] = T((1 - k) * stats.cov_rr[c] + k * v.rr);
      stats.cov_ri[c] = T((1 - k) * stats.cov_ri[c] + k * v.ri);
      stats.cov_ii[c] = T((1 - k) * stats.cov_ii[c] + k * v.ii);
      mu[c] = m;
      vreg[c] = {v.rr + opt.eps, v.ri, v.ii + opt.eps};
    } else {
      mu[c] = cplx<double>(stats.mean[c]);
      vreg[c] = {double(stats.cov_rr[c]) + opt.eps, double(stats.cov_ri[c]), double(stats.cov_ii[c]) + opt.eps};
    }
    wm[c] = whitening_matrix(vreg[c]);
    const Mat2& w = wm[c];
    const double g00 = gd[4 * c].real(), g01 = gd[4 * c + 1].real(), g10 = gd[4 * c + 2].real(),
                 g11 = gd[4 * c + 3].real();
    const cplx<double> b0(bd[c]);
    for (std::size_t i = 0; i < N; ++i) {
      const std::size_t n = index(c, i);
      const double a = double(xd[n].real()) - mu[c].real(), b = double(xd[n].imag()) - mu[c].imag();
      const double tr = w.a * a + w.b * b, ti = w.c * a + w.d * b;
      xt[n] = cplx<T>(T(tr), T(ti));
      out[n] = cplx<T>(T(g00 * tr + g01 * ti + b0.real()), T(g10 * tr + g11 * ti + b0.imag()));
    }
  }

  return cx::make_result<T>(
      "complex_batch_norm", x.shape(), std::move(out), {x, gamma, beta},
      [x, gamma, beta, mode, C, N, index, mu = std::move(mu), vreg = std::move(vreg), wm = std::move(wm),
       xt = std::move(xt)](std::span<const cplx<T>> g) {
        const auto xd = x.data();
        const auto gd = gamma.data();
        std::vector<double> hr(N), hi(N), dr(N), di(N);
        for (std::size_t c = 0; c < C; ++c) {
          const double g00 = gd[4 * c].real(), g01 = gd[4 * c + 1].real(), g10 = gd[4 * c + 2].real(),
                       g11 = gd[4 * c + 3].real();
          double dg[4] = {0, 0, 0, 0};
          cplx<double> db{};
          Mat2 gw{0, 0, 0, 0};
          for (std::size_t i = 0; i < N; ++i) {
            const std::size_t n = index(c, i);
            const double gr = g[n].real(), gi = g[n].imag();
            const double tr = xt[n].real(), ti = xt[n].imag();
            dg[0] += gr * tr;
            dg[1] += gr * ti;
            dg[2] += gi * tr;
            dg[3] += gi * ti;
            db += cplx<double>(gr, gi);
            hr[i] = g00 * gr + g10 * gi;
            hi[i] = g01 * gr + g11 * gi;
            dr[i] = double(xd[n].real()) - mu[c].real();
            di[i] = double(xd[n].imag()) - mu[c].imag();
            gw.a += hr[i] * dr[i];
            gw.b += hr[i] * di[i];
            gw.c += hi[i] * dr[i];
            gw.d += hi[i] * di[i];
          }
          if (gamma.requires_grad()) {
            auto& gg = gamma.impl()->grad_buffer();
            for (int k = 0; k < 4; ++k) gg[4 * c + k] += cplx<T>(T(dg[k]), 0);
          }
          if (beta.requires_grad()) beta.impl()->grad_buffer()[c] += cplx<T>(db);
          if (!x.requires_grad()) continue;
          auto& gx = x.impl()->grad_buffer();
          const Mat2& w = wm[c];
          if (mode == Mode::eval) {
            for (std::size_t i = 0; i < N; ++i)
              gx[index(c, i)] += cplx<T>(T(w.a * hr[i] + w.c * hi[i]), T(w.b * hr[i] + w.d * hi[i]));
            continue;
          }
          const Mat2 gv = whitening_adjoint(vreg[c], gw);
          const double s00 = 2 * gv.a / double(N), s01 = (gv.b + gv.c) / double(N), s11 = 2 * gv.d / double(N);
          double mr = 0, mi = 0;
          for (std::size_t i = 0; i < N; ++i) {
            const double ar = w.a * hr[i] + w.c * hi[i] + s00 * dr[i] + s01 * di[i];
            const double ai = w.b * hr[i] + w.d * hi[i] + s01 * dr[i] + s11 * di[i];
            hr[i] = ar;
            hi[i] = ai;
            mr += ar;
            mi += ai;
          }
          mr /= double(N);
          mi /= double(N);
          for (std::size_t i = 0; i < N; ++i) gx[index(c, i)] += cplx<T>(T(hr[i] - mr), T(hi[i] - mi));
        }
      });
}

template <class T>
Tensor<T> complex_whiten(const Tensor<T>& x, double eps) {
  const auto cv = channel_view(x);
  std::vector<cplx<T>> gamma(4 * cv.C);
  for (std::size_t c = 0; c < cv.C; ++c) {
    gamma[4 * c] = cplx<T>(1, 0);
    gamma[4 * c + 3] = cplx<T>(1, 0);
  }
  ComplexBNStats<T> scratch(cv.C);
  BNOptions opt;
  opt.eps = eps;
  return complex_batch_norm(x, Tensor<T>({cv.C, 4}, std::move(gamma)), Tensor<T>::zeros({cv.C}), scratch,
                            Mode::train, opt);
}

template <class T>
Tensor<T> real_batch_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                          RealBNStats<T>& stats, Mode mode, const BNOptions& opt) {
  const auto cv = channel_view(x);
  const std::size_t C = cv.C, N = cv.B * cv.inner;
  if (gamma.numel() != C || beta.numel() != C)
    throw ShapeError("batch norm parameters do not match " + std::to_string(C) + " channels");
  if (stats.mean.size() != C) throw ShapeError("batch norm running statistics have wrong size");
  if (mode == Mode::train && N < 2)
    throw ContractViolation("batch norm needs at least 2 samples per channel in train mode");
  auto index = [cv, C](std::size_t c, std::size_t i) {
    return ((i / cv.inner) * C + c) * cv.inner + i % cv.inner;
  };
  const auto xd = x.data();
  std::vector<double> inv_std(C);
  std::vector<cplx<T>> xhat(xd.size()), out(xd.size());
  for (std::size_t c = 0; c < C; ++c) {
    double m, v;
    if (mode == Mode::train) {
      m = 0;
      for (std::size_t i = 0; i < N; ++i) m += double(xd[index(c, i)].real());
      m /= double(N);
      v = 0;
      for (std::size_t i = 0; i < N; ++i) {
        const double d = double(xd[index(c, i)].real()) - m;
        v += d * d;
      }
      v /= double(N);
      stats.mean[c] = T((1 - opt.momentum) * stats.mean[c] + opt.momentum * m);
      stats.var[c] = T((1 - opt.momentum) * stats.var[c] + opt.momentum * v);
    } else {
      m = double(stats.mean[c]);
      v = double(stats.var[c]);
    }
    inv_std[c] = 1.0 / std::sqrt(v + opt.eps);
    const double ga = double(gamma.data()[c].real()), be = double(beta.data()[c].real());
    for (std::size_t i = 0; i < N; ++i) {
      const std::size_t n = index(c, i);
      const double h = (double(xd[n].real()) - m) * inv_std[c];
      xhat[n] = cplx<T>(T(h), 0);
      out[n] = cplx<T>(T(ga * h + be), 0);
    }
  }
  return cx::make_result<T>(
      "real_batch_norm", x.shape(), std::move(out), {x, gamma, beta},
      [x, gamma, beta, mode, C, N, index, inv_std = std::move(inv_std), xhat = std::move(xhat)](
          std::span<const cplx<T>> g) {
        for (std::size_t c = 0; c < C; ++c) {
          const double ga = double(gamma.data()[c].real());
          double sg = 0, sgh = 0;
          for (std::size_t i = 0; i < N; ++i) {
            const std::size_t n = index(c, i);
            sg += double(g[n].real());
            sgh += double(g[n].real()) * double(xhat[n].real());
          }
          if (gamma.requires_grad()) gamma.impl()->grad_buffer()[c] += cplx<T>(T(sgh), 0);
          if (beta.requires_grad()) beta.impl()->grad_buffer()[c] += cplx<T>(T(sg), 0);
          if (!x.requires_grad()) continue;
          auto& gx = x.impl()->grad_buffer();
          const double mg = ga * sg / double(N), mgh = ga * sgh / double(N);
          for (std::size_t i = 0; i < N; ++i) {
            const std::size_t n = index(c, i);
            const double gh = ga * double(g[n].real());
            const double v = mode == Mode::train ? inv_std[c] * (gh - mg - double(xhat[n].real()) * mgh)
                                                 : inv_std[c] * gh;
            gx[n] += cplx<T>(T(v), 0);
          }
        }
      });
}

template <class T>
Tensor<T> mse_loss(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape())
    throw ShapeError("mse_loss shapes differ: " + cx::to_string(a.shape()) + " vs " + cx::to_string(b.shape()));
  const auto ad = a.data(), bd = b.data();
  double s = 0;
  for (std::size_t n = 0; n < ad.size(); ++n) s += double(std::norm(ad[n] - bd[n]));
  const double N = double(ad.size());
  return cx::make_result<T>("mse_loss", {}, {cplx<T>(T(s / N), 0)}, {a, b}, [a, b, N](std::span<const cplx<T>> g) {
    const auto ad = a.data(), bd = b.data();
    const T k = T(2 * double(g[0].real()) / N);
    for (std::size_t n = 0; n < ad.size(); ++n) {
      const auto d = (ad[n] - bd[n]) * k;
      cx::accumulate(a, n, d);
      cx::accumulate(b, n, -d);
    }
  });
}

template <class T>
Tensor<T> stack_re_im(const Tensor<T>& x) {
  const auto cv = channel_view(x);
  Shape shape = x.shape();
  if (x.rank() == 1) shape[0] *= 2;
  else shape[1] *= 2;
  const auto xd = x.data();
  std::vector<cplx<T>> out(2 * xd.size());
  for (std::size_t b = 0; b < cv.B; ++b)
    for (std::size_t c = 0; c < cv.C; ++c)
      for (std::size_t k = 0; k < cv.inner; ++k) {
        const auto z = xd[(b * cv.C + c) * cv.inner + k];
        out[(b * 2 * cv.C + c) * cv.inner + k] = cplx<T>(z.real(), 0);
        out[(b * 2 * cv.C + cv.C + c) * cv.inner + k] = cplx<T>(z.imag(), 0);
      }
  return cx::make_result<T>("stack_re_im", std::move(shape), std::move(out), {x}, [x, cv](std::span<const cplx<T>> g) {
    if (!x.requires_grad()) return;
    auto& gx = x.impl()->grad_buffer();
    for (std::size_t b = 0; b < cv.B; ++b)
      for (std::size_t c = 0; c < cv.C; ++c)
        for (std::size_t k = 0; k < cv.inner; ++k)
          gx[(b * cv.C + c) * cv.inner + k] += cplx<T>(g[(b * 2 * cv.C + c) * cv.inner + k].real(),
                                                       g[(b * 2 * cv.C + cv.C + c) * cv.inner + k].real());
  });
}

template <class T>
Tensor<T> combine_re_im(const Tensor<T>& x) {
  auto cv = channel_view(x);
  if (cv.C % 2) throw ShapeError("combine_re_im needs an even channel count");
  cv.C /= 2;
  Shape shape = x.shape();
  if (x.rank() == 1) shape[0] /= 2;
  else shape[1] /= 2;
  const auto xd = x.data();
  std::vector<cplx<T>> out(xd.size() / 2);
  for (std::size_t b = 0; b < cv.B; ++b)
    for (std::size_t c = 0; c < cv.C; ++c)
      for (std::size_t k = 0; k < cv.inner; ++k)
        out[(b * cv.C + c) * cv.inner + k] = cplx<T>(xd[(b * 2 * cv.C + c) * cv.inner + k].real(),
                                                     xd[(b * 2 * cv.C + cv.C + c) * cv.inner + k].real());
  return cx::make_result<T>("combine_re_im", std::move(shape), std::move(out), {x}, [x, cv](std::span<const cplx<T>> g) {
    if (!x.requires_grad()) return;
    auto& gx = x.impl()->grad_buffer();
    for (std::size_t b = 0; b < cv.B; ++b)
      for (std::size_t c = 0; c < cv.C; ++c)
        for (std::size_t k = 0; k < cv.inner; ++k) {
          const auto gv = g[(b * cv.C + c) * cv.inner + k];
          gx[(b * 2 * cv.C + c) * cv.inner + k] += cplx<T>(gv.real(), 0);
          gx[(b * 2 * cv.C + cv.C + c) * cv.inner + k] += cplx<T>(gv.imag(), 0);
        }
  });
}

#define POLSAR_NN_INSTANTIATE(T)                                                                          \
  template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, int, int, Field);      \
  template Tensor<T> linear(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Field);                \
  template Tensor<T> activation(const Tensor<T>&, ActivationKind, const Tensor<T>&);                     \
  template Tensor<T> max_pool2d(const Tensor<T>&, int, int);                                             \
  template Tensor<T> avg_pool2d(const Tensor<T>&, int, int);                                             \
  template Tensor<T> upsample_nearest(const Tensor<T>&, int);                                            \
  template Tensor<T> upsample_bilinear(const Tensor<T>&, int);                                           \
  template Tensor<T> subsample(const Tensor<T>&, int);                                                   \
  template struct ComplexBNStats<T>;                                                                     \
  template struct RealBNStats<T>;                                                                        \
  template Tensor<T> complex_batch_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,            \
                                        ComplexBNStats<T>&, Mode, const BNOptions&);                     \
  template Tensor<T> complex_whiten(const Tensor<T>&, double);                                           \
  template Tensor<T> real_batch_norm(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, RealBNStats<T>&, \
                                     Mode, const BNOptions&);                                            \
  template Tensor<T> mse_loss(const Tensor<T>&, const Tensor<T>&);                                       \
  template Tensor<T> stack_re_im(const Tensor<T>&);                                                      \
  template Tensor<T> combine_re_im(const Tensor<T>&);

POLSAR_NN_INSTANTIATE(float)
POLSAR_NN_INSTANTIATE(double)

}  // namespace polsar::nn
