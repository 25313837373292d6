#pragma once

#include <optional>
#include <string_view>

#include "polsar/cxcore/tensor.hpp"

namespace polsar::nn {

using cx::cplx;
using cx::Shape;
using cx::Tensor;

// Arithmetic field of a layer. Real layers ignore imaginary parts of their
// inputs/weights and emit zero imaginary parts; the dual-RVNN baseline is
// assembled from them.
enum class Field { complex, real };

enum class ActivationKind { crelu, cardioid, modrelu, zrelu };

ActivationKind parse_activation(std::string_view s);
std::string_view to_string(ActivationKind k);

enum class Mode { train, eval };

/// Channel-summed cross-correlation of a B x Cin x H x W input with a
/// Cout x Cin x k x k kernel. Output extent floor((H + 2 pad - k) / stride) + 1.
template <class T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, int stride,
                 int padding, Field field = Field::complex);

/// W z + beta for z of shape (n) or (B, n); W is m x n, beta is (m).
template <class T>
Tensor<T> linear(const Tensor<T>& z, const Tensor<T>& weight, const Tensor<T>& bias,
                 Field field = Field::complex);

/// Elementwise complex activation. `bias` is the per-channel (dim 1) real
/// modReLU offset and must be defined iff kind == modrelu.
template <class T>
Tensor<T> activation(const Tensor<T>& z, ActivationKind kind, const Tensor<T>& bias = {});

template <class T>
Tensor<T> max_pool2d(const Tensor<T>& x, int window, int stride);
template <class T>
Tensor<T> avg_pool2d(const Tensor<T>& x, int window, int stride);

template <class T>
Tensor<T> upsample_nearest(const Tensor<T>& x, int factor);
// Half-pixel-centred bilinear interpolation, Re and Im independently.
template <class T>
Tensor<T> upsample_bilinear(const Tensor<T>& x, int factor);

/// Keeps every `factor`-th sample along both spatial axes.
template <class T>
Tensor<T> subsample(const Tensor<T>& x, int factor);

/// Running statistics for complex batch normalization, per channel.
template <class T>
struct ComplexBNStats {
  std::vector<cplx<T>> mean;
  // 2x2 covariance of (Re, Im), unregularized
  std::vector<T> cov_rr, cov_ri, cov_ii;
  explicit ComplexBNStats(std::size_t channels = 0);
};

struct BNOptions {
  double eps = 1e-5;
  double momentum = 0.1;
};

/// Complex batch normalization over every dim but 1. Whitens the (Re, Im)
/// pairs so that E|z~|^2 = 1 and E[z~ z~] = 0, then applies beta + Gamma x~.
/// `gamma` is C x 4 real (row-major 2x2), `beta` is C complex.
template <class T>
Tensor<T> complex_batch_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                             ComplexBNStats<T>& stats, Mode mode, const BNOptions& opt = {});

/// Whitening half of complex_batch_norm without the affine map or running
/// statistics (train-mode batch statistics only).
template <class T>
Tensor<T> complex_whiten(const Tensor<T>& x, double eps = 1e-5);

template <class T>
struct RealBNStats {
  std::vector<T> mean;
  std::vector<T> var;
  explicit RealBNStats(std::size_t channels = 0);
};

/// Standard real batch normalization on the real parts; gamma, beta are C real.
template <class T>
Tensor<T> real_batch_norm(const Tensor<T>& x, const Tensor<T>& gamma, const Tensor<T>& beta,
                          RealBNStats<T>& stats, Mode mode, const BNOptions& opt = {});

/// mean |a - b|^2, a real rank-0 tensor.
template <class T>
Tensor<T> mse_loss(const Tensor<T>& a, const Tensor<T>& b);

/// B x C x ... complex -> B x 2C x ... real (Re channels first, then Im).
template <class T>
Tensor<T> stack_re_im(const Tensor<T>& x);
/// Inverse of stack_re_im: B x 2C x ... real -> B x C x ... complex.
template <class T>
Tensor<T> combine_re_im(const Tensor<T>& x);

}  // namespace polsar::nn
