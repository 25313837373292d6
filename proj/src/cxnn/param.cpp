#include "polsar/cxnn/param.hpp"

#include <cmath>

namespace polsar::nn {

InitScheme parse_init_scheme(std::string_view s) {
  if (s == "complex-he-normal") return InitScheme::complex_he_normal;
  if (s == "complex-he-uniform") return InitScheme::complex_he_uniform;
  if (s == "complex-xavier-normal") return InitScheme::complex_xavier_normal;
  if (s == "complex-xavier-uniform") return InitScheme::complex_xavier_uniform;
  if (s == "he-normal") return InitScheme::real_he_normal;
  if (s == "xavier-normal") return InitScheme::real_xavier_normal;
  throw ConfigError("unknown init scheme '" + std::string(s) + "'");
}

std::string_view to_string(InitScheme s) {
  switch (s) {
    case InitScheme::complex_he_normal: return "complex-he-normal";
    case InitScheme::complex_he_uniform: return "complex-he-uniform";
    case InitScheme::complex_xavier_normal: return "complex-xavier-normal";
    case InitScheme::complex_xavier_uniform: return "complex-xavier-uniform";
    case InitScheme::real_he_normal: return "he-normal";
    case InitScheme::real_xavier_normal: return "xavier-normal";
    case InitScheme::zeros: return "zeros";
    case InitScheme::identity2x2: return "identity2x2";
    case InitScheme::ones: return "ones";
  }
  return "?";
}

InitScheme real_counterpart(InitScheme s) {
  switch (s) {
    case InitScheme::complex_xavier_normal:
    case InitScheme::complex_xavier_uniform:
    case InitScheme::real_xavier_normal: return InitScheme::real_xavier_normal;
    default: return InitScheme::real_he_normal;
  }
}

template <class T>
void LayerParam<T>::reset_state() {
  adam_m.assign(value.numel(), cplx<T>{});
  adam_v.assign(value.numel(), cplx<T>{});
}

template <class T>
LayerParam<T> init_param(std::string name, const Shape& shape, InitScheme scheme, std::size_t fan_in,
                         std::size_t fan_out, Rng& rng, bool real_valued) {
  const std::size_t n = cx::numel(shape);
  std::vector<cplx<T>> data(n);
  auto normal = [&](double sigma) {
    std::normal_distribution<double> d(0.0, sigma);
    for (auto& v : data) {
      const double re = d(rng);
      const double im = real_valued ? 0.0 : d(rng);
      v = cplx<T>(T(re), T(im));
    }
  };
  auto uniform = [&](double bound) {
    std::uniform_real_distribution<double> d(-bound, bound);
    for (auto& v : data) {
      const double re = d(rng);
      const double im = real_valued ? 0.0 : d(rng);
      v = cplx<T>(T(re), T(im));
    }
  };
  const bool needs_fans = scheme == InitScheme::complex_he_normal || scheme == InitScheme::complex_he_uniform ||
                          scheme == InitScheme::complex_xavier_normal ||
                          scheme == InitScheme::complex_xavier_uniform || scheme == InitScheme::real_he_normal ||
                          scheme == InitScheme::real_xavier_normal;
  if (needs_fans && (fan_in == 0 || fan_out == 0))
    throw ConfigError("init of '" + name + "' needs positive fan-in and fan-out");
  const double fi = double(fan_in), fo = double(fan_out);
  switch (scheme) {
    case InitScheme::complex_he_normal: normal(std::sqrt(1.0 / fi)); break;
    case InitScheme::complex_he_uniform: uniform(std::sqrt(3.0 / fi)); break;
    case InitScheme::complex_xavier_normal: normal(std::sqrt(1.0 / (fi + fo))); break;
    // symmetric bounds; the published upper bound sqrt(3/fan_in) reads as a typo
    case InitScheme::complex_xavier_uniform: uniform(std::sqrt(3.0 / (fi + fo))); break;
    case InitScheme::real_he_normal: {
      std::normal_distribution<double> d(0.0, std::sqrt(2.0 / fi));
      for (auto& v : data) v = cplx<T>(T(d(rng)), 0);
      real_valued = true;
      break;
    }
    case InitScheme::real_xavier_normal: {
      std::normal_distribution<double> d(0.0, std::sqrt(2.0 / (fi + fo)));
      for (auto& v : data) v = cplx<T>(T(d(rng)), 0);
      real_valued = true;
      break;
    }
    case InitScheme::zeros: break;
    case InitScheme::ones:
      for (auto& v : data) v = cplx<T>(1, 0);
      break;
    case InitScheme::identity2x2:
      if (n % 4) throw ShapeError("identity2x2 init needs a multiple of 4 entries");
      for (std::size_t c = 0; c < n; c += 4) {
        data[c] = cplx<T>(1, 0);
        data[c + 3] = cplx<T>(1, 0);
      }
      break;
  }
  LayerParam<T> p;
  p.name = std::move(name);
  p.value = Tensor<T>(shape, std::move(data), true);
  p.scheme = scheme;
  p.real_valued = real_valued;
  p.reset_state();
  return p;
}

template struct LayerParam<float>;
template struct LayerParam<double>;
template LayerParam<float> init_param(std::string, const Shape&, InitScheme, std::size_t, std::size_t, Rng&, bool);
template LayerParam<double> init_param(std::string, const Shape&, InitScheme, std::size_t, std::size_t, Rng&, bool);

}  // namespace polsar::nn
