#include "polsar/cxnn/optim.hpp"

#include <cmath>

namespace polsar::nn {

template <class T>
void adamw_step(const ParamList<T>& params, const AdamWOptions& opt, std::uint64_t t) {
  if (t < 1) throw ContractViolation("adamw_step needs t >= 1");
  for (const auto* p : params) {
    if (!p->value.has_grad()) continue;
    for (const auto& g : p->value.grad())
      if (!std::isfinite(g.real()) || !std::isfinite(g.imag()))
        throw NumericError("non-finite gradient in parameter '" + p->name + "'; step aborted");
  }
  const double c1 = 1 - std::pow(opt.beta1, double(t));
  const double c2 = 1 - std::pow(opt.beta2, double(t));
  const double decay = 1 - opt.lr * opt.weight_decay;
  auto update = [&](double w, double g, T& m, T& v) {
    const double mn = opt.beta1 * double(m) + (1 - opt.beta1) * g;
    const double vn = opt.beta2 * double(v) + (1 - opt.beta2) * g * g;
    m = T(mn);
    v = T(vn);
    return w * decay - opt.lr * (mn / c1) / (std::sqrt(vn / c2) + opt.eps);
  };
  for (auto* p : params) {
    auto w = p->value.mutable_data();
    const auto g = p->value.has_grad() ? p->value.grad() : std::span<const cplx<T>>{};
    if (p->adam_m.size() != w.size()) p->reset_state();
    for (std::size_t i = 0; i < w.size(); ++i) {
      const cplx<T> gi = g.empty() ? cplx<T>{} : g[i];
      T mr = p->adam_m[i].real(), mi = p->adam_m[i].imag();
      T vr = p->adam_v[i].real(), vi = p->adam_v[i].imag();
      const double re = update(double(w[i].real()), double(gi.real()), mr, vr);
      double im = 0;
      if (!p->real_valued) im = update(double(w[i].imag()), double(gi.imag()), mi, vi);
      w[i] = cplx<T>(T(re), T(im));
      p->adam_m[i] = cplx<T>(mr, mi);
      p->adam_v[i] = cplx<T>(vr, vi);
    }
  }
}

template void adamw_step(const ParamList<float>&, const AdamWOptions&, std::uint64_t);
template void adamw_step(const ParamList<double>&, const AdamWOptions&, std::uint64_t);

}  // namespace polsar::nn
