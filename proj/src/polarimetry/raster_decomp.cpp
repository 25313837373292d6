#include "polsar/polarimetry/raster_decomp.hpp"

#include <algorithm>
#include <string>

#include "polsar/errors.hpp"
#include "polsar/parallel.hpp"

namespace polsar::pol {

Decomposition parse_decomposition(std::string_view s) {
  if (s == "pauli") return Decomposition::pauli;
  if (s == "krogager") return Decomposition::krogager;
  if (s == "cameron") return Decomposition::cameron;
  if (s == "halpha" || s == "h-alpha") return Decomposition::halpha;
  throw ConfigError("unknown decomposition '" + std::string(s) + "'");
}

std::string_view to_string(Decomposition d) {
  switch (d) {
    case Decomposition::pauli: return "pauli";
    case Decomposition::krogager: return "krogager";
    case Decomposition::cameron: return "cameron";
    case Decomposition::halpha: return "halpha";
  }
  return "?";
}

SinclairPixel pixel_at(const data::ComplexRaster& img, std::size_t r, std::size_t c) {
  if (img.channels == 4) return {img.at(r, c, 0), img.at(r, c, 1), img.at(r, c, 2), img.at(r, c, 3)};
  return SinclairPixel::reciprocal(img.at(r, c, 0), img.at(r, c, 1), img.at(r, c, 2));
}

std::vector<PauliVector> pauli_field(const data::ComplexRaster& img) {
  std::vector<PauliVector> f(img.pixels());
  for (std::size_t r = 0; r < img.height; ++r)
    for (std::size_t c = 0; c < img.width; ++c) f[r * img.width + c] = pauli_decompose(pixel_at(img, r, c));
  return f;
}

namespace {

std::uint8_t argmax3(double a, double b, double c) {
  if (a >= b && a >= c) return 1;
  return b >= c ? 2 : 3;
}

}  // namespace

DecompositionMap decompose_raster(const data::ComplexRaster& img, Decomposition which, const DecomposeOptions& opt) {
  if (img.channels != 3 && img.channels != 4)
    throw DataError("decomposition needs a 3- or 4-channel raster, got " + std::to_string(img.channels));
  const std::size_t H = img.height, W = img.width;
  DecompositionMap m;
  m.which = which;
  m.labels = data::LabelPlane(H, W);
  m.labels.meta = {{"decomposition", std::string(to_string(which))}};
  const std::size_t nch = which == Decomposition::halpha ? 5 : 3;
  m.values = data::ComplexRaster(H, W, nch, data::Dtype::c128);
  m.values.meta = m.labels.meta;

  if (which == Decomposition::halpha) {
    opt.zones.validate();
    const auto field = pauli_field(img);
    const auto scm = boxcar_scm(field, H, W, opt.window);
    m.halpha.resize(H * W);
    parallel_for(H, [&](std::size_t r) {
      for (std::size_t c = 0; c < W; ++c) {
        const std::size_t i = r * W + c;
        HAlphaResult res;
        try {
          res = h_alpha(scm[i], opt.zones);
        } catch (const DataError&) {
          res = HAlphaResult{};
        }
        m.halpha[i] = res;
        m.labels.data[i] = std::uint8_t(res.zone);
        m.values.at(r, c, 0) = res.entropy;
        m.values.at(r, c, 1) = res.alpha_mean;
        for (int k = 0; k < 3; ++k) m.values.at(r, c, 2 + k) = res.eigenvalues[k];
      }
    }, opt.workers);
    return m;
  }

  parallel_for(H, [&](std::size_t r) {
    for (std::size_t c = 0; c < W; ++c) {
      const SinclairPixel s = pixel_at(img, r, c);
      const std::size_t i = r * W + c;
      if (!s.finite() || !(s.span() > 0)) continue;
      switch (which) {
        case Decomposition::pauli: {
          const auto k = pauli_decompose(s);
          m.values.at(r, c, 0) = k.alpha;
          m.values.at(r, c, 1) = k.beta;
          m.values.at(r, c, 2) = k.gamma;
          m.labels.data[i] = argmax3(std::norm(k.alpha), std::norm(k.beta), std::norm(k.gamma));
          break;
        }
        case Decomposition::krogager: {
          const cd x = 0.5 * (s.hv + s.vh);
          const auto k = krogager_decompose(SinclairPixel::reciprocal(s.hh, x, s.vv));
          m.values.at(r, c, 0) = k.k_s;
          m.values.at(r, c, 1) = k.k_d;
          m.values.at(r, c, 2) = k.k_h;
          m.labels.data[i] = argmax3(k.k_s, k.k_d, k.k_h);
          break;
        }
        case Decomposition::cameron: {
          const auto res = cameron_classify(s, opt.cameron);
          m.values.at(r, c, 0) = res.rec_angle;
          m.values.at(r, c, 1) = res.sym_angle;
          m.values.at(r, c, 2) = res.z;
          m.labels.data[i] = std::uint8_t(res.cls);
          break;
        }
        case Decomposition::halpha: break;
      }
    }
  }, opt.workers);
  return m;
}

void save_decomposition(const std::filesystem::path& stem, const DecompositionMap& m) {
  data::write_raster(stem.string() + ".cplxr", m.values);
  data::write_labels(stem.string() + ".labels.cplxr", m.labels);
}

}  // namespace polsar::pol
