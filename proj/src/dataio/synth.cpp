#include "polsar/dataio/synth.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "polsar/errors.hpp"

namespace polsar::data {

namespace {

const cd J(0, 1);

// T = L L^H via the eigendecomposition, valid for singular T too
Eigen::Matrix3cd psd_sqrt(const pol::Coherency& t) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> es(0.5 * (t + t.adjoint()));
  Eigen::Vector3d d = es.eigenvalues();
  const double scale = std::max(1.0, d.cwiseAbs().maxCoeff());
  for (int i = 0; i < 3; ++i) {
    if (d(i) < -1e-9 * scale) throw ConfigError("clutter coherency matrix is not positive semi-definite");
    d(i) = std::sqrt(std::max(0.0, d(i)));
  }
  return es.eigenvectors() * d.asDiagonal();
}

}  // namespace

std::string_view to_string(Mechanism m) {
  switch (m) {
    case Mechanism::sphere: return "sphere";
    case Mechanism::dihedral: return "dihedral";
    case Mechanism::helix: return "helix";
    case Mechanism::clutter: return "clutter";
  }
  return "?";
}

Mechanism parse_mechanism(std::string_view s) {
  if (s == "sphere") return Mechanism::sphere;
  if (s == "dihedral") return Mechanism::dihedral;
  if (s == "helix") return Mechanism::helix;
  if (s == "clutter") return Mechanism::clutter;
  throw ConfigError("unknown mechanism '" + std::string(s) + "'");
}

void SynthSpec::validate() const {
  if (height == 0 || width == 0) throw ConfigError("synthetic raster must be non-empty");
  if (regions.empty()) throw ConfigError("synthetic scene needs at least one region");
  if (regions.size() > 255) throw ConfigError("at most 255 regions");
  if (cells < 0) throw ConfigError("cells must be >= 0");
  if (!(noise_sigma >= 0)) throw ConfigError("noise sigma must be >= 0");
  if (dtype == Dtype::u8) throw ConfigError("synthetic raster needs a complex dtype");
  for (const auto& r : regions) {
    if (!(r.power > 0)) throw ConfigError("region power must be > 0");
    if (r.mechanism == Mechanism::clutter) {
      psd_sqrt(r.t);
      if (!(r.t.trace().real() > 0)) throw ConfigError("clutter coherency must have positive trace");
    }
  }
}

pol::SinclairPixel canonical_matrix(const Region& r) {
  pol::SinclairPixel s;
  switch (r.mechanism) {
    case Mechanism::sphere: s = pol::SinclairPixel::reciprocal(1, 0, 1); break;
    case Mechanism::dihedral: {
      const double c = std::cos(2 * r.theta), n = std::sin(2 * r.theta);
      s = pol::SinclairPixel::reciprocal(c, n, -c);
      break;
    }
    case Mechanism::helix:
      s = r.hand == pol::Helicity::right ? pol::SinclairPixel::reciprocal(1, -J, -1)
                                         : pol::SinclairPixel::reciprocal(1, J, -1);
      break;
    case Mechanism::clutter: throw ContractViolation("clutter has no canonical scattering matrix");
  }
  const double k = 1 / std::sqrt(s.span());
  return {k * s.hh, k * s.hv, k * s.vh, k * s.vv};
}

pol::Coherency region_coherency(const Region& r) {
  if (r.mechanism == Mechanism::clutter) return r.t;
  const auto k = pol::pauli_decompose(canonical_matrix(r));
  const Eigen::Vector3cd v(k.alpha, k.beta, k.gamma);
  return r.power * v * v.adjoint();
}

SynthResult synthesize(const SynthSpec& spec, const pol::ZoneTable& zones) {
  spec.validate();
  const std::size_t H = spec.height, W = spec.width;
  const std::size_t ncells = spec.cells > 0 ? std::size_t(spec.cells) : spec.regions.size();
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> uni(0, 1);
  std::normal_distribution<double> gauss(0, 1);

  std::vector<std::array<double, 2>> sites(ncells);
  for (auto& s : sites) s = {uni(rng) * double(H), uni(rng) * double(W)};

  // per-region draw parameters
  struct Prepared {
    pol::SinclairPixel s;
    Eigen::Matrix3cd l;
    double amp = 1;
    cd phase = 1;
  };
  std::vector<Prepared> prep(spec.regions.size());
  std::vector<std::uint8_t> cam_label(spec.regions.size()), zone_label(spec.regions.size());
  for (std::size_t i = 0; i < spec.regions.size(); ++i) {
    const auto& r = spec.regions[i];
    auto& p = prep[i];
    p.phase = std::polar(1.0, (uni(rng) * 2 - 1) * std::numbers::pi);
    if (r.mechanism == Mechanism::clutter) {
      p.l = psd_sqrt(r.t);
      p.amp = std::sqrt(r.power / r.t.trace().real());
      cam_label[i] = 0;
    } else {
      p.s = canonical_matrix(r);
      p.amp = std::sqrt(r.power);
      cam_label[i] = std::uint8_t(pol::cameron_classify(p.s).cls);
    }
    zone_label[i] = std::uint8_t(pol::h_alpha(region_coherency(r), zones).zone);
  }

  SynthResult out;
  out.raster = ComplexRaster(H, W, 4, spec.dtype);
  out.region = LabelPlane(H, W);
  out.cameron = LabelPlane(H, W);
  out.zone = LabelPlane(H, W);
  const double ns = spec.noise_sigma / std::sqrt(2.0);
  for (std::size_t y = 0; y < H; ++y)
    for (std::size_t x = 0; x < W; ++x) {
      std::size_t best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < ncells; ++k) {
        const double dy = double(y) + 0.5 - sites[k][0], dx = double(x) + 0.5 - sites[k][1];
        const double d = dy * dy + dx * dx;
        if (d < bd) {
          bd = d;
          best = k;
        }
      }
      const std::size_t ri = best % spec.regions.size();
      const auto& p = prep[ri];
      pol::SinclairPixel s;
      if (spec.regions[ri].mechanism == Mechanism::clutter) {
        // unit circular Gaussian z, k = L z has covariance T
        Eigen::Vector3cd z;
        for (int i = 0; i < 3; ++i) z(i) = cd(gauss(rng), gauss(rng)) / std::sqrt(2.0);
        const Eigen::Vector3cd k = p.l * z;
        s = pol::pauli_compose({k(0), k(1), k(2)});
      } else {
        s = p.s;
      }
      const cd g = p.amp * p.phase;
      cd hh = g * s.hh, hv = g * s.hv, vv = g * s.vv;
      if (ns > 0) {
        hh += cd(gauss(rng), gauss(rng)) * ns;
        hv += cd(gauss(rng), gauss(rng)) * ns;
        vv += cd(gauss(rng), gauss(rng)) * ns;
      }
      out.raster.at(y, x, 0) = hh;
      out.raster.at(y, x, 1) = hv;
      out.raster.at(y, x, 2) = hv;
      out.raster.at(y, x, 3) = vv;
      out.region.at(y, x) = std::uint8_t(ri + 1);
      out.cameron.at(y, x) = cam_label[ri];
      out.zone.at(y, x) = zone_label[ri];
    }
  out.raster.quantize();
  out.raster.meta = {{"generator", "synth"}, {"seed", std::to_string(spec.seed)}};
  return out;
}

SynthSpec desk_spec(std::size_t size, double noise_sigma, std::uint64_t seed) {
  SynthSpec s;
  s.height = s.width = size;
  s.noise_sigma = noise_sigma;
  s.seed = seed;
  s.cells = 24;
  Region sphere{.mechanism = Mechanism::sphere, .power = 1.0};
  Region dihedral{.mechanism = Mechanism::dihedral, .theta = 0, .power = 0.8};
  Region oriented{.mechanism = Mechanism::dihedral, .theta = std::numbers::pi / 8, .power = 0.6};
  Region helix{.mechanism = Mechanism::helix, .hand = pol::Helicity::left, .power = 0.5};
  Region volume{.mechanism = Mechanism::clutter, .power = 0.7};
  volume.t = pol::Coherency::Zero();
  volume.t.diagonal() << 1.0, 0.9, 0.8;
  Region surface{.mechanism = Mechanism::clutter, .power = 0.9};
  surface.t = pol::Coherency::Zero();
  surface.t.diagonal() << 1.0, 0.2, 0.05;
  surface.t(0, 1) = cd(0.3, 0.1);
  surface.t(1, 0) = std::conj(surface.t(0, 1));
  s.regions = {sphere, dihedral, oriented, helix, volume, surface};
  return s;
}

}  // namespace polsar::data
