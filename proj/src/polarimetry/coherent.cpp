#include "polsar/polarimetry/coherent.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "polsar/errors.hpp"

namespace polsar::pol {

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;
constexpr cd J(0, 1);

double safe_arg(cd z) { return z == cd{} ? 0.0 : std::arg(z); }

}  // namespace

bool SinclairPixel::finite() const {
  for (cd v : {hh, hv, vh, vv})
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

PauliVector pauli_decompose(const SinclairPixel& s) {
  const cd x = 0.5 * (s.hv + s.vh);
  return {(s.hh + s.vv) / kSqrt2, (s.hh - s.vv) / kSqrt2, kSqrt2 * x};
}

SinclairPixel pauli_compose(const PauliVector& k) {
  const cd hh = (k.alpha + k.beta) / kSqrt2;
  const cd vv = (k.alpha - k.beta) / kSqrt2;
  const cd x = k.gamma / kSqrt2;
  return {hh, x, x, vv};
}

CircularComponents to_circular(const SinclairPixel& s) {
  const cd a = 0.5 * (s.hh - s.vv);
  return {J * s.hv + a, J * s.hv - a, J * 0.5 * (s.hh + s.vv)};
}

KrogagerVector krogager_decompose(const SinclairPixel& s, double tol) {
  if (std::abs(s.hv - s.vh) > tol * std::max(1.0, std::sqrt(s.span())))
    throw ContractViolation("Krogager decomposition needs a reciprocal pixel (hv == vh)");
  const auto c = to_circular(s);
  // S_rr = e^{j(phi + 2t)} (k_d + 2 k_h [right]), -S_ll = e^{j(phi - 2t)} (k_d + 2 k_h [left]),
  // S_rl = j e^{j(phi + phi_s)} k_s
  const double arr = std::abs(c.rr), all = std::abs(c.ll);
  KrogagerVector k;
  k.k_s = std::abs(c.rl);
  k.k_d = std::min(arr, all);
  k.k_h = 0.5 * std::abs(arr - all);
  k.helicity = arr >= all ? Helicity::right : Helicity::left;
  const double pr = safe_arg(c.rr), pl = safe_arg(-c.ll);
  k.phi = 0.5 * (pr + pl);
  k.theta = 0.25 * (pr - pl);
  k.phi_s = safe_arg(c.rl) - std::numbers::pi / 2 - k.phi;
  return k;
}

SinclairPixel krogager_synthesize(const KrogagerVector& k) {
  const double c2 = std::cos(2 * k.theta), s2 = std::sin(2 * k.theta);
  const cd sphere = std::polar(k.k_s, k.phi_s);
  cd hh = sphere + k.k_d * c2, vv = sphere - k.k_d * c2, hv = k.k_d * s2;
  if (k.helicity == Helicity::right) {
    const cd h = k.k_h * std::polar(1.0, 2 * k.theta);
    hh += h;
    vv -= h;
    hv += -J * h;
  } else {
    const cd h = k.k_h * std::polar(1.0, -2 * k.theta);
    hh += h;
    vv -= h;
    hv += J * h;
  }
  const cd g = std::polar(1.0, k.phi);
  return SinclairPixel::reciprocal(g * hh, g * hv, g * vv);
}

std::string_view to_string(CameronClass c) {
  switch (c) {
    case CameronClass::invalid: return "invalid";
    case CameronClass::trihedral: return "trihedral";
    case CameronClass::dihedral: return "dihedral";
    case CameronClass::narrow_diplane: return "narrow-diplane";
    case CameronClass::dipole: return "dipole";
    case CameronClass::cylinder: return "cylinder";
    case CameronClass::quarter_wave: return "quarter-wave";
    case CameronClass::left_helix: return "left-helix";
    case CameronClass::right_helix: return "right-helix";
    case CameronClass::non_reciprocal: return "non-reciprocal";
    case CameronClass::asymmetric: return "asymmetric";
  }
  return "?";
}

double cameron_distance(cd z1, cd z2) {
  const double num = std::max(std::abs(1.0 + std::conj(z1) * z2), std::abs(std::conj(z1) + z2));
  const double den = std::sqrt((1 + std::norm(z1)) * (1 + std::norm(z2)));
  return std::acos(std::clamp(num / den, 0.0, 1.0));
}

CameronResult cameron_classify(const SinclairPixel& s, const CameronOptions& opt) {
  CameronResult out;
  const double total = s.span();
  if (!(total > 0) || !s.finite()) return out;
  out.valid = true;

  // vec(S) in the four-term Pauli basis; delta is the antisymmetric part
  const cd alpha = (s.hh + s.vv) / kSqrt2, beta = (s.hh - s.vv) / kSqrt2;
  const cd gamma = (s.hv + s.vh) / kSqrt2;
  const double rec_norm2 = std::norm(alpha) + std::norm(beta) + std::norm(gamma);
  out.rec_angle = std::acos(std::clamp(std::sqrt(rec_norm2 / total), 0.0, 1.0));
  if (out.rec_angle > opt.rec_threshold || rec_norm2 == 0) {
    out.cls = CameronClass::non_reciprocal;
    return out;
  }

  // maximally symmetric component: (alpha, eps cos t, eps sin t), eps = beta cos t + gamma sin t
  const double t = 0.5 * std::atan2(2 * std::real(beta * std::conj(gamma)), std::norm(beta) - std::norm(gamma));
  const cd eps = beta * std::cos(t) + gamma * std::sin(t);
  const double sym2 = std::norm(alpha) + std::norm(eps);
  out.sym_angle = std::acos(std::clamp(std::sqrt(sym2 / rec_norm2), 0.0, 1.0));

  const cd a = alpha + eps, b = alpha - eps;
  if (std::abs(b) <= std::abs(a))
    out.z = a == cd{} ? cd{} : b / a;
  else
    out.z = a / b;

  if (out.sym_angle > opt.sym_threshold) {
    // normalized overlaps with the helices (0, 1, -+j)/sqrt2 in (alpha, beta, gamma)
    const double rn = std::sqrt(rec_norm2);
    const double left = std::abs(beta - J * gamma) / (kSqrt2 * rn);
    const double right = std::abs(beta + J * gamma) / (kSqrt2 * rn);
    const double best = std::max(left, right);
    if (std::acos(std::clamp(best, 0.0, 1.0)) > opt.helix_threshold)
      out.cls = CameronClass::asymmetric;
    else
      out.cls = left > right ? CameronClass::left_helix : CameronClass::right_helix;
    return out;
  }

  static const std::array<std::pair<cd, CameronClass>, 7> canon = {{
      {cd(1, 0), CameronClass::trihedral},
      {cd(-1, 0), CameronClass::dihedral},
      {cd(0, 0), CameronClass::dipole},
      {cd(0.5, 0), CameronClass::cylinder},
      {cd(-0.5, 0), CameronClass::narrow_diplane},
      {cd(0, 1), CameronClass::quarter_wave},
      {cd(0, -1), CameronClass::quarter_wave},
  }};
  double best = 1e300;
  for (const auto& [zc, cls] : canon) {
    const double d = cameron_distance(out.z, zc);
    if (d < best) {
      best = d;
      out.cls = cls;
    }
  }
  return out;
}

}  // namespace polsar::pol
