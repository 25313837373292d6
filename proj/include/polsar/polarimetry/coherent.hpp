#pragma once

#include <complex>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace polsar::pol {

using cd = std::complex<double>;

struct SinclairPixel {
  cd hh, hv, vh, vv;

  static SinclairPixel reciprocal(cd hh, cd hv, cd vv) { return {hh, hv, hv, vv}; }
  bool finite() const;
  double span() const { return std::norm(hh) + std::norm(hv) + std::norm(vh) + std::norm(vv); }
};

/// alpha = (hh + vv)/sqrt2, beta = (hh - vv)/sqrt2, gamma = sqrt2 hv.
/// For non-reciprocal input hv is replaced by the reciprocal part (hv + vh)/2.
struct PauliVector {
  cd alpha, beta, gamma;
};

PauliVector pauli_decompose(const SinclairPixel& s);
SinclairPixel pauli_compose(const PauliVector& k);

enum class Helicity : std::uint8_t { left, right };

/// S = e^{j phi} (e^{j phi_s} k_s S_s + k_d S_d(theta) + k_h S_h(theta)) with
/// S_s = I, S_d = [[cos 2t, sin 2t], [sin 2t, -cos 2t]] and the helices
/// right: e^{+2jt} [[1, -j], [-j, -1]], left: e^{-2jt} [[1, j], [j, -1]].
struct KrogagerVector {
  double k_s = 0, k_d = 0, k_h = 0;
  double theta = 0, phi = 0, phi_s = 0;
  Helicity helicity = Helicity::right;
};

struct CircularComponents {
  cd rr, ll, rl;
};

/// S_rr = j hv + (hh - vv)/2, S_ll = j hv - (hh - vv)/2, S_rl = j (hh + vv)/2.
CircularComponents to_circular(const SinclairPixel& s);

/// Throws ContractViolation when |hv - vh| exceeds `tol` times the pixel norm.
KrogagerVector krogager_decompose(const SinclairPixel& s, double tol = 1e-9);
SinclairPixel krogager_synthesize(const KrogagerVector& k);

enum class CameronClass : std::uint8_t {
  invalid = 0,
  trihedral = 1,
  dihedral = 2,
  narrow_diplane = 3,
  dipole = 4,
  cylinder = 5,
  quarter_wave = 6,
  left_helix = 7,
  right_helix = 8,
  non_reciprocal = 9,
  asymmetric = 10,
};
inline constexpr int kCameronClasses = 10;

std::string_view to_string(CameronClass c);

struct CameronOptions {
  double rec_threshold = std::numbers::pi / 4;
  double sym_threshold = std::numbers::pi / 8;
  // largest angle to the nearest helix still labelled a helix
  double helix_threshold = std::numbers::pi / 4;
};

struct CameronResult {
  CameronClass cls = CameronClass::invalid;
  double rec_angle = 0;  // angle between vec(S) and the reciprocal subspace
  double sym_angle = 0;  // angle between the reciprocal part and its symmetric component
  cd z;                  // diagonal ratio of the symmetric component, |z| <= 1
  bool valid = false;    // false for zero-power pixels
};

CameronResult cameron_classify(const SinclairPixel& s, const CameronOptions& opt = {});

/// Rotation-invariant distance between symmetric scatterers with diagonal
/// ratios z1, z2 (0 when equal up to rotation, pi/2 when orthogonal).
double cameron_distance(cd z1, cd z2);

}  // namespace polsar::pol
