#include "polsar/polarimetry/halpha.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "polsar/errors.hpp"

namespace polsar::pol {

namespace {

using Vec3 = Eigen::Vector3cd;

Vec3 cross(const Vec3& a, const Vec3& b) {
  return {a(1) * b(2) - a(2) * b(1), a(2) * b(0) - a(0) * b(2), a(0) * b(1) - a(1) * b(0)};
}

// null vector of the (nearly singular) Hermitian matrix m
Vec3 null_vector(const Eigen::Matrix3cd& m) {
  const Vec3 r0 = m.row(0).transpose(), r1 = m.row(1).transpose(), r2 = m.row(2).transpose();
  Vec3 best = cross(r0, r1);
  for (const Vec3& c : {cross(r0, r2), cross(r1, r2)})
    if (c.squaredNorm() > best.squaredNorm()) best = c;
  return best.normalized();
}

HermitianEigen iterative_eigen(const Eigen::Matrix3cd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3cd> es(a);
  HermitianEigen out;
  out.iterative = true;
  // Eigen sorts ascending
  for (int i = 0; i < 3; ++i) {
    out.values[i] = es.eigenvalues()(2 - i);
    out.vectors.col(i) = es.eigenvectors().col(2 - i);
  }
  return out;
}

double entropy_of(const std::array<double, 3>& p) {
  double h = 0;
  for (double v : p)
    if (v > 0) h -= v * std::log(v);
  return h / std::log(3.0);
}

// entropy of the normalized spectrum (a, b, c) with its ordering irrelevant
double spectrum_entropy(double a, double b, double c) {
  const double s = a + b + c;
  return entropy_of({a / s, b / s, c / s});
}

// lower boundary: spectrum (1, m, m), alpha = (p2 + p3) pi/2
double lower_h(double m) { return spectrum_entropy(1, m, m); }
double lower_alpha(double m) { return 2 * m / (1 + 2 * m) * std::numbers::pi / 2; }
// upper boundary beyond H = log3(2): spectrum (2m - 1, 1, 1) with the first eigenvector (1, 0, 0)
double upper_h(double m) { return spectrum_entropy(2 * m - 1, 1, 1); }
double upper_alpha(double m) { return 2 / (2 * m + 1) * std::numbers::pi / 2; }

template <class F>
double bisect_increasing(F f, double target, double lo, double hi) {
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < target ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

HermitianEigen eig_hermitian3(const Coherency& a_in, double gap_tol) {
  const Eigen::Matrix3cd a = 0.5 * (a_in + a_in.adjoint());
  const double scale = a.cwiseAbs().maxCoeff();
  HermitianEigen out;
  if (!(scale > 0)) return out;
  const Eigen::Matrix3cd an = a / scale;

  const double q = an.trace().real() / 3;
  const Eigen::Matrix3cd b = an - q * Eigen::Matrix3cd::Identity();
  const double p = std::sqrt(b.squaredNorm() / 6);
  if (p < gap_tol) {
    out.values = {q * scale, q * scale, q * scale};
    return out;
  }
  const double r = std::clamp((b / p).determinant().real() / 2, -1.0, 1.0);
  const double phi = std::acos(r) / 3;
  const double l1 = q + 2 * p * std::cos(phi);
  const double l3 = q + 2 * p * std::cos(phi + 2 * std::numbers::pi / 3);
  const double l2 = 3 * q - l1 - l3;
  // acos amplifies rounding near r = +-1 to about sqrt(eps) * p in the gaps
  const double tol = gap_tol + 1e-7 * p;
  if (l1 - l2 < tol || l2 - l3 < tol) {
    auto it = iterative_eigen(an);
    for (auto& v : it.values) v *= scale;
    return it;
  }

  const Eigen::Matrix3cd id = Eigen::Matrix3cd::Identity();
  Vec3 v1 = null_vector(an - l1 * id);
  Vec3 v3 = null_vector(an - l3 * id);
  v3 = (v3 - v1.dot(v3) * v1).normalized();
  const Vec3 v2 = cross(v1, v3).conjugate();
  out.vectors.col(0) = v1;
  out.vectors.col(1) = v2;
  out.vectors.col(2) = v3;
  // Rayleigh quotients are second-order accurate in the eigenvector error
  for (int i = 0; i < 3; ++i) {
    const Vec3 v = out.vectors.col(i);
    out.values[i] = (v.adjoint() * an * v)(0).real() * scale;
  }
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2 - i; ++j)
      if (out.values[j] < out.values[j + 1]) {
        std::swap(out.values[j], out.values[j + 1]);
        out.vectors.col(j).swap(out.vectors.col(j + 1));
      }
  return out;
}

std::vector<Coherency> boxcar_scm(const std::vector<PauliVector>& field, std::size_t height, std::size_t width,
                                  int window) {
  if (window < 3 || window % 2 == 0)
    throw ConfigError("boxcar window must be an odd number >= 3, got " + std::to_string(window));
  if (std::size_t(window) > std::min(height, width))
    throw ConfigError("boxcar window " + std::to_string(window) + " exceeds the raster size");
  if (field.size() != height * width) throw ShapeError("Pauli field size does not match its extents");

  // upper triangle (00, 01, 02, 11, 12, 22) of k k^H
  using Entry = std::array<cd, 6>;
  auto outer = [](const PauliVector& k) -> Entry {
    return {std::norm(k.alpha), k.alpha * std::conj(k.beta), k.alpha * std::conj(k.gamma),
            std::norm(k.beta),  k.beta * std::conj(k.gamma),  std::norm(k.gamma)};
  };
  const std::ptrdiff_t half = window / 2, H = std::ptrdiff_t(height), W = std::ptrdiff_t(width);

  // horizontal sums via running prefix per row
  std::vector<Entry> hsum(height * width);
  std::vector<Entry> prefix(width + 1);
  for (std::ptrdiff_t r = 0; r < H; ++r) {
    prefix[0].fill(cd{});
    for (std::ptrdiff_t c = 0; c < W; ++c) {
      const Entry e = outer(field[r * W + c]);
      for (int i = 0; i < 6; ++i) prefix[c + 1][i] = prefix[c][i] + e[i];
    }
    for (std::ptrdiff_t c = 0; c < W; ++c) {
      const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, c - half), hi = std::min(W, c + half + 1);
      for (int i = 0; i < 6; ++i) hsum[r * W + c][i] = prefix[hi][i] - prefix[lo][i];
    }
  }

  std::vector<Coherency> out(height * width);
  for (std::ptrdiff_t c = 0; c < W; ++c) {
    std::vector<Entry> col(height + 1);
    col[0].fill(cd{});
    for (std::ptrdiff_t r = 0; r < H; ++r)
      for (int i = 0; i < 6; ++i) col[r + 1][i] = col[r][i] + hsum[r * W + c][i];
    const double ncols = double(std::min(W, c + half + 1) - std::max<std::ptrdiff_t>(0, c - half));
    for (std::ptrdiff_t r = 0; r < H; ++r) {
      const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, r - half), hi = std::min(H, r + half + 1);
      const double n = ncols * double(hi - lo);
      Entry s;
      for (int i = 0; i < 6; ++i) s[i] = (col[hi][i] - col[lo][i]) / n;
      Coherency& t = out[r * W + c];
      t(0, 0) = s[0].real();
      t(1, 1) = s[3].real();
      t(2, 2) = s[5].real();
      t(0, 1) = s[1];
      t(0, 2) = s[2];
      t(1, 2) = s[4];
      t(1, 0) = std::conj(s[1]);
      t(2, 0) = std::conj(s[2]);
      t(2, 1) = std::conj(s[4]);
    }
  }
  return out;
}

void ZoneTable::validate() const {
  if (!(0 < h_low && h_low < h_high && h_high < 1)) throw ConfigError("zone table entropy splits must satisfy 0 < low < high < 1");
  for (const auto& b : {alpha_low, alpha_mid, alpha_high})
    if (!(0 < b[0] && b[0] < b[1] && b[1] < 90)) throw ConfigError("zone table alpha splits must satisfy 0 < a1 < a2 < 90 degrees");
}

int classify_zone(double entropy, double alpha, const ZoneTable& t) {
  if (!(entropy >= 0 && entropy <= 1)) throw ContractViolation("entropy out of [0, 1]: " + std::to_string(entropy));
  if (!(alpha >= 0 && alpha <= std::numbers::pi / 2))
    throw ContractViolation("alpha out of [0, pi/2]: " + std::to_string(alpha));
  const double deg = alpha * 180 / std::numbers::pi;
  auto pick = [deg](const std::array<double, 2>& b, int low_alpha_zone) {
    if (deg <= b[0]) return low_alpha_zone;
    if (deg <= b[1]) return low_alpha_zone - 1;
    return low_alpha_zone - 2;
  };
  if (entropy <= t.h_low) return pick(t.alpha_low, 9);
  if (entropy <= t.h_high) return pick(t.alpha_mid, 6);
  return pick(t.alpha_high, 3);
}

HAlphaResult h_alpha(const Coherency& t, const ZoneTable& table, double neg_tol) {
  HAlphaResult out;
  const double tr = t.trace().real();
  if (!(tr > 0) || !t.allFinite()) return out;
  const HermitianEigen e = eig_hermitian3(t);
  if (e.values[2] < -neg_tol * tr)
    throw DataError("coherency matrix is not positive semi-definite (eigenvalue " + std::to_string(e.values[2]) + ")");
  double sum = 0;
  for (int i = 0; i < 3; ++i) {
    out.eigenvalues[i] = std::max(0.0, e.values[i]);
    sum += out.eigenvalues[i];
  }
  if (!(sum > 0)) return out;
  double alpha = 0;
  for (int i = 0; i < 3; ++i) {
    out.pseudo_probs[i] = out.eigenvalues[i] / sum;
    alpha += out.pseudo_probs[i] * std::acos(std::min(1.0, std::abs(e.vectors(0, i))));
  }
  out.entropy = std::clamp(entropy_of(out.pseudo_probs), 0.0, 1.0);
  out.alpha_mean = std::clamp(alpha, 0.0, std::numbers::pi / 2);
  out.zone = classify_zone(out.entropy, out.alpha_mean, table);
  out.valid = true;
  return out;
}

FeasibilityCurves feasibility_curves(int samples) {
  FeasibilityCurves c;
  for (int i = 0; i <= samples; ++i) {
    const double m = double(i) / samples;
    c.lower.push_back({lower_h(m), lower_alpha(m)});
  }
  // alpha = 90 degrees from (0, 1, 0) to (0, 1, 1), then spectrum (2m - 1, 1, 1)
  for (int i = 0; i <= samples; ++i) {
    const double m = 0.5 * i / samples;
    c.upper.push_back({spectrum_entropy(0, 1, 2 * m), std::numbers::pi / 2});
  }
  for (int i = 1; i <= samples; ++i) {
    const double m = 0.5 + 0.5 * i / samples;
    c.upper.push_back({upper_h(m), upper_alpha(m)});
  }
  return c;
}

std::array<double, 2> feasible_alpha_range(double entropy) {
  const double h = std::clamp(entropy, 0.0, 1.0);
  const double lo = lower_alpha(bisect_increasing(lower_h, h, 0.0, 1.0));
  const double knee = std::log(2.0) / std::log(3.0);
  const double hi = h <= knee ? std::numbers::pi / 2 : upper_alpha(bisect_increasing(upper_h, h, 0.5, 1.0));
  return {lo, hi};
}

bool is_feasible(double entropy, double alpha, double tol) {
  if (entropy < -tol || entropy > 1 + tol) return false;
  const auto [lo, hi] = feasible_alpha_range(entropy);
  return alpha >= lo - tol && alpha <= hi + tol;
}

}  // namespace polsar::pol
