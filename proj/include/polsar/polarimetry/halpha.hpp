#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

#include "polsar/polarimetry/coherent.hpp"

namespace polsar::pol {

using Coherency = Eigen::Matrix3cd;

/// Eigenvalues in descending order, matching unit eigenvectors in the columns.
struct HermitianEigen {
  std::array<double, 3> values{};
  Eigen::Matrix3cd vectors = Eigen::Matrix3cd::Identity();
  bool iterative = false;  // true when the closed form was skipped for a near-degenerate spectrum
};

/// Closed-form trigonometric roots of the characteristic cubic; eigenvectors
/// from cross products of rows of (A - lambda I). Falls back to an iterative
/// solver when two eigenvalues are closer than `gap_tol` (relative to the scale).
HermitianEigen eig_hermitian3(const Coherency& a, double gap_tol = 1e-9);

/// Boxcar sample covariance T = (1/N) sum k k^H over a window x window
/// neighbourhood clipped at the raster border. `field` is row-major H x W.
std::vector<Coherency> boxcar_scm(const std::vector<PauliVector>& field, std::size_t height, std::size_t width,
                                  int window = 7);

/// Alpha boundaries in degrees for each entropy band.
struct ZoneTable {
  double h_low = 0.5;   // H <= h_low: low entropy band
  double h_high = 0.9;  // H <= h_high: medium entropy band
  std::array<double, 2> alpha_low{42.5, 47.5};
  std::array<double, 2> alpha_mid{40.0, 50.0};
  std::array<double, 2> alpha_high{40.0, 55.0};

  void validate() const;
};

/// Zones are numbered 1..9: high entropy 3 (low alpha), 2, 1 (high alpha);
/// medium entropy 6, 5, 4; low entropy 9, 8, 7. Boundary values go to the
/// lower-H / lower-alpha zone.
int classify_zone(double entropy, double alpha, const ZoneTable& table = {});

struct HAlphaResult {
  double entropy = 0;
  double alpha_mean = 0;  // radians
  int zone = 0;           // 0 for invalid pixels
  std::array<double, 3> eigenvalues{};
  std::array<double, 3> pseudo_probs{};
  bool valid = false;
};

/// Throws DataError when T has an eigenvalue below -`neg_tol` times its scale.
HAlphaResult h_alpha(const Coherency& t, const ZoneTable& table = {}, double neg_tol = 1e-9);

/// Boundary of the feasible (H, alpha) region, alpha in radians.
struct FeasibilityCurves {
  std::vector<std::array<double, 2>> lower, upper;  // (H, alpha) samples ordered by H
};

FeasibilityCurves feasibility_curves(int samples = 256);

/// Smallest and largest feasible mean alpha (radians) at entropy H.
std::array<double, 2> feasible_alpha_range(double entropy);
bool is_feasible(double entropy, double alpha, double tol = 1e-6);

}  // namespace polsar::pol
