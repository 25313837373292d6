#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "polsar/dataio/raster.hpp"
#include "polsar/polarimetry/halpha.hpp"

namespace polsar::metrics {

struct ReconMetrics {
  double mse = 0;
  double psnr = 0;  // dB, clamped to 99 when mse < 1e-12
  double ssim = 0;
  double peak = 0;  // max amplitude of the reference
};

inline constexpr double kPsnrClamp = 99.0;

/// mse = mean |x - y|^2 over every sample; psnr with peak = max |x|;
/// ssim on amplitude planes, 11x11 Gaussian (sigma 1.5) over valid windows,
/// averaged over channels, L = peak.
ReconMetrics recon_metrics(const data::ComplexRaster& x, const data::ComplexRaster& y);

double psnr_db(double mse, double peak);

/// Mean SSIM between two real H x W planes.
double ssim_plane(const std::vector<double>& a, const std::vector<double>& b, std::size_t height, std::size_t width,
                  double dynamic_range);

struct ClassMetrics {
  int classes = 0;
  std::vector<std::uint64_t> confusion;  // classes x classes, row = reference label - 1, column = reconstruction
  std::uint64_t total = 0;               // pixels valid in both planes
  double oa = 0;                         // percent
  double macro_f1 = 0;                   // percent, classes absent from both planes skipped
  double weighted_f1 = 0;                // percent, weighted by reference support

  std::uint64_t at(int ref, int rec) const { return confusion[std::size_t(ref - 1) * classes + (rec - 1)]; }
};

/// Labels outside [1, classes] (0 = invalid) exclude the pixel.
ClassMetrics classification_metrics(const data::LabelPlane& ref, const data::LabelPlane& rec, int classes);

/// Recomputes OA / F1 from a confusion matrix alone.
ClassMetrics metrics_from_confusion(std::vector<std::uint64_t> confusion, int classes);

struct Histogram {
  double lo = 0, hi = 1;
  std::vector<std::uint64_t> counts;

  double width() const { return (hi - lo) / double(counts.size()); }
  std::uint64_t total() const;
};

struct HistogramSpec {
  int amp_bins = 50;
  double amp_max = 0;  // 0: peak amplitude of the reference
  int phase_bins = 72;
};

/// Amplitude error ||x| - |y|| in [0, amp_max], left-closed bins with the
/// overflow folded into the last bin. Phase error arg(y conj x) in (-pi, pi]
/// with right-closed bins so -pi wraps onto the +pi bin.
std::pair<Histogram, Histogram> error_histograms(const data::ComplexRaster& x, const data::ComplexRaster& y,
                                                 const HistogramSpec& spec = {});

int phase_bin(double d, int bins);

struct ShiftPair {
  int from = 0, to = 0;
  std::uint64_t count = 0;
  std::array<double, 2> ref_centroid{};  // mean (H, alpha) in the reference
  std::array<double, 2> rec_centroid{};  // mean (H, alpha) in the reconstruction
};

/// Zone changes between two H-alpha planes, ordered by (from, to).
std::vector<ShiftPair> shift_map(const std::vector<pol::HAlphaResult>& ref, const std::vector<pol::HAlphaResult>& rec);

struct EvalReport {
  ReconMetrics recon;
  std::map<std::string, ClassMetrics> classification;  // "halpha", "cameron"
  Histogram amp_hist, phase_hist;
  std::vector<ShiftPair> shifts;
};

/// report.txt (key=value), confusion_<name>.csv, amp_err_hist.csv,
/// phase_err_hist.csv, shifts.csv.
void write_report(const std::filesystem::path& dir, const EvalReport& r);
std::map<std::string, std::string> read_report(const std::filesystem::path& file);

void write_confusion_csv(const std::filesystem::path& path, const ClassMetrics& m);
ClassMetrics read_confusion_csv(const std::filesystem::path& path);

}  // namespace polsar::metrics
