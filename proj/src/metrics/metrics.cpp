#include "polsar/metrics/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "polsar/errors.hpp"

namespace polsar::metrics {

namespace {

constexpr int kWin = 11;
constexpr double kSigma = 1.5;

void check_same(const data::ComplexRaster& x, const data::ComplexRaster& y) {
  if (x.height != y.height || x.width != y.width || x.channels != y.channels)
    throw ShapeError("raster shapes differ: " + std::to_string(x.height) + "x" + std::to_string(x.width) + "x" +
                     std::to_string(x.channels) + " vs " + std::to_string(y.height) + "x" + std::to_string(y.width) +
                     "x" + std::to_string(y.channels));
}

std::array<double, kWin> gaussian_kernel() {
  std::array<double, kWin> g{};
  double s = 0;
  for (int i = 0; i < kWin; ++i) {
    const double d = i - kWin / 2;
    g[i] = std::exp(-d * d / (2 * kSigma * kSigma));
    s += g[i];
  }
  for (auto& v : g) v /= s;
  return g;
}

// valid-mode separable filtering: (H - 10) x (W - 10) output
std::vector<double> filter_valid(const std::vector<double>& a, std::size_t H, std::size_t W) {
  static const auto g = gaussian_kernel();
  const std::size_t oh = H - kWin + 1, ow = W - kWin + 1;
  std::vector<double> tmp(H * ow), out(oh * ow);
  for (std::size_t r = 0; r < H; ++r)
    for (std::size_t c = 0; c < ow; ++c) {
      double s = 0;
      for (int k = 0; k < kWin; ++k) s += g[k] * a[r * W + c + k];
      tmp[r * ow + c] = s;
    }
  for (std::size_t r = 0; r < oh; ++r)
    for (std::size_t c = 0; c < ow; ++c) {
      double s = 0;
      for (int k = 0; k < kWin; ++k) s += g[k] * tmp[(r + k) * ow + c];
      out[r * ow + c] = s;
    }
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f << text;
}

}  // namespace

double psnr_db(double mse, double peak) {
  if (mse < 1e-12) return kPsnrClamp;
  return std::min(kPsnrClamp, 10 * std::log10(peak * peak / mse));
}

double ssim_plane(const std::vector<double>& a, const std::vector<double>& b, std::size_t H, std::size_t W, double L) {
  if (H < std::size_t(kWin) || W < std::size_t(kWin))
    throw DataError("SSIM needs at least an 11x11 plane, got " + std::to_string(H) + "x" + std::to_string(W));
  const double c1 = std::pow(0.01 * L, 2), c2 = std::pow(0.03 * L, 2);
  std::vector<double> aa(a.size()), bb(a.size()), ab(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    aa[i] = a[i] * a[i];
    bb[i] = b[i] * b[i];
    ab[i] = a[i] * b[i];
  }
  const auto ma = filter_valid(a, H, W), mb = filter_valid(b, H, W);
  const auto saa = filter_valid(aa, H, W), sbb = filter_valid(bb, H, W), sab = filter_valid(ab, H, W);
  double total = 0;
  for (std::size_t i = 0; i < ma.size(); ++i) {
    const double va = saa[i] - ma[i] * ma[i], vb = sbb[i] - mb[i] * mb[i], cov = sab[i] - ma[i] * mb[i];
    const double num = (2 * ma[i] * mb[i] + c1) * (2 * cov + c2);
    const double den = (ma[i] * ma[i] + mb[i] * mb[i] + c1) * (va + vb + c2);
    total += den > 0 ? num / den : 1.0;
  }
  return total / double(ma.size());
}

ReconMetrics recon_metrics(const data::ComplexRaster& x, const data::ComplexRaster& y) {
  check_same(x, y);
  ReconMetrics m;
  double se = 0;
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    se += std::norm(x.data[i] - y.data[i]);
    m.peak = std::max(m.peak, std::abs(x.data[i]));
  }
  m.mse = x.data.empty() ? 0 : se / double(x.data.size());
  m.psnr = psnr_db(m.mse, m.peak);
  const double L = m.peak > 0 ? m.peak : 1.0;
  double s = 0;
  for (std::size_t ch = 0; ch < x.channels; ++ch) {
    std::vector<double> a(x.pixels()), b(x.pixels());
    for (std::size_t i = 0; i < x.pixels(); ++i) {
      a[i] = std::abs(x.data[i * x.channels + ch]);
      b[i] = std::abs(y.data[i * x.channels + ch]);
    }
    s += ssim_plane(a, b, x.height, x.width, L);
  }
  m.ssim = s / double(x.channels);
  return m;
}

ClassMetrics metrics_from_confusion(std::vector<std::uint64_t> confusion, int K) {
  if (confusion.size() != std::size_t(K) * std::size_t(K)) throw DataError("confusion matrix size does not match class count");
  ClassMetrics m;
  m.classes = K;
  m.confusion = std::move(confusion);
  std::uint64_t diag = 0;
  std::vector<std::uint64_t> row(K, 0), col(K, 0);
  for (int i = 0; i < K; ++i)
    for (int j = 0; j < K; ++j) {
      const auto v = m.confusion[std::size_t(i) * K + j];
      m.total += v;
      row[i] += v;
      col[j] += v;
      if (i == j) diag += v;
    }
  if (m.total == 0) return m;
  m.oa = 100.0 * double(diag) / double(m.total);
  double f1_sum = 0, weighted = 0;
  int present = 0;
  for (int k = 0; k < K; ++k) {
    if (row[k] == 0 && col[k] == 0) continue;
    ++present;
    const double tp = double(m.confusion[std::size_t(k) * K + k]);
    // 2PR/(P+R) written as 2TP/(row + col) so empty precision or recall gives 0
    const double f1 = 2 * tp / double(row[k] + col[k]);
    f1_sum += f1;
    weighted += f1 * double(row[k]);
  }
  m.macro_f1 = 100.0 * f1_sum / present;
  m.weighted_f1 = 100.0 * weighted / double(m.total);
  return m;
}

ClassMetrics classification_metrics(const data::LabelPlane& ref, const data::LabelPlane& rec, int K) {
  if (ref.height != rec.height || ref.width != rec.width) throw ShapeError("label planes differ in shape");
  if (K < 1) throw ConfigError("class count must be >= 1");
  std::vector<std::uint64_t> conf(std::size_t(K) * K, 0);
  for (std::size_t i = 0; i < ref.data.size(); ++i) {
    const int a = ref.data[i], b = rec.data[i];
    if (a < 1 || a > K || b < 1 || b > K) continue;
    ++conf[std::size_t(a - 1) * K + (b - 1)];
  }
  return metrics_from_confusion(std::move(conf), K);
}

std::uint64_t Histogram::total() const {
  std::uint64_t s = 0;
  for (auto c : counts) s += c;
  return s;
}

int phase_bin(double d, int bins) {
  const double w = 2 * std::numbers::pi / bins;
  const int i = int(std::ceil((d + std::numbers::pi) / w)) - 1;
  return std::clamp(i, 0, bins - 1);
}

std::pair<Histogram, Histogram> error_histograms(const data::ComplexRaster& x, const data::ComplexRaster& y,
                                                 const HistogramSpec& spec) {
  check_same(x, y);
  if (spec.amp_bins < 1 || spec.phase_bins < 1) throw ConfigError("histogram bin counts must be >= 1");
  double amax = spec.amp_max;
  if (!(amax > 0)) {
    for (const auto& v : x.data) amax = std::max(amax, std::abs(v));
    if (!(amax > 0)) amax = 1;
  }
  Histogram amp{0, amax, std::vector<std::uint64_t>(spec.amp_bins, 0)};
  Histogram ph{-std::numbers::pi, std::numbers::pi, std::vector<std::uint64_t>(spec.phase_bins, 0)};
  const double aw = amp.width();
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    const double e = std::abs(std::abs(x.data[i]) - std::abs(y.data[i]));
    ++amp.counts[std::min<std::size_t>(std::size_t(e / aw), amp.counts.size() - 1)];
    double d = std::arg(y.data[i] * std::conj(x.data[i]));
    if (d <= -std::numbers::pi + 1e-12) d = std::numbers::pi;
    ++ph.counts[phase_bin(d, spec.phase_bins)];
  }
  return {amp, ph};
}

std::vector<ShiftPair> shift_map(const std::vector<pol::HAlphaResult>& ref, const std::vector<pol::HAlphaResult>& rec) {
  if (ref.size() != rec.size()) throw ShapeError("H-alpha planes differ in size");
  std::map<std::pair<int, int>, ShiftPair> acc;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    const auto& a = ref[i];
    const auto& b = rec[i];
    if (!a.valid || !b.valid || a.zone == b.zone) continue;
    auto& p = acc[{a.zone, b.zone}];
    p.from = a.zone;
    p.to = b.zone;
    ++p.count;
    p.ref_centroid[0] += a.entropy;
    p.ref_centroid[1] += a.alpha_mean;
    p.rec_centroid[0] += b.entropy;
    p.rec_centroid[1] += b.alpha_mean;
  }
  std::vector<ShiftPair> out;
  for (auto& [k, p] : acc) {
    for (int j = 0; j < 2; ++j) {
      p.ref_centroid[j] /= double(p.count);
      p.rec_centroid[j] /= double(p.count);
    }
    out.push_back(p);
  }
  return out;
}

void write_confusion_csv(const std::filesystem::path& path, const ClassMetrics& m) {
  std::ostringstream os;
  os << "ref\\rec";
  for (int j = 1; j <= m.classes; ++j) os << "," << j;
  os << "\n";
  for (int i = 1; i <= m.classes; ++i) {
    os << i;
    for (int j = 1; j <= m.classes; ++j) os << "," << m.at(i, j);
    os << "\n";
  }
  write_text(path, os.str());
}

ClassMetrics read_confusion_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open " + path.string());
  std::string line;
  std::getline(f, line);
  const int K = int(std::count(line.begin(), line.end(), ','));
  std::vector<std::uint64_t> conf;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::istringstream is(line);
    std::string cell;
    std::getline(is, cell, ',');
    while (std::getline(is, cell, ',')) conf.push_back(std::stoull(cell));
  }
  return metrics_from_confusion(std::move(conf), K);
}

void write_report(const std::filesystem::path& dir, const EvalReport& r) {
  std::filesystem::create_directories(dir);
  std::ostringstream os;
  os << "mse=" << fmt(r.recon.mse) << "\n";
  os << "psnr=" << fmt(r.recon.psnr) << "\n";
  os << "ssim=" << fmt(r.recon.ssim) << "\n";
  os << "peak=" << fmt(r.recon.peak) << "\n";
  for (const auto& [name, m] : r.classification) {
    os << name << ".oa=" << fmt(m.oa) << "\n";
    os << name << ".f1=" << fmt(m.macro_f1) << "\n";
    os << name << ".f1_weighted=" << fmt(m.weighted_f1) << "\n";
    os << name << ".pixels=" << m.total << "\n";
    write_confusion_csv(dir / ("confusion_" + name + ".csv"), m);
  }
  os << "shift_pairs=" << r.shifts.size() << "\n";
  write_text(dir / "report.txt", os.str());

  auto hist_csv = [](const Histogram& h) {
    std::ostringstream hs;
    hs.precision(17);
    hs << "bin_left,bin_right,count\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i)
      hs << h.lo + double(i) * h.width() << "," << h.lo + double(i + 1) * h.width() << "," << h.counts[i] << "\n";
    return hs.str();
  };
  write_text(dir / "amp_err_hist.csv", hist_csv(r.amp_hist));
  write_text(dir / "phase_err_hist.csv", hist_csv(r.phase_hist));

  std::ostringstream ss;
  ss.precision(17);
  ss << "zone_from,zone_to,count,ref_h,ref_alpha,rec_h,rec_alpha\n";
  for (const auto& p : r.shifts)
    ss << p.from << "," << p.to << "," << p.count << "," << p.ref_centroid[0] << "," << p.ref_centroid[1] << ","
       << p.rec_centroid[0] << "," << p.rec_centroid[1] << "\n";
  write_text(dir / "shifts.csv", ss.str());
}

std::map<std::string, std::string> read_report(const std::filesystem::path& file) {
  std::ifstream f(file);
  if (!f) throw DataError("cannot open " + file.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(f, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

}  // namespace polsar::metrics
