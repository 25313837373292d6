#include "polsar/pipeline/figures.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "polsar/errors.hpp"

namespace polsar::pipeline {

using Rgb = std::array<std::uint8_t, 3>;

Image::Image(std::size_t w, std::size_t h, Rgb fill) : width(w), height(h), rgb(w * h * 3) {
  for (std::size_t i = 0; i < w * h; ++i) std::copy(fill.begin(), fill.end(), rgb.begin() + std::ptrdiff_t(i * 3));
}

void Image::set(long x, long y, Rgb c) {
  if (x < 0 || y < 0 || std::size_t(x) >= width || std::size_t(y) >= height) return;
  std::copy(c.begin(), c.end(), rgb.begin() + std::ptrdiff_t((std::size_t(y) * width + std::size_t(x)) * 3));
}

Rgb Image::get(std::size_t x, std::size_t y) const {
  const std::size_t i = (y * width + x) * 3;
  return {rgb[i], rgb[i + 1], rgb[i + 2]};
}

void write_ppm(const std::filesystem::path& path, const Image& img) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f << "P6\n" << img.width << " " << img.height << "\n255\n";
  f.write(reinterpret_cast<const char*>(img.rgb.data()), std::streamsize(img.rgb.size()));
}

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  std::string magic;
  std::size_t w = 0, h = 0, maxv = 0;
  if (!(f >> magic >> w >> h >> maxv) || magic != "P6" || maxv != 255) throw DataError("not a P6 image: " + path.string());
  f.get();
  Image img(w, h);
  f.read(reinterpret_cast<char*>(img.rgb.data()), std::streamsize(img.rgb.size()));
  if (!f) throw DataError("truncated image " + path.string());
  return img;
}

namespace {

std::vector<std::uint8_t> to_bytes(const std::vector<double>& v) {
  std::vector<double> sorted = v;
  const std::size_t k = std::min(sorted.size() - 1, std::size_t(0.99 * double(sorted.size())));
  std::nth_element(sorted.begin(), sorted.begin() + std::ptrdiff_t(k), sorted.end());
  double clip = sorted[k];
  if (!(clip > 0)) clip = *std::max_element(v.begin(), v.end());
  std::vector<std::uint8_t> out(v.size(), 0);
  if (!(clip > 0)) return out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double x = std::clamp(v[i] / clip, 0.0, 1.0);
    out[i] = std::uint8_t(std::lround(255 * std::pow(x, 0.7)));
  }
  return out;
}

Rgb hsv(double h, double s, double v) {
  const double c = v * s, hp = h * 6, x = c * (1 - std::abs(std::fmod(hp, 2) - 1));
  double r = 0, g = 0, b = 0;
  if (hp < 1) r = c, g = x;
  else if (hp < 2) r = x, g = c;
  else if (hp < 3) g = c, b = x;
  else if (hp < 4) g = x, b = c;
  else if (hp < 5) r = x, b = c;
  else r = c, b = x;
  const double m = v - c;
  return {std::uint8_t(std::lround(255 * (r + m))), std::uint8_t(std::lround(255 * (g + m))),
          std::uint8_t(std::lround(255 * (b + m)))};
}

void line(Image& img, long x0, long y0, long x1, long y1, Rgb c) {
  const long dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0), sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
  long err = dx + dy;
  while (true) {
    img.set(x0, y0, c);
    if (x0 == x1 && y0 == y1) break;
    const long e2 = 2 * err;
    if (e2 >= dy) err += dy, x0 += sx;
    if (e2 <= dx) err += dx, y0 += sy;
  }
}

}  // namespace

Image false_color(const std::vector<double>& r, const std::vector<double>& g, const std::vector<double>& b,
                  std::size_t width, std::size_t height) {
  if (r.size() != width * height || g.size() != r.size() || b.size() != r.size())
    throw ShapeError("false colour planes do not match the image size");
  Image img(width, height);
  if (r.empty()) return img;
  const auto R = to_bytes(r), G = to_bytes(g), B = to_bytes(b);
  for (std::size_t i = 0; i < r.size(); ++i) {
    img.rgb[3 * i] = R[i];
    img.rgb[3 * i + 1] = G[i];
    img.rgb[3 * i + 2] = B[i];
  }
  return img;
}

Image composite(const pol::DecompositionMap& m) {
  const std::size_t n = m.values.pixels();
  std::vector<double> ch[3];
  for (auto& c : ch) c.resize(n);
  // channel order of the map: pauli (alpha, beta, gamma), krogager (k_s, k_d, k_h)
  int order[3];
  if (m.which == pol::Decomposition::pauli) order[0] = 1, order[1] = 2, order[2] = 0;
  else if (m.which == pol::Decomposition::krogager) order[0] = 1, order[1] = 2, order[2] = 0;
  else throw ContractViolation("composites exist for Pauli and Krogager maps only");
  for (std::size_t i = 0; i < n; ++i)
    for (int k = 0; k < 3; ++k) ch[k][i] = std::abs(m.values.data[i * m.values.channels + std::size_t(order[k])]);
  return false_color(ch[0], ch[1], ch[2], m.values.width, m.values.height);
}

std::array<std::uint8_t, 3> palette_color(pol::Decomposition which, int label) {
  if (label <= 0) return {0, 0, 0};
  if (which == pol::Decomposition::cameron) {
    static const Rgb cam[10] = {{0, 90, 255},  {255, 40, 40},  {255, 150, 0},  {250, 230, 40},  {140, 90, 40},
                                {0, 200, 200}, {30, 170, 60},  {150, 230, 90}, {160, 60, 200},  {200, 200, 200}};
    return cam[std::min(label, 10) - 1];
  }
  if (which == pol::Decomposition::halpha) {
    // low entropy zones bright, high entropy dark; hue follows alpha
    const int band = (9 - label) / 3;  // 0 low H, 1 mid, 2 high
    const int a = (9 - label) % 3;     // 0 low alpha
    return hsv(0.62 - 0.31 * a, 0.85, 1.0 - 0.28 * band);
  }
  return hsv(double((label - 1) % 3) / 3, 0.8, 0.95);
}

Image class_map(const data::LabelPlane& labels, pol::Decomposition which) {
  Image img(labels.width, labels.height);
  for (std::size_t y = 0; y < labels.height; ++y)
    for (std::size_t x = 0; x < labels.width; ++x) img.set(long(x), long(y), palette_color(which, labels.at(y, x)));
  return img;
}

Image confusion_image(const metrics::ClassMetrics& m, int cell) {
  const std::size_t K = std::size_t(m.classes), s = std::size_t(cell);
  Image img(K * s, K * s);
  for (int i = 1; i <= m.classes; ++i) {
    std::uint64_t row = 0;
    for (int j = 1; j <= m.classes; ++j) row += m.at(i, j);
    for (int j = 1; j <= m.classes; ++j) {
      const double f = row ? double(m.at(i, j)) / double(row) : 0.0;
      const auto v = std::uint8_t(std::lround(255 * (1 - f)));
      const Rgb c = row ? Rgb{v, v, v} : Rgb{255, 230, 230};
      for (std::size_t y = 0; y < s; ++y)
        for (std::size_t x = 0; x < s; ++x)
          img.set(long(std::size_t(j - 1) * s + x), long(std::size_t(i - 1) * s + y),
                  (x == 0 || y == 0) ? Rgb{180, 180, 180} : c);
    }
  }
  return img;
}

Image shift_figure(const std::vector<metrics::ShiftPair>& shifts, const pol::ZoneTable& zones, int size) {
  Image img{std::size_t(size), std::size_t(size)};
  const double pad = 0.08 * size, span = size - 2 * pad;
  auto px = [&](double h) { return long(std::lround(pad + h * span)); };
  auto py = [&](double alpha) { return long(std::lround(size - pad - alpha / (std::numbers::pi / 2) * span)); };
  const Rgb grid{170, 170, 170}, axis{0, 0, 0}, bound{30, 90, 200}, arrow{210, 30, 30};
  auto deg = [](double d) { return d * std::numbers::pi / 180; };
  // zone partition
  for (double h : {zones.h_low, zones.h_high}) line(img, px(h), py(0), px(h), py(std::numbers::pi / 2), grid);
  const std::array<std::pair<double, double>, 3> bands = {{{0, zones.h_low}, {zones.h_low, zones.h_high}, {zones.h_high, 1}}};
  const std::array<std::array<double, 2>, 3> splits = {zones.alpha_low, zones.alpha_mid, zones.alpha_high};
  for (int b = 0; b < 3; ++b)
    for (double a : splits[b]) line(img, px(bands[b].first), py(deg(a)), px(bands[b].second), py(deg(a)), grid);
  line(img, px(0), py(0), px(1), py(0), axis);
  line(img, px(0), py(0), px(0), py(std::numbers::pi / 2), axis);
  // feasible region
  const auto c = pol::feasibility_curves(128);
  for (const auto* curve : {&c.lower, &c.upper})
    for (std::size_t i = 1; i < curve->size(); ++i)
      line(img, px((*curve)[i - 1][0]), py((*curve)[i - 1][1]), px((*curve)[i][0]), py((*curve)[i][1]), bound);
  for (const auto& s : shifts) {
    const long x0 = px(s.ref_centroid[0]), y0 = py(s.ref_centroid[1]);
    const long x1 = px(s.rec_centroid[0]), y1 = py(s.rec_centroid[1]);
    line(img, x0, y0, x1, y1, arrow);
    const double ang = std::atan2(double(y1 - y0), double(x1 - x0));
    for (double d : {2.6, -2.6})
      line(img, x1, y1, x1 + long(std::lround(7 * std::cos(ang + d))), y1 + long(std::lround(7 * std::sin(ang + d))),
           arrow);
  }
  return img;
}

}  // namespace polsar::pipeline
