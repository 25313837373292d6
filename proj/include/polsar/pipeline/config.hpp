#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "polsar/cxnn/autoencoder.hpp"
#include "polsar/cxnn/optim.hpp"
#include "polsar/dataio/normalize.hpp"
#include "polsar/metrics/metrics.hpp"
#include "polsar/polarimetry/raster_decomp.hpp"

namespace polsar::pipeline {

using Ini = std::map<std::string, std::map<std::string, std::string>>;

/// INI text: [section] headers, key = value lines, '#' or ';' comments.
/// Duplicate keys and lines outside a section are ConfigErrors.
Ini parse_ini(const std::string& text);
Ini read_ini(const std::filesystem::path& path);
std::string format_ini(const Ini& ini);

enum class Precision { f32, f64 };

struct DataConfig {
  std::string source = "synth";  // synth | file
  std::filesystem::path raster;  // CPLXR input when source = file
  std::filesystem::path manifest;  // optional tile manifest; computed from the raster otherwise
  std::array<double, 3> fractions{0.8, 0.1, 0.1};
  std::uint64_t split_seed = 1;
  data::NormMode normalize = data::NormMode::global_amp_max;
  std::size_t synth_size = 512;
  double synth_noise = 0.05;
  std::uint64_t synth_seed = 1;
};

struct OptimConfig {
  nn::AdamWOptions adamw;
  int batch = 32;
  int epochs = 250;
  std::uint64_t seed = 1;
  Precision precision = Precision::f32;
};

struct EvalConfig {
  pol::DecomposeOptions decompose;
  metrics::HistogramSpec hist;
  bool weighted_f1 = false;
  bool figures = true;
};

struct RunConfig {
  DataConfig data;
  nn::AEConfig model;
  OptimConfig optim;
  EvalConfig eval;
  std::filesystem::path out_dir = "out";

  /// Defaults are the full-scale training setup; unknown sections or keys throw.
  static RunConfig from_ini(const Ini& ini);
  Ini to_ini() const;
  void validate() const;
};

/// Applies "section.key=value" on top of `ini`.
void apply_override(Ini& ini, const std::string& assignment);

}  // namespace polsar::pipeline
