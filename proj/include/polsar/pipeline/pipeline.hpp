#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "polsar/cxnn/autoencoder.hpp"
#include "polsar/dataio/synth.hpp"
#include "polsar/dataio/tiles.hpp"
#include "polsar/pipeline/config.hpp"

namespace polsar::pipeline {

struct Dataset {
  data::ComplexRaster original;    // input units, 4 channels
  data::ComplexRaster normalized;  // what the network sees
  data::NormParams norm;
  data::TileSet tiles;
  std::optional<data::SynthResult> synth;  // ground truth when generated
};

Dataset load_dataset(const RunConfig& cfg);

/// B x C x t x t batch from the given tiles of a raster.
template <class T>
cx::Tensor<T> make_batch(const data::ComplexRaster& img, const std::vector<data::Tile>& tiles);

struct EpochRecord {
  int epoch = 0;
  double train_mse = 0;  // mean over the epoch's batches (train mode)
  double val_mse = 0;    // eval mode after the epoch
};

struct TrainOptions {
  std::filesystem::path resume;  // last.ckpt of an interrupted run
  int stop_after = -1;           // stop once this epoch is done (simulated interruption)
  std::ostream* log = nullptr;
};

struct TrainResult {
  double initial_val_mse = 0;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val_mse = 0;
  std::size_t parameters = 0;
  std::filesystem::path best_checkpoint, last_checkpoint, loss_csv;
  double seconds = 0;
};

/// Epoch loop with AdamW on the MSE reconstruction loss. Writes
/// <out>/last.ckpt every epoch, <out>/best.ckpt on validation improvement and
/// <out>/loss.csv (epoch,train_mse,val_mse). A non-finite loss or gradient
/// writes <out>/nan_batch.txt and throws NumericError.
TrainResult train(const RunConfig& cfg, const Dataset& ds, const TrainOptions& opt = {});

/// Mean squared error of the model over the given tiles, eval mode.
template <class T>
double evaluate_mse(nn::AutoEncoder<T>& model, const data::ComplexRaster& img, const std::vector<data::Tile>& tiles,
                    int batch);

/// Crops to the largest multiple of `tile` in both directions.
data::ComplexRaster crop_to_grid(const data::ComplexRaster& img, std::size_t tile);

/// Forwards every tile of the grid and re-mosaics the output (normalized units).
template <class T>
data::ComplexRaster reconstruct_with(nn::AutoEncoder<T>& model, const data::ComplexRaster& normalized, int batch);

/// Loads a checkpoint, applies its stored normalization to `original`,
/// reconstructs the tile grid and maps the result back to input units.
data::ComplexRaster reconstruct(const std::filesystem::path& checkpoint, const data::ComplexRaster& original,
                                int batch = 16);

struct Evaluation {
  metrics::EvalReport report;
  pol::DecompositionMap ref_halpha, rec_halpha, ref_cameron, rec_cameron;
};

/// Recon metrics, H-alpha and Cameron classification of both rasters,
/// histograms and zone shifts. Writes the report files and, when enabled,
/// the figures to `out_dir` (skipped when empty).
Evaluation evaluate(const data::ComplexRaster& original, const data::ComplexRaster& reconstructed,
                    const EvalConfig& cfg, const std::filesystem::path& out_dir);

enum class AblationAxis { activation, depth, sampling, model_kind };
AblationAxis parse_axis(std::string_view s);
std::string_view to_string(AblationAxis a);

struct AblationRow {
  std::string value;
  std::size_t parameters = 0;
  double val_mse = 0;
  double mse = 0, psnr = 0, ssim = 0;
  double halpha_oa = 0, halpha_f1 = 0, cameron_oa = 0, cameron_f1 = 0;
  std::string status = "ok";
};

/// One configuration per axis value (everything else shared); runs go to
/// <out>/<axis>/<value>/ and the table to <out>/ablation_<axis>.csv.
std::vector<AblationRow> ablate(const RunConfig& base, AblationAxis axis, std::ostream* log = nullptr);

std::vector<std::pair<std::string, RunConfig>> ablation_variants(const RunConfig& base, AblationAxis axis);

}  // namespace polsar::pipeline
