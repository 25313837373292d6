// polsar-cvnn: command-line driver for tiling, training, reconstruction,
// decomposition, evaluation and ablation sweeps.
#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "polsar/cxnn/checkpoint.hpp"
#include "polsar/errors.hpp"
#include "polsar/pipeline/figures.hpp"
#include "polsar/pipeline/pipeline.hpp"

namespace fs = std::filesystem;
using namespace polsar;
using pipeline::RunConfig;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::vector<std::string> set;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "INI run configuration");
  app->add_option("--seed", c.seed, "seed override");
  app->add_option("--out", c.out, "output directory (overrides output.dir)");
  app->add_option("--set", c.set, "section.key=value override, repeatable");
}

RunConfig load_config(const Common& c) {
  pipeline::Ini ini = c.config.empty() ? pipeline::Ini{} : pipeline::read_ini(c.config);
  for (const auto& s : c.set) pipeline::apply_override(ini, s);
  auto cfg = RunConfig::from_ini(ini);
  if (!c.out.empty()) cfg.out_dir = c.out;
  return cfg;
}

void save_config(const RunConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  std::ofstream(cfg.out_dir / "config.ini") << pipeline::format_ini(cfg.to_ini());
}

void print_report(const metrics::EvalReport& r) {
  std::cout << "mse " << r.recon.mse << "  psnr " << r.recon.psnr << " dB  ssim " << r.recon.ssim << "\n";
  for (const auto& [name, m] : r.classification)
    std::cout << name << ": oa " << m.oa << "%  f1 " << m.macro_f1 << "%  (" << m.total << " pixels)\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Complex-valued autoencoder for PolSAR compression with polarimetric evaluation"};
  app.require_subcommand(1);
  Common common;

  auto* tile = app.add_subcommand("tile", "tile a raster and split the tiles into train/val/test");
  std::string tile_input;
  std::optional<int> tile_size;
  std::optional<std::string> tile_fractions;
  tile->add_option("--input", tile_input, "CPLXR raster (default: data.raster)");
  tile->add_option("--size", tile_size, "tile side (default: model.tile_size)");
  tile->add_option("--fractions", tile_fractions, "train,val,test fractions (default: data.fractions)");

  auto* synth = app.add_subcommand("synth", "generate the labelled synthetic scene");

  auto* train = app.add_subcommand("train", "train an autoencoder");
  std::string resume;
  train->add_option("--resume", resume, "last.ckpt of an interrupted run");

  auto* recon = app.add_subcommand("reconstruct", "reconstruct a raster tile by tile from a checkpoint");
  std::string ckpt, recon_input;
  int recon_batch = 16;
  recon->add_option("--checkpoint", ckpt, "checkpoint file")->required();
  recon->add_option("--input", recon_input, "CPLXR raster (default: the configured dataset)");
  recon->add_option("--batch", recon_batch, "tiles per forward pass");

  auto* decomp = app.add_subcommand("decompose", "per-pixel polarimetric decomposition of a raster");
  std::string decomp_input, method = "halpha";
  decomp->add_option("--input", decomp_input, "CPLXR raster")->required();
  decomp->add_option("--method", method, "pauli | krogager | cameron | halpha");

  auto* eval = app.add_subcommand("evaluate", "compare an original raster with its reconstruction");
  std::string original, reconstructed;
  eval->add_option("--original", original, "reference CPLXR raster")->required();
  eval->add_option("--reconstructed", reconstructed, "reconstructed CPLXR raster")->required();

  auto* abl = app.add_subcommand("ablate", "train and evaluate one run per value of an axis");
  std::string axis;
  abl->add_option("--axis", axis, "activation | depth | sampling | model-kind")->required();

  for (auto* s : {tile, synth, train, recon, decomp, eval, abl}) add_common(s, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    auto cfg = load_config(common);
    if (tile->parsed()) {
      const fs::path in = tile_input.empty() ? cfg.data.raster : fs::path(tile_input);
      if (in.empty()) throw ConfigError("tile needs --input or data.raster");
      const auto img = data::read_raster(in);
      std::array<double, 3> fr = cfg.data.fractions;
      if (tile_fractions) {
        pipeline::Ini tmp;
        pipeline::apply_override(tmp, "data.fractions=" + *tile_fractions);
        fr = RunConfig::from_ini(tmp).data.fractions;
      }
      const std::size_t size = std::size_t(tile_size.value_or(cfg.model.tile_size));
      const auto set = data::split(data::tile(img.height, img.width, size), fr, common.seed.value_or(cfg.data.split_seed));
      fs::create_directories(cfg.out_dir);
      data::write_manifest(cfg.out_dir / "tiles.csv", set);
      std::cout << set.tiles.size() << " tiles: " << set.count(data::Fold::train) << " train, "
                << set.count(data::Fold::val) << " val, " << set.count(data::Fold::test) << " test\n";
    } else if (synth->parsed()) {
      if (common.seed) cfg.data.synth_seed = *common.seed;
      const auto s = data::synthesize(data::desk_spec(cfg.data.synth_size, cfg.data.synth_noise, cfg.data.synth_seed));
      fs::create_directories(cfg.out_dir);
      data::write_raster(cfg.out_dir / "synth.cplxr", s.raster);
      data::write_labels(cfg.out_dir / "synth_region.labels.cplxr", s.region);
      data::write_labels(cfg.out_dir / "synth_cameron.labels.cplxr", s.cameron);
      data::write_labels(cfg.out_dir / "synth_zone.labels.cplxr", s.zone);
      std::cout << "wrote " << (cfg.out_dir / "synth.cplxr").string() << " (" << s.raster.height << "x"
                << s.raster.width << ")\n";
    } else if (train->parsed()) {
      if (common.seed) cfg.optim.seed = *common.seed;
      save_config(cfg);
      const auto ds = pipeline::load_dataset(cfg);
      pipeline::TrainOptions opt;
      opt.resume = resume;
      opt.log = &std::cout;
      const auto r = pipeline::train(cfg, ds, opt);
      std::cout << "best epoch " << r.best_epoch << " val_mse " << r.best_val_mse << " (initial " << r.initial_val_mse
                << "), " << r.parameters << " parameters, " << r.seconds << " s\n";
    } else if (recon->parsed()) {
      data::ComplexRaster in;
      if (!recon_input.empty()) in = data::read_raster(recon_input, {.expand_to_sinclair = true});
      else in = pipeline::load_dataset(cfg).original;
      const auto out = pipeline::reconstruct(ckpt, in, recon_batch);
      fs::create_directories(cfg.out_dir);
      data::write_raster(cfg.out_dir / "reconstructed.cplxr", out);
      const auto tile_side = std::stoul(nn::read_checkpoint_meta(ckpt).at("model.tile_size"));
      data::write_raster(cfg.out_dir / "reference.cplxr", pipeline::crop_to_grid(in, tile_side));
      std::cout << "reconstructed " << out.height << "x" << out.width << "\n";
    } else if (decomp->parsed()) {
      const auto which = pol::parse_decomposition(method);
      const auto img = data::read_raster(decomp_input, {.expand_to_sinclair = true});
      const auto m = pol::decompose_raster(img, which, cfg.eval.decompose);
      fs::create_directories(cfg.out_dir);
      pol::save_decomposition(cfg.out_dir / std::string(pol::to_string(which)), m);
      if (cfg.eval.figures) {
        if (which == pol::Decomposition::pauli || which == pol::Decomposition::krogager)
          pipeline::write_ppm(cfg.out_dir / (std::string(pol::to_string(which)) + ".ppm"), pipeline::composite(m));
        else
          pipeline::write_ppm(cfg.out_dir / (std::string(pol::to_string(which)) + ".ppm"),
                              pipeline::class_map(m.labels, which));
      }
    } else if (eval->parsed()) {
      const auto a = data::read_raster(original, {.expand_to_sinclair = true});
      const auto b = data::read_raster(reconstructed, {.expand_to_sinclair = true});
      const auto ev = pipeline::evaluate(a, b, cfg.eval, cfg.out_dir);
      print_report(ev.report);
    } else if (abl->parsed()) {
      const auto ax = pipeline::parse_axis(axis);
      if (common.seed) cfg.optim.seed = *common.seed;
      save_config(cfg);
      const auto rows = pipeline::ablate(cfg, ax, &std::cout);
      for (const auto& r : rows)
        std::cout << r.value << ": mse " << r.mse << " psnr " << r.psnr << " halpha_oa " << r.halpha_oa
                  << " cameron_oa " << r.cameron_oa << " [" << r.status << "]\n";
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 4;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const ShapeError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
