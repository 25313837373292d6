#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "polsar/errors.hpp"
#include "polsar/pipeline/pipeline.hpp"

namespace polsar::pipeline {

namespace fs = std::filesystem;

AblationAxis parse_axis(std::string_view s) {
  if (s == "activation") return AblationAxis::activation;
  if (s == "depth") return AblationAxis::depth;
  if (s == "sampling") return AblationAxis::sampling;
  if (s == "model-kind") return AblationAxis::model_kind;
  throw ConfigError("unknown ablation axis '" + std::string(s) + "' (activation, depth, sampling, model-kind)");
}

std::string_view to_string(AblationAxis a) {
  switch (a) {
    case AblationAxis::activation: return "activation";
    case AblationAxis::depth: return "depth";
    case AblationAxis::sampling: return "sampling";
    case AblationAxis::model_kind: return "model-kind";
  }
  return "?";
}

std::vector<std::pair<std::string, RunConfig>> ablation_variants(const RunConfig& base, AblationAxis axis) {
  std::vector<std::pair<std::string, RunConfig>> out;
  auto add = [&](std::string name, auto&& edit) {
    RunConfig c = base;
    edit(c);
    c.out_dir = base.out_dir / std::string(to_string(axis)) / name;
    out.emplace_back(std::move(name), std::move(c));
  };
  switch (axis) {
    case AblationAxis::activation:
      for (auto k : {nn::ActivationKind::crelu, nn::ActivationKind::cardioid, nn::ActivationKind::modrelu,
                     nn::ActivationKind::zrelu})
        add(std::string(nn::to_string(k)), [k](RunConfig& c) { c.model.activation = k; });
      break;
    case AblationAxis::depth:
      for (int d : {2, 3, 4}) add(std::to_string(d), [d](RunConfig& c) { c.model.depth = d; });
      break;
    case AblationAxis::sampling:
      for (auto ds : {nn::Downsample::strided_conv, nn::Downsample::avgpool})
        for (auto us : {nn::Upsample::nearest, nn::Upsample::bilinear})
          add(std::string(nn::to_string(ds)) + "+" + std::string(nn::to_string(us)), [ds, us](RunConfig& c) {
            c.model.downsample = ds;
            c.model.upsample = us;
          });
      break;
    case AblationAxis::model_kind:
      for (auto k : {nn::ModelKind::cvnn, nn::ModelKind::dual_rvnn})
        add(std::string(nn::to_string(k)), [k](RunConfig& c) { c.model.kind = k; });
      break;
  }
  return out;
}

namespace {

void write_table(const fs::path& path, const std::vector<AblationRow>& rows) {
  std::ofstream f(path);
  if (!f) throw DataError("cannot write " + path.string());
  f << "value,parameters,val_mse,mse,psnr,ssim,halpha_oa,halpha_f1,cameron_oa,cameron_f1,status\n";
  f << std::setprecision(9);
  for (const auto& r : rows)
    f << r.value << "," << r.parameters << "," << r.val_mse << "," << r.mse << "," << r.psnr << "," << r.ssim << ","
      << r.halpha_oa << "," << r.halpha_f1 << "," << r.cameron_oa << "," << r.cameron_f1 << "," << r.status << "\n";
}

}  // namespace

std::vector<AblationRow> ablate(const RunConfig& base, AblationAxis axis, std::ostream* log) {
  const Dataset ds = load_dataset(base);
  std::vector<AblationRow> rows;
  fs::create_directories(base.out_dir);
  const fs::path table = base.out_dir / ("ablation_" + std::string(to_string(axis)) + ".csv");
  const auto nan = std::nan("");
  for (auto& [name, cfg] : ablation_variants(base, axis)) {
    AblationRow row;
    row.value = name;
    if (log) *log << "[" << to_string(axis) << "=" << name << "]\n";
    try {
      cfg.validate();
      TrainOptions topt;
      topt.log = log;
      const TrainResult tr = train(cfg, ds, topt);
      row.parameters = tr.parameters;
      row.val_mse = tr.best_val_mse;
      const auto rec = reconstruct(tr.best_checkpoint, ds.original);
      const auto ev = evaluate(crop_to_grid(ds.original, std::size_t(cfg.model.tile_size)), rec, cfg.eval,
                               cfg.out_dir / "eval");
      const auto& r = ev.report;
      const auto& ha = r.classification.at("halpha");
      const auto& cam = r.classification.at("cameron");
      row.mse = r.recon.mse;
      row.psnr = r.recon.psnr;
      row.ssim = r.recon.ssim;
      row.halpha_oa = ha.oa;
      row.cameron_oa = cam.oa;
      row.halpha_f1 = cfg.eval.weighted_f1 ? ha.weighted_f1 : ha.macro_f1;
      row.cameron_f1 = cfg.eval.weighted_f1 ? cam.weighted_f1 : cam.macro_f1;
    } catch (const std::exception& e) {
      row.val_mse = row.mse = row.psnr = row.ssim = nan;
      row.halpha_oa = row.halpha_f1 = row.cameron_oa = row.cameron_f1 = nan;
      std::string msg = e.what();
      for (char& c : msg)
        if (c == ',' || c == '\n') c = ';';
      row.status = "failed: " + msg;
      if (log) *log << "  failed: " << e.what() << "\n";
    }
    rows.push_back(row);
    write_table(table, rows);  // partial tables survive an interrupted sweep
  }
  return rows;
}

}  // namespace polsar::pipeline
