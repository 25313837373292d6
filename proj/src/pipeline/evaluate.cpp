#include <fstream>

#include "polsar/errors.hpp"
#include "polsar/pipeline/figures.hpp"
#include "polsar/pipeline/pipeline.hpp"

namespace polsar::pipeline {

namespace fs = std::filesystem;

Evaluation evaluate(const data::ComplexRaster& original, const data::ComplexRaster& reconstructed,
                    const EvalConfig& cfg, const fs::path& out_dir) {
  if (original.height != reconstructed.height || original.width != reconstructed.width ||
      original.channels != reconstructed.channels)
    throw DataError("original and reconstruction differ in shape");
  if (original.channels != 4) throw DataError("evaluation needs 4-channel Sinclair rasters");

  Evaluation ev;
  auto& r = ev.report;
  r.recon = metrics::recon_metrics(original, reconstructed);
  ev.ref_halpha = pol::decompose_raster(original, pol::Decomposition::halpha, cfg.decompose);
  ev.rec_halpha = pol::decompose_raster(reconstructed, pol::Decomposition::halpha, cfg.decompose);
  ev.ref_cameron = pol::decompose_raster(original, pol::Decomposition::cameron, cfg.decompose);
  ev.rec_cameron = pol::decompose_raster(reconstructed, pol::Decomposition::cameron, cfg.decompose);
  r.classification["halpha"] = metrics::classification_metrics(ev.ref_halpha.labels, ev.rec_halpha.labels, 9);
  r.classification["cameron"] =
      metrics::classification_metrics(ev.ref_cameron.labels, ev.rec_cameron.labels, pol::kCameronClasses);
  std::tie(r.amp_hist, r.phase_hist) = metrics::error_histograms(original, reconstructed, cfg.hist);
  r.shifts = metrics::shift_map(ev.ref_halpha.halpha, ev.rec_halpha.halpha);

  if (out_dir.empty()) return ev;
  fs::create_directories(out_dir);
  metrics::write_report(out_dir, r);
  {
    std::ofstream f(out_dir / "report.txt", std::ios::app);
    f << "f1_mode=" << (cfg.weighted_f1 ? "weighted" : "macro") << "\n";
  }
  pol::save_decomposition(out_dir / "halpha_ref", ev.ref_halpha);
  pol::save_decomposition(out_dir / "halpha_rec", ev.rec_halpha);
  pol::save_decomposition(out_dir / "cameron_ref", ev.ref_cameron);
  pol::save_decomposition(out_dir / "cameron_rec", ev.rec_cameron);

  if (!cfg.figures) return ev;
  const fs::path fig = out_dir / "figures";
  fs::create_directories(fig);
  for (auto [name, img] : {std::pair{"ref", &original}, std::pair{"rec", &reconstructed}}) {
    const std::string n = name;
    write_ppm(fig / ("pauli_" + n + ".ppm"),
              composite(pol::decompose_raster(*img, pol::Decomposition::pauli, cfg.decompose)));
    write_ppm(fig / ("krogager_" + n + ".ppm"),
              composite(pol::decompose_raster(*img, pol::Decomposition::krogager, cfg.decompose)));
  }
  write_ppm(fig / "halpha_ref.ppm", class_map(ev.ref_halpha.labels, pol::Decomposition::halpha));
  write_ppm(fig / "halpha_rec.ppm", class_map(ev.rec_halpha.labels, pol::Decomposition::halpha));
  write_ppm(fig / "cameron_ref.ppm", class_map(ev.ref_cameron.labels, pol::Decomposition::cameron));
  write_ppm(fig / "cameron_rec.ppm", class_map(ev.rec_cameron.labels, pol::Decomposition::cameron));
  write_ppm(fig / "confusion_halpha.ppm", confusion_image(r.classification.at("halpha")));
  write_ppm(fig / "confusion_cameron.ppm", confusion_image(r.classification.at("cameron")));
  write_ppm(fig / "halpha_shifts.ppm", shift_figure(r.shifts, cfg.decompose.zones));
  return ev;
}

}  // namespace polsar::pipeline
