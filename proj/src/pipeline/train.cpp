#include "polsar/pipeline/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "polsar/cxnn/checkpoint.hpp"
#include "polsar/errors.hpp"

namespace polsar::pipeline {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::uint64_t epoch_seed(std::uint64_t seed, int epoch) {
  // splitmix64 finalizer so neighbouring seeds give unrelated orders
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ull + std::uint64_t(epoch) + 0x632BE59BD9B4E019ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::string encode_history(const std::vector<EpochRecord>& h) {
  std::string s;
  for (const auto& r : h) s += std::to_string(r.epoch) + ":" + fmt(r.train_mse) + ":" + fmt(r.val_mse) + ";";
  return s;
}

std::vector<EpochRecord> decode_history(const std::string& s) {
  std::vector<EpochRecord> out;
  std::istringstream is(s);
  std::string item;
  while (std::getline(is, item, ';')) {
    if (item.empty()) continue;
    const auto a = item.find(':'), b = item.find(':', a + 1);
    if (a == std::string::npos || b == std::string::npos) throw DataError("corrupt training history in checkpoint");
    out.push_back({std::stoi(item.substr(0, a)), std::stod(item.substr(a + 1, b - a - 1)), std::stod(item.substr(b + 1))});
  }
  return out;
}

// optimizer settings that must agree between a checkpoint and a resumed run
nn::MetaMap optim_signature(const RunConfig& cfg) {
  const auto ini = cfg.to_ini();
  nn::MetaMap m;
  for (const auto& [k, v] : ini.at("optim"))
    if (k != "epochs") m["optim." + k] = v;
  for (const auto& [k, v] : ini.at("data")) m["data." + k] = v;
  return m;
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& h) {
  std::ostringstream os;
  os.precision(17);
  os << "epoch,train_mse,val_mse\n";
  for (const auto& r : h) os << r.epoch << "," << r.train_mse << "," << r.val_mse << "\n";
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write " + path.string());
  f << os.str();
}

template <class T>
void zero_grads(const nn::ParamList<T>& params) {
  for (auto* p : params) p->value.zero_grad();
}

template <class T>
TrainResult train_impl(const RunConfig& cfg, const Dataset& ds, const TrainOptions& opt) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto& out = cfg.out_dir;
  std::filesystem::create_directories(out);
  const auto train_tiles = ds.tiles.select(data::Fold::train);
  const auto val_tiles = ds.tiles.select(data::Fold::val);
  if (train_tiles.empty()) throw DataError("no training tiles");
  for (const auto& t : ds.tiles.tiles)
    if (int(t.size) != cfg.model.tile_size)
      throw ConfigError("tile size " + std::to_string(t.size) + " differs from model.tile_size " +
                        std::to_string(cfg.model.tile_size));

  nn::AutoEncoder<T> model(cfg.model, cfg.optim.seed);
  auto params = model.parameters();
  TrainResult res;
  res.parameters = model.parameter_count();
  res.best_checkpoint = out / "best.ckpt";
  res.last_checkpoint = out / "last.ckpt";
  res.loss_csv = out / "loss.csv";

  nn::MetaMap meta;
  for (const auto& [k, v] : cfg.model.to_map()) meta["model." + k] = v;
  for (const auto& [k, v] : optim_signature(cfg)) meta[k] = v;
  meta["train.precision"] = sizeof(T) == 4 ? "float" : "double";
  meta["norm.mode"] = std::string(data::to_string(ds.norm.mode));
  {
    data::Meta nm;
    data::store_params(nm, ds.norm);
    meta["norm.scale"] = nm["norm.scale"];
  }

  const int B = cfg.optim.batch;
  int start_epoch = 1;
  std::uint64_t step = 0;
  if (!opt.resume.empty()) {
    const auto m = nn::load_checkpoint(opt.resume, model);
    for (const auto& [k, v] : meta)
      if (k.rfind("norm.", 0) != 0 && (!m.count(k) || m.at(k) != v))
        throw ConfigError("cannot resume: checkpoint " + k + " = '" + (m.count(k) ? m.at(k) : "<missing>") +
                          "' but the run has '" + v + "'");
    start_epoch = std::stoi(m.at("train.epoch")) + 1;
    step = std::stoull(m.at("train.step"));
    res.initial_val_mse = std::stod(m.at("train.initial_val_mse"));
    res.best_val_mse = std::stod(m.at("train.best_val_mse"));
    res.best_epoch = std::stoi(m.at("train.best_epoch"));
    res.history = decode_history(m.at("train.history"));
  } else {
    res.initial_val_mse = evaluate_mse(model, ds.normalized, val_tiles.empty() ? train_tiles : val_tiles, B);
    res.best_val_mse = res.initial_val_mse;
    if (opt.log) *opt.log << "epoch 0: val_mse " << res.initial_val_mse << " (" << res.parameters << " parameters)\n";
  }

  auto save = [&](const std::filesystem::path& p, int epoch) {
    nn::MetaMap m = meta;
    m["train.epoch"] = std::to_string(epoch);
    m["train.step"] = std::to_string(step);
    m["train.initial_val_mse"] = fmt(res.initial_val_mse);
    m["train.best_val_mse"] = fmt(res.best_val_mse);
    m["train.best_epoch"] = std::to_string(res.best_epoch);
    m["train.history"] = encode_history(res.history);
    nn::save_checkpoint(p, model, m);
  };

  for (int epoch = start_epoch; epoch <= cfg.optim.epochs; ++epoch) {
    const auto order = data::shuffled_indices(train_tiles.size(), epoch_seed(cfg.optim.seed, epoch));
    double loss_sum = 0;
    std::size_t seen = 0;
    for (std::size_t b0 = 0, bi = 0; b0 < order.size(); b0 += std::size_t(B), ++bi) {
      std::vector<data::Tile> bt;
      for (std::size_t i = b0; i < std::min(order.size(), b0 + std::size_t(B)); ++i) bt.push_back(train_tiles[order[i]]);
      auto dump = [&](const std::string& what) {
        std::ofstream f(out / "nan_batch.txt");
        f << "epoch=" << epoch << "\nbatch=" << bi << "\nstep=" << step + 1 << "\nreason=" << what << "\ntiles=";
        for (const auto& t : bt) f << " (" << t.row0 << "," << t.col0 << ")";
        f << "\n";
        throw NumericError(what + " at epoch " + std::to_string(epoch) + ", batch " + std::to_string(bi) +
                           "; details in " + (out / "nan_batch.txt").string());
      };
      const auto x = make_batch<T>(ds.normalized, bt);
      for (const auto& v : x.data())
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) dump("non-finite input sample");
      zero_grads(params);
      std::optional<cx::Tensor<T>> loss;
      try {
        loss = nn::mse_loss(model.forward(x, nn::Mode::train), x);
      } catch (const NumericError& e) {
        dump(std::string("non-finite activation (") + e.what() + ")");
      }
      const double l = double(loss->item().real());
      if (!std::isfinite(l)) dump("non-finite loss");
      cx::backward(*loss);
      try {
        nn::adamw_step(params, cfg.optim.adamw, step + 1);
      } catch (const NumericError& e) {
        dump(std::string("non-finite gradient (") + e.what() + ")");
      }
      ++step;
      loss_sum += l * double(bt.size());
      seen += bt.size();
    }
    zero_grads(params);
    EpochRecord rec{epoch, loss_sum / double(seen),
                    evaluate_mse(model, ds.normalized, val_tiles.empty() ? train_tiles : val_tiles, B)};
    res.history.push_back(rec);
    if (opt.log)
      *opt.log << "epoch " << epoch << ": train_mse " << rec.train_mse << " val_mse " << rec.val_mse << "\n"
               << std::flush;
    const bool improved = res.best_epoch == 0 || rec.val_mse < res.best_val_mse;
    if (improved) {
      res.best_val_mse = rec.val_mse;
      res.best_epoch = epoch;
    }
    save(res.last_checkpoint, epoch);
    if (improved) save(res.best_checkpoint, epoch);
    write_loss_csv(res.loss_csv, res.history);
    if (opt.stop_after >= 0 && epoch >= opt.stop_after) break;
  }
  if (res.history.empty()) {
    save(res.last_checkpoint, 0);
    save(res.best_checkpoint, 0);
    write_loss_csv(res.loss_csv, res.history);
  }
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

template <class T>
nn::AutoEncoder<T> load_model(const std::filesystem::path& ckpt, nn::MetaMap& meta) {
  meta = nn::read_checkpoint_meta(ckpt);
  std::map<std::string, std::string> mc;
  for (const auto& [k, v] : meta)
    if (k.rfind("model.", 0) == 0) mc[k.substr(6)] = v;
  nn::AutoEncoder<T> model(nn::AEConfig::from_map(mc), 0);
  nn::load_checkpoint(ckpt, model);
  return model;
}

template <class T>
data::ComplexRaster reconstruct_from(const std::filesystem::path& ckpt, const data::ComplexRaster& original, int batch) {
  nn::MetaMap meta;
  auto model = load_model<T>(ckpt, meta);
  data::Meta nm{{"norm.mode", meta.at("norm.mode")}, {"norm.scale", meta.at("norm.scale")}};
  const auto norm = data::params_from_meta(nm);
  const auto img = data::expand_to_sinclair(original);
  if (std::size_t(model.config().input_channels) != img.channels)
    throw DataError("checkpoint expects " + std::to_string(model.config().input_channels) + " channels, raster has " +
                    std::to_string(img.channels));
  auto rec = reconstruct_with(model, data::apply_normalization(img, norm), batch);
  auto outr = data::denormalize(rec, norm);
  outr.meta = original.meta;
  outr.meta["reconstructed_from"] = ckpt.filename().string();
  return outr;
}

}  // namespace

Dataset load_dataset(const RunConfig& cfg) {
  Dataset ds;
  if (cfg.data.source == "synth") {
    ds.synth = data::synthesize(data::desk_spec(cfg.data.synth_size, cfg.data.synth_noise, cfg.data.synth_seed));
    ds.original = ds.synth->raster;
  } else {
    ds.original = data::read_raster(cfg.data.raster, {.expand_to_sinclair = true});
  }
  if (ds.original.channels != std::size_t(cfg.model.input_channels))
    throw ConfigError("raster has " + std::to_string(ds.original.channels) + " channels, model.input_channels is " +
                      std::to_string(cfg.model.input_channels));
  std::tie(ds.normalized, ds.norm) = data::normalize(ds.original, cfg.data.normalize);
  if (!cfg.data.manifest.empty()) {
    ds.tiles = data::read_manifest(cfg.data.manifest);
  } else {
    ds.tiles = data::split(data::tile(ds.original.height, ds.original.width, std::size_t(cfg.model.tile_size)),
                           cfg.data.fractions, cfg.data.split_seed);
  }
  if (ds.tiles.tiles.empty()) throw DataError("raster yields no tiles of size " + std::to_string(cfg.model.tile_size));
  return ds;
}

template <class T>
cx::Tensor<T> make_batch(const data::ComplexRaster& img, const std::vector<data::Tile>& tiles) {
  if (tiles.empty()) throw DataError("empty batch");
  const std::size_t t = tiles[0].size, C = img.channels;
  std::vector<cx::cplx<T>> buf(tiles.size() * C * t * t);
  for (std::size_t b = 0; b < tiles.size(); ++b) {
    const auto& tl = tiles[b];
    if (tl.size != t) throw DataError("mixed tile sizes in one batch");
    if (tl.row0 + t > img.height || tl.col0 + t > img.width) throw DataError("tile exceeds the raster");
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t y = 0; y < t; ++y)
        for (std::size_t x = 0; x < t; ++x) {
          const auto v = img.at(tl.row0 + y, tl.col0 + x, c);
          buf[((b * C + c) * t + y) * t + x] = {T(v.real()), T(v.imag())};
        }
  }
  return cx::Tensor<T>({tiles.size(), C, t, t}, std::move(buf));
}

template <class T>
double evaluate_mse(nn::AutoEncoder<T>& model, const data::ComplexRaster& img, const std::vector<data::Tile>& tiles,
                    int batch) {
  double sum = 0;
  std::size_t n = 0;
  for (std::size_t b0 = 0; b0 < tiles.size(); b0 += std::size_t(batch)) {
    const std::vector<data::Tile> bt(tiles.begin() + std::ptrdiff_t(b0),
                                     tiles.begin() + std::ptrdiff_t(std::min(tiles.size(), b0 + std::size_t(batch))));
    const auto x = make_batch<T>(img, bt);
    const auto y = model.forward(x, nn::Mode::eval);
    const auto xd = x.data(), yd = y.data();
    for (std::size_t i = 0; i < xd.size(); ++i) sum += double(std::norm(yd[i] - xd[i]));
    n += xd.size();
  }
  return n ? sum / double(n) : 0.0;
}

data::ComplexRaster crop_to_grid(const data::ComplexRaster& img, std::size_t tile) {
  const std::size_t H = img.height / tile * tile, W = img.width / tile * tile;
  if (H == img.height && W == img.width) return img;
  data::ComplexRaster out(H, W, img.channels, img.dtype);
  out.meta = img.meta;
  for (std::size_t r = 0; r < H; ++r)
    for (std::size_t c = 0; c < W; ++c)
      for (std::size_t ch = 0; ch < img.channels; ++ch) out.at(r, c, ch) = img.at(r, c, ch);
  return out;
}

template <class T>
data::ComplexRaster reconstruct_with(nn::AutoEncoder<T>& model, const data::ComplexRaster& normalized, int batch) {
  const std::size_t t = std::size_t(model.config().tile_size);
  const auto grid = data::tile(normalized.height, normalized.width, t);
  if (grid.tiles.empty()) throw DataError("raster is smaller than one tile");
  data::ComplexRaster out(normalized.height / t * t, normalized.width / t * t, normalized.channels, normalized.dtype);
  out.meta = normalized.meta;
  const std::size_t C = normalized.channels;
  for (std::size_t b0 = 0; b0 < grid.tiles.size(); b0 += std::size_t(batch)) {
    const std::vector<data::Tile> bt(
        grid.tiles.begin() + std::ptrdiff_t(b0),
        grid.tiles.begin() + std::ptrdiff_t(std::min(grid.tiles.size(), b0 + std::size_t(batch))));
    const auto y = model.forward(make_batch<T>(normalized, bt), nn::Mode::eval);
    const auto yd = y.data();
    for (std::size_t b = 0; b < bt.size(); ++b)
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t r = 0; r < t; ++r)
          for (std::size_t x = 0; x < t; ++x) {
            const auto v = yd[((b * C + c) * t + r) * t + x];
            out.at(bt[b].row0 + r, bt[b].col0 + x, c) = {double(v.real()), double(v.imag())};
          }
  }
  return out;
}

TrainResult train(const RunConfig& cfg, const Dataset& ds, const TrainOptions& opt) {
  cfg.validate();
  return cfg.optim.precision == Precision::f32 ? train_impl<float>(cfg, ds, opt) : train_impl<double>(cfg, ds, opt);
}

data::ComplexRaster reconstruct(const std::filesystem::path& checkpoint, const data::ComplexRaster& original, int batch) {
  const auto meta = nn::read_checkpoint_meta(checkpoint);
  const auto it = meta.find("train.precision");
  if (it == meta.end()) throw DataError("checkpoint lacks train.precision");
  return it->second == "float" ? reconstruct_from<float>(checkpoint, original, batch)
                               : reconstruct_from<double>(checkpoint, original, batch);
}

template cx::Tensor<float> make_batch(const data::ComplexRaster&, const std::vector<data::Tile>&);
template cx::Tensor<double> make_batch(const data::ComplexRaster&, const std::vector<data::Tile>&);
template double evaluate_mse(nn::AutoEncoder<float>&, const data::ComplexRaster&, const std::vector<data::Tile>&, int);
template double evaluate_mse(nn::AutoEncoder<double>&, const data::ComplexRaster&, const std::vector<data::Tile>&, int);
template data::ComplexRaster reconstruct_with(nn::AutoEncoder<float>&, const data::ComplexRaster&, int);
template data::ComplexRaster reconstruct_with(nn::AutoEncoder<double>&, const data::ComplexRaster&, int);

}  // namespace polsar::pipeline
