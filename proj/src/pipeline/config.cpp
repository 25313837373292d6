#include "polsar/pipeline/config.hpp"

#include <fstream>
#include <numbers>
#include <sstream>

#include "polsar/errors.hpp"

namespace polsar::pipeline {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct Reader {
  std::string section;
  const std::map<std::string, std::string>& kv;

  std::string key(const std::string& k) const { return section + "." + k; }

  double num(const std::string& k, const std::string& v) const {
    std::size_t used = 0;
    double out = 0;
    try {
      out = std::stod(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != v.size()) throw ConfigError(key(k) + ": not a number: '" + v + "'");
    return out;
  }
  long long integer(const std::string& k, const std::string& v) const {
    std::size_t used = 0;
    long long out = 0;
    try {
      out = std::stoll(v, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != v.size()) throw ConfigError(key(k) + ": not an integer: '" + v + "'");
    return out;
  }
  std::uint64_t seed(const std::string& k, const std::string& v) const {
    const long long s = integer(k, v);
    if (s < 0) throw ConfigError(key(k) + " must be >= 0");
    return std::uint64_t(s);
  }
  bool flag(const std::string& k, const std::string& v) const {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key(k) + ": expected true/false, got '" + v + "'");
  }
  template <std::size_t N>
  std::array<double, N> list(const std::string& k, const std::string& v) const {
    std::array<double, N> out{};
    std::istringstream is(v);
    std::string part;
    std::size_t i = 0;
    while (std::getline(is, part, ',')) {
      if (i == N) throw ConfigError(key(k) + ": expected " + std::to_string(N) + " comma-separated numbers");
      out[i++] = num(k, trim(part));
    }
    if (i != N) throw ConfigError(key(k) + ": expected " + std::to_string(N) + " comma-separated numbers");
    return out;
  }
  [[noreturn]] void unknown(const std::string& k) const { throw ConfigError("unknown key " + key(k)); }
};

template <std::size_t N>
std::string join(const std::array<double, N>& a) {
  std::string s;
  for (std::size_t i = 0; i < N; ++i) s += (i ? "," : "") + fmt(a[i]);
  return s;
}

constexpr double kDeg = 180 / std::numbers::pi;

}  // namespace

Ini parse_ini(const std::string& text) {
  Ini ini;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty section name");
      ini[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    if (section.empty()) throw ConfigError("line " + std::to_string(lineno) + ": key outside any section");
    const std::string k = trim(line.substr(0, eq)), v = trim(line.substr(eq + 1));
    if (k.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (!ini[section].emplace(k, v).second) throw ConfigError("line " + std::to_string(lineno) + ": duplicate key " + section + "." + k);
  }
  return ini;
}

Ini read_ini(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_ini(ss.str());
}

std::string format_ini(const Ini& ini) {
  std::string out;
  for (const auto& [section, kv] : ini) {
    out += "[" + section + "]\n";
    for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
    out += "\n";
  }
  return out;
}

void apply_override(Ini& ini, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq)
    throw ConfigError("override '" + assignment + "' is not of the form section.key=value");
  ini[trim(assignment.substr(0, dot))][trim(assignment.substr(dot + 1, eq - dot - 1))] = trim(assignment.substr(eq + 1));
}

RunConfig RunConfig::from_ini(const Ini& ini) {
  RunConfig c;
  for (const auto& [section, kv] : ini) {
    const Reader r{section, kv};
    if (section == "data") {
      for (const auto& [k, v] : kv) {
        if (k == "source") {
          if (v != "synth" && v != "file") throw ConfigError("data.source must be synth or file");
          c.data.source = v;
        } else if (k == "raster") c.data.raster = v;
        else if (k == "manifest") c.data.manifest = v;
        else if (k == "fractions") c.data.fractions = r.list<3>(k, v);
        else if (k == "split_seed") c.data.split_seed = r.seed(k, v);
        else if (k == "normalize") c.data.normalize = data::parse_norm_mode(v);
        else if (k == "synth_size") c.data.synth_size = std::size_t(r.integer(k, v));
        else if (k == "synth_noise") c.data.synth_noise = r.num(k, v);
        else if (k == "synth_seed") c.data.synth_seed = r.seed(k, v);
        else r.unknown(k);
      }
    } else if (section == "model") {
      c.model = nn::AEConfig::from_map(kv);
    } else if (section == "optim") {
      for (const auto& [k, v] : kv) {
        if (k == "lr") c.optim.adamw.lr = r.num(k, v);
        else if (k == "weight_decay") c.optim.adamw.weight_decay = r.num(k, v);
        else if (k == "beta1") c.optim.adamw.beta1 = r.num(k, v);
        else if (k == "beta2") c.optim.adamw.beta2 = r.num(k, v);
        else if (k == "eps") c.optim.adamw.eps = r.num(k, v);
        else if (k == "batch") c.optim.batch = int(r.integer(k, v));
        else if (k == "epochs") c.optim.epochs = int(r.integer(k, v));
        else if (k == "seed") c.optim.seed = r.seed(k, v);
        else if (k == "precision") {
          if (v == "float" || v == "f32") c.optim.precision = Precision::f32;
          else if (v == "double" || v == "f64") c.optim.precision = Precision::f64;
          else throw ConfigError("optim.precision must be float or double");
        } else r.unknown(k);
      }
    } else if (section == "eval") {
      auto& d = c.eval.decompose;
      for (const auto& [k, v] : kv) {
        if (k == "window") d.window = int(r.integer(k, v));
        else if (k == "h_splits") {
          const auto h = r.list<2>(k, v);
          d.zones.h_low = h[0];
          d.zones.h_high = h[1];
        } else if (k == "alpha_low") d.zones.alpha_low = r.list<2>(k, v);
        else if (k == "alpha_mid") d.zones.alpha_mid = r.list<2>(k, v);
        else if (k == "alpha_high") d.zones.alpha_high = r.list<2>(k, v);
        else if (k == "rec_threshold_deg") d.cameron.rec_threshold = r.num(k, v) / kDeg;
        else if (k == "sym_threshold_deg") d.cameron.sym_threshold = r.num(k, v) / kDeg;
        else if (k == "helix_threshold_deg") d.cameron.helix_threshold = r.num(k, v) / kDeg;
        else if (k == "amp_bins") c.eval.hist.amp_bins = int(r.integer(k, v));
        else if (k == "amp_max") c.eval.hist.amp_max = r.num(k, v);
        else if (k == "phase_bins") c.eval.hist.phase_bins = int(r.integer(k, v));
        else if (k == "f1") {
          if (v != "macro" && v != "weighted") throw ConfigError("eval.f1 must be macro or weighted");
          c.eval.weighted_f1 = v == "weighted";
        } else if (k == "figures") c.eval.figures = r.flag(k, v);
        else r.unknown(k);
      }
    } else if (section == "output") {
      for (const auto& [k, v] : kv) {
        if (k == "dir") c.out_dir = v;
        else r.unknown(k);
      }
    } else {
      throw ConfigError("unknown section [" + section + "]");
    }
  }
  c.validate();
  return c;
}

Ini RunConfig::to_ini() const {
  Ini ini;
  auto& d = ini["data"];
  d["source"] = data.source;
  if (!data.raster.empty()) d["raster"] = data.raster.string();
  if (!data.manifest.empty()) d["manifest"] = data.manifest.string();
  d["fractions"] = join(data.fractions);
  d["split_seed"] = std::to_string(data.split_seed);
  d["normalize"] = std::string(to_string(data.normalize));
  d["synth_size"] = std::to_string(data.synth_size);
  d["synth_noise"] = fmt(data.synth_noise);
  d["synth_seed"] = std::to_string(data.synth_seed);
  ini["model"] = model.to_map();
  auto& o = ini["optim"];
  o["lr"] = fmt(optim.adamw.lr);
  o["weight_decay"] = fmt(optim.adamw.weight_decay);
  o["beta1"] = fmt(optim.adamw.beta1);
  o["beta2"] = fmt(optim.adamw.beta2);
  o["eps"] = fmt(optim.adamw.eps);
  o["batch"] = std::to_string(optim.batch);
  o["epochs"] = std::to_string(optim.epochs);
  o["seed"] = std::to_string(optim.seed);
  o["precision"] = optim.precision == Precision::f32 ? "float" : "double";
  auto& e = ini["eval"];
  const auto& z = eval.decompose.zones;
  e["window"] = std::to_string(eval.decompose.window);
  e["h_splits"] = join(std::array<double, 2>{z.h_low, z.h_high});
  e["alpha_low"] = join(z.alpha_low);
  e["alpha_mid"] = join(z.alpha_mid);
  e["alpha_high"] = join(z.alpha_high);
  e["rec_threshold_deg"] = fmt(eval.decompose.cameron.rec_threshold * kDeg);
  e["sym_threshold_deg"] = fmt(eval.decompose.cameron.sym_threshold * kDeg);
  e["helix_threshold_deg"] = fmt(eval.decompose.cameron.helix_threshold * kDeg);
  e["amp_bins"] = std::to_string(eval.hist.amp_bins);
  e["amp_max"] = fmt(eval.hist.amp_max);
  e["phase_bins"] = std::to_string(eval.hist.phase_bins);
  e["f1"] = eval.weighted_f1 ? "weighted" : "macro";
  e["figures"] = eval.figures ? "true" : "false";
  ini["output"]["dir"] = out_dir.string();
  return ini;
}

void RunConfig::validate() const {
  model.validate();
  if (data.source == "file" && data.raster.empty()) throw ConfigError("data.raster is required when data.source = file");
  if (data.synth_size < std::size_t(model.tile_size)) throw ConfigError("data.synth_size must be >= model.tile_size");
  if (!(data.synth_noise >= 0)) throw ConfigError("data.synth_noise must be >= 0");
  if (optim.batch < 1) throw ConfigError("optim.batch must be >= 1");
  if (optim.epochs < 0) throw ConfigError("optim.epochs must be >= 0");
  if (!(optim.adamw.lr > 0)) throw ConfigError("optim.lr must be > 0");
  if (!(optim.adamw.weight_decay >= 0)) throw ConfigError("optim.weight_decay must be >= 0");
  if (!(optim.adamw.beta1 >= 0 && optim.adamw.beta1 < 1 && optim.adamw.beta2 >= 0 && optim.adamw.beta2 < 1))
    throw ConfigError("optim betas must lie in [0, 1)");
  if (eval.decompose.window < 3 || eval.decompose.window % 2 == 0) throw ConfigError("eval.window must be odd and >= 3");
  eval.decompose.zones.validate();
  for (double t : {eval.decompose.cameron.rec_threshold, eval.decompose.cameron.sym_threshold,
                   eval.decompose.cameron.helix_threshold})
    if (!(t > 0 && t < std::numbers::pi / 2)) throw ConfigError("Cameron thresholds must lie in (0, 90) degrees");
  if (eval.hist.amp_bins < 1 || eval.hist.phase_bins < 1) throw ConfigError("histogram bin counts must be >= 1");
  if (!data.raster.empty() && data.source == "file" && !std::filesystem::exists(data.raster))
    throw ConfigError("data.raster " + data.raster.string() + " does not exist");
  if (!data.manifest.empty() && !std::filesystem::exists(data.manifest))
    throw ConfigError("data.manifest " + data.manifest.string() + " does not exist");
}

}  // namespace polsar::pipeline
