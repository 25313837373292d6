// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any fails.
// The training criteria run the desk configuration; POLSAR_ACCEPT_EPOCHS
// lowers the epoch count for quick local runs (the verdict then only holds
// for that budget).
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "gradcheck.hpp"
#include "polsar/cxnn/checkpoint.hpp"
#include "polsar/cxnn/functional.hpp"
#include "polsar/dataio/raster.hpp"
#include "polsar/errors.hpp"
#include "polsar/pipeline/pipeline.hpp"

using namespace polsar;
namespace fs = std::filesystem;
using testing::C;
using cx::Tensor;

namespace {

struct Verdict {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

std::string fmt(double v, int prec = 3) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

fs::path work_dir() {
  const auto p = fs::current_path() / "acceptance_runs";
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

// ---------------------------------------------------------------- criterion 1

Tensor<double> probe(const Tensor<double>& y, const Tensor<double>& c) { return cx::real(cx::sum(cx::mul(cx::conj(c), y))); }

template <class M>
struct ParamsOf {
  M m;
  nn::ParamList<double> parameters() {
    nn::ParamList<double> out;
    m.collect(out);
    return out;
  }
};

void criterion_gradients(Verdict& v) {
  using namespace nn;
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> ext(2, 5);
  std::map<std::string, double> worst;
  std::map<std::string, int> shapes;
  auto track = [&](const std::string& op, const testing::GradReport& r) {
    worst[op] = std::max(worst[op], r.max_rel);
    ++shapes[op];
  };
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t B = ext(rng) - 1, Ci = ext(rng) - 1, Co = ext(rng) - 1;
    const std::size_t H = ext(rng) + 1, W = ext(rng) + 1;
    auto x = testing::random_tensor({B, Ci, H, W}, rng);
    auto w = testing::random_tensor({Co, Ci, 3, 3}, rng, 0.5);
    auto b = testing::random_tensor({Co}, rng);
    const int stride = 1 + trial % 2;
    auto t = testing::random_tensor(conv2d(x, w, b, stride, 1).shape(), rng);
    track("conv2d", testing::gradcheck([&](auto& in) { return probe(conv2d(in[0], in[1], in[2], stride, 1), t); },
                                       {x, w, b}));
    track("conv2d-real",
          testing::gradcheck([&](auto& in) { return probe(conv2d(in[0], in[1], in[2], stride, 1, Field::real), t); },
                             {cx::real(x), cx::real(w), cx::real(b)}, {}, {true, true, true}));
    auto z = testing::random_tensor({B, Ci * W}, rng);
    auto L = testing::random_tensor({Co, Ci * W}, rng);
    auto tl = testing::random_tensor({B, Co}, rng);
    track("linear", testing::gradcheck([&](auto& in) { return probe(linear(in[0], in[1], in[2]), tl); }, {z, L, b}));
    auto ta = testing::random_tensor(x.shape(), rng);
    for (auto k : {ActivationKind::crelu, ActivationKind::cardioid, ActivationKind::zrelu})
      track(std::string(to_string(k)), testing::gradcheck([&](auto& in) { return probe(activation(in[0], k), ta); }, {x}));
    auto mb = testing::random_real_tensor({Ci}, rng, 0.3);
    track("modrelu", testing::gradcheck(
                         [&](auto& in) { return probe(activation(in[0], ActivationKind::modrelu, in[1]), ta); },
                         {x, mb}, {}, {false, true}));
    const std::size_t He = H - H % 2, We = W - W % 2;
    auto xe = testing::random_tensor({B, Ci, He, We}, rng);
    auto tp = testing::random_tensor({B, Ci, He / 2, We / 2}, rng);
    track("maxpool", testing::gradcheck([&](auto& in) { return probe(max_pool2d(in[0], 2, 2), tp); }, {xe}));
    track("avgpool", testing::gradcheck([&](auto& in) { return probe(avg_pool2d(in[0], 2, 2), tp); }, {xe}));
    auto tu = testing::random_tensor({B, Ci, 2 * H, 2 * W}, rng);
    track("upsample-nearest", testing::gradcheck([&](auto& in) { return probe(upsample_nearest(in[0], 2), tu); }, {x}));
    track("upsample-bilinear",
          testing::gradcheck([&](auto& in) { return probe(upsample_bilinear(in[0], 2), tu); }, {x}));
    ComplexBNStats<double> st(Ci);
    auto gamma = testing::random_real_tensor({Ci, 4}, rng);
    auto beta = testing::random_tensor({Ci}, rng);
    track("complex-bn", testing::gradcheck(
                            [&](auto& in) { return probe(complex_batch_norm(in[0], in[1], in[2], st, Mode::train), ta); },
                            {x, gamma, beta}, {}, {false, true, false}));
    RealBNStats<double> rs(Ci);
    auto rg = testing::random_real_tensor({Ci}, rng);
    auto rb = testing::random_real_tensor({Ci}, rng);
    track("real-bn", testing::gradcheck(
                         [&](auto& in) { return probe(real_batch_norm(in[0], in[1], in[2], rs, Mode::train), cx::real(ta)); },
                         {cx::real(x), rg, rb}, {}, {true, true, true}));
    auto tt = testing::random_tensor(x.shape(), rng);
    track("mse", testing::gradcheck([&](auto& in) { return mse_loss(in[0], in[1]); }, {x, tt}));

    // residual block with non-trivial BN affine and activation offsets
    BlockSpec s;
    s.cin = Ci;
    s.cout = Co;
    s.downsample = trial % 2 == 1;
    s.activation = ActivationKind(trial % 4);
    Rng r(100 + trial);
    ParamsOf<ResBlock<double>> blk{ResBlock<double>("b", s, r)};
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    for (auto* p : blk.parameters())
      if (p->scheme == InitScheme::zeros)
        for (auto& d : p->value.mutable_data()) d += C(u(rng), p->real_valued ? 0 : u(rng));
    auto xb = testing::random_tensor({std::size_t(2), Ci, 2 * He, 2 * We}, rng);
    auto cb = testing::random_tensor(blk.m.forward(xb, Mode::train).shape(), rng);
    track("resblock", testing::model_gradcheck(blk, [&] { return probe(blk.m.forward(xb, Mode::train), cb); }));

    // full depth-2 autoencoder, alternating CVNN and dual-RVNN, some with a dense bottleneck
    AEConfig c;
    c.depth = 2;
    c.width = 1 + trial % 2;
    c.tile_size = 8;
    c.input_channels = 1 + trial % 3;
    c.activation = ActivationKind(trial % 4);
    c.kind = trial % 3 == 2 ? ModelKind::dual_rvnn : ModelKind::cvnn;
    if (trial % 4 == 3) c.bottleneck_dim = 2;
    c.upsample = trial % 5 == 4 ? Upsample::bilinear : Upsample::nearest;
    AutoEncoder<double> ae(c, 7 + trial);
    const std::size_t T = std::size_t(c.tile_size), IC = std::size_t(c.input_channels);
    // at least 3 samples per channel reach the bottom BN so its covariance is well conditioned
    const std::size_t NB = 3 + trial % 2;
    auto xa = testing::random_tensor({NB, IC, T, T}, rng);
    auto ya = testing::random_tensor({NB, IC, T, T}, rng);
    track("autoencoder", testing::model_gradcheck(ae, [&] { return mse_loss(ae.forward(xa, Mode::train), ya); }));
  }
  double overall = 0;
  for (auto& [op, err] : worst) {
    overall = std::max(overall, err);
    v.require(err < 1e-7, op + " rel err " + fmt(err));
    v.require(shapes[op] >= 20, op + " only " + std::to_string(shapes[op]) + " shapes");
  }
  v.detail << worst.size() << " ops x >= 20 shapes, worst rel err " << fmt(overall);
}

// ---------------------------------------------------------------- criteria 2-5

struct Gen {
  std::mt19937_64 rng;
  std::normal_distribution<double> n;
  explicit Gen(std::uint64_t seed) : rng(seed) {}
  pol::cd c() { return {n(rng), n(rng)}; }
  double u(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  pol::SinclairPixel reciprocal() { return pol::SinclairPixel::reciprocal(c(), c(), c()); }
};

double dist(const pol::SinclairPixel& a, const pol::SinclairPixel& b) {
  return std::sqrt(std::norm(a.hh - b.hh) + std::norm(a.hv - b.hv) + std::norm(a.vh - b.vh) + std::norm(a.vv - b.vv));
}

void criterion_pauli(Verdict& v) {
  Gen g(21);
  double we = 0, wi = 0;
  for (int i = 0; i < 100000; ++i) {
    const auto s = g.reciprocal();
    const auto k = pol::pauli_decompose(s);
    const double e = std::norm(k.alpha) + std::norm(k.beta) + std::norm(k.gamma);
    we = std::max(we, std::abs(e - s.span()) / s.span());
    wi = std::max(wi, dist(pol::pauli_compose(k), s) / std::sqrt(s.span()));
  }
  v.require(we < 1e-6, "energy");
  v.require(wi < 1e-6, "inverse");
  // trihedral -> alpha only, dihedral -> beta only, 45 degree dihedral -> gamma only
  const double r2 = std::sqrt(2.0);
  auto k = pol::pauli_decompose(pol::SinclairPixel::reciprocal(1, 0, 1));
  const bool tri = std::abs(k.alpha - r2) < 1e-15 && k.beta == 0.0 && k.gamma == 0.0;
  k = pol::pauli_decompose(pol::SinclairPixel::reciprocal(1, 0, -1));
  const bool di = k.alpha == 0.0 && std::abs(k.beta - r2) < 1e-15 && k.gamma == 0.0;
  k = pol::pauli_decompose(pol::SinclairPixel::reciprocal(0, 1, 0));
  const bool di45 = k.alpha == 0.0 && k.beta == 0.0 && std::abs(k.gamma - r2) < 1e-15;
  v.require(tri && di && di45, "canonical examples");
  v.detail << "1e5 pixels: energy rel err " << fmt(we) << ", inverse rel err " << fmt(wi)
           << "; canonical 3/3 " << (tri && di && di45 ? "ok" : "wrong");
}

void criterion_krogager(Verdict& v) {
  Gen g(22);
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    const auto s = g.reciprocal();
    worst = std::max(worst, dist(pol::krogager_synthesize(pol::krogager_decompose(s)), s) / std::sqrt(s.span()));
  }
  v.require(worst < 1e-6, "resynthesis");
  const pol::cd J(0, 1);
  const auto sph = pol::krogager_decompose(pol::SinclairPixel::reciprocal(1, 0, 1));
  const auto dip = pol::krogager_decompose(pol::SinclairPixel::reciprocal(std::cos(0.6), std::sin(0.6), -std::cos(0.6)));
  const auto hel = pol::krogager_decompose(pol::SinclairPixel::reciprocal(1, -J, -1));
  const double tiny = 1e-12;
  const bool single = sph.k_s > 0.5 && sph.k_d < tiny && sph.k_h < tiny && dip.k_d > 0.5 && dip.k_s < tiny &&
                      dip.k_h < tiny && hel.k_h > 0.5 && hel.k_s < tiny && hel.k_d < tiny;
  v.require(single, "pure components");
  v.detail << "1e4 pixels: resynthesis residual " << fmt(worst) << "; sphere/diplane/helix single component "
           << (single ? "ok" : "wrong");
}

void criterion_cameron(Verdict& v) {
  using CC = pol::CameronClass;
  const pol::cd J(0, 1);
  const std::vector<std::pair<pol::SinclairPixel, CC>> set = {
      {pol::SinclairPixel::reciprocal(1, 0, 1), CC::trihedral},
      {pol::SinclairPixel::reciprocal(1, 0, -1), CC::dihedral},
      {pol::SinclairPixel::reciprocal(1, 0, -0.5), CC::narrow_diplane},
      {pol::SinclairPixel::reciprocal(1, 0, 0), CC::dipole},
      {pol::SinclairPixel::reciprocal(1, 0, 0.5), CC::cylinder},
      {pol::SinclairPixel::reciprocal(1, 0, J), CC::quarter_wave},
      {pol::SinclairPixel::reciprocal(1, J, -1), CC::left_helix},
      {pol::SinclairPixel::reciprocal(1, -J, -1), CC::right_helix},
      {pol::SinclairPixel{0, 1, -1, 0}, CC::non_reciprocal},
  };
  Gen g(23);
  int own = 0, invariant = 0;
  for (const auto& [s, cls] : set) {
    own += pol::cameron_classify(s).cls == cls;
    int agree = 0;
    for (int i = 0; i < 1000; ++i) {
      const pol::cd k = std::polar(std::exp(g.u(-10, 10)), g.u(-std::numbers::pi, std::numbers::pi));
      agree += pol::cameron_classify({k * s.hh, k * s.hv, k * s.vh, k * s.vv}).cls == cls;
    }
    invariant += agree == 1000;
  }
  v.require(own == 9, "own class");
  v.require(invariant == 9, "scaling invariance");
  v.detail << own << "/9 own class, " << invariant << "/9 invariant under 1e3 complex scalings";
}

// real roots of x^3 - c2 x^2 + c1 x - c0, bisection between the critical points
std::array<double, 3> cubic_roots(double c2, double c1, double c0) {
  auto f = [&](long double x) { return ((x - c2) * x + c1) * x - c0; };
  const long double disc = std::max<long double>(0, (long double)c2 * c2 - 3.0L * c1);
  const long double x1 = (c2 - std::sqrt(disc)) / 3, x2 = (c2 + std::sqrt(disc)) / 3;
  const long double bound = 1 + std::abs(c2) + std::abs(c1) + std::abs(c0);
  auto root = [&](long double lo, long double hi) {
    const bool rising = f(hi) >= f(lo);
    for (int i = 0; i < 300; ++i) {
      const long double mid = (lo + hi) / 2;
      if ((f(mid) < 0) == rising) lo = mid;
      else hi = mid;
    }
    return double((lo + hi) / 2);
  };
  return {root(x2, bound), root(x1, x2), root(-bound, x1)};
}

void criterion_halpha(Verdict& v) {
  Gen g(24);
  double worst_root = 0, worst_p = 0;
  bool ranges = true;
  int oracle_checked = 0;
  for (int i = 0; i < 10000; ++i) {
    const int rank = 1 + i % 5;
    pol::Coherency t = pol::Coherency::Zero();
    for (int r = 0; r < rank; ++r) {
      Eigen::Vector3cd k(g.c(), g.c(), g.c());
      t += g.u(0.01, 2.0) * k * k.adjoint();
    }
    t /= t.trace().real();
    const auto h = pol::h_alpha(t);
    ranges = ranges && h.valid && h.entropy >= 0 && h.entropy <= 1 && h.alpha_mean >= 0 &&
             h.alpha_mean <= std::numbers::pi / 2;
    worst_p = std::max(worst_p, std::abs(h.pseudo_probs[0] + h.pseudo_probs[1] + h.pseudo_probs[2] - 1));
    // a repeated (zero) root puts the bisection oracle at sqrt(eps), so rank 1 is covered by the H check below
    if (rank == 1) continue;
    const double c1 = (t(0, 0) * t(1, 1) - t(0, 1) * t(1, 0) + t(0, 0) * t(2, 2) - t(0, 2) * t(2, 0) +
                       t(1, 1) * t(2, 2) - t(1, 2) * t(2, 1))
                          .real();
    const auto roots = cubic_roots(1.0, c1, t.determinant().real());
    const auto e = pol::eig_hermitian3(t);
    for (int k = 0; k < 3; ++k) worst_root = std::max(worst_root, std::abs(e.values[k] - roots[k]));
    ++oracle_checked;
  }
  const double h_identity = pol::h_alpha(pol::Coherency::Identity()).entropy;
  double h_rank1 = 0;
  for (int i = 0; i < 1000; ++i) {
    Eigen::Vector3cd k(g.c(), g.c(), g.c());
    h_rank1 = std::max(h_rank1, pol::h_alpha(k * k.adjoint()).entropy);
  }
  v.require(ranges, "H or alpha out of range");
  v.require(worst_p < 1e-9, "pseudo-probabilities");
  v.require(worst_root < 1e-9, "cubic-root oracle");
  v.require(std::abs(h_identity - 1) < 1e-6, "T = I");
  v.require(h_rank1 < 1e-6, "rank 1");
  v.detail << "1e4 matrices in range; |sum p - 1| <= " << fmt(worst_p) << "; oracle err " << fmt(worst_root) << " on "
           << oracle_checked << " rank>=2 matrices; H(I) = " << fmt(h_identity, 10) << "; max H(rank 1) = "
           << fmt(h_rank1);
}

// ---------------------------------------------------------------- criterion 6

void criterion_batchnorm(Verdict& v) {
  std::mt19937_64 rng(25);
  std::normal_distribution<double> n(0, 1);
  const std::size_t N = 1024, Cn = 3;
  std::vector<C> data(N * Cn);
  for (std::size_t i = 0; i < N; ++i) {
    const double a = n(rng), b = n(rng), c = n(rng);
    data[i * Cn] = C(3 + 2 * a, -1 + 1.5 * a + 0.3 * b);  // strongly non-circular
    data[i * Cn + 1] = C(0.1 * a, 5 * b);
    data[i * Cn + 2] = C(0.7 * c - 0.2 * b, 0.7 * c + 0.2 * b);
  }
  Tensor<double> x({N, Cn}, data);
  nn::ComplexBNStats<double> st(Cn);
  std::vector<C> g(Cn * 4);
  for (std::size_t c = 0; c < Cn; ++c) g[c * 4] = g[c * 4 + 3] = 1;
  const auto y = nn::complex_batch_norm(x, Tensor<double>({Cn, 4}, g), Tensor<double>({Cn}, std::vector<C>(Cn)), st,
                                        nn::Mode::train);
  double worst_mean = 0, worst_cov = 0;
  for (std::size_t c = 0; c < Cn; ++c) {
    C mean{};
    for (std::size_t i = 0; i < N; ++i) mean += y.data()[i * Cn + c];
    mean /= double(N);
    double rr = 0, ri = 0, ii = 0;
    for (std::size_t i = 0; i < N; ++i) {
      const C d = y.data()[i * Cn + c] - mean;
      rr += d.real() * d.real();
      ri += d.real() * d.imag();
      ii += d.imag() * d.imag();
    }
    worst_mean = std::max(worst_mean, std::abs(mean));
    worst_cov = std::max({worst_cov, std::abs(rr / N - 0.5), std::abs(ii / N - 0.5), std::abs(ri / N)});
  }
  v.require(worst_mean < 1e-3, "mean");
  v.require(worst_cov < 1e-2, "covariance");
  v.detail << "batch 1024 x 3 channels: max |mean| " << fmt(worst_mean) << ", max cov deviation " << fmt(worst_cov);
}

// ---------------------------------------------------------------- criterion 7

void criterion_tiling(Verdict& v) {
  const auto set = data::tile(22608, 8080, 64);
  const auto s1 = data::split(set, {0.8, 0.1, 0.1}, 5);
  const auto s2 = data::split(set, {0.8, 0.1, 0.1}, 5);
  const std::size_t N = set.tiles.size(), nv = std::size_t(std::floor(0.1 * double(N)));
  v.require(N == 44478, "tile count");
  v.require(s1.count(data::Fold::val) == nv && s1.count(data::Fold::test) == nv &&
                s1.count(data::Fold::train) == N - 2 * nv,
            "floor-remainder counts");
  v.require(s1 == s2, "determinism");
  data::TileSet ten;
  for (std::uint32_t i = 0; i < 10; ++i) ten.tiles.push_back({0, 0, i * 8, 8});
  ten.fold.assign(10, data::Fold::none);
  const auto t = data::split(ten, {0.8, 0.1, 0.1}, 1);
  v.require(t.count(data::Fold::train) == 8 && t.count(data::Fold::val) == 1, "ten tiles");
  v.detail << N << " tiles; split " << s1.count(data::Fold::train) << "/" << s1.count(data::Fold::val) << "/"
           << s1.count(data::Fold::test) << ", repeatable";
}

// ---------------------------------------------------------------- criteria 8-9

pipeline::RunConfig desk_config(const fs::path& out, std::uint64_t seed) {
  pipeline::RunConfig c;
  c.data.synth_size = 512;
  c.data.synth_noise = 0.05;
  c.data.synth_seed = 1;
  c.data.normalize = data::NormMode::per_channel_std;
  c.model.depth = 2;
  c.model.width = 16;
  c.model.tile_size = 32;
  c.optim.batch = 16;
  c.optim.adamw.lr = 5e-3;
  c.optim.seed = seed;
  c.eval.figures = false;
  const char* e = std::getenv("POLSAR_ACCEPT_EPOCHS");
  c.optim.epochs = e ? std::atoi(e) : 50;
  c.out_dir = out;
  return c;
}

struct RunOutcome {
  double initial = 0, final_val = 0, seconds = 0;
  std::size_t parameters = 0;
  double halpha_oa = 0, cameron_oa = 0;
};

RunOutcome run_desk(const pipeline::RunConfig& cfg, const pipeline::Dataset& ds) {
  std::ofstream log(cfg.out_dir.string() + ".log");
  pipeline::TrainOptions opt;
  opt.log = &log;
  const auto r = pipeline::train(cfg, ds, opt);
  RunOutcome o;
  o.initial = r.initial_val_mse;
  o.final_val = r.history.back().val_mse;
  o.seconds = r.seconds;
  o.parameters = r.parameters;
  const auto rec = pipeline::reconstruct(r.last_checkpoint, ds.original);
  const auto ev = pipeline::evaluate(pipeline::crop_to_grid(ds.original, std::size_t(cfg.model.tile_size)), rec,
                                     cfg.eval, cfg.out_dir / "eval");
  o.halpha_oa = ev.report.classification.at("halpha").oa;
  o.cameron_oa = ev.report.classification.at("cameron").oa;
  log << "final val_mse " << o.final_val << " halpha_oa " << o.halpha_oa << " cameron_oa " << o.cameron_oa << "\n";
  return o;
}

struct DeskRuns {
  std::vector<RunOutcome> cvnn, rvnn, zrelu;
};

DeskRuns desk_runs() {
  DeskRuns d;
  const auto root = work_dir() / "desk";
  const auto base = desk_config(root, 1);
  const auto ds = pipeline::load_dataset(base);
  for (std::uint64_t seed : {1, 2, 3}) {
    auto c = desk_config(root / ("cvnn_seed" + std::to_string(seed)), seed);
    d.cvnn.push_back(run_desk(c, ds));
    auto r = c;
    r.model.kind = nn::ModelKind::dual_rvnn;
    r.out_dir = root / ("rvnn_seed" + std::to_string(seed));
    d.rvnn.push_back(run_desk(r, ds));
    auto z = c;
    z.model.activation = nn::ActivationKind::zrelu;
    z.out_dir = root / ("zrelu_seed" + std::to_string(seed));
    d.zrelu.push_back(run_desk(z, ds));
  }
  return d;
}

void criterion_training(Verdict& v, const DeskRuns& d) {
  int converged = 0, mse_order = 0, oa_order = 0, parity = 0, oa_ok = 0;
  double slowest = 0;
  for (std::size_t i = 0; i < d.cvnn.size(); ++i) {
    const auto& c = d.cvnn[i];
    const auto& r = d.rvnn[i];
    converged += c.final_val < 0.1 * c.initial;
    oa_ok += c.halpha_oa >= 80 && c.cameron_oa >= 75;
    mse_order += c.final_val <= r.final_val;
    oa_order += c.halpha_oa >= r.halpha_oa;
    parity += std::abs(double(r.parameters) - double(c.parameters)) <= 0.05 * double(c.parameters);
    slowest = std::max({slowest, c.seconds, r.seconds});
    v.detail << "\n    seed " << i + 1 << ": cvnn val " << fmt(c.initial) << " -> " << fmt(c.final_val) << ", H-a OA "
             << fmt(c.halpha_oa) << "%, Cam OA " << fmt(c.cameron_oa) << "% | rvnn val " << fmt(r.final_val)
             << ", H-a OA " << fmt(r.halpha_oa) << "% | params " << c.parameters << " vs " << r.parameters;
  }
  v.require(converged == 3, "(a) 10x drop on " + std::to_string(converged) + "/3 seeds");
  v.require(oa_ok == 3, "(b) OA thresholds on " + std::to_string(oa_ok) + "/3 seeds");
  v.require(parity == 3, "(c) parameter parity");
  v.require(mse_order == 3, "(c) CVNN val MSE <= RVNN on " + std::to_string(mse_order) + "/3 seeds");
  v.require(oa_order >= 2, "(c) CVNN H-a OA >= RVNN on " + std::to_string(oa_order) + "/3 seeds");
  v.require(slowest < 900, "run time " + fmt(slowest) + " s");
  v.detail << "\n    (a) " << converged << "/3, (b) " << oa_ok << "/3, (c) mse " << mse_order << "/3, OA " << oa_order
           << "/3; slowest run " << fmt(slowest) << " s";
}

void criterion_activation(Verdict& v, const DeskRuns& d) {
  int order = 0;
  for (std::size_t i = 0; i < d.cvnn.size(); ++i) {
    order += d.cvnn[i].final_val < d.zrelu[i].final_val;
    v.detail << (i ? ", " : "") << "seed " << i + 1 << " crelu " << fmt(d.cvnn[i].final_val) << " vs zrelu "
             << fmt(d.zrelu[i].final_val);
  }
  v.require(order == 3, "CReLU < zReLU on " + std::to_string(order) + "/3 seeds");
}

// ---------------------------------------------------------------- criterion 10

void criterion_self_metrics(Verdict& v) {
  const auto dir = work_dir() / "self";
  fs::remove_all(dir);
  const auto s = data::synthesize(data::desk_spec(128, 0.05, 9));
  pipeline::EvalConfig ec;
  ec.figures = false;
  const auto ev = pipeline::evaluate(s.raster, s.raster, ec, dir);
  const auto& r = ev.report;
  v.require(r.recon.mse == 0, "MSE");
  v.require(std::abs(r.recon.ssim - 1) < 1e-12, "SSIM");
  v.require(r.classification.at("halpha").oa == 100 && r.classification.at("cameron").oa == 100, "OA");

  // perturbed copy: recompute OA and macro F1 from the CSV cells alone
  auto noisy = s.raster;
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 0.3);
  for (auto& x : noisy.data) x += std::complex<double>(n(rng), n(rng)) * std::abs(x);
  const auto dir2 = work_dir() / "noisy";
  fs::remove_all(dir2);
  pipeline::evaluate(s.raster, noisy, ec, dir2);
  const auto rep = metrics::read_report(dir2 / "report.txt");
  double worst = 0;
  for (const std::string name : {"halpha", "cameron"}) {
    std::ifstream f(dir2 / ("confusion_" + name + ".csv"));
    std::string line;
    std::getline(f, line);
    std::vector<std::vector<double>> m;
    while (std::getline(f, line)) {
      std::stringstream ss(line);
      std::string cell;
      std::getline(ss, cell, ',');
      m.emplace_back();
      while (std::getline(ss, cell, ',')) m.back().push_back(std::stod(cell));
    }
    double diag = 0, total = 0, f1 = 0;
    int present = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      double row = 0, col = 0;
      for (std::size_t j = 0; j < m.size(); ++j) row += m[i][j], col += m[j][i], total += m[i][j];
      diag += m[i][i];
      if (row + col > 0) f1 += 2 * m[i][i] / (row + col), ++present;
    }
    worst = std::max({worst, std::abs(100 * diag / total - std::stod(rep.at(name + ".oa"))),
                      std::abs(100 * f1 / present - std::stod(rep.at(name + ".f1")))});
  }
  v.require(worst < 1e-9, "confusion CSV recomputation");
  v.detail << "self: MSE " << r.recon.mse << ", SSIM " << fmt(r.recon.ssim, 15) << ", OA "
           << r.classification.at("halpha").oa << "/" << r.classification.at("cameron").oa
           << "; perturbed: CSV vs report max diff " << fmt(worst);
}

// ---------------------------------------------------------------- criterion 11

void criterion_serialization(Verdict& v) {
  const auto dir = work_dir() / "serial";
  fs::remove_all(dir);
  fs::create_directories(dir);
  bool raster_ok = true;
  for (auto dt : {data::Dtype::c64, data::Dtype::c128}) {
    auto r = data::synthesize(data::desk_spec(64, 0.05, 4)).raster;
    r.dtype = dt;
    r.quantize();
    r.meta["note"] = "round trip";
    data::write_raster(dir / "r.cplxr", r);
    const auto bytes = slurp(dir / "r.cplxr");
    const auto back = data::read_raster(dir / "r.cplxr");
    raster_ok = raster_ok && back.meta == r.meta && back.dtype == dt &&
                std::memcmp(back.data.data(), r.data.data(), r.data.size() * sizeof(r.data[0])) == 0;
    data::write_raster(dir / "r2.cplxr", back);
    raster_ok = raster_ok && slurp(dir / "r2.cplxr") == bytes;
  }
  v.require(raster_ok, "CPLXR");

  pipeline::RunConfig c;
  c.data.synth_size = 64;
  c.model.depth = 2;
  c.model.width = 4;
  c.model.tile_size = 16;
  c.optim.batch = 4;
  c.optim.epochs = 3;
  c.optim.precision = pipeline::Precision::f64;
  c.out_dir = dir / "full";
  const auto ds = pipeline::load_dataset(c);
  const auto full = pipeline::train(c, ds);

  nn::AutoEncoder<double> m(c.model, 0);
  const auto meta = nn::load_checkpoint(full.last_checkpoint, m);
  nn::save_checkpoint(dir / "again.ckpt", m, meta);
  v.require(slurp(dir / "again.ckpt") == slurp(full.last_checkpoint), "checkpoint");

  auto cut = c;
  cut.out_dir = dir / "cut";
  pipeline::TrainOptions stop;
  stop.stop_after = 1;
  const auto part = pipeline::train(cut, ds, stop);
  pipeline::TrainOptions resume;
  resume.resume = part.last_checkpoint;
  const auto rest = pipeline::train(cut, ds, resume);
  const bool same = slurp(rest.last_checkpoint) == slurp(full.last_checkpoint);
  v.require(same, "resume");
  v.detail << "CPLXR c64/c128 " << (raster_ok ? "bit-exact" : "differs") << "; checkpoint reload/save "
           << "identical; resume after epoch 1 of 3 " << (same ? "bitwise identical" : "differs");
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<void(Verdict&)> run;
  };
  std::optional<DeskRuns> desk;
  auto desk_once = [&]() -> const DeskRuns& {
    if (!desk) desk = desk_runs();
    return *desk;
  };
  const std::vector<Criterion> all = {
      {1, "gradient checks", criterion_gradients},
      {2, "Pauli", criterion_pauli},
      {3, "Krogager", criterion_krogager},
      {4, "Cameron", criterion_cameron},
      {5, "H-alpha", criterion_halpha},
      {6, "complex batch norm whitening", criterion_batchnorm},
      {7, "tiling arithmetic", criterion_tiling},
      {8, "desk-scale training", [&](Verdict& v) { criterion_training(v, desk_once()); }},
      {9, "CReLU vs zReLU", [&](Verdict& v) { criterion_activation(v, desk_once()); }},
      {10, "metrics self-consistency", criterion_self_metrics},
      {11, "serialization and resume", criterion_serialization},
  };
  int failed = 0;
  for (const auto& c : all) {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(v);
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail << " [exception: " << e.what() << "]";
    }
    const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.id == 1) v.require(s < 120, "runtime " + fmt(s) + " s");
    failed += !v.pass;
    std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << v.detail.str()
              << " (" << fmt(s) << " s)" << std::endl;
  }
  std::cout << (all.size() - std::size_t(failed)) << "/" << all.size() << " criteria passed" << std::endl;
  return failed ? 1 : 0;
}
