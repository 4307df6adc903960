#include "hsdetect/synth.hpp"

#include "hsdetect/config.hpp"
#include "hsdetect/detect.hpp"
#include "hsdetect/error.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

namespace hsd {
namespace {

constexpr const char* kSpecOp = "generate_scene";

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(splitmix64(splitmix64(seed) ^ a) ^ b);
}

Eigen::MatrixXd ar1_cholesky(std::size_t d, double rho) {
  Eigen::MatrixXd r(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          std::pow(rho, std::abs(static_cast<double>(i) - static_cast<double>(j)));
    }
  }
  Eigen::LLT<Eigen::MatrixXd> llt(r);
  return llt.matrixL();
}

std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = n == 1 ? lo : lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  }
  return v;
}

template <typename Fn>
Spectrum sample_curve(const std::vector<double>& wl, Fn&& fn) {
  Spectrum s{wl, {}};
  for (double w : wl) s.values.push_back(fn(w, (w - wl.front()) / std::max(1.0, wl.back() - wl.front())));
  return s;
}

Spectrum parse_spectrum_values(std::string_view text, const std::vector<double>& wl, std::string_view what) {
  auto values = parse_double_list(text, what);
  if (values.size() != wl.size()) {
    throw Error(ErrorCode::InvalidSpec, kSpecOp,
                std::string(what) + " has " + std::to_string(values.size()) + " values, expected " +
                    std::to_string(wl.size()));
  }
  return Spectrum{wl, std::move(values)};
}

std::string join(const std::vector<double>& v) {
  std::ostringstream o;
  o << std::setprecision(17);
  for (std::size_t i = 0; i < v.size(); ++i) o << (i ? "," : "") << v[i];
  return o.str();
}

}  // namespace

void SceneSpec::validate() const {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::InvalidSpec, kSpecOp, why); };
  if (lines == 0 || samples == 0 || bands == 0) fail("lines, samples and bands must be positive");
  if (target_pixel_count >= lines * samples) fail("target pixel count must be below the pixel count");
  if (background.empty()) fail("at least one background component is required");
  double total = 0.0;
  for (const auto& c : background) {
    if (!(c.weight >= 0.0)) fail("component weights must be non-negative");
    if (c.mean.size() != bands) fail("background mean length differs from bands");
    if (!(c.covariance_scale >= 0.0)) fail("covariance scale must be non-negative");
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-9) fail("component weights must sum to 1");
  if (target_mean.size() != bands) fail("target mean length differs from bands");
  if (!(target_covariance_scale >= 0.0)) fail("target covariance scale must be non-negative");
  if (!(mixing_alpha >= 0.0 && mixing_alpha <= 1.0)) fail("mixing alpha must lie in [0, 1]");
  if (!(template_perturbation >= 0.0)) fail("template perturbation must be non-negative");
  if (!(band_correlation >= 0.0 && band_correlation < 1.0)) fail("band correlation must lie in [0, 1)");
  for (const auto& c : background) {
    if (c.mean.wavelengths != target_mean.wavelengths) fail("all spectra must share one wavelength axis");
  }
  target_mean.validate(kSpecOp);
}

SceneSpec reference_scene(std::size_t lines, std::size_t samples, std::size_t bands, std::size_t target_pixels,
                          double template_perturbation, std::uint64_t seed) {
  SceneSpec spec;
  spec.lines = lines;
  spec.samples = samples;
  spec.bands = bands;
  spec.target_pixel_count = target_pixels;
  spec.template_perturbation = template_perturbation;
  spec.seed = seed;
  const auto wl = linspace(400.0, 1000.0, bands);
  using std::numbers::pi;

  // Fabric with a broad undulation, bright paper, and a red-rising wood-like material.
  spec.background = {
      {0.4, sample_curve(wl, [](double, double u) { return 0.35 + 0.10 * std::sin(2.0 * pi * 1.3 * u + 0.5); }), 0.12},
      {0.35, sample_curve(wl, [](double, double u) { return 0.60 + 0.05 * u; }), 0.12},
      {0.25, sample_curve(wl, [](double, double u) { return 0.20 + 0.30 * u * u; }), 0.12},
  };
  // Blood-like: dark below 600 nm with haemoglobin dips near 542 and 576 nm, bright in the NIR.
  spec.target_mean = sample_curve(wl, [](double w, double) {
    return 0.08 + 0.35 / (1.0 + std::exp(-(w - 600.0) / 15.0)) - 0.03 * std::exp(-std::pow((w - 542.0) / 12.0, 2)) -
           0.03 * std::exp(-std::pow((w - 576.0) / 12.0, 2));
  });
  spec.target_covariance_scale = 0.02;
  spec.band_correlation = 0.0;
  return spec;
}

SceneSpec parse_scene_spec(std::string_view text) {
  const auto cfg = KeyValueConfig::parse(text, "scene spec");
  cfg.restrict_to({"lines", "samples", "bands", "target_pixels", "mixing_alpha", "template_perturbation",
                   "target_covariance_scale", "background_scale", "band_correlation", "seed", "wavelengths", "background",
                   "target_mean"});
  auto spec = reference_scene(cfg.get_size("lines", 100), cfg.get_size("samples", 100), cfg.get_size("bands", 16),
                              cfg.get_size("target_pixels", 500), cfg.get_double("template_perturbation", 0.0),
                              cfg.get_u64("seed", 1));
  spec.mixing_alpha = cfg.get_double("mixing_alpha", spec.mixing_alpha);
  spec.target_covariance_scale = cfg.get_double("target_covariance_scale", spec.target_covariance_scale);
  spec.band_correlation = cfg.get_double("band_correlation", spec.band_correlation);

  std::vector<double> wl = spec.target_mean.wavelengths;
  if (auto w = cfg.get("wavelengths")) {
    wl = parse_double_list(*w, "wavelengths");
    if (wl.size() != spec.bands) throw Error(ErrorCode::InvalidSpec, kSpecOp, "wavelengths length differs from bands");
    for (auto& c : spec.background) c.mean.wavelengths = wl;
    spec.target_mean.wavelengths = wl;
  }
  // background = <weight> <scale> : v1,v2,...   (repeatable; replaces the reference set)
  const auto components = cfg.get_all("background");
  if (!components.empty()) {
    spec.background.clear();
    for (const auto& c : components) {
      const auto colon = c.find(':');
      if (colon == std::string::npos) {
        throw Error(ErrorCode::InvalidSpec, kSpecOp, "background entry needs '<weight> <scale> : values'");
      }
      std::istringstream head(c.substr(0, colon));
      std::string weight, scale;
      head >> weight >> scale;
      spec.background.push_back({parse_double(weight, "background weight"),
                                 parse_spectrum_values(std::string_view(c).substr(colon + 1), wl, "background"),
                                 parse_double(scale, "background scale")});
    }
  }
  if (cfg.has("background_scale")) {
    const double scale = cfg.get_double("background_scale", 0.0);
    for (auto& c : spec.background) c.covariance_scale = scale;
  }
  if (auto t = cfg.get("target_mean")) spec.target_mean = parse_spectrum_values(*t, wl, "target_mean");
  spec.validate();
  return spec;
}

std::string format_scene_spec(const SceneSpec& spec) {
  std::ostringstream o;
  o << std::setprecision(17);
  o << "lines = " << spec.lines << "\n"
    << "samples = " << spec.samples << "\n"
    << "bands = " << spec.bands << "\n"
    << "target_pixels = " << spec.target_pixel_count << "\n"
    << "mixing_alpha = " << spec.mixing_alpha << "\n"
    << "template_perturbation = " << spec.template_perturbation << "\n"
    << "target_covariance_scale = " << spec.target_covariance_scale << "\n"
    << "band_correlation = " << spec.band_correlation << "\n"
    << "seed = " << spec.seed << "\n"
    << "wavelengths = " << join(spec.target_mean.wavelengths) << "\n";
  for (const auto& c : spec.background) {
    o << "background = " << c.weight << " " << c.covariance_scale << " : " << join(c.mean.values) << "\n";
  }
  o << "target_mean = " << join(spec.target_mean.values) << "\n";
  return o.str();
}

Scene generate_scene(const SceneSpec& spec) {
  spec.validate();
  const std::size_t K = spec.lines * spec.samples;
  const auto d = static_cast<Eigen::Index>(spec.bands);
  const auto& wl = spec.target_mean.wavelengths;
  const Eigen::MatrixXd chol = ar1_cholesky(spec.bands, spec.band_correlation);

  std::mt19937_64 rng(derive_seed(spec.seed, 1));
  std::normal_distribution<double> normal(0.0, 1.0);

  // Implant positions: partial Fisher-Yates.
  std::vector<std::size_t> order(K);
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t i = 0; i < spec.target_pixel_count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, K - 1);
    std::swap(order[i], order[pick(rng)]);
  }
  std::vector<std::size_t> targets(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(spec.target_pixel_count));
  std::sort(targets.begin(), targets.end());
  std::vector<bool> is_target(K, false);
  for (auto k : targets) is_target[k] = true;

  std::vector<double> weights;
  for (const auto& c : spec.background) weights.push_back(c.weight);
  std::discrete_distribution<std::size_t> component(weights.begin(), weights.end());

  Scene scene;
  scene.cube = HyperCube(spec.lines, spec.samples, spec.bands, wl);
  scene.mask = AnnotationMask{spec.lines, spec.samples, std::vector<std::uint8_t>(K, kBackgroundClass)};
  Eigen::VectorXd z(d);
  auto draw = [&](const Spectrum& mean, double scale) {
    for (Eigen::Index i = 0; i < d; ++i) z(i) = normal(rng);
    return Eigen::VectorXd(mean.vec() + scale * (chol * z));
  };
  for (std::size_t k = 0; k < K; ++k) {
    const auto& c = spec.background[component(rng)];
    Eigen::VectorXd x = draw(c.mean, c.covariance_scale);
    if (is_target[k]) {
      const Eigen::VectorXd t = draw(spec.target_mean, spec.target_covariance_scale);
      x = spec.mixing_alpha * t + (1.0 - spec.mixing_alpha) * x;
      scene.mask.labels[k] = kBloodClass;
    }
    scene.cube.pixels().row(static_cast<Eigen::Index>(k)) = x.transpose();
  }
  scene.target_pixels = std::move(targets);

  Eigen::VectorXd mixture = Eigen::VectorXd::Zero(d);
  for (const auto& c : spec.background) mixture += c.weight * c.mean.vec();
  const Eigen::VectorXd truth = spec.mixing_alpha * spec.target_mean.vec() + (1.0 - spec.mixing_alpha) * mixture;
  scene.true_template = Spectrum::from_vector(truth, wl);

  // Smooth multiplicative distortion: a low-order cosine series scaled to unit peak.
  std::mt19937_64 trng(derive_seed(spec.seed, 2));
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::array<double, 3> amp{}, ph{};
  for (std::size_t h = 0; h < amp.size(); ++h) {
    amp[h] = normal(trng) / static_cast<double>(h + 1);
    ph[h] = phase(trng);
  }
  Eigen::VectorXd field(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double u = d > 1 ? static_cast<double>(i) / static_cast<double>(d - 1) : 0.0;
    double f = 0.0;
    for (std::size_t h = 0; h < amp.size(); ++h) f += amp[h] * std::cos(std::numbers::pi * static_cast<double>(h + 1) * u + ph[h]);
    field(i) = f;
  }
  const double peak = field.cwiseAbs().maxCoeff();
  if (peak > 0.0) field /= peak;
  const Eigen::VectorXd distorted = truth.array() * (1.0 + spec.template_perturbation * field.array());
  scene.detector_template = Spectrum::from_vector(distorted, wl);
  return scene;
}

NRule NRule::parse(std::string_view text) {
  NRule rule;
  if (!text.empty() && text.back() == '%') {
    rule.kind = Kind::Percent;
    text.remove_suffix(1);
  }
  rule.value = parse_double(text, "N rule");
  if (!(rule.value > 0.0)) throw Error(ErrorCode::InvalidConfig, "NRule", "N must be positive");
  return rule;
}

std::string NRule::label() const {
  std::ostringstream o;
  o << value;
  if (kind == Kind::Percent) o << "%";
  return o.str();
}

std::size_t NRule::resolve(std::size_t target_size) const {
  const double n = kind == Kind::Constant ? value : value / 100.0 * static_cast<double>(target_size);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(n)));
}

std::vector<TargetSizeRow> sweep_target_size(const Scene& scene, std::uint64_t seed,
                                             std::span<const std::size_t> target_sizes, const NRule& rule,
                                             std::size_t repetitions, const Parallel& par) {
  const auto& pool = scene.target_pixels;
  for (auto t : target_sizes) {
    if (t == 0 || t > pool.size()) {
      throw Error(ErrorCode::InvalidSpec, "sweep_target_size",
                  "T = " + std::to_string(t) + " outside [1, " + std::to_string(pool.size()) + "]");
    }
  }
  if (repetitions == 0) throw Error(ErrorCode::InvalidSpec, "sweep_target_size", "repetitions must be positive");

  const std::size_t K = scene.cube.pixel_count();
  std::vector<bool> in_pool(K, false);
  for (auto k : pool) in_pool[k] = true;
  const auto& detector = scene.detector_template.vec();

  const std::size_t cells = target_sizes.size() * repetitions;
  std::vector<double> auc(cells);
  for_each_index(cells, par, [&](std::size_t cell) {
    const std::size_t ti = cell / repetitions, rep = cell % repetitions;
    const std::size_t T = target_sizes[ti];
    std::mt19937_64 rng(derive_seed(seed, T, rep));
    std::vector<std::size_t> kept = pool;
    std::shuffle(kept.begin(), kept.end(), rng);
    kept.resize(T);
    std::vector<bool> keep(K, false);
    for (auto k : kept) keep[k] = true;

    std::vector<std::size_t> rows;
    std::vector<TruthLabel> truth;
    rows.reserve(K - pool.size() + T);
    for (std::size_t k = 0; k < K; ++k) {
      if (in_pool[k] && !keep[k]) continue;
      rows.push_back(k);
      truth.push_back(in_pool[k] ? TruthLabel::Positive : TruthLabel::Negative);
    }
    PixelMatrix pixels(static_cast<Eigen::Index>(rows.size()), scene.cube.pixels().cols());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      pixels.row(static_cast<Eigen::Index>(i)) = scene.cube.pixels().row(static_cast<Eigen::Index>(rows[i]));
    }
    const std::size_t n = std::min(rule.resolve(T), rows.size());
    const auto result = two_stage(pixels, detector, n);
    auc[cell] = pr_curve(result.stage2, truth).auc;
  });

  std::vector<TargetSizeRow> out;
  for (std::size_t ti = 0; ti < target_sizes.size(); ++ti) {
    TargetSizeRow row;
    row.target_size = target_sizes[ti];
    row.n_pixels = rule.resolve(row.target_size);
    row.auc_pr.assign(auc.begin() + static_cast<std::ptrdiff_t>(ti * repetitions),
                      auc.begin() + static_cast<std::ptrdiff_t>((ti + 1) * repetitions));
    row.mean = std::accumulate(row.auc_pr.begin(), row.auc_pr.end(), 0.0) / static_cast<double>(repetitions);
    double ss = 0.0;
    for (double a : row.auc_pr) ss += (a - row.mean) * (a - row.mean);
    row.stddev = repetitions > 1 ? std::sqrt(ss / static_cast<double>(repetitions - 1)) : 0.0;
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<TargetSizeRow> sweep_target_size(const SceneSpec& spec, std::span<const std::size_t> target_sizes,
                                             const NRule& rule, std::size_t repetitions, const Parallel& par) {
  return sweep_target_size(generate_scene(spec), spec.seed, target_sizes, rule, repetitions, par);
}

std::vector<NSweepRow> sweep_n(const PixelMatrix& pixels, std::span<const TruthLabel> truth,
                               const Eigen::VectorXd& mu_t, std::span<const NRule> rules, const Parallel& par) {
  if (static_cast<std::size_t>(pixels.rows()) != truth.size()) {
    throw Error(ErrorCode::ShapeMismatch, "sweep_n", "truth length differs from pixel count");
  }
  const auto positives = static_cast<std::size_t>(std::count(truth.begin(), truth.end(), TruthLabel::Positive));
  const auto stats = estimate_stats(pixels, par);
  const auto stage1 = MatchedFilter(stats, mu_t).score_pixels(pixels, par);
  const auto K = static_cast<std::size_t>(pixels.rows());

  std::vector<NSweepRow> rows;
  for (const auto& rule : rules) {
    const std::size_t n = rule.resolve(positives);
    if (n > K) {
      throw Error(ErrorCode::InvalidConfig, "sweep_n", "N = " + std::to_string(n) + " exceeds pixel count");
    }
    auto top = top_n_indices(stage1, n);
    std::sort(top.begin(), top.end());
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(pixels.cols());
    for (auto k : top) sum += pixels.row(static_cast<Eigen::Index>(k)).transpose();
    const auto stage2 = MatchedFilter(stats, Eigen::VectorXd(sum / static_cast<double>(n))).score_pixels(pixels, par);
    rows.push_back({rule.label(), n, pr_curve(stage2, truth).auc});
  }
  return rows;
}

std::string format_target_size_table(const std::vector<TargetSizeRow>& rows) {
  std::ostringstream o;
  o << "T,N,auc_pr_mean,auc_pr_sd";
  const std::size_t reps = rows.empty() ? 0 : rows.front().auc_pr.size();
  for (std::size_t r = 0; r < reps; ++r) o << ",auc_pr_" << r;
  o << "\n" << std::setprecision(6);
  for (const auto& row : rows) {
    o << row.target_size << "," << row.n_pixels << "," << row.mean << "," << row.stddev;
    for (double a : row.auc_pr) o << "," << a;
    o << "\n";
  }
  return o.str();
}

std::string format_n_table(const std::vector<NSweepRow>& rows) {
  std::ostringstream o;
  o << "N_rule,N,auc_pr\n" << std::setprecision(6);
  for (const auto& r : rows) o << r.label << "," << r.n_pixels << "," << r.auc_pr << "\n";
  return o.str();
}

}  // namespace hsd
