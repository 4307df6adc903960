#include "hsdetect/detect.hpp"

#include "hsdetect/error.hpp"
#include "hsdetect/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace hsd {
namespace {

// Plain sequential dot product of (x - mu) with w. Both the normalization and
// every pixel score go through this, so score(mu_t) == 1 holds exactly.
double centered_dot(const double* x, const double* mu, const double* w, Eigen::Index d) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) s += (x[i] - mu[i]) * w[i];
  return s;
}

ScoreMap to_score_map(std::size_t lines, std::size_t samples, std::vector<double> scores) {
  return ScoreMap{lines, samples, std::move(scores)};
}

std::vector<std::uint8_t> template_classes(const Scenario& sc) {
  std::vector<std::uint8_t> classes{sc.target_class};
  if (sc.include_uncertain_in_template && sc.target_class != kUncertainBloodClass) {
    classes.push_back(kUncertainBloodClass);
  }
  return classes;
}

Spectrum class_template(const HyperCube& cube, const AnnotationMask* mask,
                        const std::vector<std::uint8_t>& classes, const char* which) {
  if (mask == nullptr) {
    throw Error(ErrorCode::UnresolvableTarget, "run_scenario",
                std::string(which) + " template needs an annotation mask");
  }
  try {
    return mean_spectrum(cube, *mask, classes);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::EmptyClass) throw;
    throw Error(ErrorCode::UnresolvableTarget, "run_scenario",
                std::string("target class absent from the ") + which);
  }
}

}  // namespace

GaussianStats GaussianStats::from_moments(Eigen::VectorXd mean, Eigen::MatrixXd covariance) {
  const Eigen::Index d = mean.size();
  if (covariance.rows() != d || covariance.cols() != d) {
    throw Error(ErrorCode::DimensionMismatch, "estimate_stats", "covariance shape does not match mean");
  }
  GaussianStats stats;
  stats.mean_ = std::move(mean);
  stats.covariance_ = std::move(covariance);

  const double max_diag = stats.covariance_.diagonal().maxCoeff();
  const double trace_per_dim = stats.covariance_.trace() / static_cast<double>(d);
  // An all-zero covariance has no scale of its own; fall back to unit scale.
  const double base = kRidgeInitial * (trace_per_dim > 0.0 ? trace_per_dim : 1.0);

  double ridge = 0.0;
  for (int attempt = 0; attempt <= kMaxRidgeRetries; ++attempt) {
    if (attempt > 0) ridge = base * std::pow(kRidgeGrowth, attempt - 1);
    Eigen::MatrixXd m = stats.covariance_;
    m.diagonal().array() += ridge;
    stats.factor_.compute(m);
    if (stats.factor_.info() != Eigen::Success) continue;
    // Reject numerically rank-deficient factors: tiny pivots relative to the diagonal.
    const Eigen::VectorXd pivots = stats.factor_.matrixLLT().diagonal();
    const double scale = std::max(max_diag + ridge, std::numeric_limits<double>::min());
    if ((pivots.array().square() / scale).minCoeff() <= 1e-14 || !pivots.allFinite()) continue;
    stats.ridge_ = ridge;
    return stats;
  }
  throw Error(ErrorCode::UnrecoverablySingular, "estimate_stats",
              "covariance not positive definite after " + std::to_string(kMaxRidgeRetries) +
                  " ridge retries (last ridge " + std::to_string(ridge) + ")");
}

Eigen::VectorXd GaussianStats::solve(const Eigen::VectorXd& rhs) const {
  if (rhs.size() != dimension()) {
    throw Error(ErrorCode::DimensionMismatch, "GaussianStats::solve", "vector size differs from stats dimension");
  }
  return factor_.solve(rhs);
}

double GaussianStats::mahalanobis_sq(const Eigen::VectorXd& x) const {
  if (x.size() != dimension()) {
    throw Error(ErrorCode::DimensionMismatch, "mahalanobis", "vector size differs from stats dimension");
  }
  const Eigen::VectorXd z = factor_.matrixL().solve(x - mean_);
  return z.squaredNorm();
}

std::vector<double> GaussianStats::mahalanobis_sq(const PixelMatrix& pixels, const Parallel& par) const {
  if (pixels.cols() != dimension()) {
    throw Error(ErrorCode::DimensionMismatch, "mahalanobis", "pixel width differs from stats dimension");
  }
  std::vector<double> out(static_cast<std::size_t>(pixels.rows()));
  for_each_block(out.size(), par, [&](std::size_t, std::size_t begin, std::size_t end) {
    const auto n = static_cast<Eigen::Index>(end - begin);
    Eigen::MatrixXd centered =
        (pixels.middleRows(static_cast<Eigen::Index>(begin), n).rowwise() - mean_.transpose()).transpose();
    factor_.matrixL().solveInPlace(centered);
    const Eigen::RowVectorXd d2 = centered.colwise().squaredNorm();
    for (Eigen::Index i = 0; i < n; ++i) out[begin + static_cast<std::size_t>(i)] = d2(i);
  });
  return out;
}

GaussianStats estimate_stats(const PixelMatrix& pixels, const Parallel& par) {
  const auto K = static_cast<std::size_t>(pixels.rows());
  const Eigen::Index d = pixels.cols();
  if (K < 2) {
    throw Error(ErrorCode::TooFewSamples, "estimate_stats",
                "need at least 2 pixels, got " + std::to_string(K));
  }
  const std::size_t blocks = block_count(K);

  std::vector<Eigen::VectorXd> partial_sums(blocks);
  for_each_block(K, par, [&](std::size_t b, std::size_t begin, std::size_t end) {
    partial_sums[b] = pixels.middleRows(static_cast<Eigen::Index>(begin),
                                        static_cast<Eigen::Index>(end - begin))
                          .colwise()
                          .sum()
                          .transpose();
  });
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
  for (const auto& s : partial_sums) mean += s;
  mean /= static_cast<double>(K);

  std::vector<Eigen::MatrixXd> partial_scatter(blocks);
  for_each_block(K, par, [&](std::size_t b, std::size_t begin, std::size_t end) {
    const Eigen::MatrixXd centered =
        pixels.middleRows(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin))
            .rowwise() -
        mean.transpose();
    Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d, d);
    scatter.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());
    partial_scatter[b] = std::move(scatter);
  });
  Eigen::MatrixXd covariance = Eigen::MatrixXd::Zero(d, d);
  for (const auto& s : partial_scatter) covariance += s;
  covariance /= static_cast<double>(K - 1);
  covariance.triangularView<Eigen::StrictlyUpper>() = covariance.transpose();

  return GaussianStats::from_moments(std::move(mean), std::move(covariance));
}

GaussianStats estimate_stats(const PixelMatrix& pixels, std::span<const std::size_t> rows,
                             const Parallel& par) {
  PixelMatrix subset(static_cast<Eigen::Index>(rows.size()), pixels.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    subset.row(static_cast<Eigen::Index>(i)) = pixels.row(static_cast<Eigen::Index>(rows[i]));
  }
  return estimate_stats(subset, par);
}

GaussianStats estimate_stats(std::span<const Spectrum> pixels) {
  if (pixels.size() < 2) {
    throw Error(ErrorCode::TooFewSamples, "estimate_stats",
                "need at least 2 pixels, got " + std::to_string(pixels.size()));
  }
  const std::size_t d = pixels.front().size();
  PixelMatrix m(static_cast<Eigen::Index>(pixels.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    if (pixels[i].size() != d) {
      throw Error(ErrorCode::DimensionMismatch, "estimate_stats", "pixels differ in dimension");
    }
    m.row(static_cast<Eigen::Index>(i)) = pixels[i].vec().transpose();
  }
  return estimate_stats(m);
}

double qd_score(const Eigen::VectorXd& x, const GaussianStats& background, const GaussianStats& target) {
  if (x.size() != background.dimension() || x.size() != target.dimension()) {
    throw Error(ErrorCode::DimensionMismatch, "qd_score", "pixel and model dimensions differ");
  }
  return background.mahalanobis_sq(x) - target.mahalanobis_sq(x);
}

MatchedFilter::MatchedFilter(const GaussianStats& stats, const Eigen::VectorXd& target)
    : MatchedFilter(stats.mean(), target, stats) {}

MatchedFilter::MatchedFilter(const Eigen::VectorXd& mu, const Eigen::VectorXd& target,
                             const GaussianStats& stats)
    : mu_(mu) {
  constexpr const char* op = "mf_score";
  if (mu.size() != stats.dimension() || target.size() != stats.dimension()) {
    throw Error(ErrorCode::DimensionMismatch, op, "template, mean and covariance dimensions differ");
  }
  const Eigen::VectorXd diff = target - mu;
  const double diff_norm = diff.norm();
  if (!(diff_norm > 1e-12 * std::max(1.0, mu.norm()))) {
    throw Error(ErrorCode::DegenerateTarget, op, "target template coincides with the data mean");
  }
  direction_ = stats.solve(diff);
  normalization_ = centered_dot(target.data(), mu_.data(), direction_.data(), diff.size());
  if (!(normalization_ > kDegenerateTolerance) || !std::isfinite(normalization_)) {
    throw Error(ErrorCode::DegenerateTarget, op,
                "(mu_t - mu)' inv(G) (mu_t - mu) = " + std::to_string(normalization_) +
                    " is below tolerance");
  }
}

double MatchedFilter::score(const Eigen::VectorXd& x) const {
  if (x.size() != mu_.size()) throw Error(ErrorCode::DimensionMismatch, "mf_score", "pixel dimension differs");
  return centered_dot(x.data(), mu_.data(), direction_.data(), x.size()) / normalization_;
}

double MatchedFilter::score(std::span<const double> x) const {
  if (static_cast<Eigen::Index>(x.size()) != mu_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "mf_score", "pixel dimension differs");
  }
  return centered_dot(x.data(), mu_.data(), direction_.data(), mu_.size()) / normalization_;
}

std::vector<double> MatchedFilter::score_pixels(const PixelMatrix& pixels, const Parallel& par) const {
  if (pixels.cols() != mu_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "mf_score", "pixel width differs from template");
  }
  std::vector<double> out(static_cast<std::size_t>(pixels.rows()));
  const Eigen::Index d = mu_.size();
  for_each_block(out.size(), par, [&](std::size_t, std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const double* x = pixels.data() + static_cast<Eigen::Index>(k) * d;
      out[k] = centered_dot(x, mu_.data(), direction_.data(), d) / normalization_;
    }
  });
  return out;
}

double mf_score(const Eigen::VectorXd& x, const Eigen::VectorXd& mu, const Eigen::VectorXd& mu_t,
                const GaussianStats& stats) {
  return MatchedFilter(mu, mu_t, stats).score(x);
}

std::vector<double> mf_scores(const PixelMatrix& pixels, const Eigen::VectorXd& mu_t, const Parallel& par) {
  const auto stats = estimate_stats(pixels, par);
  return MatchedFilter(stats, mu_t).score_pixels(pixels, par);
}

ScoreMap mf_image(const HyperCube& cube, const Spectrum& mu_t, const Parallel& par) {
  if (mu_t.size() != cube.bands()) {
    throw Error(ErrorCode::DimensionMismatch, "mf_image", "template band count differs from cube");
  }
  return to_score_map(cube.lines(), cube.samples(), mf_scores(cube.pixels(), mu_t.vec(), par));
}

std::vector<std::size_t> top_n_indices(std::span<const double> scores, std::size_t n) {
  n = std::min(n, scores.size());
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n), idx.end(),
                    [&](std::size_t a, std::size_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return a < b;
                    });
  idx.resize(n);
  return idx;
}

TwoStageResult two_stage(const PixelMatrix& pixels, const GaussianStats& stats,
                         const Eigen::VectorXd& mu_t, std::size_t n_pixels, const Parallel& par) {
  const auto K = static_cast<std::size_t>(pixels.rows());
  if (n_pixels < 1 || n_pixels > K) {
    throw Error(ErrorCode::InvalidConfig, "two_stage",
                "n_pixels = " + std::to_string(n_pixels) + " must lie in [1, " + std::to_string(K) + "]");
  }
  TwoStageResult result;
  result.stage1 = MatchedFilter(stats, mu_t).score_pixels(pixels, par);
  result.top_pixels = top_n_indices(result.stage1, n_pixels);

  // Sum in ascending pixel order so the template does not depend on sort internals.
  std::vector<std::size_t> ordered = result.top_pixels;
  std::sort(ordered.begin(), ordered.end());
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(pixels.cols());
  for (auto k : ordered) sum += pixels.row(static_cast<Eigen::Index>(k)).transpose();
  result.refined_template = sum / static_cast<double>(n_pixels);

  result.stage2 = MatchedFilter(stats, result.refined_template).score_pixels(pixels, par);
  return result;
}

TwoStageResult two_stage(const PixelMatrix& pixels, const Eigen::VectorXd& mu_t, std::size_t n_pixels,
                         const Parallel& par) {
  const auto stats = estimate_stats(pixels, par);
  return two_stage(pixels, stats, mu_t, n_pixels, par);
}

ScoreMap two_stage(const HyperCube& cube, const Spectrum& mu_t, std::size_t n_pixels, const Parallel& par) {
  if (mu_t.size() != cube.bands()) {
    throw Error(ErrorCode::DimensionMismatch, "two_stage", "template band count differs from cube");
  }
  auto result = two_stage(cube.pixels(), mu_t.vec(), n_pixels, par);
  return to_score_map(cube.lines(), cube.samples(), std::move(result.stage2));
}

std::string_view to_string(ScenarioKind kind) noexcept {
  switch (kind) {
    case ScenarioKind::IdealQD: return "ideal-qd";
    case ScenarioKind::IdealMF: return "ideal-mf";
    case ScenarioKind::InductiveMF: return "inductive-mf";
    case ScenarioKind::LibraryMF: return "library-mf";
    case ScenarioKind::TwoStage: return "two-stage";
  }
  return "?";
}

ScenarioKind parse_scenario_kind(std::string_view text) {
  for (auto kind : {ScenarioKind::IdealQD, ScenarioKind::IdealMF, ScenarioKind::InductiveMF,
                    ScenarioKind::LibraryMF, ScenarioKind::TwoStage}) {
    if (text == to_string(kind)) return kind;
  }
  throw Error(ErrorCode::InvalidConfig, "parse_scenario_kind", "unknown scenario '" + std::string(text) + "'");
}

TemplateSource Scenario::template_source() const noexcept {
  switch (kind) {
    case ScenarioKind::IdealQD:
    case ScenarioKind::IdealMF: return TemplateSource::ImageUnderTest;
    case ScenarioKind::InductiveMF: return TemplateSource::SourceImage;
    case ScenarioKind::LibraryMF: return TemplateSource::Library;
    case ScenarioKind::TwoStage: return two_stage_seed;
  }
  return TemplateSource::ImageUnderTest;
}

Spectrum resolve_template(const Scenario& sc, const HyperCube& cube, const AnnotationMask* mask,
                          const ScenarioSources& sources) {
  constexpr const char* op = "run_scenario";
  switch (sc.template_source()) {
    case TemplateSource::ImageUnderTest:
      return class_template(cube, mask, template_classes(sc), "image under test");

    case TemplateSource::SourceImage: {
      if (sources.source_cube == nullptr) {
        throw Error(ErrorCode::UnresolvableTarget, op, "no source image supplied");
      }
      auto t = class_template(*sources.source_cube, sources.source_mask, template_classes(sc), "source image");
      if (t.wavelengths != cube.wavelengths()) {
        t = resample_spectrum(t, cube.wavelengths()).spectrum;
      }
      return t;
    }

    case TemplateSource::Library: {
      if (sources.library == nullptr || !sc.library_index) {
        throw Error(ErrorCode::UnresolvableTarget, op, "library scenario needs a library and an index");
      }
      const auto* entry = sources.library->find(*sc.library_index);
      if (entry == nullptr) {
        throw Error(ErrorCode::UnresolvableTarget, op,
                    "library has no entry with index " + std::to_string(*sc.library_index));
      }
      auto t = resample_spectrum(entry->spectrum, cube.wavelengths()).spectrum;
      if (sc.normalize_library_template) {
        const double m = median(t.values);
        if (!(m > 0.0)) throw Error(ErrorCode::NonPositiveMedian, op, "library template median <= 0");
        for (auto& v : t.values) v /= m;
      }
      return t;
    }
  }
  throw Error(ErrorCode::UnresolvableTarget, op, "unknown template source");
}

ScoreMap run_scenario(const Scenario& sc, const HyperCube& cube, const AnnotationMask* mask,
                      const ScenarioSources& sources, const Parallel& par) {
  if (sc.kind == ScenarioKind::IdealQD) {
    if (mask == nullptr) throw Error(ErrorCode::UnresolvableTarget, "run_scenario", "ideal-qd needs an annotation mask");
    if (mask->lines != cube.lines() || mask->samples != cube.samples()) {
      throw Error(ErrorCode::ShapeMismatch, "run_scenario", "mask shape differs from cube");
    }
    const auto classes = template_classes(sc);
    std::vector<std::size_t> target_rows, background_rows;
    for (std::size_t k = 0; k < mask->labels.size(); ++k) {
      const auto label = mask->labels[k];
      if (std::find(classes.begin(), classes.end(), label) != classes.end()) {
        target_rows.push_back(k);
      } else if (label != kUncertainBloodClass) {
        background_rows.push_back(k);
      }
    }
    if (target_rows.empty()) throw Error(ErrorCode::UnresolvableTarget, "run_scenario", "target class absent");
    const auto target = estimate_stats(cube.pixels(), target_rows, par);
    const auto background = estimate_stats(cube.pixels(), background_rows, par);
    const auto d_bg = background.mahalanobis_sq(cube.pixels(), par);
    const auto d_tg = target.mahalanobis_sq(cube.pixels(), par);
    std::vector<double> scores(d_bg.size());
    for (std::size_t k = 0; k < scores.size(); ++k) scores[k] = d_bg[k] - d_tg[k];
    return to_score_map(cube.lines(), cube.samples(), std::move(scores));
  }

  const Spectrum mu_t = resolve_template(sc, cube, mask, sources);
  if (sc.kind == ScenarioKind::TwoStage) return two_stage(cube, mu_t, sc.n_pixels, par);
  return mf_image(cube, mu_t, par);
}

}  // namespace hsd
