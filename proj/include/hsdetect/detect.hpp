#pragma once

#include "hsdetect/cube_io.hpp"
#include "hsdetect/parallel.hpp"
#include "hsdetect/types.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hsd {

/// Ridge escalation used when the covariance cannot be Cholesky-factorized:
/// lambda starts at kRidgeInitial * trace / d and grows by kRidgeGrowth per retry.
inline constexpr double kRidgeInitial = 1e-8;
inline constexpr double kRidgeGrowth = 10.0;
inline constexpr int kMaxRidgeRetries = 6;

/// Smallest accepted (mu_t - mu)' inv(Gamma) (mu_t - mu) for the matched filter.
inline constexpr double kDegenerateTolerance = 1e-12;

/// Mean, covariance and a cached LLT factor of (covariance + ridge * I).
class GaussianStats {
 public:
  GaussianStats() = default;

  /// Factorizes `covariance`, escalating the ridge on failure.
  /// Throws UnrecoverablySingular when all retries fail.
  static GaussianStats from_moments(Eigen::VectorXd mean, Eigen::MatrixXd covariance);

  const Eigen::VectorXd& mean() const noexcept { return mean_; }
  const Eigen::MatrixXd& covariance() const noexcept { return covariance_; }
  double ridge_applied() const noexcept { return ridge_; }
  Eigen::Index dimension() const noexcept { return mean_.size(); }

  /// inv(Gamma + ridge I) * rhs via two triangular solves.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;
  /// (x - mean)' inv(Gamma) (x - mean).
  double mahalanobis_sq(const Eigen::VectorXd& x) const;
  /// Row-wise Mahalanobis distances of `pixels` to the mean.
  std::vector<double> mahalanobis_sq(const PixelMatrix& pixels, const Parallel& par = {}) const;

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd covariance_;
  Eigen::LLT<Eigen::MatrixXd> factor_;
  double ridge_ = 0.0;
};

/// Sample mean and unbiased (K - 1) sample covariance of the pixel rows.
GaussianStats estimate_stats(const PixelMatrix& pixels, const Parallel& par = {});
/// Same, restricted to the listed rows.
GaussianStats estimate_stats(const PixelMatrix& pixels, std::span<const std::size_t> rows,
                             const Parallel& par = {});
GaussianStats estimate_stats(std::span<const Spectrum> pixels);

/// Quadratic detector: distance to background minus distance to target.
double qd_score(const Eigen::VectorXd& x, const GaussianStats& background,
                const GaussianStats& target);

/// Matched filter (x - mu)' inv(G) (mu_t - mu) / (mu_t - mu)' inv(G) (mu_t - mu).
/// The direction inv(G)(mu_t - mu) and its normalization are computed once.
class MatchedFilter {
 public:
  /// Uses stats.mean() as mu.
  MatchedFilter(const GaussianStats& stats, const Eigen::VectorXd& target);
  MatchedFilter(const Eigen::VectorXd& mu, const Eigen::VectorXd& target, const GaussianStats& stats);

  double score(const Eigen::VectorXd& x) const;
  double score(std::span<const double> x) const;
  std::vector<double> score_pixels(const PixelMatrix& pixels, const Parallel& par = {}) const;

  const Eigen::VectorXd& direction() const noexcept { return direction_; }
  double normalization() const noexcept { return normalization_; }

 private:
  Eigen::VectorXd mu_;
  Eigen::VectorXd direction_;
  double normalization_ = 0.0;
};

double mf_score(const Eigen::VectorXd& x, const Eigen::VectorXd& mu, const Eigen::VectorXd& mu_t,
                const GaussianStats& stats);

/// Matched-filter scores for every pixel, with stats estimated from all pixels.
std::vector<double> mf_scores(const PixelMatrix& pixels, const Eigen::VectorXd& mu_t,
                              const Parallel& par = {});
ScoreMap mf_image(const HyperCube& cube, const Spectrum& mu_t, const Parallel& par = {});

/// Indices of the n highest scores, ties broken by lower index first.
std::vector<std::size_t> top_n_indices(std::span<const double> scores, std::size_t n);

struct TwoStageResult {
  std::vector<double> stage1;
  std::vector<double> stage2;
  Eigen::VectorXd refined_template;   ///< mean of the top-n stage-1 pixels
  std::vector<std::size_t> top_pixels;
};

/// Two-stage matched filter. Stage 1 scores with `mu_t`; the refined template is
/// the mean of the `n_pixels` best stage-1 pixels; stage 2 rescores with the same
/// mean and covariance.
TwoStageResult two_stage(const PixelMatrix& pixels, const Eigen::VectorXd& mu_t,
                         std::size_t n_pixels, const Parallel& par = {});
TwoStageResult two_stage(const PixelMatrix& pixels, const GaussianStats& stats,
                         const Eigen::VectorXd& mu_t, std::size_t n_pixels,
                         const Parallel& par = {});
ScoreMap two_stage(const HyperCube& cube, const Spectrum& mu_t, std::size_t n_pixels,
                   const Parallel& par = {});

inline constexpr std::size_t kDefaultTwoStagePixels = 1000;

enum class ScenarioKind { IdealQD, IdealMF, InductiveMF, LibraryMF, TwoStage };

std::string_view to_string(ScenarioKind kind) noexcept;
/// Accepts "ideal-qd", "ideal-mf", "inductive-mf", "library-mf", "two-stage".
ScenarioKind parse_scenario_kind(std::string_view text);

/// Where the target template comes from.
enum class TemplateSource { ImageUnderTest, SourceImage, Library };

struct Scenario {
  ScenarioKind kind = ScenarioKind::IdealMF;
  /// Template source for TwoStage; other kinds imply their own source.
  TemplateSource two_stage_seed = TemplateSource::Library;
  std::uint8_t target_class = kBloodClass;
  std::optional<int> library_index;
  std::size_t n_pixels = kDefaultTwoStagePixels;
  /// Count uncertain-blood pixels into image-derived target templates.
  bool include_uncertain_in_template = false;
  /// Divide library templates by their median, matching median-normalized cubes.
  bool normalize_library_template = true;

  TemplateSource template_source() const noexcept;
};

/// Inputs a scenario may draw its template from. All cubes are expected to be
/// preprocessed identically.
struct ScenarioSources {
  const HyperCube* source_cube = nullptr;
  const AnnotationMask* source_mask = nullptr;
  const SpectralLibrary* library = nullptr;
};

/// The target template a scenario would use on `cube`, already on the cube's axis.
Spectrum resolve_template(const Scenario& scenario, const HyperCube& cube,
                          const AnnotationMask* mask, const ScenarioSources& sources);

ScoreMap run_scenario(const Scenario& scenario, const HyperCube& cube, const AnnotationMask* mask,
                      const ScenarioSources& sources, const Parallel& par = {});

}  // namespace hsd
