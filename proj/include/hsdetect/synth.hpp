#pragma once

#include "hsdetect/evaluate.hpp"
#include "hsdetect/parallel.hpp"
#include "hsdetect/types.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hsd {

struct BackgroundComponent {
  double weight = 1.0;
  Spectrum mean;
  /// Per-band standard deviation; the covariance is scale^2 * AR(1) band correlation.
  double covariance_scale = 0.01;
};

struct SceneSpec {
  std::size_t lines = 100;
  std::size_t samples = 100;
  std::size_t bands = 16;
  std::vector<BackgroundComponent> background;
  Spectrum target_mean;
  double target_covariance_scale = 0.01;
  std::size_t target_pixel_count = 500;
  /// Implanted pixel = alpha * target draw + (1 - alpha) * local background draw.
  double mixing_alpha = 1.0;
  /// Relative magnitude of the smooth multiplicative distortion of the detector template.
  double template_perturbation = 0.0;
  /// Correlation between adjacent bands.
  double band_correlation = 0.0;
  std::uint64_t seed = 1;

  /// Throws InvalidSpec when an invariant is broken.
  void validate() const;
};

/// Three-material background plus a blood-like target on a 400-1000 nm axis.
SceneSpec reference_scene(std::size_t lines, std::size_t samples, std::size_t bands,
                          std::size_t target_pixels, double template_perturbation, std::uint64_t seed);

/// Parses a SceneSpec from `key = value` text. Spectra default to reference_scene().
SceneSpec parse_scene_spec(std::string_view text);
std::string format_scene_spec(const SceneSpec& spec);

struct Scene {
  HyperCube cube;
  AnnotationMask mask;          ///< implanted pixels carry class 1
  Spectrum true_template;       ///< expected implanted pixel
  Spectrum detector_template;   ///< true_template after the seeded distortion
  std::vector<std::size_t> target_pixels;  ///< ascending pixel indices
};

/// Deterministic in spec.seed.
Scene generate_scene(const SceneSpec& spec);

/// Rule for the two-stage pixel count N: a constant, or a percentage of the target size.
struct NRule {
  enum class Kind { Constant, Percent };
  Kind kind = Kind::Constant;
  double value = 1000.0;

  /// "1000" or "50%".
  static NRule parse(std::string_view text);
  std::string label() const;
  /// N for `target_size` target pixels, at least 1.
  std::size_t resolve(std::size_t target_size) const;
};

struct TargetSizeRow {
  std::size_t target_size = 0;
  std::size_t n_pixels = 0;
  std::vector<double> auc_pr;  ///< one per repetition
  double mean = 0.0;
  double stddev = 0.0;
};

inline constexpr std::size_t kSweepRepetitions = 5;

/// For each T: keep a random T of the scene's target pixels, drop the rest, run
/// the two-stage detector seeded with the detector template, and record AUC(PR).
/// spec.target_pixel_count is the pool every T is drawn from.
std::vector<TargetSizeRow> sweep_target_size(const SceneSpec& spec, std::span<const std::size_t> target_sizes,
                                             const NRule& rule, std::size_t repetitions = kSweepRepetitions,
                                             const Parallel& par = {});
/// Same, reusing an already generated scene.
std::vector<TargetSizeRow> sweep_target_size(const Scene& scene, std::uint64_t seed,
                                             std::span<const std::size_t> target_sizes, const NRule& rule,
                                             std::size_t repetitions = kSweepRepetitions,
                                             const Parallel& par = {});

struct NSweepRow {
  std::string label;
  std::size_t n_pixels = 0;
  double auc_pr = 0.0;
};

/// Two-stage detector for each N rule (percentages relative to the positive count);
/// stage 1 and the image statistics are computed once.
std::vector<NSweepRow> sweep_n(const PixelMatrix& pixels, std::span<const TruthLabel> truth,
                               const Eigen::VectorXd& mu_t, std::span<const NRule> rules,
                               const Parallel& par = {});

std::string format_target_size_table(const std::vector<TargetSizeRow>& rows);
std::string format_n_table(const std::vector<NSweepRow>& rows);

}  // namespace hsd
