#pragma once

#include "hsdetect/types.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace hsd {

enum class TruthLabel : std::int8_t { Excluded = -1, Negative = 0, Positive = 1 };

/// What to do with "uncertain blood" pixels when turning a mask into ground truth.
enum class UncertainPolicy { Exclude, Positive, Negative };

struct Truth {
  std::size_t lines = 0;
  std::size_t samples = 0;
  std::vector<TruthLabel> labels;

  std::size_t positives() const;
  std::size_t negatives() const;
  std::size_t evaluated() const { return positives() + negatives(); }
  /// positives / evaluated pixels.
  double prevalence() const;
};

Truth make_truth(const AnnotationMask& mask, std::uint8_t target_class = kBloodClass,
                 UncertainPolicy uncertain = UncertainPolicy::Exclude);
/// One-row truth from 0/1 values (any other value marks the pixel excluded).
Truth binary_truth(std::span<const int> values);

struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  double tpr() const;
  double fpr() const;
  double precision() const;
  double recall() const { return tpr(); }

  bool operator==(const ConfusionMatrix&) const = default;
};

/// Predicts positive iff score >= eta; excluded pixels are not counted.
ConfusionMatrix confusion_at_threshold(std::span<const double> scores,
                                       std::span<const TruthLabel> truth, double eta);
ConfusionMatrix confusion_at_threshold(const ScoreMap& scores, const Truth& truth, double eta);

struct CurvePoint {
  double threshold;
  double x;
  double y;
};

struct Curve {
  std::vector<CurvePoint> points;
  double auc = 0.0;
};

/// (FPR, TPR) over every distinct threshold plus +/-inf. AUC by trapezoids, which
/// equals the Mann-Whitney concordance with ties counted one half.
Curve roc_curve(std::span<const double> scores, std::span<const TruthLabel> truth);
Curve roc_curve(const ScoreMap& scores, const Truth& truth);

/// (Recall, Precision) over every distinct threshold, starting at (0, 1).
/// AUC is average precision: sum over thresholds of (R_n - R_{n-1}) * P_n.
Curve pr_curve(std::span<const double> scores, std::span<const TruthLabel> truth);
Curve pr_curve(const ScoreMap& scores, const Truth& truth);

/// The k-th largest score, k = round(prevalence * n) clamped to [1, n].
double threshold_at_prevalence(std::span<const double> scores, double prevalence);
/// Same over evaluated pixels only.
double threshold_at_prevalence(const ScoreMap& scores, const Truth& truth, double prevalence);

enum class Outcome : std::uint8_t { None = 0, TruePositive, FalsePositive, FalseNegative, TrueNegative };

struct OutcomeMap {
  std::size_t lines = 0;
  std::size_t samples = 0;
  std::vector<Outcome> outcomes;

  std::size_t count(Outcome o) const;
};

OutcomeMap detection_map(const ScoreMap& scores, const Truth& truth, double eta);

/// Joint outcome codes of the two-stage detector (A1) against the ideal MF.
enum class CompareCode : std::uint8_t {
  None = 0,
  BothDetected = 1,  ///< red: A1 true positive
  IdealOnly = 2,     ///< orange: A1 false negative, ideal true positive
  BothMissed = 3,    ///< blue: false negative for both
  A1FalseAlarm = 4,  ///< grey: A1 false positive
  IdealFalseAlarm = 5,  ///< green: ideal false positive, A1 true negative
};

struct ComparisonMap {
  std::size_t lines = 0;
  std::size_t samples = 0;
  std::vector<CompareCode> codes;

  std::array<std::size_t, 6> histogram() const;
};

ComparisonMap compare_outcomes(const OutcomeMap& a1, const OutcomeMap& ideal);
/// Thresholds both score maps at `prevalence` (over evaluated pixels) and compares them.
ComparisonMap compare_map(const ScoreMap& a1_scores, const ScoreMap& ideal_scores, const Truth& truth,
                          double prevalence);

struct PcaResult {
  Eigen::VectorXd mean;
  Eigen::MatrixXd components;          ///< k x d, one principal axis per row
  Eigen::VectorXd explained_variance;  ///< descending
  Eigen::MatrixXd projections;         ///< n x k
};

/// Projects mean-centered rows onto the top-k covariance eigenvectors. Each
/// component is signed so that its largest-magnitude loading is positive.
PcaResult pca_project(const PixelMatrix& pixels, std::size_t k = 2);
PcaResult pca_project(std::span<const Spectrum> pixels, std::size_t k = 2);

}  // namespace hsd
