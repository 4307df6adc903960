#include "hsdetect/evaluate.hpp"

#include "hsdetect/error.hpp"
#include "hsdetect/detect.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace hsd {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void require_same_size(std::size_t scores, std::size_t truth, const char* op) {
  if (scores != truth) {
    throw Error(ErrorCode::ShapeMismatch, op,
                "score count " + std::to_string(scores) + " != truth count " + std::to_string(truth));
  }
}

void require_same_shape(const ScoreMap& s, const Truth& t, const char* op) {
  if (s.lines != t.lines || s.samples != t.samples || s.scores.size() != t.labels.size()) {
    throw Error(ErrorCode::ShapeMismatch, op, "score map and truth shapes differ");
  }
}

struct Ranked {
  std::vector<double> scores;  // descending
  std::vector<bool> positive;
  std::size_t positives = 0;
  std::size_t negatives = 0;
};

Ranked rank(std::span<const double> scores, std::span<const TruthLabel> truth) {
  std::vector<std::size_t> idx;
  idx.reserve(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (truth[i] != TruthLabel::Excluded) idx.push_back(i);
  }
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  });
  Ranked r;
  r.scores.reserve(idx.size());
  r.positive.reserve(idx.size());
  for (auto i : idx) {
    r.scores.push_back(scores[i]);
    const bool pos = truth[i] == TruthLabel::Positive;
    r.positive.push_back(pos);
    (pos ? r.positives : r.negatives)++;
  }
  return r;
}

// Calls fn(threshold, tp, fp) after each group of tied scores, descending.
template <typename Fn>
void sweep(const Ranked& r, Fn&& fn) {
  std::size_t tp = 0, fp = 0, i = 0;
  while (i < r.scores.size()) {
    const double t = r.scores[i];
    while (i < r.scores.size() && r.scores[i] == t) {
      (r.positive[i] ? tp : fp)++;
      ++i;
    }
    fn(t, tp, fp);
  }
}

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::size_t Truth::positives() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), TruthLabel::Positive));
}

std::size_t Truth::negatives() const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), TruthLabel::Negative));
}

double Truth::prevalence() const { return ratio(positives(), evaluated()); }

Truth make_truth(const AnnotationMask& mask, std::uint8_t target_class, UncertainPolicy uncertain) {
  Truth t{mask.lines, mask.samples, {}};
  t.labels.reserve(mask.labels.size());
  for (auto label : mask.labels) {
    if (label == target_class) {
      t.labels.push_back(TruthLabel::Positive);
    } else if (label == kUncertainBloodClass) {
      switch (uncertain) {
        case UncertainPolicy::Exclude: t.labels.push_back(TruthLabel::Excluded); break;
        case UncertainPolicy::Positive: t.labels.push_back(TruthLabel::Positive); break;
        case UncertainPolicy::Negative: t.labels.push_back(TruthLabel::Negative); break;
      }
    } else {
      t.labels.push_back(TruthLabel::Negative);
    }
  }
  return t;
}

Truth binary_truth(std::span<const int> values) {
  Truth t{1, values.size(), {}};
  for (int v : values) {
    t.labels.push_back(v == 1 ? TruthLabel::Positive : v == 0 ? TruthLabel::Negative : TruthLabel::Excluded);
  }
  return t;
}

double ConfusionMatrix::tpr() const { return ratio(tp, tp + fn); }
double ConfusionMatrix::fpr() const { return ratio(fp, fp + tn); }
double ConfusionMatrix::precision() const { return ratio(tp, tp + fp); }

ConfusionMatrix confusion_at_threshold(std::span<const double> scores, std::span<const TruthLabel> truth,
                                       double eta) {
  require_same_size(scores.size(), truth.size(), "confusion_at_threshold");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (truth[i] == TruthLabel::Excluded) continue;
    const bool predicted = scores[i] >= eta;
    const bool actual = truth[i] == TruthLabel::Positive;
    if (predicted && actual) ++cm.tp;
    else if (predicted) ++cm.fp;
    else if (actual) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

ConfusionMatrix confusion_at_threshold(const ScoreMap& scores, const Truth& truth, double eta) {
  require_same_shape(scores, truth, "confusion_at_threshold");
  return confusion_at_threshold(scores.scores, truth.labels, eta);
}

Curve roc_curve(std::span<const double> scores, std::span<const TruthLabel> truth) {
  require_same_size(scores.size(), truth.size(), "roc_curve");
  const Ranked r = rank(scores, truth);
  if (r.positives == 0 || r.negatives == 0) {
    throw Error(ErrorCode::SingleClass, "roc_curve", "both positive and negative pixels are required");
  }
  Curve c;
  c.points.push_back({kInf, 0.0, 0.0});
  // Twice the trapezoid area in units of (1/N) x (1/P), accumulated exactly.
  unsigned long long doubled_area = 0;
  std::size_t prev_tp = 0, prev_fp = 0;
  sweep(r, [&](double t, std::size_t tp, std::size_t fp) {
    doubled_area += static_cast<unsigned long long>(fp - prev_fp) * (tp + prev_tp);
    prev_tp = tp;
    prev_fp = fp;
    c.points.push_back({t, ratio(fp, r.negatives), ratio(tp, r.positives)});
  });
  c.points.push_back({-kInf, 1.0, 1.0});
  c.auc = static_cast<double>(doubled_area) /
          (2.0 * static_cast<double>(r.positives) * static_cast<double>(r.negatives));
  return c;
}

Curve roc_curve(const ScoreMap& scores, const Truth& truth) {
  require_same_shape(scores, truth, "roc_curve");
  return roc_curve(scores.scores, truth.labels);
}

Curve pr_curve(std::span<const double> scores, std::span<const TruthLabel> truth) {
  require_same_size(scores.size(), truth.size(), "pr_curve");
  const Ranked r = rank(scores, truth);
  if (r.positives == 0) throw Error(ErrorCode::NoPositives, "pr_curve", "no positive pixels to recall");
  Curve c;
  c.points.push_back({kInf, 0.0, 1.0});
  double ap = 0.0;
  std::size_t prev_tp = 0;
  sweep(r, [&](double t, std::size_t tp, std::size_t fp) {
    const double precision = ratio(tp, tp + fp);
    ap += ratio(tp - prev_tp, r.positives) * precision;
    prev_tp = tp;
    c.points.push_back({t, ratio(tp, r.positives), precision});
  });
  c.auc = ap;
  return c;
}

Curve pr_curve(const ScoreMap& scores, const Truth& truth) {
  require_same_shape(scores, truth, "pr_curve");
  return pr_curve(scores.scores, truth.labels);
}

double threshold_at_prevalence(std::span<const double> scores, double prevalence) {
  constexpr const char* op = "threshold_at_prevalence";
  if (scores.empty()) throw Error(ErrorCode::EmptyScores, op, "no scores");
  if (!(prevalence > 0.0 && prevalence <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, op, "prevalence must lie in (0, 1]");
  }
  const std::size_t n = scores.size();
  const auto k = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::llround(prevalence * static_cast<double>(n))), 1, n);
  std::vector<double> v(scores.begin(), scores.end());
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k - 1), v.end(), std::greater<>());
  return v[k - 1];
}

double threshold_at_prevalence(const ScoreMap& scores, const Truth& truth, double prevalence) {
  require_same_shape(scores, truth, "threshold_at_prevalence");
  std::vector<double> evaluated;
  evaluated.reserve(scores.scores.size());
  for (std::size_t i = 0; i < scores.scores.size(); ++i) {
    if (truth.labels[i] != TruthLabel::Excluded) evaluated.push_back(scores.scores[i]);
  }
  return threshold_at_prevalence(evaluated, prevalence);
}

std::size_t OutcomeMap::count(Outcome o) const {
  return static_cast<std::size_t>(std::count(outcomes.begin(), outcomes.end(), o));
}

OutcomeMap detection_map(const ScoreMap& scores, const Truth& truth, double eta) {
  require_same_shape(scores, truth, "detection_map");
  OutcomeMap m{scores.lines, scores.samples, {}};
  m.outcomes.reserve(scores.scores.size());
  for (std::size_t i = 0; i < scores.scores.size(); ++i) {
    if (truth.labels[i] == TruthLabel::Excluded) {
      m.outcomes.push_back(Outcome::None);
      continue;
    }
    const bool predicted = scores.scores[i] >= eta;
    const bool actual = truth.labels[i] == TruthLabel::Positive;
    m.outcomes.push_back(predicted ? (actual ? Outcome::TruePositive : Outcome::FalsePositive)
                                   : (actual ? Outcome::FalseNegative : Outcome::TrueNegative));
  }
  return m;
}

std::array<std::size_t, 6> ComparisonMap::histogram() const {
  std::array<std::size_t, 6> h{};
  for (auto c : codes) ++h[static_cast<std::size_t>(c)];
  return h;
}

ComparisonMap compare_outcomes(const OutcomeMap& a1, const OutcomeMap& ideal) {
  if (a1.lines != ideal.lines || a1.samples != ideal.samples || a1.outcomes.size() != ideal.outcomes.size()) {
    throw Error(ErrorCode::ShapeMismatch, "compare_map", "outcome maps differ in shape");
  }
  ComparisonMap m{a1.lines, a1.samples, {}};
  m.codes.reserve(a1.outcomes.size());
  for (std::size_t i = 0; i < a1.outcomes.size(); ++i) {
    const auto a = a1.outcomes[i];
    const auto b = ideal.outcomes[i];
    CompareCode code = CompareCode::None;
    if (a == Outcome::TruePositive) code = CompareCode::BothDetected;
    else if (a == Outcome::FalseNegative && b == Outcome::TruePositive) code = CompareCode::IdealOnly;
    else if (a == Outcome::FalseNegative && b == Outcome::FalseNegative) code = CompareCode::BothMissed;
    else if (a == Outcome::FalsePositive) code = CompareCode::A1FalseAlarm;
    else if (a == Outcome::TrueNegative && b == Outcome::FalsePositive) code = CompareCode::IdealFalseAlarm;
    m.codes.push_back(code);
  }
  return m;
}

ComparisonMap compare_map(const ScoreMap& a1_scores, const ScoreMap& ideal_scores, const Truth& truth,
                          double prevalence) {
  const double eta_a = threshold_at_prevalence(a1_scores, truth, prevalence);
  const double eta_b = threshold_at_prevalence(ideal_scores, truth, prevalence);
  return compare_outcomes(detection_map(a1_scores, truth, eta_a), detection_map(ideal_scores, truth, eta_b));
}

PcaResult pca_project(const PixelMatrix& pixels, std::size_t k) {
  constexpr const char* op = "pca_project";
  const auto n = static_cast<std::size_t>(pixels.rows());
  const auto d = static_cast<std::size_t>(pixels.cols());
  if (k == 0 || k > d) throw Error(ErrorCode::InvalidConfig, op, "k must lie in [1, bands]");
  if (n < k + 1) {
    throw Error(ErrorCode::TooFewSamples, op, "need at least k + 1 = " + std::to_string(k + 1) + " pixels");
  }
  PcaResult r;
  r.mean = pixels.colwise().mean().transpose();
  const Eigen::MatrixXd centered = pixels.rowwise() - r.mean.transpose();
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  if (eig.info() != Eigen::Success) throw Error(ErrorCode::UnrecoverablySingular, op, "eigendecomposition failed");

  const auto ki = static_cast<Eigen::Index>(k);
  r.components.resize(ki, static_cast<Eigen::Index>(d));
  r.explained_variance.resize(ki);
  // Eigen returns ascending eigenvalues.
  for (Eigen::Index c = 0; c < ki; ++c) {
    const Eigen::Index src = static_cast<Eigen::Index>(d) - 1 - c;
    Eigen::VectorXd axis = eig.eigenvectors().col(src);
    Eigen::Index arg = 0;
    axis.cwiseAbs().maxCoeff(&arg);
    if (axis(arg) < 0) axis = -axis;
    r.components.row(c) = axis.transpose();
    r.explained_variance(c) = std::max(0.0, eig.eigenvalues()(src));
  }
  r.projections = centered * r.components.transpose();
  return r;
}

PcaResult pca_project(std::span<const Spectrum> pixels, std::size_t k) {
  if (pixels.empty()) throw Error(ErrorCode::TooFewSamples, "pca_project", "no pixels");
  const std::size_t d = pixels.front().size();
  PixelMatrix m(static_cast<Eigen::Index>(pixels.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    if (pixels[i].size() != d) throw Error(ErrorCode::DimensionMismatch, "pca_project", "pixels differ in dimension");
    m.row(static_cast<Eigen::Index>(i)) = pixels[i].vec().transpose();
  }
  return pca_project(m, k);
}

}  // namespace hsd
