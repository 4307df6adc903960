#include "hsdetect/evaluate.hpp"
#include "test_support.hpp"

#include <cmath>

using namespace hsd;

namespace {

std::vector<TruthLabel> labels(std::initializer_list<int> v) {
  std::vector<int> tmp(v);
  return binary_truth(tmp).labels;
}

// Mann-Whitney concordance with ties counted one half, by brute force over pairs.
double concordance(const std::vector<double>& s, const std::vector<TruthLabel>& t) {
  double num = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (t[i] != TruthLabel::Positive) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (t[j] != TruthLabel::Negative) continue;
      pairs += 1.0;
      num += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
    }
  }
  return num / pairs;
}

ScoreMap row_map(std::vector<double> s) { return ScoreMap{1, s.size(), std::move(s)}; }

}  // namespace

TEST_SUITE("evaluate") {

TEST_CASE("truth from a mask") {
  const AnnotationMask mask{1, 5, {0, 1, 8, 2, 1}};
  const auto t = make_truth(mask);
  CHECK(t.positives() == 2);
  CHECK(t.negatives() == 2);
  CHECK(t.labels[2] == TruthLabel::Excluded);
  CHECK(t.prevalence() == 0.5);
  CHECK(make_truth(mask, kBloodClass, UncertainPolicy::Positive).positives() == 3);
  CHECK(make_truth(mask, kBloodClass, UncertainPolicy::Negative).negatives() == 3);
  CHECK(make_truth(mask, 2).positives() == 1);
}

TEST_CASE("confusion matrix") {
  const std::vector<double> s{0.9, 0.1};
  const auto cm = confusion_at_threshold(s, labels({1, 0}), 0.5);
  CHECK(cm == ConfusionMatrix{1, 0, 1, 0});
  const auto high = confusion_at_threshold(s, labels({1, 0}), 2.0);
  CHECK(high.tp == 0);
  CHECK(high.fp == 0);
  CHECK(high.tn == 1);
  CHECK(high.fn == 1);
  for (double eta : {-1.0, 0.5, 2.0}) {
    const auto all = confusion_at_threshold(s, labels({1, 1}), eta);
    CHECK(all.tn == 0);
    CHECK(all.fp == 0);
  }
  CHECK(cm.tpr() == 1.0);
  CHECK(cm.fpr() == 0.0);
  CHECK(cm.precision() == 1.0);
  CHECK_THROWS_CODE(confusion_at_threshold(s, labels({1}), 0.5), ErrorCode::ShapeMismatch);
}

TEST_CASE("ROC examples") {
  CHECK(roc_curve(std::vector<double>{0.1, 0.2, 0.8, 0.9}, labels({0, 0, 1, 1})).auc == 1.0);
  CHECK(roc_curve(std::vector<double>{0.1, 0.4, 0.35, 0.8}, labels({0, 0, 1, 1})).auc == 0.75);
  CHECK(roc_curve(std::vector<double>{0.9, 0.8, 0.2, 0.1}, labels({0, 0, 1, 1})).auc == 0.0);
  CHECK_THROWS_CODE(roc_curve(std::vector<double>{0.1, 0.2}, labels({1, 1})), ErrorCode::SingleClass);

  const auto c = roc_curve(std::vector<double>{0.1, 0.4, 0.35, 0.8}, labels({0, 0, 1, 1}));
  CHECK(c.points.front().x == 0.0);
  CHECK(c.points.front().y == 0.0);
  CHECK(c.points.back().x == 1.0);
  CHECK(c.points.back().y == 1.0);
  CHECK(c.points.size() == 6);
}

TEST_CASE("ROC AUC equals pairwise concordance") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 2 + rng() % 199;
    std::vector<double> s(n);
    std::vector<TruthLabel> t(n);
    // Coarse scores so ties are common.
    for (auto& v : s) v = static_cast<double>(rng() % 12);
    for (auto& l : t) l = static_cast<TruthLabel>(static_cast<int>(rng() % 3) - 1);
    t[0] = TruthLabel::Positive;
    t[1] = TruthLabel::Negative;
    CHECK(roc_curve(s, t).auc == concordance(s, t));
  }
}

TEST_CASE("PR examples") {
  CHECK(pr_curve(std::vector<double>{0.1, 0.2, 0.8, 0.9}, labels({0, 0, 1, 1})).auc == 1.0);
  const auto c = pr_curve(std::vector<double>{0.1, 0.4, 0.35, 0.8}, labels({0, 0, 1, 1}));
  CHECK(std::abs(c.auc - (0.5 + 0.5 * 2.0 / 3.0)) < 1e-15);
  CHECK(c.points.front().x == 0.0);
  CHECK(c.points.front().y == 1.0);
  CHECK(c.points.back().x == 1.0);
  CHECK(c.points.back().y == 0.5);
  CHECK_THROWS_CODE(pr_curve(std::vector<double>{0.1, 0.2}, labels({0, 0})), ErrorCode::NoPositives);
}

TEST_CASE("PR AUC is invariant under strictly monotone transforms") {
  std::mt19937_64 rng(32);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> s(300), e(300);
    std::vector<TruthLabel> t(300);
    for (std::size_t i = 0; i < s.size(); ++i) {
      t[i] = rng() % 4 == 0 ? TruthLabel::Positive : TruthLabel::Negative;
      s[i] = g(rng) + (t[i] == TruthLabel::Positive ? 1.0 : 0.0);
      e[i] = std::exp(2.0 * s[i]) + 5.0;
    }
    t[0] = TruthLabel::Positive;
    CHECK(pr_curve(s, t).auc == pr_curve(e, t).auc);
  }
}

TEST_CASE("random scores: ROC near 0.5, PR near prevalence") {
  std::mt19937_64 rng(33);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s(100000);
  std::vector<TruthLabel> t(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = u(rng);
    t[i] = u(rng) < 0.1 ? TruthLabel::Positive : TruthLabel::Negative;
  }
  const double prevalence = Truth{1, t.size(), t}.prevalence();
  CHECK(std::abs(roc_curve(s, t).auc - 0.5) < 0.01);
  CHECK(std::abs(pr_curve(s, t).auc - prevalence) < 0.02);
}

TEST_CASE("threshold at prevalence") {
  const std::vector<double> s{0.9, 0.8, 0.1, 0.05};
  CHECK(threshold_at_prevalence(s, 0.5) == 0.8);
  CHECK(threshold_at_prevalence(s, 1.0) == 0.05);
  CHECK(threshold_at_prevalence(s, 0.01) == 0.9);  // k clamped to 1
  const std::vector<double> tied{0.9, 0.5, 0.5, 0.5, 0.1};
  const double eta = threshold_at_prevalence(tied, 0.4);
  CHECK(eta == 0.5);
  CHECK(std::count_if(tied.begin(), tied.end(), [&](double v) { return v >= eta; }) == 4);
  CHECK_THROWS_CODE(threshold_at_prevalence(std::vector<double>{}, 0.5), ErrorCode::EmptyScores);
  CHECK_THROWS_CODE(threshold_at_prevalence(s, 0.0), ErrorCode::InvalidConfig);
  CHECK_THROWS_CODE(threshold_at_prevalence(s, 1.5), ErrorCode::InvalidConfig);

  // Excluded pixels do not count towards n.
  const Truth truth{1, 5, labels({1, 0, -1, 0, 1})};
  const auto map = row_map({0.9, 0.8, 100.0, 0.1, 0.05});
  CHECK(threshold_at_prevalence(map, truth, 0.5) == 0.8);
}

TEST_CASE("distinct scores flag exactly round(p n) pixels") {
  std::mt19937_64 rng(34);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 500;
    std::vector<double> s(n);
    for (auto& v : s) v = u(rng);
    const double p = 0.001 + 0.999 * u(rng);
    const double eta = threshold_at_prevalence(s, p);
    const auto k = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(p * static_cast<double>(n))), 1, n);
    CHECK(static_cast<std::size_t>(std::count_if(s.begin(), s.end(), [&](double v) { return v >= eta; })) == k);
  }
}

TEST_CASE("detection map agrees with the confusion matrix") {
  const auto map = row_map({0.9, 0.1, 0.7, 0.3, 0.5});
  const Truth truth{1, 5, labels({1, 0, 0, 1, -1})};
  const auto out = detection_map(map, truth, 0.5);
  CHECK(out.outcomes == std::vector<Outcome>{Outcome::TruePositive, Outcome::TrueNegative, Outcome::FalsePositive,
                                            Outcome::FalseNegative, Outcome::None});
  std::mt19937_64 rng(35);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s(400);
  std::vector<int> tv(400);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = u(rng);
    tv[i] = static_cast<int>(rng() % 3) - 1;
  }
  const auto t = binary_truth(tv);
  const auto m = detection_map(row_map(s), t, 0.6);
  const auto cm = confusion_at_threshold(s, t.labels, 0.6);
  CHECK(m.count(Outcome::TruePositive) == cm.tp);
  CHECK(m.count(Outcome::FalsePositive) == cm.fp);
  CHECK(m.count(Outcome::FalseNegative) == cm.fn);
  CHECK(m.count(Outcome::TrueNegative) == cm.tn);
  CHECK_THROWS_CODE(detection_map(row_map({1.0}), t, 0.5), ErrorCode::ShapeMismatch);
}

TEST_CASE("compare map codes") {
  using O = Outcome;
  using C = CompareCode;
  const OutcomeMap a1{2, 3, {O::TruePositive, O::FalseNegative, O::FalseNegative, O::FalsePositive, O::TrueNegative,
                             O::TrueNegative}};
  const OutcomeMap ideal{2, 3, {O::FalseNegative, O::TruePositive, O::FalseNegative, O::TrueNegative,
                                O::FalsePositive, O::TrueNegative}};
  const auto m = compare_outcomes(a1, ideal);
  CHECK(m.codes == std::vector<C>{C::BothDetected, C::IdealOnly, C::BothMissed, C::A1FalseAlarm, C::IdealFalseAlarm,
                                  C::None});
  CHECK(m.histogram() == std::array<std::size_t, 6>{1, 1, 1, 1, 1, 1});

  std::mt19937_64 rng(36);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> s(200);
  std::vector<int> tv(200);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = u(rng);
    tv[i] = u(rng) < 0.2 ? 1 : 0;
  }
  const auto t = binary_truth(tv);
  const auto self = compare_map(row_map(s), row_map(s), t, t.prevalence());
  const auto h = self.histogram();
  CHECK(h[2] == 0);
  CHECK(h[5] == 0);

  std::vector<double> perfect(tv.begin(), tv.end());
  const auto both = compare_map(row_map(perfect), row_map(perfect), t, t.prevalence());
  for (std::size_t i = 0; i < tv.size(); ++i) {
    CHECK(both.codes[i] == (tv[i] == 1 ? C::BothDetected : C::None));
  }
  CHECK_THROWS_CODE(compare_outcomes(a1, OutcomeMap{1, 1, {O::None}}), ErrorCode::ShapeMismatch);
}

TEST_CASE("PCA projection") {
  PixelMatrix line(20, 2);
  for (Eigen::Index i = 0; i < 20; ++i) line.row(i) << static_cast<double>(i), 2.0 * static_cast<double>(i) + 1.0;
  const auto r = pca_project(line, 2);
  CHECK(r.projections.col(1).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(r.components(0, 1) > 0.0);
  CHECK(r.explained_variance(0) >= r.explained_variance(1));

  std::mt19937_64 rng(37);
  PixelMatrix iso(20000, 3);
  std::normal_distribution<double> g(0.0, 1.0);
  for (Eigen::Index i = 0; i < iso.size(); ++i) iso.data()[i] = g(rng);
  const auto ri = pca_project(iso, 3);
  CHECK(ri.explained_variance.maxCoeff() - ri.explained_variance.minCoeff() < 0.1);

  // Projecting mean + each axis recovers the unit vectors.
  PixelMatrix axes(3, 3);
  for (Eigen::Index c = 0; c < 3; ++c) axes.row(c) = ri.mean.transpose() + ri.components.row(c);
  const Eigen::MatrixXd proj = (axes.rowwise() - ri.mean.transpose()) * ri.components.transpose();
  CHECK((proj - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-10);

  CHECK_THROWS_CODE(pca_project(PixelMatrix(2, 3), 2), ErrorCode::TooFewSamples);
}

}  // TEST_SUITE
