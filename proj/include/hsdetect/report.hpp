#pragma once

#include "hsdetect/evaluate.hpp"
#include "hsdetect/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hsd {

struct Rgb {
  std::uint8_t r, g, b;
  bool operator==(const Rgb&) const = default;
};

/// Comparison-map palette indexed by CompareCode: none (white), red, orange, blue, grey, green.
const std::array<Rgb, 6>& comparison_palette();
/// Detection-map palette indexed by Outcome: none/TN (white), TP red, FP grey, FN blue, TN white.
const std::array<Rgb, 5>& outcome_palette();

/// 8-bit indexed PNG, row-major indices.
void write_indexed_png(const std::filesystem::path& path, std::size_t width, std::size_t height,
                       const std::vector<std::uint8_t>& indices, const std::vector<Rgb>& palette);
void write_comparison_png(const std::filesystem::path& path, const ComparisonMap& map);
void write_detection_png(const std::filesystem::path& path, const OutcomeMap& map);

enum class CurveKind { ROC, PR };

/// Area under `points`: trapezoids for ROC, recall steps for PR.
double curve_area(const std::vector<CurvePoint>& points, CurveKind kind);

/// CSV with header `threshold,x,y`.
void write_curve_csv(const std::filesystem::path& path, const Curve& curve);
/// The area is recomputed from the points.
Curve read_curve_csv(const std::filesystem::path& path, CurveKind kind);

struct NamedCurve {
  std::string label;
  Curve curve;
};

std::string render_curves_svg(const std::vector<NamedCurve>& curves, CurveKind kind,
                              const std::string& title);
void write_curves_svg(const std::filesystem::path& path, const std::vector<NamedCurve>& curves,
                      CurveKind kind, const std::string& title);

/// Score maps persist as single-band float32 ENVI (`.hdr` + `.raw`).
void write_score_map(const std::filesystem::path& header_path, const ScoreMap& scores);
ScoreMap read_score_map(const std::filesystem::path& header_path);

/// One row of the aggregated per-image AUC(PR) table.
struct SummaryRow {
  std::string code;
  std::optional<double> ideal_mf;
  std::optional<double> inductive_mf;
  std::optional<double> library_mf;
  std::optional<double> two_stage;
};

/// `Code,Ideal MF,Inductive MF,MF_lib,Algorithm 1`, AUC values with two decimals, '-' when absent.
std::string format_summary_table(const std::vector<SummaryRow>& rows);

std::string format_number(double v);

}  // namespace hsd
