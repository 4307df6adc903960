#include "hsdetect/report.hpp"

#include "hsdetect/cube_io.hpp"
#include "hsdetect/error.hpp"

#include <png.h>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

namespace hsd {
namespace {

double parse_csv_double(std::string_view s, const std::filesystem::path& path) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw Error(ErrorCode::InvalidValue, "read_curve_csv", "bad number '" + std::string(s) + "' in " + path.string());
  }
  return v;
}

}  // namespace

std::string format_number(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

const std::array<Rgb, 6>& comparison_palette() {
  static const std::array<Rgb, 6> palette{{
      {0xFF, 0xFF, 0xFF},  // none
      {0xFF, 0x00, 0x00},  // red
      {0xFF, 0xA5, 0x00},  // orange
      {0x00, 0x00, 0xFF},  // blue
      {0x80, 0x80, 0x80},  // grey
      {0x00, 0x80, 0x00},  // green
  }};
  return palette;
}

const std::array<Rgb, 5>& outcome_palette() {
  static const std::array<Rgb, 5> palette{{
      {0xFF, 0xFF, 0xFF},  // none
      {0xFF, 0x00, 0x00},  // TP
      {0x80, 0x80, 0x80},  // FP
      {0x00, 0x00, 0xFF},  // FN
      {0xFF, 0xFF, 0xFF},  // TN
  }};
  return palette;
}

void write_indexed_png(const std::filesystem::path& path, std::size_t width, std::size_t height,
                       const std::vector<std::uint8_t>& indices, const std::vector<Rgb>& palette) {
  constexpr const char* op = "write_indexed_png";
  if (indices.size() != width * height) throw Error(ErrorCode::ShapeMismatch, op, "index count != width * height");
  if (palette.empty() || palette.size() > 256) throw Error(ErrorCode::InvalidValue, op, "palette needs 1..256 entries");

  std::unique_ptr<FILE, int (*)(FILE*)> file(std::fopen(path.string().c_str(), "wb"), &std::fclose);
  if (!file) throw Error(ErrorCode::IoError, op, "cannot create " + path.string());

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::IoError, op, "libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(ErrorCode::IoError, op, "libpng failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width), static_cast<png_uint_32>(height), 8,
               PNG_COLOR_TYPE_PALETTE, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  std::vector<png_color> colors;
  for (const auto& c : palette) colors.push_back({c.r, c.g, c.b});
  png_set_PLTE(png, info, colors.data(), static_cast<int>(colors.size()));
  png_write_info(png, info);
  for (std::size_t y = 0; y < height; ++y) {
    auto* row = const_cast<png_bytep>(indices.data() + y * width);
    png_write_row(png, row);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_comparison_png(const std::filesystem::path& path, const ComparisonMap& map) {
  std::vector<std::uint8_t> idx;
  idx.reserve(map.codes.size());
  for (auto c : map.codes) idx.push_back(static_cast<std::uint8_t>(c));
  const auto& p = comparison_palette();
  write_indexed_png(path, map.samples, map.lines, idx, {p.begin(), p.end()});
}

void write_detection_png(const std::filesystem::path& path, const OutcomeMap& map) {
  std::vector<std::uint8_t> idx;
  idx.reserve(map.outcomes.size());
  for (auto o : map.outcomes) idx.push_back(static_cast<std::uint8_t>(o));
  const auto& p = outcome_palette();
  write_indexed_png(path, map.samples, map.lines, idx, {p.begin(), p.end()});
}

void write_curve_csv(const std::filesystem::path& path, const Curve& curve) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "write_curve_csv", "cannot create " + path.string());
  out << "threshold,x,y\n";
  for (const auto& p : curve.points) {
    out << format_number(p.threshold) << "," << format_number(p.x) << "," << format_number(p.y) << "\n";
  }
}

double curve_area(const std::vector<CurvePoint>& points, CurveKind kind) {
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    const double dx = points[i].x - points[i - 1].x;
    area += kind == CurveKind::ROC ? 0.5 * dx * (points[i].y + points[i - 1].y) : dx * points[i].y;
  }
  return area;
}

Curve read_curve_csv(const std::filesystem::path& path, CurveKind kind) {
  const auto text = read_text_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("threshold,x,y", 0) != 0) {
    throw Error(ErrorCode::InvalidValue, "read_curve_csv", "missing 'threshold,x,y' header in " + path.string());
  }
  Curve c;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto a = line.find(',');
    const auto b = line.find(',', a + 1);
    if (a == std::string::npos || b == std::string::npos) {
      throw Error(ErrorCode::InvalidValue, "read_curve_csv", "malformed row '" + line + "'");
    }
    const std::string_view sv(line);
    c.points.push_back({parse_csv_double(sv.substr(0, a), path), parse_csv_double(sv.substr(a + 1, b - a - 1), path),
                        parse_csv_double(sv.substr(b + 1), path)});
  }
  c.auc = curve_area(c.points, kind);
  return c;
}

std::string render_curves_svg(const std::vector<NamedCurve>& curves, CurveKind kind, const std::string& title) {
  constexpr double W = 480, H = 400, left = 60, right = 150, top = 40, bottom = 50;
  const double pw = W - left - right, ph = H - top - bottom;
  static const char* colors[] = {"#d62728", "#1f77b4", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};
  auto sx = [&](double x) { return left + x * pw; };
  auto sy = [&](double y) { return top + (1.0 - y) * ph; };

  std::ostringstream o;
  o << std::fixed << std::setprecision(2);
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 "
    << W << " " << H << "\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << left + pw / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
    << title << "</text>\n";
  o << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << pw << "\" height=\"" << ph
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double v = i / 5.0;
    o << "<line x1=\"" << sx(v) << "\" y1=\"" << sy(0) << "\" x2=\"" << sx(v) << "\" y2=\"" << sy(0) + 5
      << "\" stroke=\"black\"/>";
    o << "<text x=\"" << sx(v) << "\" y=\"" << sy(0) + 18 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"10\">" << v << "</text>\n";
    o << "<line x1=\"" << sx(0) - 5 << "\" y1=\"" << sy(v) << "\" x2=\"" << sx(0) << "\" y2=\"" << sy(v)
      << "\" stroke=\"black\"/>";
    o << "<text x=\"" << sx(0) - 8 << "\" y=\"" << sy(v) + 3 << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
      << "font-size=\"10\">" << v << "</text>\n";
  }
  const char* xlabel = kind == CurveKind::ROC ? "False positive rate" : "Recall";
  const char* ylabel = kind == CurveKind::ROC ? "True positive rate" : "Precision";
  o << "<text x=\"" << left + pw / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
    << "font-size=\"12\">" << xlabel << "</text>\n";
  o << "<text x=\"16\" y=\"" << top + ph / 2 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
    << "transform=\"rotate(-90 16 " << top + ph / 2 << ")\">" << ylabel << "</text>\n";

  for (std::size_t i = 0; i < curves.size(); ++i) {
    const char* color = colors[i % std::size(colors)];
    o << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    const auto& pts = curves[i].curve.points;
    for (std::size_t j = 0; j < pts.size(); ++j) {
      // PR curves are drawn as steps, matching the average-precision integral.
      if (kind == CurveKind::PR && j > 0) o << sx(pts[j - 1].x) << "," << sy(pts[j].y) << " ";
      o << sx(pts[j].x) << "," << sy(pts[j].y) << " ";
    }
    o << "\"/>\n";
    const double ly = top + 14 + 18.0 * static_cast<double>(i);
    o << "<line x1=\"" << left + pw + 10 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 28 << "\" y2=\"" << ly
      << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>";
    o << "<text x=\"" << left + pw + 32 << "\" y=\"" << ly + 4 << "\" font-family=\"sans-serif\" font-size=\"11\">"
      << curves[i].label << " (AUC " << std::setprecision(3) << curves[i].curve.auc << std::setprecision(2)
      << ")</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

void write_curves_svg(const std::filesystem::path& path, const std::vector<NamedCurve>& curves, CurveKind kind,
                      const std::string& title) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "write_curves_svg", "cannot create " + path.string());
  out << render_curves_svg(curves, kind, title);
}

void write_score_map(const std::filesystem::path& header_path, const ScoreMap& scores) {
  HyperCube cube(scores.lines, scores.samples, 1, {0.0});
  for (std::size_t k = 0; k < scores.scores.size(); ++k) cube.pixels()(static_cast<Eigen::Index>(k), 0) = scores.scores[k];
  auto header = make_header(cube, Interleave::BSQ, DataType::Float32);
  header.wavelengths.clear();
  header.extra.emplace_back("description", "{detection scores}");
  write_cube(header_path, cube, header);
}

ScoreMap read_score_map(const std::filesystem::path& header_path) {
  const auto cube = read_cube(header_path);
  if (cube.bands() != 1) {
    throw Error(ErrorCode::ShapeMismatch, "read_score_map", "score map must have exactly one band");
  }
  ScoreMap map{cube.lines(), cube.samples(), {}};
  map.scores.assign(cube.pixels().data(), cube.pixels().data() + cube.pixels().size());
  return map;
}

std::string format_summary_table(const std::vector<SummaryRow>& rows) {
  std::ostringstream o;
  o << "Code,Ideal MF,Inductive MF,MF_lib,Algorithm 1\n";
  auto cell = [&](const std::optional<double>& v) {
    if (!v) {
      o << "-";
      return;
    }
    o << std::fixed << std::setprecision(2) << *v;
  };
  for (const auto& r : rows) {
    o << r.code << ",";
    cell(r.ideal_mf);
    o << ",";
    cell(r.inductive_mf);
    o << ",";
    cell(r.library_mf);
    o << ",";
    cell(r.two_stage);
    o << "\n";
  }
  return o.str();
}

}  // namespace hsd
