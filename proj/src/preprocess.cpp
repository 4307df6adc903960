#include "hsdetect/preprocess.hpp"

#include "hsdetect/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace hsd {
namespace {

std::size_t parse_index(std::string_view token, std::string_view whole) {
  while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
  while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (token.empty() || ec != std::errc() || ptr != token.data() + token.size()) {
    throw Error(ErrorCode::InvalidConfig, "parse_band_mask",
                "bad band index '" + std::string(token) + "' in '" + std::string(whole) + "'");
  }
  return value;
}

void require_same_axis(const Spectrum& a, const Spectrum& b, const char* op) {
  if (a.size() != b.size() || a.wavelengths != b.wavelengths) {
    throw Error(ErrorCode::AxisMismatch, op, "spectra do not share a wavelength axis");
  }
}

}  // namespace

BandMask BandMask::parse(std::string_view text) {
  BandMask mask;
  if (text.empty() || text == "none") return mask;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    const auto item = text.substr(start, end - start);
    const auto dash = item.find('-');
    if (dash == std::string_view::npos) {
      mask.removed.push_back(parse_index(item, text));
    } else {
      const auto lo = parse_index(item.substr(0, dash), text);
      const auto hi = parse_index(item.substr(dash + 1), text);
      if (hi < lo) {
        throw Error(ErrorCode::InvalidConfig, "parse_band_mask",
                    "descending range '" + std::string(item) + "'");
      }
      for (auto i = lo; i <= hi; ++i) mask.removed.push_back(i);
    }
    start = end + 1;
  }
  std::sort(mask.removed.begin(), mask.removed.end());
  mask.removed.erase(std::unique(mask.removed.begin(), mask.removed.end()), mask.removed.end());
  return mask;
}

std::string BandMask::to_string() const {
  if (removed.empty()) return "none";
  std::ostringstream out;
  std::size_t i = 0;
  while (i < removed.size()) {
    std::size_t j = i;
    while (j + 1 < removed.size() && removed[j + 1] == removed[j] + 1) ++j;
    out << (i ? "," : "") << removed[i];
    if (j > i) out << "-" << removed[j];
    i = j + 1;
  }
  return out.str();
}

BandMask default_band_mask() { return BandMask::parse("0-4,48-50,121-127"); }

double median(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptySource, "median", "empty input");
  std::vector<double> v(values.begin(), values.end());
  const auto mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

HyperCube remove_bands(const HyperCube& cube, const BandMask& mask) {
  constexpr const char* op = "remove_bands";
  std::vector<bool> drop(cube.bands(), false);
  for (auto b : mask.removed) {
    if (b >= cube.bands()) {
      throw Error(ErrorCode::IndexOutOfRange, op,
                  "band " + std::to_string(b) + " >= band count " + std::to_string(cube.bands()));
    }
    drop[b] = true;
  }
  std::vector<std::size_t> keep;
  std::vector<double> wavelengths;
  for (std::size_t b = 0; b < cube.bands(); ++b) {
    if (!drop[b]) {
      keep.push_back(b);
      wavelengths.push_back(cube.wavelengths()[b]);
    }
  }
  if (keep.empty()) throw Error(ErrorCode::AllBandsRemoved, op, "mask removes every band");

  HyperCube out(cube.lines(), cube.samples(), keep.size(), std::move(wavelengths));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    out.pixels().col(static_cast<Eigen::Index>(j)) = cube.pixels().col(static_cast<Eigen::Index>(keep[j]));
  }
  return out;
}

NormalizeResult median_normalize(const HyperCube& cube) {
  NormalizeResult result{cube, {}};
  auto& px = result.cube.pixels();
  for (Eigen::Index k = 0; k < px.rows(); ++k) {
    auto row = px.row(k);
    const double m = median(std::span<const double>(row.data(), static_cast<std::size_t>(row.size())));
    if (!(m > 0.0)) {
      result.flagged.push_back(static_cast<std::size_t>(k));
      continue;
    }
    row /= m;
  }
  return result;
}

Spectrum reflectance_correct(const Spectrum& p, const Spectrum& g_p, const Spectrum& h) {
  constexpr const char* op = "reflectance_correct";
  require_same_axis(p, g_p, op);
  require_same_axis(p, h, op);
  if (p.values.empty()) throw Error(ErrorCode::AxisMismatch, op, "empty spectra");
  const double delta_g = median(g_p.values);
  if (!(delta_g > 0.0)) throw Error(ErrorCode::ZeroMedianPanel, op, "panel median must be positive");
  const double ratio = median(p.values) / delta_g;

  Spectrum out;
  out.wavelengths = p.wavelengths;
  out.values.resize(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    out.values[i] = p.values[i] - (g_p.values[i] - h.values[i]) * ratio;
  }
  return out;
}

HyperCube reflectance_correct(const HyperCube& image, const HyperCube& panel, const Spectrum& h) {
  constexpr const char* op = "reflectance_correct";
  if (panel.bands() != image.bands() || panel.wavelengths() != image.wavelengths() ||
      h.wavelengths != image.wavelengths()) {
    throw Error(ErrorCode::AxisMismatch, op, "image, panel and reference must share a wavelength axis");
  }
  if (panel.samples() != image.samples()) {
    throw Error(ErrorCode::ShapeMismatch, op, "panel sample count differs from image");
  }
  const bool pixelwise = panel.lines() == image.lines();

  // Column-mean panel spectra for the non-pixelwise case.
  PixelMatrix column_panel;
  if (!pixelwise) {
    column_panel = PixelMatrix::Zero(static_cast<Eigen::Index>(panel.samples()),
                                     static_cast<Eigen::Index>(panel.bands()));
    for (std::size_t l = 0; l < panel.lines(); ++l) {
      for (std::size_t s = 0; s < panel.samples(); ++s) {
        column_panel.row(static_cast<Eigen::Index>(s)) +=
            panel.pixels().row(static_cast<Eigen::Index>(l * panel.samples() + s));
      }
    }
    column_panel /= static_cast<double>(panel.lines());
  }

  HyperCube out = image;
  Spectrum p{image.wavelengths(), {}};
  Spectrum g{image.wavelengths(), {}};
  for (std::size_t l = 0; l < image.lines(); ++l) {
    for (std::size_t s = 0; s < image.samples(); ++s) {
      const auto k = static_cast<Eigen::Index>(l * image.samples() + s);
      const auto prow = image.pixels().row(k);
      p.values.assign(prow.data(), prow.data() + prow.size());
      if (pixelwise) {
        const auto grow = panel.pixels().row(k);
        g.values.assign(grow.data(), grow.data() + grow.size());
      } else {
        const auto grow = column_panel.row(static_cast<Eigen::Index>(s));
        g.values.assign(grow.data(), grow.data() + grow.size());
      }
      const auto corrected = reflectance_correct(p, g, h);
      for (std::size_t b = 0; b < image.bands(); ++b) out.at(l, s, b) = corrected.values[b];
    }
  }
  return out;
}

bool ResampleResult::any_extrapolated() const {
  return std::find(extrapolated.begin(), extrapolated.end(), true) != extrapolated.end();
}

ResampleResult resample_spectrum(const Spectrum& source, std::span<const double> target) {
  constexpr const char* op = "resample_spectrum";
  if (source.values.empty()) throw Error(ErrorCode::EmptySource, op, "source spectrum is empty");
  source.validate(op);
  for (std::size_t i = 1; i < target.size(); ++i) {
    if (!(target[i] > target[i - 1])) {
      throw Error(ErrorCode::NonMonotoneWavelengths, op, "target axis must be strictly increasing");
    }
  }

  const auto& x = source.wavelengths;
  const auto& y = source.values;
  ResampleResult result;
  result.spectrum.wavelengths.assign(target.begin(), target.end());
  result.spectrum.values.resize(target.size());
  result.extrapolated.assign(target.size(), false);
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double t = target[i];
    if (t < x.front() || t > x.back()) {
      result.spectrum.values[i] = t < x.front() ? y.front() : y.back();
      result.extrapolated[i] = true;
      continue;
    }
    // First source wavelength >= t.
    const auto it = std::lower_bound(x.begin(), x.end(), t);
    const auto j = static_cast<std::size_t>(it - x.begin());
    if (*it == t) {
      result.spectrum.values[i] = y[j];
      continue;
    }
    const double w = (t - x[j - 1]) / (x[j] - x[j - 1]);
    result.spectrum.values[i] = y[j - 1] + w * (y[j] - y[j - 1]);
  }
  return result;
}

Spectrum mean_spectrum(const HyperCube& cube, const AnnotationMask& mask,
                       std::span<const std::uint8_t> classes) {
  constexpr const char* op = "mean_spectrum";
  if (mask.lines != cube.lines() || mask.samples != cube.samples()) {
    throw Error(ErrorCode::ShapeMismatch, op, "mask shape differs from cube");
  }
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cube.bands()));
  std::size_t count = 0;
  for (std::size_t k = 0; k < mask.labels.size(); ++k) {
    if (std::find(classes.begin(), classes.end(), mask.labels[k]) == classes.end()) continue;
    sum += cube.pixels().row(static_cast<Eigen::Index>(k)).transpose();
    ++count;
  }
  if (count == 0) throw Error(ErrorCode::EmptyClass, op, "no pixel carries the requested class");
  return Spectrum::from_vector(sum / static_cast<double>(count), cube.wavelengths());
}

Spectrum mean_spectrum(const HyperCube& cube, const AnnotationMask& mask, std::uint8_t class_id) {
  return mean_spectrum(cube, mask, std::span<const std::uint8_t>(&class_id, 1));
}

PreprocessResult preprocess(const HyperCube& cube, const PreprocessOptions& options) {
  PreprocessResult result;
  if (options.band_mask) {
    result.applied_mask = *options.band_mask;
  } else if (cube.bands() == kDefaultSensorBands) {
    result.applied_mask = default_band_mask();
  }
  result.cube = result.applied_mask.removed.empty() ? cube : remove_bands(cube, result.applied_mask);
  if (options.normalize) {
    auto normalized = median_normalize(result.cube);
    result.cube = std::move(normalized.cube);
    result.flagged_pixels = std::move(normalized.flagged);
  }
  return result;
}

}  // namespace hsd
