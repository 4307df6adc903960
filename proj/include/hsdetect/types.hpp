#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace hsd {

/// Pixels stacked as rows (pixel index = line * samples + sample), bands as columns.
using PixelMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// A reflectance vector on a wavelength axis (nm).
struct Spectrum {
  std::vector<double> wavelengths;
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  Eigen::Map<const Eigen::VectorXd> vec() const {
    return {values.data(), static_cast<Eigen::Index>(values.size())};
  }
  static Spectrum from_vector(const Eigen::VectorXd& v, std::vector<double> wavelengths);

  /// Throws AxisMismatch / NonMonotoneWavelengths / InvalidValue on broken invariants.
  void validate(const char* operation) const;
};

/// Lines x samples x bands cube. Stored band-interleaved-by-pixel in a
/// PixelMatrix so that detector code can work on pixel rows directly.
class HyperCube {
 public:
  HyperCube() = default;
  HyperCube(std::size_t lines, std::size_t samples, std::size_t bands,
            std::vector<double> wavelengths = {});

  std::size_t lines() const noexcept { return lines_; }
  std::size_t samples() const noexcept { return samples_; }
  std::size_t bands() const noexcept { return bands_; }
  std::size_t pixel_count() const noexcept { return lines_ * samples_; }

  double& at(std::size_t line, std::size_t sample, std::size_t band) {
    return data_(static_cast<Eigen::Index>(line * samples_ + sample),
                 static_cast<Eigen::Index>(band));
  }
  double at(std::size_t line, std::size_t sample, std::size_t band) const {
    return data_(static_cast<Eigen::Index>(line * samples_ + sample),
                 static_cast<Eigen::Index>(band));
  }

  const PixelMatrix& pixels() const noexcept { return data_; }
  PixelMatrix& pixels() noexcept { return data_; }

  const std::vector<double>& wavelengths() const noexcept { return wavelengths_; }
  void set_wavelengths(std::vector<double> wavelengths);

  Spectrum pixel_spectrum(std::size_t line, std::size_t sample) const;

  bool operator==(const HyperCube& other) const;

 private:
  std::size_t lines_ = 0;
  std::size_t samples_ = 0;
  std::size_t bands_ = 0;
  PixelMatrix data_;
  std::vector<double> wavelengths_;
};

/// Per-pixel class labels. Default roster: 0 background, 1 blood, 2 ketchup,
/// 3 artificial blood, 4 beetroot juice, 5 poster paint, 6 tomato concentrate,
/// 7 acrylic paint, 8 uncertain blood.
struct AnnotationMask {
  std::size_t lines = 0;
  std::size_t samples = 0;
  std::vector<std::uint8_t> labels;

  std::uint8_t at(std::size_t line, std::size_t sample) const { return labels[line * samples + sample]; }
  std::size_t count(std::uint8_t label) const;
};

inline constexpr std::uint8_t kBackgroundClass = 0;
inline constexpr std::uint8_t kBloodClass = 1;
inline constexpr std::uint8_t kUncertainBloodClass = 8;
inline constexpr std::uint8_t kMaxClassLabel = 8;

/// Label -> name table; overridable for datasets with another class roster.
using ClassRoster = std::map<std::uint8_t, std::string>;
const ClassRoster& default_class_roster();

/// Per-pixel detection statistic, row-major (line, sample).
struct ScoreMap {
  std::size_t lines = 0;
  std::size_t samples = 0;
  std::vector<double> scores;

  double at(std::size_t line, std::size_t sample) const { return scores[line * samples + sample]; }
};

}  // namespace hsd
