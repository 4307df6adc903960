#include "hsdetect/types.hpp"

#include "hsdetect/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hsd {

Spectrum Spectrum::from_vector(const Eigen::VectorXd& v, std::vector<double> wavelengths) {
  Spectrum s;
  s.values.assign(v.data(), v.data() + v.size());
  s.wavelengths = std::move(wavelengths);
  return s;
}

void Spectrum::validate(const char* operation) const {
  if (wavelengths.size() != values.size()) {
    throw Error(ErrorCode::AxisMismatch, operation,
                "wavelength count " + std::to_string(wavelengths.size()) + " != value count " +
                    std::to_string(values.size()));
  }
  for (std::size_t i = 1; i < wavelengths.size(); ++i) {
    if (!(wavelengths[i] > wavelengths[i - 1])) {
      throw Error(ErrorCode::NonMonotoneWavelengths, operation,
                  "wavelengths must be strictly increasing at index " + std::to_string(i));
    }
  }
  if (!std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); })) {
    throw Error(ErrorCode::InvalidValue, operation, "spectrum contains non-finite values");
  }
}

HyperCube::HyperCube(std::size_t lines, std::size_t samples, std::size_t bands,
                     std::vector<double> wavelengths)
    : lines_(lines),
      samples_(samples),
      bands_(bands),
      data_(PixelMatrix::Zero(static_cast<Eigen::Index>(lines * samples),
                              static_cast<Eigen::Index>(bands))) {
  if (wavelengths.empty()) {
    // No wavelength axis supplied: fall back to band indices.
    wavelengths.resize(bands);
    std::iota(wavelengths.begin(), wavelengths.end(), 0.0);
  }
  set_wavelengths(std::move(wavelengths));
}

void HyperCube::set_wavelengths(std::vector<double> wavelengths) {
  if (wavelengths.size() != bands_) {
    throw Error(ErrorCode::LengthMismatch, "HyperCube",
                "wavelength count " + std::to_string(wavelengths.size()) + " != band count " +
                    std::to_string(bands_));
  }
  wavelengths_ = std::move(wavelengths);
}

Spectrum HyperCube::pixel_spectrum(std::size_t line, std::size_t sample) const {
  Spectrum s;
  s.wavelengths = wavelengths_;
  const auto row = data_.row(static_cast<Eigen::Index>(line * samples_ + sample));
  s.values.assign(row.data(), row.data() + row.size());
  return s;
}

bool HyperCube::operator==(const HyperCube& other) const {
  return lines_ == other.lines_ && samples_ == other.samples_ && bands_ == other.bands_ &&
         wavelengths_ == other.wavelengths_ && data_ == other.data_;
}

std::size_t AnnotationMask::count(std::uint8_t label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

const ClassRoster& default_class_roster() {
  static const ClassRoster roster{
      {0, "background"},        {1, "blood"},         {2, "ketchup"},
      {3, "artificial blood"},  {4, "beetroot juice"}, {5, "poster paint"},
      {6, "tomato concentrate"}, {7, "acrylic paint"}, {8, "uncertain blood"},
  };
  return roster;
}

}  // namespace hsd
