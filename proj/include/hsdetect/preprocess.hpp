#pragma once

#include "hsdetect/types.hpp"

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hsd {

/// Sorted, de-duplicated set of 0-based band indices to drop.
struct BandMask {
  std::vector<std::size_t> removed;

  /// Parses "0-4,48-50,121-127" (inclusive ranges and singletons). Empty text or
  /// "none" gives an empty mask. Indices are not range-checked here.
  static BandMask parse(std::string_view text);
  std::string to_string() const;

  bool operator==(const BandMask&) const = default;
};

/// Noisy-band mask for the 128-band camera: {0..4} u {48,49,50} u {121..127},
/// leaving 113 bands.
BandMask default_band_mask();
inline constexpr std::size_t kDefaultSensorBands = 128;

/// Median of a vector; even lengths average the two central order statistics.
double median(std::span<const double> values);

HyperCube remove_bands(const HyperCube& cube, const BandMask& mask);

struct NormalizeResult {
  HyperCube cube;
  /// Pixel indices (line * samples + sample) whose median was <= 0; left unnormalized.
  std::vector<std::size_t> flagged;
};

/// Divides each pixel by its median across bands.
NormalizeResult median_normalize(const HyperCube& cube);

/// Panel-based artefact correction: p - (g_p - h) * median(p) / median(g_p).
Spectrum reflectance_correct(const Spectrum& p, const Spectrum& g_p, const Spectrum& h);

/// Applies the spectrum correction to every pixel. When `panel` has the same shape
/// as `image`, pixels are paired one-to-one; when it only matches the sample count,
/// each column uses the mean panel spectrum of that column.
HyperCube reflectance_correct(const HyperCube& image, const HyperCube& panel, const Spectrum& h);

struct ResampleResult {
  Spectrum spectrum;
  /// True where the target fell outside the source range and was clamped.
  std::vector<bool> extrapolated;

  bool any_extrapolated() const;
};

/// Piecewise-linear interpolation onto `target_wavelengths`, clamping outside the source range.
ResampleResult resample_spectrum(const Spectrum& source, std::span<const double> target_wavelengths);

/// Mean spectrum over pixels whose label is in `classes`.
Spectrum mean_spectrum(const HyperCube& cube, const AnnotationMask& mask,
                       std::span<const std::uint8_t> classes);
Spectrum mean_spectrum(const HyperCube& cube, const AnnotationMask& mask, std::uint8_t class_id);

struct PreprocessOptions {
  /// Bands to drop; nullopt selects default_band_mask() for 128-band cubes and no removal otherwise.
  std::optional<BandMask> band_mask;
  bool normalize = true;
};

struct PreprocessResult {
  HyperCube cube;
  BandMask applied_mask;
  std::vector<std::size_t> flagged_pixels;
};

/// remove_bands followed by median_normalize.
PreprocessResult preprocess(const HyperCube& cube, const PreprocessOptions& options = {});

}  // namespace hsd
