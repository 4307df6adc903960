#pragma once

#include "hsdetect/types.hpp"

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hsd {

enum class Interleave { BSQ, BIL, BIP };

/// ENVI "data type" codes. Only UInt16, Float32 and Float64 can be decoded;
/// the rest are accepted by the header parser so headers can still be inspected.
enum class DataType : int {
  Byte = 1,
  Int16 = 2,
  Int32 = 3,
  Float32 = 4,
  Float64 = 5,
  Complex64 = 6,
  Complex128 = 9,
  UInt16 = 12,
  UInt32 = 13,
  Int64 = 14,
  UInt64 = 15,
};

enum class ByteOrder { Little = 0, Big = 1 };

std::string_view to_string(Interleave interleave) noexcept;
std::string_view to_string(DataType type) noexcept;
/// Size in bytes of one element, 0 for types the decoder does not support.
std::size_t decodable_size(DataType type) noexcept;

struct EnviHeader {
  std::size_t samples = 0;
  std::size_t lines = 0;
  std::size_t bands = 0;
  Interleave interleave = Interleave::BSQ;
  DataType data_type = DataType::Float32;
  ByteOrder byte_order = ByteOrder::Little;
  std::size_t header_offset = 0;
  std::vector<double> wavelengths;  ///< nm; empty when the header has none
  std::optional<double> reflectance_scale;
  /// Keys the parser does not interpret, normalized key -> raw value text, in file order.
  std::vector<std::pair<std::string, std::string>> extra;

  /// header_offset + samples * lines * bands * element size.
  std::size_t expected_file_size() const;
  const std::string* find_extra(std::string_view key) const;

  bool operator==(const EnviHeader&) const = default;
};

EnviHeader parse_envi_header(std::string_view text);
/// Inverse of parse_envi_header: parse(format(h)) == h.
std::string format_envi_header(const EnviHeader& header);
EnviHeader read_envi_header(const std::filesystem::path& header_path);
void write_envi_header(const std::filesystem::path& header_path, const EnviHeader& header);

/// Decode a raw cube. `raw` is the whole data file including any header_offset bytes.
HyperCube read_cube(const EnviHeader& header, std::span<const std::byte> raw);
/// Read header and the companion data file (same stem; .raw/.img/.dat/... or no extension).
HyperCube read_cube(const std::filesystem::path& header_path);
std::filesystem::path find_data_file(const std::filesystem::path& header_path);

/// Encode `cube` per the layout fields of `header` (dimensions are taken from the cube).
/// UInt16 output multiplies by reflectance_scale when present and rounds.
std::vector<std::byte> encode_cube(const HyperCube& cube, const EnviHeader& header);
/// Header describing `cube` with the given layout and the cube's wavelength axis.
EnviHeader make_header(const HyperCube& cube, Interleave interleave = Interleave::BIP,
                       DataType type = DataType::Float32, ByteOrder order = ByteOrder::Little);
/// Writes `<stem>.hdr` and `<stem>.raw`.
void write_cube(const std::filesystem::path& header_path, const HyperCube& cube,
                const EnviHeader& header);

AnnotationMask parse_annotation_csv(std::string_view text, std::size_t lines, std::size_t samples,
                                    const ClassRoster& roster = default_class_roster());
AnnotationMask parse_annotation_u8(std::span<const std::byte> raw, std::size_t lines,
                                   std::size_t samples,
                                   const ClassRoster& roster = default_class_roster());
/// `.csv` files are parsed as text, anything else as flat row-major u8.
AnnotationMask read_annotation(const std::filesystem::path& path, std::size_t lines,
                               std::size_t samples,
                               const ClassRoster& roster = default_class_roster());
void write_annotation_csv(const std::filesystem::path& path, const AnnotationMask& mask);

struct LibraryEntry {
  int index = 0;
  std::string age_label;
  Spectrum spectrum;
};

struct SpectralLibrary {
  std::vector<LibraryEntry> entries;

  const LibraryEntry* find(int index) const;
};

/// CSV: header row `wavelength,<index>[:<age>],...`, then one row per wavelength.
SpectralLibrary parse_spectral_library(std::string_view text);
SpectralLibrary read_spectral_library(const std::filesystem::path& path);
std::string format_spectral_library(const SpectralLibrary& library);

std::string read_text_file(const std::filesystem::path& path);
std::vector<std::byte> read_binary_file(const std::filesystem::path& path);

}  // namespace hsd
