#include "hsdetect/cube_io.hpp"

#include "hsdetect/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

namespace hsd {
namespace {

constexpr const char* kHeaderOp = "parse_envi_header";

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n\v\f");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n\v\f");
  return s.substr(first, last - first + 1);
}

// Lower-case and collapse runs of whitespace: "Data   Type" -> "data type".
std::string normalize_key(std::string_view key) {
  std::string out;
  bool pending_space = false;
  for (char c : trim(key)) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  T value{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

std::size_t parse_size(std::string_view key, std::string_view value, const char* op) {
  const auto v = parse_number<long long>(value);
  if (!v || *v < 0) {
    throw Error(ErrorCode::InvalidValue, op,
                "key '" + std::string(key) + "' expects a non-negative integer, got '" +
                    std::string(value) + "'");
  }
  return static_cast<std::size_t>(*v);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(s.substr(start));
      return out;
    }
    out.push_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::vector<double> parse_number_list(std::string_view key, std::string_view raw) {
  // raw includes the braces.
  auto inner = trim(raw);
  inner.remove_prefix(1);
  inner.remove_suffix(1);
  std::vector<double> values;
  if (trim(inner).empty()) return values;
  for (auto item : split(inner, ',')) {
    const auto v = parse_number<double>(item);
    if (!v) {
      throw Error(ErrorCode::InvalidValue, kHeaderOp,
                  "non-numeric entry '" + std::string(trim(item)) + "' in list '" +
                      std::string(key) + "'");
    }
    values.push_back(*v);
  }
  return values;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

bool is_known_data_type(int code) {
  switch (code) {
    case 1: case 2: case 3: case 4: case 5: case 6: case 9: case 12: case 13: case 14: case 15:
      return true;
    default:
      return false;
  }
}

// Element offset of (line, sample, band) inside the raw payload.
std::size_t element_index(Interleave il, std::size_t lines, std::size_t samples,
                          std::size_t bands, std::size_t l, std::size_t s, std::size_t b) {
  switch (il) {
    case Interleave::BSQ: return (b * lines + l) * samples + s;
    case Interleave::BIL: return (l * bands + b) * samples + s;
    case Interleave::BIP: return (l * samples + s) * bands + b;
  }
  return 0;
}

template <typename T>
T load(const std::byte* p, bool swap) {
  std::array<std::byte, sizeof(T)> buf;
  std::memcpy(buf.data(), p, sizeof(T));
  if (swap) std::reverse(buf.begin(), buf.end());
  return std::bit_cast<T>(buf);
}

template <typename T>
void store(std::byte* p, T value, bool swap) {
  auto buf = std::bit_cast<std::array<std::byte, sizeof(T)>>(value);
  if (swap) std::reverse(buf.begin(), buf.end());
  std::memcpy(p, buf.data(), sizeof(T));
}

bool needs_swap(ByteOrder order) {
  return (order == ByteOrder::Big) != (std::endian::native == std::endian::big);
}

std::uint8_t max_label(const ClassRoster& roster) {
  return roster.empty() ? kMaxClassLabel : roster.rbegin()->first;
}

std::uint8_t checked_label(long long v, const ClassRoster& roster, const char* op) {
  if (v < 0 || v > 255) {
    throw Error(ErrorCode::LabelOutOfRange, op, "label " + std::to_string(v) + " out of range");
  }
  const auto label = static_cast<std::uint8_t>(v);
  if (label > max_label(roster) || (!roster.empty() && !roster.contains(label))) {
    throw Error(ErrorCode::LabelOutOfRange, op,
                "label " + std::to_string(v) + " is not in the class roster (max " +
                    std::to_string(max_label(roster)) + ")");
  }
  return label;
}

}  // namespace

std::string_view to_string(Interleave interleave) noexcept {
  switch (interleave) {
    case Interleave::BSQ: return "bsq";
    case Interleave::BIL: return "bil";
    case Interleave::BIP: return "bip";
  }
  return "?";
}

std::string_view to_string(DataType type) noexcept {
  switch (type) {
    case DataType::Byte: return "uint8";
    case DataType::Int16: return "int16";
    case DataType::Int32: return "int32";
    case DataType::Float32: return "float32";
    case DataType::Float64: return "float64";
    case DataType::Complex64: return "complex64";
    case DataType::Complex128: return "complex128";
    case DataType::UInt16: return "uint16";
    case DataType::UInt32: return "uint32";
    case DataType::Int64: return "int64";
    case DataType::UInt64: return "uint64";
  }
  return "?";
}

std::size_t decodable_size(DataType type) noexcept {
  switch (type) {
    case DataType::UInt16: return 2;
    case DataType::Float32: return 4;
    case DataType::Float64: return 8;
    default: return 0;
  }
}

std::size_t EnviHeader::expected_file_size() const {
  return header_offset + samples * lines * bands * decodable_size(data_type);
}

const std::string* EnviHeader::find_extra(std::string_view key) const {
  for (const auto& [k, v] : extra) {
    if (k == key) return &v;
  }
  return nullptr;
}

EnviHeader parse_envi_header(std::string_view text) {
  // Strip a UTF-8 BOM, then require the magic token.
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  const auto body_start = text.find_first_not_of(" \t\r\n");
  if (body_start == std::string_view::npos || text.substr(body_start, 4) != "ENVI" ||
      (body_start + 4 < text.size() && !std::isspace(static_cast<unsigned char>(text[body_start + 4])))) {
    throw Error(ErrorCode::MissingMagic, kHeaderOp, "header does not start with 'ENVI'");
  }
  text.remove_prefix(body_start + 4);

  // Collect key/value pairs; brace values may span lines.
  std::vector<std::pair<std::string, std::string>> entries;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    auto line = trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    if (line.empty() || line.front() == ';') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      if (line.find_first_of("{}") != std::string_view::npos) {
        throw Error(ErrorCode::MalformedList, kHeaderOp,
                    "brace outside a key = value entry: '" + std::string(line) + "'");
      }
      continue;  // free text lines are ignored
    }
    std::string key = normalize_key(line.substr(0, eq));
    std::string_view value = trim(line.substr(eq + 1));
    std::string raw;
    if (!value.empty() && value.front() == '{') {
      // Accumulate until the closing brace; the raw text is kept verbatim.
      raw.assign(value);
      while (raw.find('}') == std::string::npos) {
        if (pos >= text.size()) {
          throw Error(ErrorCode::MalformedList, kHeaderOp, "unterminated list for key '" + key + "'");
        }
        auto next_eol = text.find('\n', pos);
        if (next_eol == std::string_view::npos) next_eol = text.size();
        raw.push_back('\n');
        raw.append(trim(text.substr(pos, next_eol - pos)));
        pos = next_eol + 1;
      }
      const auto close = raw.find('}');
      if (!trim(std::string_view(raw).substr(close + 1)).empty() ||
          std::count(raw.begin(), raw.end(), '{') != 1) {
        throw Error(ErrorCode::MalformedList, kHeaderOp, "malformed list for key '" + key + "'");
      }
      raw = std::string(trim(raw));
    } else {
      if (value.find_first_of("{}") != std::string_view::npos) {
        throw Error(ErrorCode::MalformedList, kHeaderOp, "unbalanced brace in key '" + key + "'");
      }
      raw.assign(value);
    }
    entries.emplace_back(std::move(key), std::move(raw));
  }

  EnviHeader h;
  bool have_samples = false, have_lines = false, have_bands = false, have_interleave = false,
       have_type = false;
  std::optional<std::string> wavelength_raw;
  double wavelength_factor = 1.0;

  for (auto& [key, value] : entries) {
    if (key == "samples") {
      h.samples = parse_size(key, value, kHeaderOp);
      have_samples = true;
    } else if (key == "lines") {
      h.lines = parse_size(key, value, kHeaderOp);
      have_lines = true;
    } else if (key == "bands") {
      h.bands = parse_size(key, value, kHeaderOp);
      have_bands = true;
    } else if (key == "header offset") {
      h.header_offset = parse_size(key, value, kHeaderOp);
    } else if (key == "interleave") {
      const auto v = lower(trim(value));
      if (v == "bsq") h.interleave = Interleave::BSQ;
      else if (v == "bil") h.interleave = Interleave::BIL;
      else if (v == "bip") h.interleave = Interleave::BIP;
      else throw Error(ErrorCode::InvalidValue, kHeaderOp, "unknown interleave '" + value + "'");
      have_interleave = true;
    } else if (key == "data type") {
      const auto code = parse_number<int>(value);
      if (!code || !is_known_data_type(*code)) {
        throw Error(ErrorCode::UnsupportedDataType, kHeaderOp, "unknown data type '" + value + "'");
      }
      h.data_type = static_cast<DataType>(*code);
      have_type = true;
    } else if (key == "byte order") {
      const auto order = parse_number<int>(value);
      if (!order || (*order != 0 && *order != 1)) {
        throw Error(ErrorCode::InvalidValue, kHeaderOp, "byte order must be 0 or 1");
      }
      h.byte_order = static_cast<ByteOrder>(*order);
    } else if (key == "wavelength") {
      if (value.empty() || value.front() != '{') {
        throw Error(ErrorCode::MalformedList, kHeaderOp, "wavelength must be a brace list");
      }
      wavelength_raw = value;
    } else if (key == "wavelength units") {
      const auto units = lower(trim(value));
      if (units == "micrometers" || units == "um" || units == "microns") wavelength_factor = 1000.0;
      else if (units == "nanometers" || units == "nm") wavelength_factor = 1.0;
      else h.extra.emplace_back(key, value);
    } else if (key == "reflectance scale factor") {
      const auto scale = parse_number<double>(value);
      if (!scale || !(*scale > 0.0)) {
        throw Error(ErrorCode::InvalidValue, kHeaderOp, "reflectance scale factor must be positive");
      }
      h.reflectance_scale = *scale;
    } else {
      h.extra.emplace_back(key, value);
    }
  }

  const std::pair<bool, const char*> required[] = {{have_samples, "samples"},
                                                   {have_lines, "lines"},
                                                   {have_bands, "bands"},
                                                   {have_interleave, "interleave"},
                                                   {have_type, "data type"}};
  for (const auto& [present, name] : required) {
    if (!present) throw Error(ErrorCode::MissingRequiredKey, kHeaderOp, name);
  }
  if (h.samples == 0 || h.lines == 0 || h.bands == 0) {
    throw Error(ErrorCode::InvalidValue, kHeaderOp, "samples, lines and bands must be positive");
  }

  if (wavelength_raw) {
    h.wavelengths = parse_number_list("wavelength", *wavelength_raw);
    if (h.wavelengths.size() != h.bands) {
      throw Error(ErrorCode::LengthMismatch, kHeaderOp,
                  "wavelength list has " + std::to_string(h.wavelengths.size()) +
                      " entries, bands = " + std::to_string(h.bands));
    }
    for (auto& w : h.wavelengths) w *= wavelength_factor;
    for (std::size_t i = 1; i < h.wavelengths.size(); ++i) {
      if (!(h.wavelengths[i] > h.wavelengths[i - 1])) {
        throw Error(ErrorCode::NonMonotoneWavelengths, kHeaderOp,
                    "wavelengths must be strictly increasing");
      }
    }
  }
  return h;
}

std::string format_envi_header(const EnviHeader& h) {
  std::ostringstream out;
  out << "ENVI\n";
  out << "samples = " << h.samples << "\n";
  out << "lines = " << h.lines << "\n";
  out << "bands = " << h.bands << "\n";
  out << "header offset = " << h.header_offset << "\n";
  out << "data type = " << static_cast<int>(h.data_type) << "\n";
  out << "interleave = " << to_string(h.interleave) << "\n";
  out << "byte order = " << static_cast<int>(h.byte_order) << "\n";
  if (h.reflectance_scale) out << "reflectance scale factor = " << format_double(*h.reflectance_scale) << "\n";
  if (!h.wavelengths.empty()) {
    out << "wavelength units = Nanometers\n";
    out << "wavelength = {";
    for (std::size_t i = 0; i < h.wavelengths.size(); ++i) {
      out << (i == 0 ? "" : i % 8 == 0 ? ",\n " : ", ") << format_double(h.wavelengths[i]);
    }
    out << "}\n";
  }
  for (const auto& [key, value] : h.extra) out << key << " = " << value << "\n";
  return out.str();
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "read_text_file", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::byte> read_binary_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw Error(ErrorCode::IoError, "read_binary_file", "cannot open " + path.string());
  const auto size = static_cast<std::size_t>(in.tellg());
  std::vector<std::byte> bytes(size);
  in.seekg(0);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(size));
  if (!in) throw Error(ErrorCode::IoError, "read_binary_file", "short read on " + path.string());
  return bytes;
}

EnviHeader read_envi_header(const std::filesystem::path& header_path) {
  return parse_envi_header(read_text_file(header_path));
}

void write_envi_header(const std::filesystem::path& header_path, const EnviHeader& header) {
  std::ofstream out(header_path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "write_envi_header", "cannot create " + header_path.string());
  out << format_envi_header(header);
}

HyperCube read_cube(const EnviHeader& header, std::span<const std::byte> raw) {
  constexpr const char* op = "read_cube";
  const std::size_t element = decodable_size(header.data_type);
  if (element == 0) {
    throw Error(ErrorCode::UnsupportedDataType, op,
                "data type " + std::string(to_string(header.data_type)) + " is not decodable");
  }
  if (raw.size() != header.expected_file_size()) {
    throw Error(ErrorCode::SizeMismatch, op,
                "expected " + std::to_string(header.expected_file_size()) + " bytes, got " +
                    std::to_string(raw.size()));
  }
  HyperCube cube(header.lines, header.samples, header.bands, header.wavelengths);
  const bool swap = needs_swap(header.byte_order);
  const std::byte* payload = raw.data() + header.header_offset;
  const double scale = header.reflectance_scale.value_or(1.0);

  for (std::size_t l = 0; l < header.lines; ++l) {
    for (std::size_t s = 0; s < header.samples; ++s) {
      for (std::size_t b = 0; b < header.bands; ++b) {
        const std::byte* p =
            payload + element * element_index(header.interleave, header.lines, header.samples,
                                              header.bands, l, s, b);
        double v = 0.0;
        switch (header.data_type) {
          case DataType::UInt16: v = load<std::uint16_t>(p, swap) / scale; break;
          case DataType::Float32: v = load<float>(p, swap); break;
          case DataType::Float64: v = load<double>(p, swap); break;
          default: break;
        }
        if (!std::isfinite(v)) {
          throw Error(ErrorCode::InvalidValue, op,
                      "non-finite value at line " + std::to_string(l) + ", sample " +
                          std::to_string(s) + ", band " + std::to_string(b));
        }
        cube.at(l, s, b) = v;
      }
    }
  }
  return cube;
}

std::filesystem::path find_data_file(const std::filesystem::path& header_path) {
  auto stem = header_path;
  if (lower(stem.extension().string()) == ".hdr") stem.replace_extension();
  if (std::filesystem::is_regular_file(stem)) return stem;
  for (const char* ext : {".raw", ".img", ".dat", ".bsq", ".bil", ".bip", ".float", ".bin"}) {
    auto candidate = stem;
    candidate += ext;
    if (std::filesystem::is_regular_file(candidate)) return candidate;
  }
  throw Error(ErrorCode::IoError, "read_cube", "no data file found next to " + header_path.string());
}

HyperCube read_cube(const std::filesystem::path& header_path) {
  const auto header = read_envi_header(header_path);
  const auto raw = read_binary_file(find_data_file(header_path));
  return read_cube(header, raw);
}

EnviHeader make_header(const HyperCube& cube, Interleave interleave, DataType type,
                       ByteOrder order) {
  EnviHeader h;
  h.samples = cube.samples();
  h.lines = cube.lines();
  h.bands = cube.bands();
  h.interleave = interleave;
  h.data_type = type;
  h.byte_order = order;
  h.wavelengths = cube.wavelengths();
  return h;
}

std::vector<std::byte> encode_cube(const HyperCube& cube, const EnviHeader& header) {
  const std::size_t element = decodable_size(header.data_type);
  if (element == 0) {
    throw Error(ErrorCode::UnsupportedDataType, "encode_cube",
                std::string(to_string(header.data_type)));
  }
  const std::size_t L = cube.lines(), S = cube.samples(), B = cube.bands();
  std::vector<std::byte> raw(header.header_offset + L * S * B * element);
  const bool swap = needs_swap(header.byte_order);
  const double scale = header.reflectance_scale.value_or(1.0);
  std::byte* payload = raw.data() + header.header_offset;
  for (std::size_t l = 0; l < L; ++l) {
    for (std::size_t s = 0; s < S; ++s) {
      for (std::size_t b = 0; b < B; ++b) {
        std::byte* p = payload + element * element_index(header.interleave, L, S, B, l, s, b);
        const double v = cube.at(l, s, b);
        switch (header.data_type) {
          case DataType::UInt16:
            store<std::uint16_t>(p, static_cast<std::uint16_t>(std::clamp(std::round(v * scale), 0.0, 65535.0)), swap);
            break;
          case DataType::Float32: store<float>(p, static_cast<float>(v), swap); break;
          case DataType::Float64: store<double>(p, v, swap); break;
          default: break;
        }
      }
    }
  }
  return raw;
}

void write_cube(const std::filesystem::path& header_path, const HyperCube& cube,
                const EnviHeader& header) {
  EnviHeader h = header;
  h.samples = cube.samples();
  h.lines = cube.lines();
  h.bands = cube.bands();
  write_envi_header(header_path, h);
  auto data_path = header_path;
  data_path.replace_extension(".raw");
  const auto raw = encode_cube(cube, h);
  std::ofstream out(data_path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "write_cube", "cannot create " + data_path.string());
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

AnnotationMask parse_annotation_csv(std::string_view text, std::size_t lines, std::size_t samples,
                                    const ClassRoster& roster) {
  constexpr const char* op = "read_annotation";
  AnnotationMask mask{lines, samples, {}};
  mask.labels.reserve(lines * samples);
  std::size_t row = 0;
  for (auto line : split(text, '\n')) {
    line = trim(line);
    if (line.empty()) continue;
    if (row >= lines) {
      throw Error(ErrorCode::ShapeMismatch, op,
                  "more than " + std::to_string(lines) + " rows in annotation");
    }
    const auto cells = split(line, ',');
    if (cells.size() != samples) {
      throw Error(ErrorCode::ShapeMismatch, op,
                  "row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                      " columns, expected " + std::to_string(samples));
    }
    for (auto cell : cells) {
      const auto v = parse_number<long long>(cell);
      if (!v) {
        throw Error(ErrorCode::InvalidValue, op, "non-integer label '" + std::string(trim(cell)) + "'");
      }
      mask.labels.push_back(checked_label(*v, roster, op));
    }
    ++row;
  }
  if (row != lines) {
    throw Error(ErrorCode::ShapeMismatch, op,
                "annotation has " + std::to_string(row) + " rows, expected " + std::to_string(lines));
  }
  return mask;
}

AnnotationMask parse_annotation_u8(std::span<const std::byte> raw, std::size_t lines,
                                   std::size_t samples, const ClassRoster& roster) {
  constexpr const char* op = "read_annotation";
  if (raw.size() != lines * samples) {
    throw Error(ErrorCode::ShapeMismatch, op,
                "annotation has " + std::to_string(raw.size()) + " bytes, expected " +
                    std::to_string(lines * samples));
  }
  AnnotationMask mask{lines, samples, {}};
  mask.labels.reserve(raw.size());
  for (auto b : raw) mask.labels.push_back(checked_label(std::to_integer<int>(b), roster, op));
  return mask;
}

AnnotationMask read_annotation(const std::filesystem::path& path, std::size_t lines,
                               std::size_t samples, const ClassRoster& roster) {
  if (lower(path.extension().string()) == ".csv") {
    return parse_annotation_csv(read_text_file(path), lines, samples, roster);
  }
  return parse_annotation_u8(read_binary_file(path), lines, samples, roster);
}

void write_annotation_csv(const std::filesystem::path& path, const AnnotationMask& mask) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "write_annotation_csv", "cannot create " + path.string());
  for (std::size_t l = 0; l < mask.lines; ++l) {
    for (std::size_t s = 0; s < mask.samples; ++s) {
      out << (s ? "," : "") << static_cast<int>(mask.at(l, s));
    }
    out << "\n";
  }
}

const LibraryEntry* SpectralLibrary::find(int index) const {
  for (const auto& e : entries) {
    if (e.index == index) return &e;
  }
  return nullptr;
}

SpectralLibrary parse_spectral_library(std::string_view text) {
  constexpr const char* op = "read_spectral_library";
  std::vector<std::string_view> rows;
  for (auto line : split(text, '\n')) {
    line = trim(line);
    if (!line.empty()) rows.push_back(line);
  }
  if (rows.empty()) throw Error(ErrorCode::EmptyLibrary, op, "no header row");
  const auto header = split(rows.front(), ',');
  if (header.size() < 2 || rows.size() < 2) {
    throw Error(ErrorCode::EmptyLibrary, op, "library needs a wavelength column, one spectrum column and data rows");
  }

  SpectralLibrary lib;
  for (std::size_t c = 1; c < header.size(); ++c) {
    const auto label = trim(header[c]);
    const auto colon = label.find(':');
    const auto index = parse_number<int>(label.substr(0, colon));
    if (!index) {
      throw Error(ErrorCode::InvalidValue, op, "column label '" + std::string(label) + "' must start with an integer index");
    }
    LibraryEntry entry;
    entry.index = *index;
    if (colon != std::string_view::npos) entry.age_label = std::string(trim(label.substr(colon + 1)));
    lib.entries.push_back(std::move(entry));
  }

  std::vector<double> wavelengths;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto cells = split(rows[r], ',');
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::InvalidValue, op, "row " + std::to_string(r) + " has " +
                                                   std::to_string(cells.size()) + " cells, expected " +
                                                   std::to_string(header.size()));
    }
    const auto wl = parse_number<double>(cells[0]);
    if (!wl) throw Error(ErrorCode::InvalidValue, op, "bad wavelength '" + std::string(cells[0]) + "'");
    if (!wavelengths.empty() && !(*wl > wavelengths.back())) {
      throw Error(ErrorCode::NonMonotoneWavelengths, op,
                  "wavelength " + format_double(*wl) + " after " + format_double(wavelengths.back()));
    }
    wavelengths.push_back(*wl);
    for (std::size_t c = 1; c < cells.size(); ++c) {
      const auto v = parse_number<double>(cells[c]);
      if (!v || !std::isfinite(*v) || *v < 0.0) {
        throw Error(ErrorCode::InvalidValue, op,
                    "reflectance '" + std::string(trim(cells[c])) + "' must be a finite value >= 0");
      }
      lib.entries[c - 1].spectrum.values.push_back(*v);
    }
  }
  for (auto& e : lib.entries) e.spectrum.wavelengths = wavelengths;
  return lib;
}

SpectralLibrary read_spectral_library(const std::filesystem::path& path) {
  return parse_spectral_library(read_text_file(path));
}

std::string format_spectral_library(const SpectralLibrary& library) {
  std::ostringstream out;
  out << "wavelength";
  for (const auto& e : library.entries) {
    out << "," << e.index;
    if (!e.age_label.empty()) out << ":" << e.age_label;
  }
  out << "\n";
  if (library.entries.empty()) return out.str();
  const auto& axis = library.entries.front().spectrum.wavelengths;
  for (std::size_t i = 0; i < axis.size(); ++i) {
    out << format_double(axis[i]);
    for (const auto& e : library.entries) out << "," << format_double(e.spectrum.values.at(i));
    out << "\n";
  }
  return out.str();
}

}  // namespace hsd
