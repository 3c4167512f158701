#include "mctsteg/media.hpp"

#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mctsteg::media {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kCostMagic = "COST1";
constexpr std::string_view kPixfMagic = "PIXF1";
constexpr std::string_view kModMagic = "MODM1";
constexpr std::size_t kHeaderBytes = 5 + 4 + 4;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}

std::uint32_t get_u32(std::string_view in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

void put_f32(std::string& out, double v) { put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v))); }

float get_f32(std::string_view in, std::size_t at) { return std::bit_cast<float>(get_u32(in, at)); }

struct BinaryHeader {
  int width;
  int height;
};

BinaryHeader read_binary_header(std::string_view bytes, std::string_view magic, std::size_t bytes_per_element,
                                int planes) {
  if (bytes.size() < kHeaderBytes || bytes.substr(0, 5) != magic) {
    throw Error(Errc::BadMagic, "expected magic '" + std::string(magic) + "'");
  }
  const std::uint32_t w = get_u32(bytes, 5);
  const std::uint32_t h = get_u32(bytes, 9);
  if (w == 0 || h == 0 || w > (1u << 20) || h > (1u << 20)) {
    throw Error(Errc::MalformedHeader, "invalid dimensions in " + std::string(magic) + " header");
  }
  const std::size_t expected =
      kHeaderBytes + static_cast<std::size_t>(w) * h * bytes_per_element * static_cast<std::size_t>(planes);
  if (bytes.size() < expected) {
    throw Error(Errc::Truncated, std::string(magic) + " payload is truncated");
  }
  if (bytes.size() > expected) {
    throw Error(Errc::DimensionMismatch, std::string(magic) + " payload is longer than its dimensions");
  }
  return {static_cast<int>(w), static_cast<int>(h)};
}

std::string binary_header(std::string_view magic, int width, int height) {
  std::string out(magic);
  put_u32(out, static_cast<std::uint32_t>(width));
  put_u32(out, static_cast<std::uint32_t>(height));
  return out;
}

// PGM header tokenizer: whitespace separated, '#' comments to end of line.
class PgmHeader {
 public:
  explicit PgmHeader(std::string_view bytes) : bytes_(bytes) {}

  unsigned long next_number(const char* what) {
    skip_space_and_comments();
    if (pos_ >= bytes_.size()) throw Error(Errc::MalformedHeader, std::string("PGM header ends before ") + what);
    if (!std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      throw Error(Errc::MalformedHeader, std::string("PGM header: non-numeric ") + what);
    }
    unsigned long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(static_cast<unsigned char>(bytes_[pos_]))) {
      value = value * 10 + static_cast<unsigned long>(bytes_[pos_] - '0');
      if (value > (1ul << 24)) throw Error(Errc::MalformedHeader, std::string("PGM header: ") + what + " too large");
      ++pos_;
    }
    return value;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(static_cast<unsigned char>(bytes_[pos_]))) {
      throw Error(Errc::MalformedHeader, "PGM header: missing separator before raster");
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      const char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        return;
      }
    }
  }

  std::string_view bytes_;
  std::size_t pos_ = 2;
};

}  // namespace

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(Errc::Io, "read failure on '" + path.string() + "'");
  return std::move(buf).str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot open '" + path.string() + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw Error(Errc::Io, "write failure on '" + path.string() + "'");
}

PixelMatrix decode_pgm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') throw Error(Errc::UnsupportedFormat, "not a PNM file");
  if (bytes[1] != '5') {
    throw Error(Errc::UnsupportedFormat, std::string("unsupported PNM variant P") + bytes[1] + " (only binary P5)");
  }
  PgmHeader header(bytes);
  const auto width = header.next_number("width");
  const auto height = header.next_number("height");
  const auto maxval = header.next_number("maxval");
  if (width == 0 || height == 0) throw Error(Errc::MalformedHeader, "PGM dimensions must be positive");
  if (maxval == 0) throw Error(Errc::MalformedHeader, "PGM maxval must be positive");
  if (maxval > 255) throw Error(Errc::MaxvalTooLarge, "PGM maxval " + std::to_string(maxval) + " exceeds 255");
  const std::size_t offset = header.raster_offset();
  const std::size_t count = width * height;
  if (bytes.size() - std::min(offset, bytes.size()) < count) {
    throw Error(Errc::Truncated, "PGM raster holds fewer than " + std::to_string(count) + " bytes");
  }
  Grid<double> data(static_cast<int>(width), static_cast<int>(height));
  for (std::size_t k = 0; k < count; ++k) {
    const auto v = static_cast<unsigned char>(bytes[offset + k]);
    if (v > maxval) throw Error(Errc::InvalidValue, "PGM sample exceeds declared maxval");
    data[k] = v;
  }
  return {std::move(data), Domain::Spatial};
}

PixelMatrix read_pgm(const fs::path& path) { return decode_pgm(read_file(path)); }

std::string encode_pgm(const PixelMatrix& img) {
  if (img.domain != Domain::Spatial) throw Error(Errc::DomainMismatch, "PGM output requires a spatial-domain matrix");
  std::string out = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  out.reserve(out.size() + img.data.size());
  for (double v : img.data.values()) {
    if (!(v >= 0.0 && v <= 255.0) || v != std::floor(v)) {
      throw Error(Errc::InvalidValue, "spatial sample outside the integer range [0,255]");
    }
    out.push_back(static_cast<char>(static_cast<unsigned char>(v)));
  }
  return out;
}

void write_pgm(const PixelMatrix& img, const fs::path& path) { write_file(path, encode_pgm(img)); }

CostPair decode_cost_map(std::string_view bytes) {
  const auto [w, h] = read_binary_header(bytes, kCostMagic, 4, 2);
  const std::size_t n = static_cast<std::size_t>(w) * h;
  const float wet_f32 = static_cast<float>(kWetCost);
  Grid<double> plus(w, h), minus(w, h);
  for (int plane = 0; plane < 2; ++plane) {
    Grid<double>& dst = plane == 0 ? plus : minus;
    for (std::size_t k = 0; k < n; ++k) {
      const float v = get_f32(bytes, kHeaderBytes + 4 * (plane * n + k));
      if (!(v >= 0.0f)) throw Error(Errc::InvalidValue, "cost map holds a negative or NaN cost");
      dst[k] = v >= wet_f32 ? kWetCost : static_cast<double>(v);
    }
  }
  return {std::move(plus), std::move(minus)};
}

CostPair read_cost_map(const fs::path& path) { return decode_cost_map(read_file(path)); }

std::string encode_cost_map(const CostPair& cost) {
  if (!cost.plus.same_shape(cost.minus)) throw Error(Errc::DimensionMismatch, "cost planes differ in shape");
  std::string out = binary_header(kCostMagic, cost.width(), cost.height());
  for (const Grid<double>* plane : {&cost.plus, &cost.minus}) {
    for (double v : plane->values()) {
      if (!(v >= 0.0)) throw Error(Errc::InvalidValue, "cannot store a negative or NaN cost");
      put_f32(out, is_wet(v) ? kWetCost : v);
    }
  }
  return out;
}

void write_cost_map(const CostPair& cost, const fs::path& path) { write_file(path, encode_cost_map(cost)); }

PixelMatrix decode_pixf(std::string_view bytes, Domain domain) {
  const auto [w, h] = read_binary_header(bytes, kPixfMagic, 4, 1);
  Grid<double> data(w, h);
  for (std::size_t k = 0; k < data.size(); ++k) {
    const float v = get_f32(bytes, kHeaderBytes + 4 * k);
    if (!std::isfinite(v)) throw Error(Errc::InvalidValue, "PIXF1 sample is not finite");
    data[k] = v;
  }
  PixelMatrix img{std::move(data), domain};
  if (domain == Domain::Spatial) {
    for (double v : img.data.values()) {
      if (v < 0.0 || v > 255.0 || v != std::floor(v)) {
        throw Error(Errc::InvalidValue, "spatial PIXF1 sample outside the integer range [0,255]");
      }
    }
  }
  return img;
}

PixelMatrix read_pixf(const fs::path& path, Domain domain) { return decode_pixf(read_file(path), domain); }

std::string encode_pixf(const PixelMatrix& img) {
  std::string out = binary_header(kPixfMagic, img.width(), img.height());
  for (double v : img.data.values()) put_f32(out, v);
  return out;
}

void write_pixf(const PixelMatrix& img, const fs::path& path) { write_file(path, encode_pixf(img)); }

ModificationMap decode_mod_map(std::string_view bytes) {
  const auto [w, h] = read_binary_header(bytes, kModMagic, 1, 1);
  ModificationMap mods(w, h);
  for (std::size_t k = 0; k < mods.size(); ++k) {
    const auto v = static_cast<std::int8_t>(bytes[kHeaderBytes + k]);
    if (v < -1 || v > 1) throw Error(Errc::InvalidValue, "modification map entry outside {-1,0,+1}");
    mods[k] = v;
  }
  return mods;
}

ModificationMap read_mod_map(const fs::path& path) { return decode_mod_map(read_file(path)); }

std::string encode_mod_map(const ModificationMap& mods) {
  std::string out = binary_header(kModMagic, mods.width(), mods.height());
  for (std::int8_t v : mods.values()) {
    if (v < -1 || v > 1) throw Error(Errc::InvalidValue, "modification map entry outside {-1,0,+1}");
    out.push_back(static_cast<char>(v));
  }
  return out;
}

void write_mod_map(const ModificationMap& mods, const fs::path& path) { write_file(path, encode_mod_map(mods)); }

PixelMatrix read_image(const fs::path& path) {
  if (path.extension() == ".pixf") return read_pixf(path, Domain::Jpeg);
  return read_pgm(path);
}

void write_image(const PixelMatrix& img, const fs::path& path) {
  if (img.domain == Domain::Jpeg) {
    write_pixf(img, path);
  } else {
    write_pgm(img, path);
  }
}

std::vector<fs::path> read_manifest(const fs::path& path) {
  const std::string text = read_file(path);
  const fs::path base = path.parent_path();
  std::vector<fs::path> entries;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    const fs::path entry = fs::u8path(line);
    entries.push_back(entry.is_absolute() ? entry : base / entry);
  }
  return entries;
}

void write_manifest(const std::vector<std::string>& entries, const fs::path& path) {
  std::string text;
  for (const auto& e : entries) {
    text += e;
    text += '\n';
  }
  write_file(path, text);
}

}  // namespace mctsteg::media
