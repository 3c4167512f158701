#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mctsteg/types.hpp"

namespace mctsteg::media {

// Binary P5 grayscale PGM, maxval <= 255.
PixelMatrix read_pgm(const std::filesystem::path& path);
PixelMatrix decode_pgm(std::string_view bytes);
void write_pgm(const PixelMatrix& img, const std::filesystem::path& path);
std::string encode_pgm(const PixelMatrix& img);

// "COST1" + u32 width + u32 height + f32 plus plane + f32 minus plane, all
// little-endian. Wet costs are stored as float(1e13) and read back as exactly
// kWetCost.
CostPair read_cost_map(const std::filesystem::path& path);
CostPair decode_cost_map(std::string_view bytes);
void write_cost_map(const CostPair& cost, const std::filesystem::path& path);
std::string encode_cost_map(const CostPair& cost);

// "PIXF1" + u32 width + u32 height + one f32 plane. Carries Jpeg-domain
// (or any real-valued) sample matrices.
PixelMatrix read_pixf(const std::filesystem::path& path, Domain domain = Domain::Jpeg);
PixelMatrix decode_pixf(std::string_view bytes, Domain domain = Domain::Jpeg);
void write_pixf(const PixelMatrix& img, const std::filesystem::path& path);
std::string encode_pixf(const PixelMatrix& img);

// "MODM1" + u32 width + u32 height + one int8 per element.
ModificationMap read_mod_map(const std::filesystem::path& path);
ModificationMap decode_mod_map(std::string_view bytes);
void write_mod_map(const ModificationMap& mods, const std::filesystem::path& path);
std::string encode_mod_map(const ModificationMap& mods);

/// Loads a cover of either kind: `.pixf` files as Jpeg-domain matrices,
/// everything else as PGM.
PixelMatrix read_image(const std::filesystem::path& path);
void write_image(const PixelMatrix& img, const std::filesystem::path& path);

/// Newline-separated UTF-8 relative paths. Blank lines are skipped; entries
/// are resolved against the manifest's directory.
std::vector<std::filesystem::path> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::vector<std::string>& entries, const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace mctsteg::media
