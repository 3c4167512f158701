#pragma once

#include <cstdint>

#include "mctsteg/types.hpp"

namespace mctsteg::corpus {

/// Deterministic synthetic grayscale photograph: smooth illumination, shaded
/// objects with soft edges, regions of multi-octave texture, optical blur and
/// sensor noise, quantized to [0,255]. Same (size, seed) -> same image.
PixelMatrix generate_cover(int size, std::uint64_t seed);

}  // namespace mctsteg::corpus
