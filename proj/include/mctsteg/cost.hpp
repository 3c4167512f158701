#pragma once

#include "mctsteg/types.hpp"

namespace mctsteg::cost {

/// Residual magnitudes below this are clamped before inversion.
inline constexpr double kResidualFloor = 1e-10;

/// HILL additive cost: 1 / (|img * KB| * mean3x3), smoothed by a 15x15 mean,
/// all with symmetric padding. Both planes are equal except that +1 at 255 and
/// -1 at 0 are wet. Throws DomainMismatch for Jpeg input.
CostPair hill_cost(const PixelMatrix& img);

/// Marks saturating directions wet in place (+1 at 255, -1 at 0).
void mark_saturation_wet(CostPair& cost, const PixelMatrix& img);

/// Impulse: 1 at zero, 0 elsewhere.
constexpr int indicator(int x) noexcept { return x == 0 ? 1 : 0; }

/// Sum of rho+ over +1 entries and rho- over -1 entries.
double distortion(const CostPair& cost, const ModificationMap& mods);

/// Reflect an out-of-range index into [0, n) (edge sample repeated).
int symmetric_index(int i, int n) noexcept;

}  // namespace mctsteg::cost
