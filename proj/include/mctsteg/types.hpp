#pragma once

#include <cstdint>

#include "mctsteg/grid.hpp"

namespace mctsteg {

enum class Domain { Spatial, Jpeg };

/// Cover or stego samples. Spatial data holds integers in [0,255] stored as
/// reals; Jpeg data holds unrounded, unbounded coefficients.
struct PixelMatrix {
  Grid<double> data;
  Domain domain = Domain::Spatial;

  PixelMatrix() = default;
  PixelMatrix(Grid<double> d, Domain dom) : data(std::move(d)), domain(dom) {}

  int width() const noexcept { return data.width(); }
  int height() const noexcept { return data.height(); }

  friend bool operator==(const PixelMatrix&, const PixelMatrix&) = default;
};

/// Ternary stego-minus-cover map, entries in {-1, 0, +1}.
using ModificationMap = Grid<std::int8_t>;

/// Costs at or above this value forbid the corresponding modification.
inline constexpr double kWetCost = 1e13;

/// Per-element costs of a +1 and a -1 change.
struct CostPair {
  Grid<double> plus;
  Grid<double> minus;

  CostPair() = default;
  CostPair(Grid<double> p, Grid<double> m) : plus(std::move(p)), minus(std::move(m)) {
    if (!plus.same_shape(minus)) {
      throw Error(Errc::DimensionMismatch, "cost planes differ in shape");
    }
  }

  int width() const noexcept { return plus.width(); }
  int height() const noexcept { return plus.height(); }

  friend bool operator==(const CostPair&, const CostPair&) = default;
};

inline bool is_wet(double cost) noexcept { return cost >= kWetCost; }

}  // namespace mctsteg
