#pragma once

#include <cstdint>
#include <vector>

#include "mctsteg/types.hpp"

namespace mctsteg::lattice {

enum class SchemeKind { Spatial2x2, JpegBlockParity };

/// Partition of an image's elements into disjoint sublattices.
class SublatticeScheme {
 public:
  SchemeKind kind() const noexcept { return kind_; }
  int count() const noexcept { return count_; }
  int width() const noexcept { return labels_.width(); }
  int height() const noexcept { return labels_.height(); }

  /// Sublattice of a row-major element index.
  int id_of(std::size_t flat) const { return labels_[flat]; }
  /// Row-major ascending element indices of one sublattice.
  const std::vector<std::size_t>& members(int id) const { return members_.at(static_cast<std::size_t>(id)); }

 private:
  friend SublatticeScheme decompose(int width, int height, SchemeKind kind);

  SchemeKind kind_ = SchemeKind::Spatial2x2;
  int count_ = 0;
  Grid<std::uint8_t> labels_;
  std::vector<std::vector<std::size_t>> members_;
};

/// Spatial2x2: (i,j) -> 2*(i mod 2) + (j mod 2).
/// JpegBlockParity: 8x8 block (bi,bj) -> 2*(bi mod 2) + (bj mod 2); width and
/// height must be multiples of 8.
SublatticeScheme decompose(int width, int height, SchemeKind kind);

/// Elements of one sublattice in the order the search tree assigns them.
struct AdjustmentOrder {
  int sublattice_id = 0;
  std::vector<std::size_t> sequence;  // row-major element indices
  /// Leading entries that are not wet in both directions; the rest are
  /// never adjusted.
  std::size_t adjustable = 0;
};

/// Lowest min(rho+, rho-) first, ties by row-major index; elements wet in
/// both directions go last.
AdjustmentOrder ddo_order(const CostPair& cost, const SublatticeScheme& scheme, int sublattice_id);

}  // namespace mctsteg::lattice
