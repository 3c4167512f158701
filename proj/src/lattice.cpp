#include "mctsteg/lattice.hpp"

#include <algorithm>
#include <tuple>

namespace mctsteg::lattice {

SublatticeScheme decompose(int width, int height, SchemeKind kind) {
  if (width <= 0 || height <= 0) throw Error(Errc::InvalidArgument, "image dimensions must be positive");
  if (kind == SchemeKind::JpegBlockParity && (width % 8 != 0 || height % 8 != 0)) {
    throw Error(Errc::InvalidArgument, "block-parity sublattices need dimensions divisible by 8");
  }
  SublatticeScheme s;
  s.kind_ = kind;
  s.count_ = 4;
  s.labels_ = Grid<std::uint8_t>(width, height);
  s.members_.assign(4, {});
  const int cell = kind == SchemeKind::Spatial2x2 ? 1 : 8;
  for (int i = 0; i < height; ++i) {
    for (int j = 0; j < width; ++j) {
      const int id = 2 * ((i / cell) % 2) + (j / cell) % 2;
      s.labels_(i, j) = static_cast<std::uint8_t>(id);
      s.members_[static_cast<std::size_t>(id)].push_back(s.labels_.index(i, j));
    }
  }
  return s;
}

AdjustmentOrder ddo_order(const CostPair& cost, const SublatticeScheme& scheme, int sublattice_id) {
  if (cost.width() != scheme.width() || cost.height() != scheme.height()) {
    throw Error(Errc::DimensionMismatch, "cost map does not cover the decomposed image");
  }
  if (sublattice_id < 0 || sublattice_id >= scheme.count()) {
    throw Error(Errc::InvalidArgument, "sublattice id out of range");
  }
  AdjustmentOrder order;
  order.sublattice_id = sublattice_id;
  order.sequence = scheme.members(sublattice_id);

  const auto key = [&](std::size_t k) {
    const bool dead = is_wet(cost.plus[k]) && is_wet(cost.minus[k]);
    return std::make_tuple(dead, std::min(cost.plus[k], cost.minus[k]), k);
  };
  std::sort(order.sequence.begin(), order.sequence.end(),
            [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
  order.adjustable = static_cast<std::size_t>(
      std::count_if(order.sequence.begin(), order.sequence.end(),
                    [&](std::size_t k) { return !(is_wet(cost.plus[k]) && is_wet(cost.minus[k])); }));
  return order;
}

}  // namespace mctsteg::lattice
