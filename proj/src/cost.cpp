#include "mctsteg/cost.hpp"

#include <algorithm>
#include <cmath>

namespace mctsteg::cost {

int symmetric_index(int i, int n) noexcept {
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

namespace {

// Mean over a (2r+1)x(2r+1) window, symmetric padding, separable passes.
Grid<double> box_mean(const Grid<double>& in, int radius) {
  const int w = in.width();
  const int h = in.height();
  const double norm = 1.0 / (2 * radius + 1);
  Grid<double> rows(w, h);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      double s = 0.0;
      for (int k = -radius; k <= radius; ++k) s += in(i, symmetric_index(j + k, w));
      rows(i, j) = s * norm;
    }
  }
  Grid<double> out(w, h);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      double s = 0.0;
      for (int k = -radius; k <= radius; ++k) s += rows(symmetric_index(i + k, h), j);
      out(i, j) = s * norm;
    }
  }
  return out;
}

}  // namespace

void mark_saturation_wet(CostPair& cost, const PixelMatrix& img) {
  if (img.domain != Domain::Spatial) return;
  for (std::size_t k = 0; k < img.data.size(); ++k) {
    if (img.data[k] >= 255.0) cost.plus[k] = kWetCost;
    if (img.data[k] <= 0.0) cost.minus[k] = kWetCost;
  }
}

CostPair hill_cost(const PixelMatrix& img) {
  if (img.domain != Domain::Spatial) {
    throw Error(Errc::DomainMismatch, "HILL cost is defined for spatial images; ingest Jpeg costs from a cost map");
  }
  const int w = img.width();
  const int h = img.height();
  const Grid<double>& x = img.data;

  static constexpr int kKb[3][3] = {{-1, 2, -1}, {2, -4, 2}, {-1, 2, -1}};
  Grid<double> residual(w, h);
  for (int i = 0; i < h; ++i) {
    for (int j = 0; j < w; ++j) {
      double s = 0.0;
      for (int di = -1; di <= 1; ++di) {
        for (int dj = -1; dj <= 1; ++dj) {
          s += kKb[di + 1][dj + 1] * x(symmetric_index(i + di, h), symmetric_index(j + dj, w));
        }
      }
      residual(i, j) = std::abs(s);
    }
  }

  Grid<double> inverse = box_mean(residual, 1);
  for (double& v : inverse.values()) v = 1.0 / std::max(v, kResidualFloor);

  Grid<double> smoothed = box_mean(inverse, 7);
  for (double& v : smoothed.values()) v = std::min(v, kWetCost);

  CostPair cost(smoothed, smoothed);
  mark_saturation_wet(cost, img);
  return cost;
}

double distortion(const CostPair& cost, const ModificationMap& mods) {
  if (!cost.plus.same_shape(mods) || !cost.minus.same_shape(mods)) {
    throw Error(Errc::DimensionMismatch, "cost and modification map differ in shape");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < mods.size(); ++k) {
    const int d = mods[k];
    total += cost.plus[k] * indicator(d - 1) + cost.minus[k] * indicator(d + 1);
  }
  return total;
}

}  // namespace mctsteg::cost
