#include "mctsteg/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mctsteg/rng.hpp"

namespace mctsteg::simulator {

namespace {

constexpr double kLn2 = 0.69314718055994530942;

struct Element {
  std::size_t index;
  double plus;  // normalized cost, or +inf when wet
  double minus;
};

// Total entropy in bits at normalized multiplier `lambda`.
double total_entropy(const std::vector<Element>& elems, double lambda) {
  double nats = 0.0;
  for (const auto& e : elems) {
    const double ep = std::isinf(e.plus) ? 0.0 : std::exp(-lambda * e.plus);
    const double em = std::isinf(e.minus) ? 0.0 : std::exp(-lambda * e.minus);
    const double z = 1.0 + ep + em;
    double h = std::log(z);
    if (ep > 0.0) h += lambda * e.plus * ep / z;
    if (em > 0.0) h += lambda * e.minus * em / z;
    nats += h;
  }
  return nats / kLn2;
}

}  // namespace

double ternary_entropy(double p_plus, double p_minus) noexcept {
  const auto term = [](double p) { return p > 0.0 ? -p * std::log2(p) : 0.0; };
  return term(p_plus) + term(p_minus) + term(1.0 - p_plus - p_minus);
}

std::vector<std::size_t> all_elements(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

double capacity_bits(const CostPair& cost, std::span<const std::size_t> elements) {
  double bits = 0.0;
  for (std::size_t k : elements) {
    const int open = (is_wet(cost.plus[k]) ? 0 : 1) + (is_wet(cost.minus[k]) ? 0 : 1);
    bits += std::log2(1.0 + open);
  }
  return bits;
}

EmbedProbabilities fit_probabilities(const CostPair& cost, double payload_bits) {
  const auto elements = all_elements(cost.plus.size());
  return fit_probabilities(cost, payload_bits, elements);
}

EmbedProbabilities fit_probabilities(const CostPair& cost, double payload_bits,
                                     std::span<const std::size_t> elements) {
  if (!(payload_bits >= 0.0) || !std::isfinite(payload_bits)) {
    throw Error(Errc::InvalidArgument, "payload must be a finite nonnegative number of bits");
  }
  EmbedProbabilities out{Grid<double>(cost.width(), cost.height()), Grid<double>(cost.width(), cost.height()),
                         std::numeric_limits<double>::infinity(), payload_bits, 0.0};
  if (payload_bits == 0.0) return out;

  const double capacity = capacity_bits(cost, elements);
  if (payload_bits > capacity + kEntropyTolerance) {
    throw Error(Errc::InfeasiblePayload, "payload of " + std::to_string(payload_bits) +
                                             " bits exceeds capacity of " + std::to_string(capacity) + " bits");
  }

  // Normalize by the cost of the element at the rank the payload would reach
  // if every cheaper element carried log2(3) bits: keeps the normalized
  // multiplier near 1 whatever the cost distribution.
  std::vector<double> cheapest;
  cheapest.reserve(elements.size());
  for (std::size_t k : elements) {
    const double p = cost.plus[k];
    const double m = cost.minus[k];
    if (!(p >= 0.0) || !(m >= 0.0)) throw Error(Errc::InvalidValue, "negative or NaN cost");
    if (!is_wet(p) || !is_wet(m)) cheapest.push_back(std::min(p, m));
  }
  double scale = 1.0;
  if (!cheapest.empty()) {
    const double share = std::ceil(payload_bits / std::log2(3.0));
    const auto rank = static_cast<std::size_t>(std::clamp(share, 1.0, static_cast<double>(cheapest.size()))) - 1;
    std::nth_element(cheapest.begin(), cheapest.begin() + static_cast<std::ptrdiff_t>(rank), cheapest.end());
    if (cheapest[rank] > 0.0) scale = cheapest[rank];
  }
  constexpr double inf = std::numeric_limits<double>::infinity();

  std::vector<Element> elems;
  elems.reserve(elements.size());
  for (std::size_t k : elements) {
    elems.push_back({k, is_wet(cost.plus[k]) ? inf : cost.plus[k] / scale,
                     is_wet(cost.minus[k]) ? inf : cost.minus[k] / scale});
  }

  double lo = kLambdaMin;
  double hi = kLambdaMax;
  double h_lo = total_entropy(elems, lo);
  double h_hi = total_entropy(elems, hi);
  if (h_hi > payload_bits + kEntropyTolerance) {
    throw Error(Errc::NonConvergence, "payload not reachable within the multiplier bracket");
  }
  double lambda = lo;
  double realized = h_lo;
  if (h_lo <= payload_bits) {
    // Payload at (or within tolerance of) capacity: lambda -> 0.
    if (payload_bits - h_lo > kEntropyTolerance) {
      throw Error(Errc::InfeasiblePayload, "payload exceeds the entropy reachable at the smallest multiplier");
    }
  } else {
    // Geometric bisection; entropy is decreasing in lambda.
    for (int it = 0; it < kMaxBisections && hi / lo > 1.0 + 1e-10; ++it) {
      const double mid = std::sqrt(lo * hi);
      const double h_mid = total_entropy(elems, mid);
      if (h_mid > payload_bits) {
        lo = mid;
        h_lo = h_mid;
      } else {
        hi = mid;
        h_hi = h_mid;
      }
    }
    if (std::abs(h_lo - payload_bits) <= std::abs(h_hi - payload_bits)) {
      lambda = lo;
      realized = h_lo;
    } else {
      lambda = hi;
      realized = h_hi;
    }
    if (std::abs(realized - payload_bits) > kEntropyTolerance) {
      throw Error(Errc::NonConvergence, "multiplier search did not meet the entropy tolerance");
    }
  }

  double check = 0.0;
  for (const auto& e : elems) {
    const double ep = std::isinf(e.plus) ? 0.0 : std::exp(-lambda * e.plus);
    const double em = std::isinf(e.minus) ? 0.0 : std::exp(-lambda * e.minus);
    const double z = 1.0 + ep + em;
    out.p_plus[e.index] = ep / z;
    out.p_minus[e.index] = em / z;
    check += ternary_entropy(ep / z, em / z);
  }
  out.lambda = lambda / scale;
  out.realized_entropy_bits = check;
  return out;
}

ModificationMap sample(const EmbedProbabilities& probs, std::uint64_t seed) {
  Rng rng(seed);
  ModificationMap mods(probs.p_plus.width(), probs.p_plus.height());
  for (std::size_t k = 0; k < mods.size(); ++k) {
    const double u = rng.uniform();
    const double pm = probs.p_minus[k];
    if (u < pm) {
      mods[k] = -1;
    } else if (u < pm + probs.p_plus[k]) {
      mods[k] = 1;
    }
  }
  return mods;
}

PixelMatrix apply(const PixelMatrix& img, const ModificationMap& mods) {
  if (!img.data.same_shape(mods)) throw Error(Errc::DimensionMismatch, "image and modification map differ in shape");
  PixelMatrix out = img;
  for (std::size_t k = 0; k < mods.size(); ++k) {
    out.data[k] += mods[k];
    if (out.domain == Domain::Spatial && (out.data[k] < 0.0 || out.data[k] > 255.0)) {
      throw Error(Errc::InvalidValue, "modification leaves [0,255]; a saturated direction was not marked wet");
    }
  }
  return out;
}

double change_rate(const ModificationMap& mods) {
  std::size_t changed = 0;
  for (auto v : mods.values()) changed += v != 0 ? 1 : 0;
  return static_cast<double>(changed) / static_cast<double>(mods.size());
}

}  // namespace mctsteg::simulator
