#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mctsteg/types.hpp"

namespace mctsteg::simulator {

/// Absolute tolerance on the total entropy, in bits.
inline constexpr double kEntropyTolerance = 1e-3;
/// Bracket of the (cost-normalized) Lagrange multiplier search.
inline constexpr double kLambdaMin = 1e-7;
inline constexpr double kLambdaMax = 1e3;
inline constexpr int kMaxBisections = 200;

/// Optimal ternary embedding probabilities for a payload.
struct EmbedProbabilities {
  Grid<double> p_plus;
  Grid<double> p_minus;
  /// Multiplier in the units of the input costs; +inf for a zero payload.
  double lambda = 0.0;
  double target_entropy_bits = 0.0;
  double realized_entropy_bits = 0.0;
};

/// Entropy in bits of the distribution (p_plus, p_minus, 1 - p_plus - p_minus).
double ternary_entropy(double p_plus, double p_minus) noexcept;

/// Sum over `elements` of log2(1 + number of non-wet directions).
double capacity_bits(const CostPair& cost, std::span<const std::size_t> elements);

/// Fits p = exp(-lambda*rho) / (1 + exp(-lambda*rho+) + exp(-lambda*rho-)) so
/// the total entropy over the masked elements equals `payload_bits`. Elements
/// outside the mask get zero probabilities. Costs are normalized by a
/// payload-dependent cost quantile before the bracketed bisection, so the fit
/// is invariant to cost scale.
/// Throws InfeasiblePayload or NonConvergence.
EmbedProbabilities fit_probabilities(const CostPair& cost, double payload_bits,
                                     std::span<const std::size_t> elements);
EmbedProbabilities fit_probabilities(const CostPair& cost, double payload_bits);

/// Independent draw per element (row-major, one uniform each): -1 with
/// p_minus, +1 with p_plus, otherwise 0.
ModificationMap sample(const EmbedProbabilities& probs, std::uint64_t seed);

/// img + mods. Spatial results outside [0,255] throw InvalidValue.
PixelMatrix apply(const PixelMatrix& img, const ModificationMap& mods);

/// Fraction of nonzero entries.
double change_rate(const ModificationMap& mods);

/// Elements 0..n-1.
std::vector<std::size_t> all_elements(std::size_t n);

}  // namespace mctsteg::simulator
