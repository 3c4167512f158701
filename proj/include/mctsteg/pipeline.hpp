#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "mctsteg/environment.hpp"
#include "mctsteg/lattice.hpp"
#include "mctsteg/mcts.hpp"
#include "mctsteg/types.hpp"

namespace mctsteg::pipeline {

/// rho+ / alpha where gamma = +1 and rho- / alpha where gamma = -1, for the
/// listed elements only. Wet entries stay wet.
CostPair adjust_costs(const CostPair& cost, const mcts::PolarityMatrix& gamma, double alpha,
                      std::span<const std::size_t> sublattice);

/// Sum of the modifications of the 4-connected neighbors of `at`.
int neighbor_modification_sum(const ModificationMap& mods, Coord at);

/// CMD rule at one position: rho+ / alpha when the neighbor sum exceeds +1,
/// rho- / alpha when it is below -1.
CostPair cmd_adjust(const CostPair& cost, const ModificationMap& partial_mods, double alpha, Coord position);

struct Reward {
  double confidence = 0.0;  // f_c(candidate)
  double r = 0.0;           // f_c(candidate) - f_c(baseline)
  double scaled = 0.0;
};

Reward reward(env::Environment& env, const PixelMatrix& candidate, double baseline_confidence,
              const mcts::Budget& budget);

enum class CostSource { BuiltinHill, ExternalFile };
enum class Termination { MaxSearches, ConfidenceThreshold };

std::string_view termination_name(Termination t);

struct EmbedPlan {
  double payload_bits_total = 0.0;
  lattice::SchemeKind scheme = lattice::SchemeKind::Spatial2x2;
  mcts::Budget budget;
  CostSource cost_source = CostSource::BuiltinHill;
  /// Required when cost_source == ExternalFile; used for every sublattice.
  std::optional<CostPair> external_cost;
  std::uint64_t seed = 0;
  /// Search the first sublattice too (it is embedded unadjusted otherwise).
  bool adjust_first_sublattice = false;
  /// Draw a fresh simulator sample per search. When false every search of a
  /// sublattice reuses one seed, making candidates a function of gamma.
  bool resample_each_search = true;
};

struct SublatticeTrace {
  int sublattice = 0;
  int searches_used = 0;
  double r_top = 0.0;
  Termination terminated_by = Termination::MaxSearches;
  std::vector<double> rewards;        // R of every performed search, in order
  std::vector<double> r_top_history;  // best-so-far after each search
};

struct StegoResult {
  PixelMatrix stego;
  ModificationMap mods;
  std::vector<SublatticeTrace> per_sublattice;  // searched sublattices only
  double baseline_confidence = 0.0;
  double final_confidence = 0.0;
};

/// Observes every simulated playout (tests, diagnostics).
struct SearchEvent {
  int sublattice;
  int search_index;
  const mcts::PolarityMatrix& gamma;
  const PixelMatrix& candidate;
  const Reward& reward;
};
using SearchObserver = std::function<void(const SearchEvent&)>;

/// Baseline additive embedding over the whole image (stream (0,0)).
StegoResult embed_plain(const PixelMatrix& cover, double payload_bits, const CostPair& cost, std::uint64_t seed);

/// Sublattice-wise CMD: sublattice 1 unadjusted, later ones with costs
/// divided by alpha toward the direction their embedded neighbors lean.
StegoResult embed_cmd(const PixelMatrix& cover, double payload_bits, const CostPair& cost,
                      lattice::SchemeKind scheme, double alpha, std::uint64_t seed);

/// Search-driven embedding: baseline Z, sublattice 1 embedded directly, then
/// for every later sublattice a fresh tree whose terminal polarities adjust
/// the costs recomputed from the partially embedded image. Each sublattice
/// keeps the highest-reward candidate.
StegoResult embed(const PixelMatrix& cover, const EmbedPlan& plan, env::Environment& env,
                  const SearchObserver& observer = {});

}  // namespace mctsteg::pipeline
