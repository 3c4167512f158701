#include "mctsteg/pipeline.hpp"

#include <limits>

#include "mctsteg/cost.hpp"
#include "mctsteg/rng.hpp"
#include "mctsteg/simulator.hpp"

namespace mctsteg::pipeline {

CostPair adjust_costs(const CostPair& cost, const mcts::PolarityMatrix& gamma, double alpha,
                      std::span<const std::size_t> sublattice) {
  if (!(alpha > 1.0)) throw Error(Errc::InvalidArgument, "alpha must exceed 1");
  if (!cost.plus.same_shape(gamma.gamma)) throw Error(Errc::DimensionMismatch, "polarity matrix and costs differ");
  CostPair out = cost;
  for (std::size_t k : sublattice) {
    if (k >= out.plus.size()) throw Error(Errc::DimensionMismatch, "sublattice element outside the cost map");
    const int g = gamma.gamma[k];
    if (g == 1 && !is_wet(out.plus[k])) out.plus[k] = out.plus[k] / alpha;
    if (g == -1 && !is_wet(out.minus[k])) out.minus[k] = out.minus[k] / alpha;
  }
  return out;
}

int neighbor_modification_sum(const ModificationMap& mods, Coord at) {
  static constexpr Coord kOffsets[] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};
  int sum = 0;
  for (Coord o : kOffsets) {
    const int r = at.row + o.row;
    const int c = at.col + o.col;
    if (r >= 0 && r < mods.height() && c >= 0 && c < mods.width()) sum += mods(r, c);
  }
  return sum;
}

namespace {

void cmd_adjust_in_place(CostPair& cost, const ModificationMap& mods, double alpha, std::size_t k) {
  const int sum = neighbor_modification_sum(mods, mods.coord(k));
  if (sum > 1 && !is_wet(cost.plus[k])) cost.plus[k] /= alpha;
  if (sum < -1 && !is_wet(cost.minus[k])) cost.minus[k] /= alpha;
}

void check_shapes(const PixelMatrix& cover, const CostPair& cost) {
  if (!cover.data.same_shape(cost.plus)) throw Error(Errc::DimensionMismatch, "cost map does not match the cover");
}

}  // namespace

CostPair cmd_adjust(const CostPair& cost, const ModificationMap& partial_mods, double alpha, Coord position) {
  if (!(alpha > 1.0)) throw Error(Errc::InvalidArgument, "alpha must exceed 1");
  if (!cost.plus.same_shape(partial_mods)) throw Error(Errc::DimensionMismatch, "modification map and costs differ");
  if (position.row < 0 || position.row >= cost.height() || position.col < 0 || position.col >= cost.width()) {
    throw Error(Errc::InvalidArgument, "position outside the cost map");
  }
  CostPair out = cost;
  cmd_adjust_in_place(out, partial_mods, alpha, out.plus.index(position.row, position.col));
  return out;
}

Reward reward(env::Environment& env, const PixelMatrix& candidate, double baseline_confidence,
              const mcts::Budget& budget) {
  Reward out;
  out.confidence = env::score(env, candidate).cover_confidence;
  out.r = out.confidence - baseline_confidence;
  out.scaled = mcts::scale_reward(out.r, budget);
  return out;
}

std::string_view termination_name(Termination t) {
  return t == Termination::ConfidenceThreshold ? "confidence_threshold" : "max_searches";
}

StegoResult embed_plain(const PixelMatrix& cover, double payload_bits, const CostPair& cost, std::uint64_t seed) {
  check_shapes(cover, cost);
  const auto probs = simulator::fit_probabilities(cost, payload_bits);
  StegoResult out;
  out.mods = simulator::sample(probs, stream_seed(seed, 0, 0));
  out.stego = simulator::apply(cover, out.mods);
  return out;
}

StegoResult embed_cmd(const PixelMatrix& cover, double payload_bits, const CostPair& cost,
                      lattice::SchemeKind scheme, double alpha, std::uint64_t seed) {
  check_shapes(cover, cost);
  if (!(alpha > 1.0)) throw Error(Errc::InvalidArgument, "alpha must exceed 1");
  const auto lat = lattice::decompose(cover.width(), cover.height(), scheme);
  const double segment = payload_bits / lat.count();
  StegoResult out;
  out.mods = ModificationMap(cover.width(), cover.height());
  out.stego = cover;
  for (int t = 0; t < lat.count(); ++t) {
    const auto& members = lat.members(t);
    CostPair adjusted = cost;
    if (t > 0) {
      for (std::size_t k : members) cmd_adjust_in_place(adjusted, out.mods, alpha, k);
    }
    const auto probs = simulator::fit_probabilities(adjusted, segment, members);
    const auto mods = simulator::sample(probs, stream_seed(seed, 2 + static_cast<std::uint64_t>(t), 0));
    out.stego = simulator::apply(out.stego, mods);
    for (std::size_t k : members) out.mods[k] = mods[k];
  }
  return out;
}

StegoResult embed(const PixelMatrix& cover, const EmbedPlan& plan, env::Environment& env,
                  const SearchObserver& observer) {
  plan.budget.validate();
  if (plan.cost_source == CostSource::ExternalFile) {
    if (!plan.external_cost) throw Error(Errc::InvalidArgument, "external cost source selected without a cost map");
    check_shapes(cover, *plan.external_cost);
  }
  const auto costs_for = [&](const PixelMatrix& img) {
    return plan.cost_source == CostSource::ExternalFile ? *plan.external_cost : cost::hill_cost(img);
  };

  const auto lat = lattice::decompose(cover.width(), cover.height(), plan.scheme);
  const double segment = plan.payload_bits_total / lat.count();
  const int w = cover.width();
  const int h = cover.height();

  StegoResult out;
  const CostPair initial = costs_for(cover);
  {
    const StegoResult z = embed_plain(cover, plan.payload_bits_total, initial, plan.seed);
    out.baseline_confidence = env::score(env, z.stego).cover_confidence;
  }

  PixelMatrix current = cover;
  out.mods = ModificationMap(w, h);
  for (int t = 0; t < lat.count(); ++t) {
    const auto& members = lat.members(t);
    const auto tag = static_cast<std::uint64_t>(t);
    const CostPair costs = t == 0 ? initial : costs_for(current);

    if (t == 0 && !plan.adjust_first_sublattice) {
      const auto probs = simulator::fit_probabilities(costs, segment, members);
      const auto mods = simulator::sample(probs, stream_seed(plan.seed, 2 + tag, 0));
      current = simulator::apply(current, mods);
      for (std::size_t k : members) out.mods[k] = mods[k];
      continue;
    }

    const auto order = lattice::ddo_order(costs, lat, t);
    mcts::SearchTree tree(order.adjustable, stream_seed(plan.seed, 1, tag), plan.budget.exploration_c);
    SublatticeTrace trace;
    trace.sublattice = t;
    trace.r_top = -std::numeric_limits<double>::infinity();
    PixelMatrix best;
    ModificationMap best_mods;

    for (int k = 0; k < plan.budget.max_searches; ++k) {
      const mcts::NodeId leaf = tree.search();
      const auto gamma = mcts::gamma_of(tree, leaf, order, w, h);
      const auto adjusted = adjust_costs(costs, gamma, plan.budget.alpha, members);
      const auto probs = simulator::fit_probabilities(adjusted, segment, members);
      const auto sample_tag = plan.resample_each_search ? static_cast<std::uint64_t>(k) : 0;
      auto mods = simulator::sample(probs, stream_seed(plan.seed, 2 + tag, sample_tag));
      PixelMatrix candidate = simulator::apply(current, mods);
      const Reward r = reward(env, candidate, out.baseline_confidence, plan.budget);
      tree.backpropagate(leaf, r.scaled);
      if (observer) observer({t, k, gamma, candidate, r});

      trace.rewards.push_back(r.r);
      ++trace.searches_used;
      if (k == 0 || r.r > trace.r_top) {
        trace.r_top = r.r;
        best = std::move(candidate);
        best_mods = std::move(mods);
      }
      trace.r_top_history.push_back(trace.r_top);
      if (r.confidence >= plan.budget.confidence_threshold) {
        trace.terminated_by = Termination::ConfidenceThreshold;
        break;
      }
    }

    current = std::move(best);
    for (std::size_t k : members) out.mods[k] = best_mods[k];
    out.per_sublattice.push_back(std::move(trace));
  }

  out.stego = std::move(current);
  out.final_confidence = env::score(env, out.stego).cover_confidence;
  return out;
}

}  // namespace mctsteg::pipeline
