#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "mctsteg/lattice.hpp"
#include "mctsteg/rng.hpp"
#include "mctsteg/types.hpp"

namespace mctsteg::mcts {

/// Search budget and reward shaping.
struct Budget {
  int max_searches = 128;
  double confidence_threshold = 0.98;
  double exploration_c = std::sqrt(2.0);
  double reward_scale_pos = 10.0;
  double reward_scale_neg = 1.0;
  double alpha = 1.5;

  /// Throws InvalidArgument when a field violates its range.
  void validate() const;
};

/// R' = R * reward_scale_pos if R >= 0, else R * reward_scale_neg.
double scale_reward(double reward, const Budget& budget) noexcept;

/// Ternary adjustment polarities over an image; only the current
/// sublattice's entries can be nonzero.
struct PolarityMatrix {
  Grid<std::int8_t> gamma;
  std::size_t depth_assigned = 0;
};

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

/// Child slot of an action: lc <-> -1, mc <-> 0, rc <-> +1.
constexpr int slot_of(int action) noexcept { return action + 1; }
constexpr int action_of(int slot) noexcept { return slot - 1; }

struct SearchNode {
  std::uint32_t n = 0;  // searches that passed through this node
  double r = 0.0;       // sum of backpropagated scaled rewards
  NodeId parent = kNoNode;
  std::array<NodeId, 3> children{kNoNode, kNoNode, kNoNode};
  std::int32_t d = 0;  // number of order positions assigned on the path
  std::int8_t action = 0;

  NodeId child(int action) const noexcept { return children[static_cast<std::size_t>(slot_of(action))]; }
  bool fully_expanded() const noexcept {
    return children[0] != kNoNode && children[1] != kNoNode && children[2] != kNoNode;
  }
};

/// r/n + C*sqrt(ln(N_parent)/n). Throws InvalidArgument for unvisited nodes.
double uct_score(double r, std::uint32_t n, std::uint32_t parent_n, double c);

/// Trigeminal search tree over the first `depth` entries of an
/// AdjustmentOrder. Nodes store only their action; polarity matrices are
/// rebuilt from the root path. Single-writer: callers serialize access.
class SearchTree {
 public:
  SearchTree(std::size_t depth, std::uint64_t seed, double exploration_c = std::sqrt(2.0));

  NodeId root() const noexcept { return 0; }
  const SearchNode& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  std::size_t node_count() const noexcept { return nodes_.size(); }
  std::size_t depth() const noexcept { return depth_; }
  bool is_leaf(NodeId id) const { return static_cast<std::size_t>(node(id).d) == depth_; }
  double uct_score(NodeId id) const;

  /// Argmax-UCT child of a fully expanded node (ties -> lowest action);
  /// increments that child's visit count.
  NodeId best_child(NodeId id);
  /// Expands one uniformly chosen untried action at `id`, then rolls out with
  /// fresh nodes down to a leaf, which is returned. Created nodes start at n=1.
  NodeId random_search(NodeId id);
  /// One selection pass from the root (root visit counted): best_child while
  /// fully expanded, then random_search unless a leaf was reached.
  NodeId search();
  /// Adds `scaled_reward` to r of every node on the path, root excluded.
  void backpropagate(NodeId leaf, double scaled_reward);

  /// Actions on the root path of `id`, indexed by order position.
  std::vector<std::int8_t> path_actions(NodeId id) const;

 private:
  NodeId add_child(NodeId parent, int action);

  std::size_t depth_;
  double exploration_c_;
  Rng rng_;
  std::vector<SearchNode> nodes_;
};

/// Writes `actions[k]` at `order.sequence[k]`; entries past the actions
/// (elements wet in both directions) keep polarity 0.
PolarityMatrix polarity_from_actions(const std::vector<std::int8_t>& actions, const lattice::AdjustmentOrder& order,
                                     int width, int height);

/// Terminal polarity matrix of a leaf. Throws IncompletePath for non-leaves.
PolarityMatrix gamma_of(const SearchTree& tree, NodeId leaf, const lattice::AdjustmentOrder& order, int width,
                        int height);

/// All 3^size action sequences, lexicographic in (-1, 0, +1). size <= 8.
std::vector<std::vector<std::int8_t>> enumerate_terminals(std::size_t size);

}  // namespace mctsteg::mcts
