#include "mctsteg/mcts.hpp"

#include <string>

namespace mctsteg::mcts {

void Budget::validate() const {
  if (max_searches <= 0) throw Error(Errc::InvalidArgument, "max_searches must be positive");
  if (!(confidence_threshold > 0.0 && confidence_threshold < 1.0)) {
    throw Error(Errc::InvalidArgument, "confidence threshold must lie in (0,1)");
  }
  if (!(exploration_c > 0.0) || !std::isfinite(exploration_c)) {
    throw Error(Errc::InvalidArgument, "exploration constant must be positive");
  }
  if (!(reward_scale_pos > 0.0) || !(reward_scale_neg > 0.0)) {
    throw Error(Errc::InvalidArgument, "reward scales must be positive");
  }
  if (!(alpha > 1.0) || !std::isfinite(alpha)) throw Error(Errc::InvalidArgument, "alpha must exceed 1");
}

double scale_reward(double reward, const Budget& budget) noexcept {
  return reward >= 0.0 ? reward * budget.reward_scale_pos : reward * budget.reward_scale_neg;
}

double uct_score(double r, std::uint32_t n, std::uint32_t parent_n, double c) {
  if (n == 0 || parent_n == 0) throw Error(Errc::InvalidArgument, "UCT score is undefined for unvisited nodes");
  const double visits = static_cast<double>(n);
  return r / visits + c * std::sqrt(std::log(static_cast<double>(parent_n)) / visits);
}

SearchTree::SearchTree(std::size_t depth, std::uint64_t seed, double exploration_c)
    : depth_(depth), exploration_c_(exploration_c), rng_(seed) {
  nodes_.emplace_back();
}

double SearchTree::uct_score(NodeId id) const {
  const SearchNode& v = node(id);
  if (v.parent == kNoNode) throw Error(Errc::InvalidArgument, "the root has no UCT score");
  return mcts::uct_score(v.r, v.n, node(v.parent).n, exploration_c_);
}

NodeId SearchTree::best_child(NodeId id) {
  if (!node(id).fully_expanded()) throw Error(Errc::InvalidArgument, "best_child needs a fully expanded node");
  NodeId best = kNoNode;
  double best_score = 0.0;
  for (NodeId c : node(id).children) {
    const double s = uct_score(c);
    if (best == kNoNode || s > best_score) {
      best = c;
      best_score = s;
    }
  }
  ++nodes_[static_cast<std::size_t>(best)].n;
  return best;
}

NodeId SearchTree::add_child(NodeId parent, int action) {
  SearchNode child;
  child.n = 1;
  child.parent = parent;
  child.d = node(parent).d + 1;
  child.action = static_cast<std::int8_t>(action);
  const auto id = static_cast<NodeId>(nodes_.size());
  nodes_.push_back(child);
  nodes_[static_cast<std::size_t>(parent)].children[static_cast<std::size_t>(slot_of(action))] = id;
  return id;
}

NodeId SearchTree::random_search(NodeId id) {
  while (!is_leaf(id)) {
    std::array<int, 3> untried{};
    std::size_t count = 0;
    for (int slot = 0; slot < 3; ++slot) {
      if (node(id).children[static_cast<std::size_t>(slot)] == kNoNode) untried[count++] = action_of(slot);
    }
    if (count == 0) throw Error(Errc::InvalidArgument, "random_search reached a fully expanded node");
    id = add_child(id, untried[rng_.below(count)]);
  }
  return id;
}

NodeId SearchTree::search() {
  NodeId v = root();
  ++nodes_[0].n;
  while (node(v).fully_expanded()) v = best_child(v);
  if (!is_leaf(v)) v = random_search(v);
  return v;
}

void SearchTree::backpropagate(NodeId leaf, double scaled_reward) {
  for (NodeId v = leaf; v != root(); v = node(v).parent) nodes_[static_cast<std::size_t>(v)].r += scaled_reward;
}

std::vector<std::int8_t> SearchTree::path_actions(NodeId id) const {
  std::vector<std::int8_t> actions(static_cast<std::size_t>(node(id).d));
  for (NodeId v = id; v != root(); v = node(v).parent) {
    actions[static_cast<std::size_t>(node(v).d - 1)] = node(v).action;
  }
  return actions;
}

PolarityMatrix polarity_from_actions(const std::vector<std::int8_t>& actions, const lattice::AdjustmentOrder& order,
                                     int width, int height) {
  if (actions.size() > order.sequence.size()) {
    throw Error(Errc::DimensionMismatch, "more actions than order positions");
  }
  PolarityMatrix p{Grid<std::int8_t>(width, height), order.sequence.size()};
  for (std::size_t k = 0; k < actions.size(); ++k) {
    const std::size_t at = order.sequence[k];
    if (at >= p.gamma.size()) throw Error(Errc::DimensionMismatch, "order position outside the image");
    p.gamma[at] = actions[k];
  }
  return p;
}

PolarityMatrix gamma_of(const SearchTree& tree, NodeId leaf, const lattice::AdjustmentOrder& order, int width,
                        int height) {
  if (!tree.is_leaf(leaf)) {
    throw Error(Errc::IncompletePath, "node at depth " + std::to_string(tree.node(leaf).d) + " is not terminal");
  }
  if (tree.depth() > order.sequence.size()) {
    throw Error(Errc::DimensionMismatch, "tree deeper than the adjustment order");
  }
  return polarity_from_actions(tree.path_actions(leaf), order, width, height);
}

std::vector<std::vector<std::int8_t>> enumerate_terminals(std::size_t size) {
  if (size > 8) throw Error(Errc::InvalidArgument, "exhaustive enumeration is limited to 8 elements");
  std::size_t total = 1;
  for (std::size_t k = 0; k < size; ++k) total *= 3;
  std::vector<std::vector<std::int8_t>> out;
  out.reserve(total);
  for (std::size_t code = 0; code < total; ++code) {
    std::vector<std::int8_t> actions(size);
    std::size_t rest = code;
    for (std::size_t k = size; k-- > 0;) {
      actions[k] = static_cast<std::int8_t>(action_of(static_cast<int>(rest % 3)));
      rest /= 3;
    }
    out.push_back(std::move(actions));
  }
  return out;
}

}  // namespace mctsteg::mcts
