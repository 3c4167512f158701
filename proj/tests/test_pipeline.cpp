#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "mctsteg/cost.hpp"
#include "mctsteg/pipeline.hpp"
#include "mctsteg/simulator.hpp"
#include "support/exhaustive.hpp"
#include "support/testing.hpp"

using namespace mctsteg;
using pipeline::EmbedPlan;

namespace {

EmbedPlan small_plan(double bpp, int w, int h, int searches = 16) {
  EmbedPlan plan;
  plan.payload_bits_total = bpp * w * h;
  plan.budget.max_searches = searches;
  plan.seed = 5;
  return plan;
}

mcts::PolarityMatrix polarity(int w, int h, std::vector<std::int8_t> values) {
  return {Grid<std::int8_t>(w, h, std::move(values)), static_cast<std::size_t>(w * h)};
}

void check_stego_matches_mods(const PixelMatrix& cover, const pipeline::StegoResult& r) {
  REQUIRE(r.stego.data.same_shape(cover.data));
  for (std::size_t k = 0; k < cover.data.size(); ++k) {
    CHECK(r.stego.data[k] - cover.data[k] == r.mods[k]);
    CHECK(std::abs(r.mods[k]) <= 1);
  }
}

}  // namespace

TEST_CASE("adjust_costs divides the chosen direction by alpha") {
  const CostPair c(Grid<double>(2, 2, 3.0), Grid<double>(2, 2, 3.0));
  const std::vector<std::size_t> all = {0, 1, 2, 3};
  const auto up = pipeline::adjust_costs(c, polarity(2, 2, {1, 0, -1, 0}), 1.5, all);
  CHECK(up.plus[0] == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(up.minus[0] == 3.0);
  CHECK(up.plus[1] == 3.0);
  CHECK(up.minus[1] == 3.0);
  CHECK(up.plus[2] == 3.0);
  CHECK(up.minus[2] == doctest::Approx(2.0).epsilon(1e-15));

  const auto none = pipeline::adjust_costs(c, polarity(2, 2, {0, 0, 0, 0}), 1.5, all);
  CHECK(none == c);

  // Elements outside the listed sublattice are untouched even with gamma set.
  const std::vector<std::size_t> only_three = {3};
  const auto partial = pipeline::adjust_costs(c, polarity(2, 2, {1, 1, 1, 1}), 2.0, only_three);
  CHECK(partial.plus[0] == 3.0);
  CHECK(partial.plus[3] == 1.5);

  CostPair wet = c;
  wet.plus[0] = kWetCost;
  CHECK(pipeline::adjust_costs(wet, polarity(2, 2, {1, 0, 0, 0}), 1.5, all).plus[0] == kWetCost);

  CHECK_THROWS_AS(pipeline::adjust_costs(c, polarity(2, 2, {1, 0, 0, 0}), 1.0, all), Error);
  CHECK_THROWS_AS(pipeline::adjust_costs(c, polarity(4, 1, {1, 0, 0, 0}), 1.5, all), Error);
}

TEST_CASE("adjust_costs agrees with an element-wise oracle") {
  Rng rng(44);
  for (int trial = 0; trial < 50; ++trial) {
    const CostPair c = testing::random_costs(rng, 9, 7, 0.1);
    const auto g = testing::random_mods(rng, 9, 7);
    const double alpha = 1.0 + 5.0 * rng.uniform() + 1e-3;
    const auto members = lattice::decompose(9, 7, lattice::SchemeKind::Spatial2x2).members(trial % 4);
    const auto out = pipeline::adjust_costs(c, {g, 0}, alpha, members);
    for (std::size_t k = 0; k < c.plus.size(); ++k) {
      const bool member = std::binary_search(members.begin(), members.end(), k);
      double plus = c.plus[k];
      double minus = c.minus[k];
      if (member && g[k] == 1 && !is_wet(plus)) plus /= alpha;
      if (member && g[k] == -1 && !is_wet(minus)) minus /= alpha;
      CHECK(out.plus[k] == plus);
      CHECK(out.minus[k] == minus);
    }
  }
}

TEST_CASE("neighbor modification sums respect the border") {
  ModificationMap m(3, 3, std::vector<std::int8_t>{1, 1, 0, 1, 0, -1, 0, -1, -1});
  CHECK(pipeline::neighbor_modification_sum(m, {1, 1}) == 0);
  CHECK(pipeline::neighbor_modification_sum(m, {0, 0}) == 2);
  CHECK(pipeline::neighbor_modification_sum(m, {2, 2}) == -2);
  CHECK(pipeline::neighbor_modification_sum(m, {0, 2}) == 0);
}

TEST_CASE("CMD examples") {
  const CostPair c(Grid<double>(3, 3, 9.0), Grid<double>(3, 3, 9.0));
  const Coord centre{1, 1};

  ModificationMap two(3, 3);
  two(0, 1) = 1;
  two(1, 0) = 1;
  auto out = pipeline::cmd_adjust(c, two, 9.0, centre);
  CHECK(out.plus(1, 1) == 1.0);
  CHECK(out.minus(1, 1) == 9.0);

  ModificationMap zero(3, 3);
  zero(0, 1) = 1;
  zero(1, 0) = -1;
  CHECK(pipeline::cmd_adjust(c, zero, 9.0, centre) == c);

  ModificationMap one(3, 3);
  one(0, 1) = 1;
  CHECK(pipeline::cmd_adjust(c, one, 9.0, centre) == c);

  ModificationMap minus3(3, 3);
  minus3(0, 1) = -1;
  minus3(1, 0) = -1;
  minus3(2, 1) = -1;
  out = pipeline::cmd_adjust(c, minus3, 9.0, centre);
  CHECK(out.plus(1, 1) == 9.0);
  CHECK(out.minus(1, 1) == 1.0);

  // Only the requested position changes.
  CHECK(out.minus(0, 0) == 9.0);
  CHECK_THROWS_AS(pipeline::cmd_adjust(c, two, 9.0, {3, 0}), Error);
  CHECK_THROWS_AS(pipeline::cmd_adjust(c, two, 0.5, centre), Error);
}

TEST_CASE("reward examples") {
  const mcts::Budget b;
  const PixelMatrix img{Grid<double>(2, 2, 10.0), Domain::Spatial};
  env::FunctionEnvironment good([](const PixelMatrix&) { return 0.7; });
  const auto up = pipeline::reward(good, img, 0.5, b);
  CHECK(up.confidence == 0.7);
  CHECK(up.r == doctest::Approx(0.2).epsilon(1e-12));
  CHECK(up.scaled == doctest::Approx(2.0).epsilon(1e-12));

  env::FunctionEnvironment bad([](const PixelMatrix&) { return 0.3; });
  const auto down = pipeline::reward(bad, img, 0.5, b);
  CHECK(down.r == doctest::Approx(-0.2).epsilon(1e-12));
  CHECK(down.scaled == doctest::Approx(-0.2).epsilon(1e-12));

  env::FunctionEnvironment broken([](const PixelMatrix&) { return 1.5; });
  CHECK_THROWS_AS(pipeline::reward(broken, img, 0.5, b), Error);
}

TEST_CASE("termination names") {
  CHECK(pipeline::termination_name(pipeline::Termination::MaxSearches) == "max_searches");
  CHECK(pipeline::termination_name(pipeline::Termination::ConfidenceThreshold) == "confidence_threshold");
}

TEST_CASE("plain embedding hits the payload and changes only by +-1") {
  Rng rng(71);
  const PixelMatrix cover = testing::random_image(rng, 32, 32, 1, 254);
  const auto plain = pipeline::embed_plain(cover, 0.4 * 1024, cost::hill_cost(cover), 3);
  check_stego_matches_mods(cover, plain);
  CHECK(simulator::change_rate(plain.mods) > 0.0);
  CHECK(pipeline::embed_plain(cover, 0.4 * 1024, cost::hill_cost(cover), 3).mods == plain.mods);

  const auto none = pipeline::embed_plain(cover, 0.0, cost::hill_cost(cover), 3);
  CHECK(none.stego == cover);
}

TEST_CASE("CMD embedding") {
  Rng rng(72);
  const PixelMatrix cover = testing::random_image(rng, 32, 32, 1, 254);
  const CostPair c = cost::hill_cost(cover);
  const auto out = pipeline::embed_cmd(cover, 0.4 * 1024, c, lattice::SchemeKind::Spatial2x2, 9.0, 3);
  check_stego_matches_mods(cover, out);
  CHECK(simulator::change_rate(out.mods) > 0.0);
  CHECK_THROWS_AS(pipeline::embed_cmd(cover, 100, c, lattice::SchemeKind::Spatial2x2, 1.0, 3), Error);
  CHECK(pipeline::embed_cmd(cover, 0.0, c, lattice::SchemeKind::Spatial2x2, 9.0, 3).stego == cover);
}

TEST_CASE("zero payload leaves the cover untouched with zero top reward") {
  Rng rng(1);
  const PixelMatrix cover = testing::random_image(rng, 8, 8, 1, 254);
  env::FunctionEnvironment env(testing::hashed_confidence);
  const auto out = pipeline::embed(cover, small_plan(0.0, 8, 8), env);
  CHECK(out.stego == cover);
  REQUIRE(out.per_sublattice.size() == 3);
  for (const auto& t : out.per_sublattice) CHECK(t.r_top == 0.0);
}

TEST_CASE("exhaustive oracle on a 4x4 cover") {
  Rng rng(2024);
  int sampled_optimum = 0;
  for (int trial = 0; trial < 10; ++trial) {
    const PixelMatrix cover = testing::random_image(rng, 4, 4, 20, 230);
    EmbedPlan plan = small_plan(0.4, 4, 4, 200);
    plan.seed = 100 + static_cast<std::uint64_t>(trial);
    plan.resample_each_search = false;
    plan.budget.confidence_threshold = 0.999;  // hashed scores stay below 0.95
    const auto [result, playouts] = testing::run_recorded(cover, plan);
    check_stego_matches_mods(cover, result);
    const auto checks = testing::exhaustive_oracle(cover, plan, result, playouts);
    REQUIRE(checks.size() == 3);
    for (const auto& c : checks) {
      CAPTURE(trial);
      CAPTURE(c.sublattice);
      CHECK(c.rewards_match_table);
      CHECK(c.r_top == c.performed_max);
      CHECK(c.r_top <= c.exhaustive_max);
      if (c.optimum_sampled) {
        CHECK(c.r_top == c.exhaustive_max);
        ++sampled_optimum;
      }
    }
  }
  // 200 searches over 81 terminals: the optimum is found almost always.
  CHECK(sampled_optimum >= 27);
}

TEST_CASE("early stop at the confidence threshold") {
  Rng rng(3);
  const PixelMatrix cover = testing::random_image(rng, 16, 16, 1, 254);
  env::FunctionEnvironment env([](const PixelMatrix&) { return 0.99; });
  const auto out = pipeline::embed(cover, small_plan(0.4, 16, 16, 50), env);
  REQUIRE(out.per_sublattice.size() == 3);
  for (const auto& t : out.per_sublattice) {
    CHECK(t.searches_used == 1);
    CHECK(t.terminated_by == pipeline::Termination::ConfidenceThreshold);
  }
  CHECK(out.final_confidence == 0.99);
}

TEST_CASE("a constant environment keeps the first sample of each sublattice") {
  Rng rng(4);
  const PixelMatrix cover = testing::random_image(rng, 16, 16, 1, 254);
  env::FunctionEnvironment env([](const PixelMatrix&) { return 0.5; });
  std::vector<PixelMatrix> firsts(4);
  const auto out = pipeline::embed(cover, small_plan(0.4, 16, 16, 12), env, [&](const pipeline::SearchEvent& e) {
    if (e.search_index == 0) firsts[static_cast<std::size_t>(e.sublattice)] = e.candidate;
  });
  REQUIRE(out.per_sublattice.size() == 3);
  for (const auto& t : out.per_sublattice) {
    CHECK(t.r_top == 0.0);
    CHECK(t.searches_used == 12);
    CHECK(t.terminated_by == pipeline::Termination::MaxSearches);
  }
  CHECK(out.stego == firsts[3]);
}

TEST_CASE("embedding is deterministic in the seed") {
  Rng rng(5);
  const PixelMatrix cover = testing::random_image(rng, 16, 16, 1, 254);
  env::FunctionEnvironment env(testing::hashed_confidence);
  EmbedPlan plan = small_plan(0.4, 16, 16, 10);
  const auto a = pipeline::embed(cover, plan, env);
  const auto b = pipeline::embed(cover, plan, env);
  CHECK(a.stego == b.stego);
  CHECK(a.mods == b.mods);
  for (std::size_t t = 0; t < a.per_sublattice.size(); ++t) CHECK(a.per_sublattice[t].rewards == b.per_sublattice[t].rewards);
  plan.seed = 6;
  CHECK_FALSE(pipeline::embed(cover, plan, env).mods == a.mods);
}

TEST_CASE("search traces: best-so-far is the running maximum, stego differs only at mods") {
  Rng rng(6);
  for (int trial = 0; trial < 6; ++trial) {
    const PixelMatrix cover = testing::random_image(rng, 16, 16, 0, 255);
    env::FunctionEnvironment env(testing::hashed_confidence);
    EmbedPlan plan = small_plan(0.1 + 0.3 * rng.uniform(), 16, 16, 20);
    plan.seed = static_cast<std::uint64_t>(trial);
    plan.budget.confidence_threshold = 0.999;
    plan.adjust_first_sublattice = trial % 2 == 1;
    const auto out = pipeline::embed(cover, plan, env);
    check_stego_matches_mods(cover, out);
    CHECK(out.per_sublattice.size() == (plan.adjust_first_sublattice ? 4u : 3u));
    for (const auto& t : out.per_sublattice) {
      REQUIRE(t.rewards.size() == static_cast<std::size_t>(t.searches_used));
      double best = t.rewards.front();
      for (std::size_t k = 0; k < t.rewards.size(); ++k) {
        best = std::max(best, t.rewards[k]);
        CHECK(t.r_top_history[k] == best);
        if (k > 0) CHECK(t.r_top_history[k] >= t.r_top_history[k - 1]);
      }
      CHECK(t.r_top == best);
    }
    CHECK(out.final_confidence == testing::hashed_confidence(out.stego));
  }
}

TEST_CASE("external costs drive every sublattice") {
  Rng rng(7);
  const PixelMatrix cover = testing::random_image(rng, 8, 8, 1, 254);
  env::FunctionEnvironment env(testing::hashed_confidence);
  EmbedPlan plan = small_plan(0.4, 8, 8, 4);
  plan.cost_source = pipeline::CostSource::ExternalFile;
  CHECK_THROWS_AS(pipeline::embed(cover, plan, env), Error);

  // Changes allowed only in the top two rows (every sublattice has a share).
  CostPair c(Grid<double>(8, 8, kWetCost), Grid<double>(8, 8, kWetCost));
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 8; ++j) {
      c.plus(i, j) = 1.0;
      c.minus(i, j) = 1.0;
    }
  }
  plan.external_cost = c;
  plan.payload_bits_total = 2.0;
  const auto out = pipeline::embed(cover, plan, env);
  for (int i = 2; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) CHECK(out.mods(i, j) == 0);
  }
  plan.external_cost = CostPair(Grid<double>(4, 4, 1.0), Grid<double>(4, 4, 1.0));
  CHECK_THROWS_AS(pipeline::embed(cover, plan, env), Error);
}

TEST_CASE("invalid budgets are rejected before any work") {
  Rng rng(8);
  const PixelMatrix cover = testing::random_image(rng, 8, 8);
  int calls = 0;
  env::FunctionEnvironment env([&](const PixelMatrix&) {
    ++calls;
    return 0.5;
  });
  EmbedPlan plan = small_plan(0.4, 8, 8);
  plan.budget.alpha = 0.9;
  CHECK_THROWS_AS(pipeline::embed(cover, plan, env), Error);
  CHECK(calls == 0);
}
