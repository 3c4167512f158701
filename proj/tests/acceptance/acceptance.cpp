// Acceptance run: one PASS/FAIL line per criterion on stdout, progress on
// stderr. Exits 1 when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"
#include "mctsteg/corpus.hpp"
#include "mctsteg/cost.hpp"
#include "mctsteg/media.hpp"
#include "mctsteg/metrics.hpp"
#include "mctsteg/pipeline.hpp"
#include "mctsteg/simulator.hpp"
#include "support/exhaustive.hpp"
#include "support/testing.hpp"

using namespace mctsteg;
namespace fs = std::filesystem;

namespace {

// Tolerances and budgets.
constexpr double kExact = 1e-12;
constexpr double kEntropyTol = 1e-3;
constexpr double kScaleTol = 1e-9;
constexpr int kEntropyTrials = 200;
constexpr int kOracleCovers = 10;
constexpr int kOracleSearches = 200;
constexpr int kScriptedSearches = 20;
constexpr double kBpp = 0.4;
constexpr int kCorpusSide = 128;
constexpr std::size_t kEnvPairs = 500;
constexpr std::size_t kDetectorPairs = 500;
constexpr std::size_t kTestCovers = 300;
constexpr double kChangeRateSlack = 0.01;
constexpr double kSigmaMultiple = 3.0;
constexpr double kEnvL2 = 0.003;

// Disjoint seed bases for the three corpora.
constexpr std::uint64_t kEnvSeed = 0xE17;
constexpr std::uint64_t kDetectorSeed = 0xDE7;
constexpr std::uint64_t kTestSeed = 0x7E57;

struct Verdict {
  bool pass = true;
  std::string detail;
};

class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    if (!ok) ++failed_;
    ++total_;
  }
  void near(double got, double want, double tol, const std::string& what) {
    std::ostringstream s;
    s << what << ": got " << got << ", want " << want;
    expect(std::abs(got - want) <= tol, s.str());
  }
  Verdict verdict(const std::string& summary) const {
    Verdict v;
    v.pass = failed_ == 0;
    std::ostringstream s;
    s << summary << "; " << (total_ - failed_) << "/" << total_ << " checks";
    for (const auto& f : failures_) s << "; " << f;
    v.detail = s.str();
    return v;
  }

 private:
  std::size_t total_ = 0;
  std::size_t failed_ = 0;
  std::vector<std::string> failures_;
};

int failures = 0;

void report(const std::string& name, double limit_seconds, const std::function<Verdict()>& fn) {
  std::fprintf(stderr, "running %s...\n", name.c_str());
  const auto start = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = fn();
  } catch (const std::exception& e) {
    v = {false, std::string("threw: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (secs > limit_seconds) {
    v.pass = false;
    v.detail += "; exceeded the " + std::to_string(static_cast<int>(limit_seconds)) + " s runtime limit";
  }
  if (!v.pass) ++failures;
  std::printf("%s %s (%.2f s) %s\n", v.pass ? "PASS" : "FAIL", name.c_str(), secs, v.detail.c_str());
  std::fflush(stdout);
}

// --- formula suite ----------------------------------------------------------

Verdict formula_suite() {
  Checker c;
  c.expect(cost::indicator(0) == 1 && cost::indicator(1) == 0 && cost::indicator(-1) == 0, "delta");

  const CostPair rho(Grid<double>(2, 1, std::vector<double>{2, 3}), Grid<double>(2, 1, std::vector<double>{5, 7}));
  c.near(cost::distortion(rho, ModificationMap(2, 1, std::vector<std::int8_t>{1, -1})), 9.0, kExact, "distortion");
  c.near(cost::distortion(rho, ModificationMap(2, 1)), 0.0, kExact, "zero distortion");

  const CostPair three(Grid<double>(2, 1, 3.0), Grid<double>(2, 1, 3.0));
  const mcts::PolarityMatrix g{Grid<std::int8_t>(2, 1, std::vector<std::int8_t>{1, -1}), 2};
  const std::vector<std::size_t> both = {0, 1};
  const auto adj = pipeline::adjust_costs(three, g, 1.5, both);
  c.near(adj.plus[0], 2.0, kExact, "omega+ with alpha 1.5");
  c.near(adj.minus[0], 3.0, kExact, "omega- untouched");
  c.near(adj.minus[1], 2.0, kExact, "omega- with alpha 1.5");
  c.near(adj.plus[1], 3.0, kExact, "omega+ untouched");

  const mcts::Budget budget;
  const PixelMatrix img{Grid<double>(2, 2, 9.0), Domain::Spatial};
  env::FunctionEnvironment good([](const PixelMatrix&) { return 0.7; });
  const auto r = pipeline::reward(good, img, 0.5, budget);
  c.near(r.r, 0.2, kExact, "reward");
  c.near(r.scaled, 2.0, kExact, "scaled positive reward");
  c.near(mcts::scale_reward(0.2, budget), 2.0, kExact, "R=0.2 scaling");
  c.near(mcts::scale_reward(-0.2, budget), -0.2, kExact, "R=-0.2 scaling");
  c.near(mcts::uct_score(3.0, 2, 10, 1.414), 1.5 + 1.414 * std::sqrt(std::log(10.0) / 2.0), kExact, "UCT");
  return c.verdict("distortion, adjustment, reward and scaling");
}

// --- simulator --------------------------------------------------------------

Verdict simulator_entropy() {
  Checker c;
  Rng rng(20240);
  double worst = 0.0;
  for (int trial = 0; trial < kEntropyTrials; ++trial) {
    const int w = 2 + static_cast<int>(rng.below(40));
    const int h = 2 + static_cast<int>(rng.below(40));
    const CostPair cost = testing::random_costs(rng, w, h, trial % 4 == 0 ? 0.15 : 0.0);
    const double payload = simulator::capacity_bits(cost, simulator::all_elements(cost.plus.size())) * rng.uniform();
    const auto p = simulator::fit_probabilities(cost, payload);
    const double err = std::abs(p.realized_entropy_bits - payload);
    worst = std::max(worst, err);
    c.expect(err <= kEntropyTol, "entropy trial " + std::to_string(trial));

    CostPair scaled = cost;
    const double factor = std::exp(8.0 * rng.uniform() - 4.0);
    for (double& v : scaled.plus.values()) v = is_wet(v) ? v : v * factor;
    for (double& v : scaled.minus.values()) v = is_wet(v) ? v : v * factor;
    const auto q = simulator::fit_probabilities(scaled, payload);
    double drift = 0.0;
    for (std::size_t k = 0; k < cost.plus.size(); ++k) {
      drift = std::max({drift, std::abs(q.p_plus[k] - p.p_plus[k]), std::abs(q.p_minus[k] - p.p_minus[k])});
    }
    c.expect(drift <= kScaleTol, "scale invariance trial " + std::to_string(trial));

    const std::size_t k = rng.below(cost.plus.size());
    if (!is_wet(cost.plus[k])) {
      CostPair raised = cost;
      raised.plus[k] *= 1.0 + 4.0 * rng.uniform();
      c.expect(simulator::fit_probabilities(raised, payload).p_plus[k] <= p.p_plus[k] + kExact,
               "monotonicity trial " + std::to_string(trial));
    }
  }
  std::ostringstream s;
  s << kEntropyTrials << " maps, worst entropy error " << worst << " bits";
  return c.verdict(s.str());
}

// --- search -----------------------------------------------------------------

Verdict exhaustive_oracle() {
  Checker c;
  Rng rng(77);
  int sampled = 0;
  int sublattices = 0;
  for (int trial = 0; trial < kOracleCovers; ++trial) {
    const PixelMatrix cover = testing::random_image(rng, 4, 4, 20, 230);
    pipeline::EmbedPlan plan;
    plan.payload_bits_total = kBpp * 16;
    plan.budget.max_searches = kOracleSearches;
    plan.budget.confidence_threshold = 0.999;
    plan.seed = 500 + static_cast<std::uint64_t>(trial);
    plan.resample_each_search = false;
    const auto [result, playouts] = testing::run_recorded(cover, plan);
    for (const auto& x : testing::exhaustive_oracle(cover, plan, result, playouts)) {
      const std::string tag = "cover " + std::to_string(trial) + " sublattice " + std::to_string(x.sublattice);
      ++sublattices;
      c.expect(x.rewards_match_table, tag + ": playout reward differs from the table");
      c.expect(x.r_top == x.performed_max, tag + ": reported best is not the max over playouts");
      c.expect(x.r_top <= x.exhaustive_max, tag + ": best exceeds the exhaustive maximum");
      if (x.optimum_sampled) {
        ++sampled;
        c.expect(x.r_top == x.exhaustive_max, tag + ": optimum sampled but not reported");
      }
    }
  }
  c.expect(sampled > 0, "the optimum was never sampled");
  std::ostringstream s;
  s << "optimum reached in " << sampled << "/" << sublattices << " sublattices at M=" << kOracleSearches;
  return c.verdict(s.str());
}

Verdict structural_invariants() {
  Checker c;
  Rng rewards(4242);
  for (std::size_t depth : {1u, 3u, 4u, 6u}) {
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
      mcts::SearchTree tree(depth, seed);
      std::map<mcts::NodeId, double> r_sum;
      std::map<mcts::NodeId, std::uint32_t> visits;
      for (int k = 0; k < kScriptedSearches; ++k) {
        const auto leaf = tree.search();
        const double scaled = mcts::scale_reward(2.0 * rewards.uniform() - 1.0, mcts::Budget{});
        tree.backpropagate(leaf, scaled);
        for (auto v = leaf; v != tree.root(); v = tree.node(v).parent) {
          r_sum[v] += scaled;
          ++visits[v];
        }
      }
      c.expect(tree.node(tree.root()).n == kScriptedSearches, "root visit count");
      for (mcts::NodeId id = 0; id < static_cast<mcts::NodeId>(tree.node_count()); ++id) {
        const auto& v = tree.node(id);
        int arity = 0;
        std::uint32_t child_n = 0;
        double child_r = 0.0;
        for (auto ch : v.children) {
          if (ch == mcts::kNoNode) continue;
          ++arity;
          child_n += tree.node(ch).n;
          child_r += tree.node(ch).r;
        }
        c.expect(arity <= 3, "arity");
        if (id != tree.root()) {
          c.expect(v.n == visits[id], "visit accounting");
          c.expect(std::abs(v.r - r_sum[id]) <= kExact, "path-sum");
          if (!tree.is_leaf(id)) {
            c.expect(child_n == v.n, "children visits");
            c.expect(std::abs(child_r - v.r) <= kExact, "children reward conservation");
          }
        }
      }
    }
  }
  Rng rng(99);
  for (int trial = 0; trial < 8; ++trial) {
    const PixelMatrix cover = testing::random_image(rng, 16, 16);
    env::FunctionEnvironment e(testing::hashed_confidence);
    pipeline::EmbedPlan plan;
    plan.payload_bits_total = kBpp * 256;
    plan.budget.max_searches = kScriptedSearches;
    plan.budget.confidence_threshold = 0.999;
    plan.seed = static_cast<std::uint64_t>(trial);
    for (const auto& t : pipeline::embed(cover, plan, e).per_sublattice) {
      for (std::size_t k = 1; k < t.r_top_history.size(); ++k) {
        c.expect(t.r_top_history[k] >= t.r_top_history[k - 1], "R_top best-so-far monotone");
      }
    }
  }
  return c.verdict("scripted 20-search runs at depths 1, 3, 4, 6");
}

Verdict budget_behavior() {
  Checker c;
  const PixelMatrix cover = corpus::generate_cover(32, 3);
  pipeline::EmbedPlan plan;
  plan.payload_bits_total = kBpp * 32 * 32;
  plan.seed = 1;
  c.expect(plan.budget.max_searches == 128, "default M is 128");

  env::FunctionEnvironment high([](const PixelMatrix&) { return 0.98; });
  for (const auto& t : pipeline::embed(cover, plan, high).per_sublattice) {
    c.expect(t.searches_used == 1, "one search when confidence >= 0.98");
    c.expect(t.terminated_by == pipeline::Termination::ConfidenceThreshold, "terminated by threshold");
  }
  env::FunctionEnvironment low([](const PixelMatrix& img) { return 0.97 * testing::hashed_confidence(img); });
  const auto r = pipeline::embed(cover, plan, low);
  c.expect(r.per_sublattice.size() == 3, "three searched sublattices");
  for (const auto& t : r.per_sublattice) {
    c.expect(t.searches_used == 128, "128 searches when confidence stays below 0.98");
    c.expect(t.terminated_by == pipeline::Termination::MaxSearches, "terminated by budget");
  }
  return c.verdict("32x32 cover, threshold 0.98, M=128");
}

// --- corpus-scale criteria ----------------------------------------------------

struct Pairs {
  std::vector<env::FeatureVector> covers;
  std::vector<env::FeatureVector> stegos;
};

Pairs plain_pairs(std::uint64_t base, std::size_t n) {
  Pairs p;
  for (std::size_t k = 0; k < n; ++k) {
    const PixelMatrix img = corpus::generate_cover(kCorpusSide, stream_seed(base, k));
    const auto s = pipeline::embed_plain(img, kBpp * img.data.size(), cost::hill_cost(img), stream_seed(base, k, 1));
    p.covers.push_back(env::extract_features(img));
    p.stegos.push_back(env::extract_features(s.stego));
  }
  return p;
}

env::LinearModel train_model(std::uint64_t base, std::size_t n, const char* label) {
  const Pairs p = plain_pairs(base, n);
  env::TrainOptions opt;
  opt.l2 = kEnvL2;
  opt.seed = base;
  const auto r = env::train_on_features(p.covers, p.stegos, opt);
  std::fprintf(stderr, "%s: %zu pairs, validation accuracy %.3f\n", label, n, r.validation_accuracy);
  return r.model;
}

struct Bench {
  std::vector<PixelMatrix> covers;
  std::vector<pipeline::StegoResult> plain;
  std::vector<pipeline::StegoResult> cmd;
  std::vector<pipeline::StegoResult> search;
};

Bench run_bench(env::Environment& environment) {
  Bench b;
  for (std::size_t k = 0; k < kTestCovers; ++k) {
    const PixelMatrix img = corpus::generate_cover(kCorpusSide, stream_seed(kTestSeed, k));
    const CostPair cost = cost::hill_cost(img);
    const double bits = kBpp * img.data.size();
    const std::uint64_t seed = stream_seed(kTestSeed, k, 1);
    b.plain.push_back(pipeline::embed_plain(img, bits, cost, seed));
    b.cmd.push_back(pipeline::embed_cmd(img, bits, cost, lattice::SchemeKind::Spatial2x2, 9.0, seed));
    pipeline::EmbedPlan plan;
    plan.payload_bits_total = bits;
    plan.seed = seed;
    b.search.push_back(pipeline::embed(img, plan, environment));
    b.covers.push_back(img);
    if ((k + 1) % 25 == 0) std::fprintf(stderr, "  embedded %zu/%zu test covers\n", k + 1, kTestCovers);
  }
  return b;
}

double mean_of(const std::vector<pipeline::StegoResult>& rs, const std::function<double(const pipeline::StegoResult&)>& f) {
  double s = 0.0;
  for (const auto& r : rs) s += f(r);
  return s / static_cast<double>(rs.size());
}

Verdict fcc_direction(const Bench& b) {
  const auto f2 = [](const pipeline::StegoResult& r) { return metrics::fcc(r.mods, 2); };
  const auto cr = [](const pipeline::StegoResult& r) { return simulator::change_rate(r.mods); };
  const double plain_f2 = mean_of(b.plain, f2);
  const double search_f2 = mean_of(b.search, f2);
  const double cmd_f2 = mean_of(b.cmd, f2);
  const double plain_cr = mean_of(b.plain, cr);
  const double search_cr = mean_of(b.search, cr);
  Checker c;
  c.expect(search_f2 > plain_f2, "MCTSteg F(2) is not above plain HILL");
  c.expect(search_cr <= plain_cr + kChangeRateSlack, "MCTSteg change rate exceeds plain HILL + 0.01");
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "%zu covers %dx%d at %.1f bpp: F(2) plain %.4f%% mctsteg %.4f%% (cmd %.4f%%), change rate plain "
                "%.3f%% mctsteg %.3f%%",
                b.covers.size(), kCorpusSide, kCorpusSide, kBpp, 100 * plain_f2, 100 * search_f2, 100 * cmd_f2,
                100 * plain_cr, 100 * search_cr);
  return c.verdict(buf);
}

Verdict pe_sanity(const Bench& b, env::Environment& detector) {
  std::vector<PixelMatrix> plain;
  std::vector<PixelMatrix> search;
  for (const auto& r : b.plain) plain.push_back(r.stego);
  for (const auto& r : b.search) search.push_back(r.stego);
  const double pe_plain = metrics::detector_p_e(detector, b.covers, plain);
  const double pe_search = metrics::detector_p_e(detector, b.covers, search);
  const double sigma = std::sqrt(0.125 / static_cast<double>(b.covers.size()));
  Checker c;
  c.expect(pe_plain < 0.5 - kSigmaMultiple * sigma, "detector does not beat chance on plain HILL");
  c.expect(pe_search >= pe_plain, "MCTSteg P_E is below plain HILL");
  char buf[256];
  std::snprintf(buf, sizeof buf, "held-out detector (%zu pairs): P_E plain %.4f, mctsteg %.4f, chance bound %.4f",
                kDetectorPairs, pe_plain, pe_search, 0.5 - kSigmaMultiple * sigma);
  return c.verdict(buf);
}

Verdict reproducibility(const fs::path& model) {
  const auto dir = testing::scratch_dir("accept-repro");
  const PixelMatrix cover = corpus::generate_cover(kCorpusSide, 12345);
  media::write_pgm(cover, dir / "cover.pgm");
  media::write_manifest({"cover.pgm"}, dir / "covers.txt");
  std::vector<std::string> outputs;
  for (const char* out : {"a", "b"}) {
    const std::vector<std::string> args = {"mctsteg", "embed", "--covers", (dir / "covers.txt").string(), "--out",
                                           (dir / out).string(), "--env", "builtin:" + model.string(), "--seed", "7"};
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream o;
    std::ostringstream e;
    if (cli::run(static_cast<int>(argv.size()), argv.data(), o, e) != 0) return {false, "embed failed: " + e.str()};
  }
  Checker c;
  c.expect(media::read_file(dir / "a" / "cover.pgm") == media::read_file(dir / "b" / "cover.pgm"), "stego bytes differ");
  c.expect(media::read_file(dir / "a" / "cover.mods") == media::read_file(dir / "b" / "cover.mods"), "mods bytes differ");
  c.expect(media::read_file(dir / "a" / "trace.jsonl") == media::read_file(dir / "b" / "trace.jsonl"), "trace bytes differ");
  return c.verdict("one 128x128 cover embedded twice through the CLI");
}

}  // namespace

int main() {
  report("formula-unit-suite", 1, formula_suite);
  report("simulator-entropy", 30, simulator_entropy);
  report("mcts-exhaustive-oracle", 10, exhaustive_oracle);
  report("mcts-structural-invariants", 5, structural_invariants);
  report("budget-behavior", 60, budget_behavior);

  std::fprintf(stderr, "training the environment and the held-out detector...\n");
  const auto env_model = std::make_shared<const env::LinearModel>(train_model(kEnvSeed, kEnvPairs, "environment"));
  const auto det_model = std::make_shared<const env::LinearModel>(train_model(kDetectorSeed, kDetectorPairs, "detector"));
  env::BuiltinEnvironment environment(env_model);
  env::BuiltinEnvironment detector(det_model);

  const auto dir = testing::scratch_dir("accept");
  env::save_model(*env_model, dir / "env.linm");
  report("reproducibility", 600, [&] { return reproducibility(dir / "env.linm"); });

  const auto start = std::chrono::steady_clock::now();
  const Bench bench = run_bench(environment);
  const double bench_secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::fprintf(stderr, "benchmark embedding took %.1f s\n", bench_secs);
  report("fcc-direction", 2 * 3600 - bench_secs, [&] { return fcc_direction(bench); });
  report("pe-sanity", 3 * 3600 - bench_secs, [&] { return pe_sanity(bench, detector); });

  return failures == 0 ? 0 : 1;
}
