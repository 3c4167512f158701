#include "cli.hpp"

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <json.hpp>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "mctsteg/corpus.hpp"
#include "mctsteg/cost.hpp"
#include "mctsteg/media.hpp"
#include "mctsteg/metrics.hpp"
#include "mctsteg/pipeline.hpp"
#include "mctsteg/remote.hpp"
#include "mctsteg/simulator.hpp"

namespace mctsteg::cli {

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

struct RunConfig {
  std::string covers;
  std::vector<std::string> stegos;
  std::string out;
  std::string env;
  std::string detector;
  std::string model;
  std::string scheme = "spatial2x2";
  std::string cost = "hill";
  std::string method = "plain";
  double payload = 0.4;
  double alpha = 1.5;
  double cmd_alpha = 9.0;
  int max_searches = 128;
  double threshold = 0.98;
  double uct_c = std::sqrt(2.0);
  std::uint64_t seed = 1;
  int jobs = 1;
  bool adjust_first = false;
  int epochs = 200;
  double learning_rate = 0.05;
  double l2 = 1e-3;
  double validation = 0.2;
  int count = 100;
  int size = 256;
};

// A failure tied to one manifest entry.
struct ImageFailure {
  std::string code;
  std::string message;
  std::string image;
};

Json error_record(std::string_view code, std::string_view message, std::string_view image = {}) {
  Json e = {{"code", code}, {"message", message}};
  if (!image.empty()) e["image"] = image;
  return Json{{"error", e}};
}

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
  auto log = std::make_shared<spdlog::logger>("mctsteg", std::make_shared<spdlog::sinks::ostream_sink_mt>(err));
  log->set_pattern("[%l] %v");
  log->set_level(spdlog::level::warn);
  if (const char* level = std::getenv("MCTSTEG_LOG")) {
    const auto parsed = spdlog::level::from_str(level);
    if (parsed == spdlog::level::off && std::string_view(level) != "off") {
      log->warn("MCTSTEG_LOG={} is not a log level; using warn", level);
    } else {
      log->set_level(parsed);
    }
  }
  return log;
}

void require(const std::string& value, const char* flag) {
  if (value.empty()) throw Error(Errc::Config, std::string("missing required setting ") + flag);
}

lattice::SchemeKind parse_scheme(const std::string& s) {
  if (s == "spatial2x2") return lattice::SchemeKind::Spatial2x2;
  if (s == "jpegblock") return lattice::SchemeKind::JpegBlockParity;
  throw Error(Errc::Config, "unknown scheme '" + s + "'");
}

// "hill", or "file:<dir>" with one <stem>.cost per cover.
struct CostSource {
  std::optional<fs::path> dir;

  CostPair load(const fs::path& cover, const PixelMatrix& img) const {
    if (!dir) return cost::hill_cost(img);
    return media::read_cost_map(*dir / (cover.stem().string() + ".cost"));
  }
};

CostSource parse_cost(const std::string& s) {
  if (s == "hill") return {};
  if (s.rfind("file:", 0) == 0 && s.size() > 5) return {fs::path(s.substr(5))};
  throw Error(Errc::Config, "cost must be hill or file:<dir>, got '" + s + "'");
}

void validate(const RunConfig& c) {
  if (!(c.payload >= 0.0 && c.payload <= std::log2(3.0))) throw Error(Errc::InvalidArgument, "payload must lie in [0, log2 3] bits per element");
  if (c.jobs < 1) throw Error(Errc::InvalidArgument, "jobs must be positive");
  if (!(c.cmd_alpha > 1.0)) throw Error(Errc::InvalidArgument, "cmd-alpha must exceed 1");
  parse_scheme(c.scheme);
  parse_cost(c.cost);
}

mcts::Budget budget_of(const RunConfig& c) {
  mcts::Budget b;
  b.max_searches = c.max_searches;
  b.confidence_threshold = c.threshold;
  b.exploration_c = c.uct_c;
  b.alpha = c.alpha;
  b.validate();
  return b;
}

std::uint64_t image_seed(const RunConfig& c, std::size_t index) { return stream_seed(c.seed, index); }

double payload_bits(const RunConfig& c, const PixelMatrix& img) {
  return c.payload * static_cast<double>(img.data.size());
}

std::vector<fs::path> load_manifest(const std::string& path) {
  auto items = media::read_manifest(path);
  std::set<std::string> stems;
  for (const auto& p : items) {
    if (!stems.insert(p.stem().string()).second) {
      throw Error(Errc::Config, "manifest " + path + " has two entries named " + p.stem().string());
    }
  }
  return items;
}

std::string stego_name(const fs::path& cover, const PixelMatrix& img) {
  return cover.stem().string() + (img.domain == Domain::Jpeg ? ".pixf" : ".pgm");
}

// Runs fn(index, worker) over n items with `jobs` threads. Results keep
// manifest order; the first failure (lowest index) is rethrown.
template <class T>
std::vector<T> for_each_image(std::size_t n, int jobs, const std::vector<fs::path>& labels,
                              const std::function<T(std::size_t, int)>& fn) {
  std::vector<T> results(n);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex mu;
  std::optional<std::pair<std::size_t, ImageFailure>> failure;
  const auto body = [&](int worker) {
    while (!failed) {
      const std::size_t k = next++;
      if (k >= n) return;
      try {
        results[k] = fn(k, worker);
      } catch (const std::exception& e) {
        const auto* me = dynamic_cast<const Error*>(&e);
        ImageFailure f{me ? std::string(errc_name(me->code())) : "internal", e.what(), labels[k].string()};
        std::lock_guard lock(mu);
        if (!failure || k < failure->first) failure.emplace(k, std::move(f));
        failed = true;
      }
    }
  };
  const int width = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(jobs), std::max<std::size_t>(n, 1)));
  if (width <= 1) {
    body(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < width; ++w) pool.emplace_back(body, w);
    for (auto& t : pool) t.join();
  }
  if (failure) throw failure->second;
  return results;
}

std::vector<std::unique_ptr<env::Environment>> open_environments(const std::string& spec, int jobs) {
  std::vector<std::unique_ptr<env::Environment>> envs;
  for (int w = 0; w < jobs; ++w) envs.push_back(env::make_environment(spec));
  return envs;
}

Json trace_of(const pipeline::StegoResult& r) {
  Json subs = Json::array();
  for (const auto& t : r.per_sublattice) {
    subs.push_back({{"sublattice", t.sublattice},
                    {"searches_used", t.searches_used},
                    {"r_top", t.r_top},
                    {"terminated_by", pipeline::termination_name(t.terminated_by)}});
  }
  return Json{{"baseline_confidence", r.baseline_confidence},
              {"final_confidence", r.final_confidence},
              {"sublattices", subs}};
}

struct Written {
  std::string stego;
  std::string mods;
};

Written write_outputs(const fs::path& dir, const fs::path& cover, const pipeline::StegoResult& r) {
  Written w{stego_name(cover, r.stego), cover.stem().string() + ".mods"};
  media::write_image(r.stego, dir / w.stego);
  media::write_mod_map(r.mods, dir / w.mods);
  return w;
}

void write_lines(const fs::path& path, const std::vector<Json>& records) {
  std::string text;
  for (const auto& r : records) text += r.dump() + "\n";
  media::write_file(path, text);
}

ModificationMap mods_between(const PixelMatrix& cover, const PixelMatrix& stego) {
  if (!cover.data.same_shape(stego.data)) throw Error(Errc::DimensionMismatch, "stego and cover differ in size");
  ModificationMap m(cover.width(), cover.height());
  for (std::size_t k = 0; k < m.size(); ++k) {
    const double d = std::round(stego.data[k] - cover.data[k]);
    if (d < -1.0 || d > 1.0) throw Error(Errc::InvalidValue, "stego differs from its cover by more than 1");
    m[k] = static_cast<std::int8_t>(d);
  }
  return m;
}

struct Ctx {
  const RunConfig& c;
  std::ostream& out;
  spdlog::logger& log;
};

// --- embed / baseline ------------------------------------------------------

int cmd_embed(const Ctx& ctx) {
  const RunConfig& c = ctx.c;
  require(c.covers, "--covers");
  require(c.out, "--out");
  require(c.env, "--env");
  const auto budget = budget_of(c);
  const auto scheme = parse_scheme(c.scheme);
  const auto costs = parse_cost(c.cost);
  if (c.payload == 0.0) ctx.log.warn("payload is 0: stegos will equal their covers");
  const auto covers = load_manifest(c.covers);
  auto envs = open_environments(c.env, c.jobs);
  fs::create_directories(c.out);

  const auto records = for_each_image<Json>(covers.size(), c.jobs, covers, [&](std::size_t k, int worker) {
    const PixelMatrix img = media::read_image(covers[k]);
    pipeline::EmbedPlan plan;
    plan.payload_bits_total = payload_bits(c, img);
    plan.scheme = scheme;
    plan.budget = budget;
    plan.seed = image_seed(c, k);
    plan.adjust_first_sublattice = c.adjust_first;
    if (costs.dir) {
      plan.cost_source = pipeline::CostSource::ExternalFile;
      plan.external_cost = costs.load(covers[k], img);
    }
    const auto r = pipeline::embed(img, plan, *envs[static_cast<std::size_t>(worker)]);
    const auto w = write_outputs(c.out, covers[k], r);
    ctx.log.info("{}: change rate {:.4f}, confidence {:.4f} -> {:.4f}", covers[k].string(),
                 simulator::change_rate(r.mods), r.baseline_confidence, r.final_confidence);
    Json t = trace_of(r);
    t["index"] = k;
    t["cover"] = covers[k].string();
    t["stego"] = w.stego;
    t["mods"] = w.mods;
    t["method"] = "mctsteg";
    t["payload_bits"] = plan.payload_bits_total;
    t["change_rate"] = simulator::change_rate(r.mods);
    return t;
  });

  std::vector<std::string> names;
  for (const auto& r : records) names.push_back(r["stego"].get<std::string>());
  media::write_manifest(names, fs::path(c.out) / "stegos.txt");
  write_lines(fs::path(c.out) / "trace.jsonl", records);
  ctx.out << "embedded " << records.size() << " images into " << c.out << "\n";
  return 0;
}

pipeline::StegoResult run_baseline(const std::string& method, const PixelMatrix& img, double bits, const CostPair& cost,
                                   lattice::SchemeKind scheme, double alpha, std::uint64_t seed) {
  if (method == "plain") return pipeline::embed_plain(img, bits, cost, seed);
  return pipeline::embed_cmd(img, bits, cost, scheme, alpha, seed);
}

int cmd_baseline(const Ctx& ctx) {
  const RunConfig& c = ctx.c;
  require(c.covers, "--covers");
  require(c.out, "--out");
  if (!(c.alpha > 1.0)) throw Error(Errc::InvalidArgument, "alpha must exceed 1");
  const auto scheme = parse_scheme(c.scheme);
  const auto costs = parse_cost(c.cost);
  if (c.payload == 0.0) ctx.log.warn("payload is 0: stegos will equal their covers");
  const auto covers = load_manifest(c.covers);
  fs::create_directories(c.out);

  const auto records = for_each_image<Json>(covers.size(), c.jobs, covers, [&](std::size_t k, int) {
    const PixelMatrix img = media::read_image(covers[k]);
    const double bits = payload_bits(c, img);
    const auto r = run_baseline(c.method, img, bits, costs.load(covers[k], img), scheme, c.alpha, image_seed(c, k));
    const auto w = write_outputs(c.out, covers[k], r);
    return Json{{"index", k},           {"cover", covers[k].string()}, {"stego", w.stego},
                {"mods", w.mods},       {"method", c.method},          {"payload_bits", bits},
                {"change_rate", simulator::change_rate(r.mods)}};
  });

  std::vector<std::string> names;
  for (const auto& r : records) names.push_back(r["stego"].get<std::string>());
  media::write_manifest(names, fs::path(c.out) / "stegos.txt");
  write_lines(fs::path(c.out) / "trace.jsonl", records);
  ctx.out << "embedded " << records.size() << " images into " << c.out << " (" << c.method << ")\n";
  return 0;
}

// --- train-env -------------------------------------------------------------

int cmd_train_env(const Ctx& ctx) {
  const RunConfig& c = ctx.c;
  require(c.covers, "--covers");
  require(c.model, "--model");
  if (c.stegos.size() > 1) throw Error(Errc::Config, "train-env takes a single --stegos manifest");
  const auto covers = load_manifest(c.covers);
  const std::vector<fs::path> stegos = c.stegos.empty() ? std::vector<fs::path>{} : media::read_manifest(c.stegos[0]);
  if (!stegos.empty() && stegos.size() != covers.size()) {
    throw Error(Errc::DimensionMismatch, "cover and stego manifests differ in length");
  }
  if (stegos.empty()) ctx.log.info("no --stegos given: embedding plain HILL stegos at {} bpp", c.payload);

  using Pair = std::pair<env::FeatureVector, env::FeatureVector>;
  const auto features = for_each_image<Pair>(covers.size(), c.jobs, covers, [&](std::size_t k, int) {
    const PixelMatrix img = media::read_image(covers[k]);
    PixelMatrix stego = stegos.empty()
                            ? pipeline::embed_plain(img, payload_bits(c, img), cost::hill_cost(img), image_seed(c, k)).stego
                            : media::read_image(stegos[k]);
    return Pair{env::extract_features(img), env::extract_features(stego)};
  });
  std::vector<env::FeatureVector> fc;
  std::vector<env::FeatureVector> fs_;
  for (const auto& [a, b] : features) {
    fc.push_back(a);
    fs_.push_back(b);
  }

  env::TrainOptions options;
  options.epochs = c.epochs;
  options.learning_rate = c.learning_rate;
  options.l2 = c.l2;
  options.validation_fraction = c.validation;
  options.seed = c.seed;
  const auto report = env::train_on_features(fc, fs_, options);
  env::save_model(report.model, c.model);

  std::vector<double> conf;
  for (const auto& f : fc) conf.push_back(report.model.cover_confidence(f));
  const auto hist = env::confidence_histogram(conf);
  Json quantiles = Json::object();
  for (std::size_t q = 0; q < hist.quantile_levels.size(); ++q) {
    char key[16];
    std::snprintf(key, sizeof key, "%.2f", hist.quantile_levels[q]);
    quantiles[key] = hist.quantiles[q];
  }
  ctx.out << Json{{"model", c.model},
                  {"train_accuracy", report.train_accuracy},
                  {"validation_accuracy", report.validation_accuracy},
                  {"train_pairs", report.train_pairs},
                  {"validation_pairs", report.validation_pairs},
                  {"cover_confidence_quantiles", quantiles},
                  {"covers_above_threshold", hist.fraction_above(c.threshold)}}
                 .dump()
          << "\n";
  return 0;
}

// --- evaluate / bench ------------------------------------------------------

std::string method_name(const std::string& manifest) {
  const fs::path p(manifest);
  const auto parent = p.parent_path().filename().string();
  return parent.empty() ? p.stem().string() : parent;
}

void emit_report(const Ctx& ctx, const metrics::Report& report, const Json& extra) {
  ctx.out << metrics::to_text(report);
  if (!ctx.c.out.empty()) {
    fs::create_directories(ctx.c.out);
    Json j = Json::parse(metrics::to_json(report));
    for (const auto& [k, v] : extra.items()) j[k] = v;
    media::write_file(fs::path(ctx.c.out) / "report.json", j.dump(2) + "\n");
    media::write_file(fs::path(ctx.c.out) / "report.txt", metrics::to_text(report));
  }
}

int cmd_evaluate(const Ctx& ctx) {
  const RunConfig& c = ctx.c;
  require(c.covers, "--covers");
  if (c.stegos.empty()) throw Error(Errc::Config, "missing required setting --stegos");
  const auto covers = media::read_manifest(c.covers);
  std::vector<PixelMatrix> cover_imgs;
  for (const auto& p : covers) cover_imgs.push_back(media::read_image(p));
  std::unique_ptr<env::Environment> detector = c.detector.empty() ? nullptr : env::make_environment(c.detector);

  metrics::Report report;
  for (const auto& manifest : c.stegos) {
    const auto stegos = media::read_manifest(manifest);
    if (stegos.size() != covers.size()) throw Error(Errc::DimensionMismatch, manifest + " and the cover manifest differ in length");
    std::vector<ModificationMap> maps;
    std::vector<PixelMatrix> stego_imgs;
    for (std::size_t k = 0; k < stegos.size(); ++k) {
      stego_imgs.push_back(media::read_image(stegos[k]));
      maps.push_back(mods_between(cover_imgs[k], stego_imgs.back()));
    }
    std::optional<double> pe;
    if (detector) pe = metrics::detector_p_e(*detector, cover_imgs, stego_imgs);
    report.rows.push_back(metrics::summarize(method_name(manifest), maps, pe));
  }
  emit_report(ctx, report, Json::object());
  return 0;
}

int cmd_bench(const Ctx& ctx) {
  const RunConfig& c = ctx.c;
  require(c.covers, "--covers");
  require(c.out, "--out");
  require(c.env, "--env");
  const auto budget = budget_of(c);
  const auto scheme = parse_scheme(c.scheme);
  const auto costs = parse_cost(c.cost);
  const auto covers = load_manifest(c.covers);
  auto envs = open_environments(c.env, c.jobs);
  const std::vector<std::string> methods = {"plain", "cmd", "mctsteg"};
  for (const auto& m : methods) fs::create_directories(fs::path(c.out) / m);

  struct Outcome {
    std::vector<pipeline::StegoResult> results;
  };
  const auto outcomes = for_each_image<Outcome>(covers.size(), c.jobs, covers, [&](std::size_t k, int worker) {
    const PixelMatrix img = media::read_image(covers[k]);
    const double bits = payload_bits(c, img);
    const CostPair cost = costs.load(covers[k], img);
    const std::uint64_t seed = image_seed(c, k);
    Outcome o;
    o.results.push_back(pipeline::embed_plain(img, bits, cost, seed));
    o.results.push_back(pipeline::embed_cmd(img, bits, cost, scheme, c.cmd_alpha, seed));
    pipeline::EmbedPlan plan;
    plan.payload_bits_total = bits;
    plan.scheme = scheme;
    plan.budget = budget;
    plan.seed = seed;
    plan.adjust_first_sublattice = c.adjust_first;
    if (costs.dir) {
      plan.cost_source = pipeline::CostSource::ExternalFile;
      plan.external_cost = cost;
    }
    o.results.push_back(pipeline::embed(img, plan, *envs[static_cast<std::size_t>(worker)]));
    for (std::size_t m = 0; m < methods.size(); ++m) write_outputs(fs::path(c.out) / methods[m], covers[k], o.results[m]);
    return o;
  });

  std::unique_ptr<env::Environment> detector = c.detector.empty() ? nullptr : env::make_environment(c.detector);
  std::vector<PixelMatrix> cover_imgs;
  if (detector) {
    for (const auto& p : covers) cover_imgs.push_back(media::read_image(p));
  }
  metrics::Report report;
  for (std::size_t m = 0; m < methods.size(); ++m) {
    std::vector<ModificationMap> maps;
    std::vector<PixelMatrix> stegos;
    std::vector<std::string> names;
    for (std::size_t k = 0; k < outcomes.size(); ++k) {
      maps.push_back(outcomes[k].results[m].mods);
      if (detector) stegos.push_back(outcomes[k].results[m].stego);
      names.push_back(stego_name(covers[k], outcomes[k].results[m].stego));
    }
    media::write_manifest(names, fs::path(c.out) / methods[m] / "stegos.txt");
    std::optional<double> pe;
    if (detector && !covers.empty()) pe = metrics::detector_p_e(*detector, cover_imgs, stegos);
    report.rows.push_back(metrics::summarize(methods[m], maps, pe));
  }

  Json extra = Json::object();
  if (!covers.empty()) {
    const double plain = report.rows[0].mean_fcc.count(2) ? report.rows[0].mean_fcc.at(2) : 0.0;
    const double mcts = report.rows[2].mean_fcc.count(2) ? report.rows[2].mean_fcc.at(2) : 0.0;
    extra["fcc_direction"] = {{"plain_f2", plain}, {"mctsteg_f2", mcts}, {"holds", mcts > plain}};
    emit_report(ctx, report, extra);
    ctx.out << "fcc direction (mctsteg F(2) > plain F(2)): " << (mcts > plain ? "holds" : "does not hold") << "\n";
  } else {
    emit_report(ctx, report, extra);
  }
  return 0;
}

// --- gen-corpus ------------------------------------------------------------

int cmd_gen_corpus(const Ctx& ctx) {
  const RunConfig& c = ctx.c;
  require(c.out, "--out");
  if (c.count < 1) throw Error(Errc::InvalidArgument, "count must be positive");
  fs::create_directories(c.out);
  std::vector<fs::path> labels(static_cast<std::size_t>(c.count));
  std::vector<std::string> names(labels.size());
  for (std::size_t k = 0; k < labels.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "cover_%05zu.pgm", k);
    names[k] = name;
    labels[k] = fs::path(c.out) / name;
  }
  for_each_image<int>(labels.size(), c.jobs, labels, [&](std::size_t k, int) {
    media::write_pgm(corpus::generate_cover(c.size, stream_seed(c.seed, k)), labels[k]);
    return 0;
  });
  media::write_manifest(names, fs::path(c.out) / "covers.txt");
  ctx.out << "wrote " << names.size() << " covers to " << c.out << "\n";
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig c;
  CLI::App app{"Non-additive steganography by Monte Carlo tree search", "mctsteg"};
  app.set_config("--config", "", "key=value configuration file; command-line flags take precedence");
  app.require_subcommand(1, 1);
  app.fallthrough();

  app.add_option("--covers", c.covers, "Manifest of cover images");
  app.add_option("--stegos", c.stegos, "Manifest(s) of stego images, paired with --covers by position");
  app.add_option("--out", c.out, "Output directory");
  app.add_option("--payload", c.payload, "Payload in bits per element")->capture_default_str();
  app.add_option("--alpha", c.alpha, "Cost scaling factor of the adjustment")->capture_default_str();
  app.add_option("--cmd-alpha", c.cmd_alpha, "CMD scaling factor used by bench")->capture_default_str();
  app.add_option("--max-searches", c.max_searches, "Searches per sublattice")->capture_default_str();
  app.add_option("--threshold", c.threshold, "Cover confidence that stops a sublattice early")->capture_default_str();
  app.add_option("--uct-c", c.uct_c, "UCT exploration constant")->capture_default_str();
  app.add_option("--seed", c.seed, "Base seed")->capture_default_str();
  app.add_option("--env", c.env, "Environment: builtin:<model>, exec:<command> or tcp:<host:port>");
  app.add_option("--detector", c.detector, "Environment used as the detector for P_E");
  app.add_option("--model", c.model, "Model file written by train-env");
  app.add_option("--scheme", c.scheme, "Sublattice scheme")
      ->check(CLI::IsMember({"spatial2x2", "jpegblock"}))
      ->capture_default_str();
  app.add_option("--cost", c.cost, "hill or file:<dir> with <stem>.cost maps")->capture_default_str();
  app.add_option("--method", c.method, "Baseline method")->check(CLI::IsMember({"plain", "cmd"}))->capture_default_str();
  app.add_option("--jobs", c.jobs, "Worker threads")->capture_default_str();
  app.add_flag("--adjust-first", c.adjust_first, "Search the first sublattice as well");
  app.add_option("--epochs", c.epochs, "Training epochs")->capture_default_str();
  app.add_option("--lr", c.learning_rate, "Training learning rate")->capture_default_str();
  app.add_option("--l2", c.l2, "L2 regularization")->capture_default_str();
  app.add_option("--validation", c.validation, "Validation fraction")->capture_default_str();
  app.add_option("--count", c.count, "Covers generated by gen-corpus")->capture_default_str();
  app.add_option("--size", c.size, "Side length of generated covers")->capture_default_str();

  const std::vector<std::pair<std::string, std::function<int(const Ctx&)>>> commands = {
      {"embed", cmd_embed},       {"baseline", cmd_baseline}, {"train-env", cmd_train_env},
      {"evaluate", cmd_evaluate}, {"bench", cmd_bench},       {"gen-corpus", cmd_gen_corpus},
  };
  const std::map<std::string, std::string> help = {
      {"embed", "Embed covers with search-driven cost adjustment"},
      {"baseline", "Embed covers with plain HILL or CMD"},
      {"train-env", "Train the builtin SPAM detector"},
      {"evaluate", "FCC, change rate and P_E of stego sets"},
      {"bench", "Compare plain, CMD and search-driven embedding"},
      {"gen-corpus", "Write a synthetic cover corpus"},
  };
  for (const auto& [name, fn] : commands) app.add_subcommand(name, help.at(name));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }

  auto log = make_logger(err);
  try {
    validate(c);
    for (const auto& [name, fn] : commands) {
      if (app.got_subcommand(name)) return fn(Ctx{c, out, *log});
    }
  } catch (const ImageFailure& f) {
    err << error_record(f.code, f.message, f.image).dump() << "\n";
    return 1;
  } catch (const Error& e) {
    err << error_record(errc_name(e.code()), e.what()).dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << error_record("internal", e.what()).dump() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace mctsteg::cli
