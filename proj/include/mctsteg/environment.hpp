#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "mctsteg/types.hpp"

namespace mctsteg::env {

/// Steganalyzer-backed scoring oracle: confidence in [0,1] that the input is
/// a cover. Implementations need not be thread-safe; give each worker its own.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual double cover_confidence(const PixelMatrix& img) = 0;
  virtual std::string name() const = 0;
};

struct EnvScore {
  double cover_confidence = 0.5;
};

/// Calls the environment and validates the result lies in [0,1].
EnvScore score(Environment& env, const PixelMatrix& img);

/// Wraps a callable; used for mocks and constant environments.
class FunctionEnvironment final : public Environment {
 public:
  using Fn = std::function<double(const PixelMatrix&)>;
  explicit FunctionEnvironment(Fn fn, std::string name = "function") : fn_(std::move(fn)), name_(std::move(name)) {}
  double cover_confidence(const PixelMatrix& img) override { return fn_(img); }
  std::string name() const override { return name_; }

 private:
  Fn fn_;
  std::string name_;
};

// ---------------------------------------------------------------------------
// SPAM features: second-order Markov transitions of neighbor differences
// truncated to [-3, 3], eight directions, straight and diagonal pooled.

inline constexpr int kSpamT = 3;
inline constexpr int kSpamBins = 2 * kSpamT + 1;
inline constexpr std::size_t kSpamBlock = kSpamBins * kSpamBins * kSpamBins;  // 343
inline constexpr std::size_t kFeatureDims = 2 * kSpamBlock;                   // 686

using FeatureVector = std::array<double, kFeatureDims>;

/// Index of M[u][v][w] = P(D(p+2s) = u | D(p+s) = v, D(p) = w) within a block.
constexpr std::size_t spam_index(int u, int v, int w) noexcept {
  return static_cast<std::size_t>((u + kSpamT) * kSpamBins * kSpamBins + (v + kSpamT) * kSpamBins + (w + kSpamT));
}

/// Spatial images only; Jpeg input throws DomainMismatch.
FeatureVector extract_features(const PixelMatrix& img);

// ---------------------------------------------------------------------------
// Logistic-regression detector on normalized features.

struct LinearModel {
  std::vector<double> weights;  // kFeatureDims entries
  double bias = 0.0;
  std::vector<double> mean;   // per-dimension training mean
  std::vector<double> scale;  // per-dimension training standard deviation (1 if constant)

  /// Zero weights, identity normalization: scores 0.5 everywhere.
  static LinearModel neutral(std::size_t dims = kFeatureDims);

  /// sigmoid(w . ((x - mean) / scale) + b); high for cover-like input.
  double cover_confidence(std::span<const double> features) const;
  double margin(std::span<const double> features) const;
};

struct TrainOptions {
  int epochs = 200;
  double learning_rate = 0.05;
  double l2 = 1e-3;
  double validation_fraction = 0.2;
  std::uint64_t seed = 1;
};

struct TrainReport {
  LinearModel model;
  double train_accuracy = 0.0;
  double validation_accuracy = 0.0;
  std::size_t train_pairs = 0;
  std::size_t validation_pairs = 0;
};

inline constexpr std::size_t kMinTrainingPairs = 50;

/// Seeded SGD on the logistic loss; label 1 = cover. Pairs (cover k, stego k)
/// stay on the same side of the train/validation split. Throws
/// InvalidArgument (fewer than 50 pairs, size mismatch) or DegenerateData (all
/// feature vectors identical).
TrainReport train_on_features(const std::vector<FeatureVector>& covers, const std::vector<FeatureVector>& stegos,
                              const TrainOptions& options);
TrainReport train(const std::vector<PixelMatrix>& covers, const std::vector<PixelMatrix>& stegos,
                  const TrainOptions& options);

/// "LINM" magic, u32 version (1), u32 dims, then f64 bias, mean, scale and
/// weights; little-endian throughout.
void save_model(const LinearModel& model, const std::filesystem::path& path);
LinearModel load_model(const std::filesystem::path& path);
std::string encode_model(const LinearModel& model);
LinearModel decode_model(std::string_view bytes);

/// SPAM features scored by a trained model. Immutable and thread-safe.
class BuiltinEnvironment final : public Environment {
 public:
  explicit BuiltinEnvironment(std::shared_ptr<const LinearModel> model);
  double cover_confidence(const PixelMatrix& img) override;
  std::string name() const override { return "builtin-spam686"; }
  const LinearModel& model() const noexcept { return *model_; }

 private:
  std::shared_ptr<const LinearModel> model_;
};

// ---------------------------------------------------------------------------

struct ConfidenceHistogram {
  std::vector<std::size_t> counts;  // equal-width buckets over [0,1]
  std::vector<double> quantile_levels;
  std::vector<double> quantiles;
  std::vector<double> samples;  // sorted

  std::size_t total() const noexcept { return samples.size(); }
  /// Fraction of samples at or above `threshold` (the early-stop gate).
  double fraction_above(double threshold) const;
};

ConfidenceHistogram confidence_histogram(std::vector<double> confidences, int buckets = 50);
ConfidenceHistogram confidence_histogram(Environment& env, const std::vector<PixelMatrix>& images, int buckets = 50);

}  // namespace mctsteg::env
