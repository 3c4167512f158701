#include "mctsteg/environment.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "mctsteg/media.hpp"
#include "mctsteg/rng.hpp"

namespace mctsteg::env {

EnvScore score(Environment& env, const PixelMatrix& img) {
  const double c = env.cover_confidence(img);
  if (!(c >= 0.0 && c <= 1.0)) {
    throw Error(Errc::Environment, "environment '" + env.name() + "' returned confidence outside [0,1]");
  }
  return {c};
}

namespace {

struct Direction {
  int di;
  int dj;
};

constexpr std::array<Direction, 4> kStraight{{{0, 1}, {0, -1}, {1, 0}, {-1, 0}}};
constexpr std::array<Direction, 4> kDiagonal{{{1, 1}, {-1, -1}, {-1, 1}, {1, -1}}};

int truncate(double d) { return std::clamp(static_cast<int>(d), -kSpamT, kSpamT); }

// Adds the conditional transition matrix of one direction into `block`.
void add_transitions(const Grid<double>& x, Direction s, std::span<double> block) {
  std::array<double, kSpamBlock> joint{};
  std::array<double, kSpamBins * kSpamBins> pair{};
  const int h = x.height();
  const int w = x.width();
  // p, p+s, p+2s, p+3s must all lie inside the image.
  const int i0 = std::max(0, -3 * s.di);
  const int i1 = std::min(h, h - 3 * s.di);
  const int j0 = std::max(0, -3 * s.dj);
  const int j1 = std::min(w, w - 3 * s.dj);
  for (int i = i0; i < i1; ++i) {
    for (int j = j0; j < j1; ++j) {
      const double a = x(i, j);
      const double b = x(i + s.di, j + s.dj);
      const double c = x(i + 2 * s.di, j + 2 * s.dj);
      const double e = x(i + 3 * s.di, j + 3 * s.dj);
      const int d0 = truncate(a - b);
      const int d1 = truncate(b - c);
      const int d2 = truncate(c - e);
      joint[spam_index(d2, d1, d0)] += 1.0;
      pair[static_cast<std::size_t>((d1 + kSpamT) * kSpamBins + (d0 + kSpamT))] += 1.0;
    }
  }
  for (int u = -kSpamT; u <= kSpamT; ++u) {
    for (int v = -kSpamT; v <= kSpamT; ++v) {
      for (int w2 = -kSpamT; w2 <= kSpamT; ++w2) {
        const double n = pair[static_cast<std::size_t>((v + kSpamT) * kSpamBins + (w2 + kSpamT))];
        if (n > 0.0) block[spam_index(u, v, w2)] += joint[spam_index(u, v, w2)] / n;
      }
    }
  }
}

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

FeatureVector extract_features(const PixelMatrix& img) {
  if (img.domain != Domain::Spatial) {
    throw Error(Errc::DomainMismatch, "the builtin detector scores spatial images only");
  }
  FeatureVector f{};
  std::span<double> straight(f.data(), kSpamBlock);
  std::span<double> diagonal(f.data() + kSpamBlock, kSpamBlock);
  for (Direction s : kStraight) add_transitions(img.data, s, straight);
  for (Direction s : kDiagonal) add_transitions(img.data, s, diagonal);
  for (double& v : f) v *= 0.25;
  return f;
}

LinearModel LinearModel::neutral(std::size_t dims) {
  return {std::vector<double>(dims, 0.0), 0.0, std::vector<double>(dims, 0.0), std::vector<double>(dims, 1.0)};
}

double LinearModel::margin(std::span<const double> features) const {
  if (features.size() != weights.size()) throw Error(Errc::DimensionMismatch, "feature dimensionality differs from model");
  double z = bias;
  for (std::size_t k = 0; k < features.size(); ++k) z += weights[k] * (features[k] - mean[k]) / scale[k];
  return z;
}

double LinearModel::cover_confidence(std::span<const double> features) const { return sigmoid(margin(features)); }

TrainReport train_on_features(const std::vector<FeatureVector>& covers, const std::vector<FeatureVector>& stegos,
                              const TrainOptions& options) {
  if (covers.size() != stegos.size()) throw Error(Errc::InvalidArgument, "cover and stego sets differ in size");
  if (covers.size() < kMinTrainingPairs) {
    throw Error(Errc::InvalidArgument, "training needs at least " + std::to_string(kMinTrainingPairs) + " pairs");
  }
  if (options.epochs <= 0 || !(options.learning_rate > 0.0) || !(options.l2 >= 0.0) ||
      !(options.validation_fraction >= 0.0 && options.validation_fraction < 1.0)) {
    throw Error(Errc::InvalidArgument, "invalid training hyperparameters");
  }
  {
    const FeatureVector& first = covers.front();
    const auto same = [&](const FeatureVector& f) { return f == first; };
    if (std::all_of(covers.begin(), covers.end(), same) && std::all_of(stegos.begin(), stegos.end(), same)) {
      throw Error(Errc::DegenerateData, "all feature vectors are identical");
    }
  }

  Rng rng(stream_seed(options.seed, 0x5350));
  std::vector<std::size_t> pairs(covers.size());
  std::iota(pairs.begin(), pairs.end(), std::size_t{0});
  for (std::size_t k = pairs.size(); k > 1; --k) std::swap(pairs[k - 1], pairs[rng.below(k)]);
  const auto n_val = static_cast<std::size_t>(std::floor(options.validation_fraction * static_cast<double>(pairs.size())));
  const std::vector<std::size_t> val_pairs(pairs.begin(), pairs.begin() + static_cast<std::ptrdiff_t>(n_val));
  const std::vector<std::size_t> train_pairs(pairs.begin() + static_cast<std::ptrdiff_t>(n_val), pairs.end());

  struct Sample {
    const FeatureVector* x;
    double label;
  };
  std::vector<Sample> train_set;
  for (std::size_t p : train_pairs) {
    train_set.push_back({&covers[p], 1.0});
    train_set.push_back({&stegos[p], 0.0});
  }

  LinearModel model = LinearModel::neutral();
  const double count = static_cast<double>(train_set.size());
  for (const auto& s : train_set) {
    for (std::size_t k = 0; k < kFeatureDims; ++k) model.mean[k] += (*s.x)[k] / count;
  }
  std::vector<double> var(kFeatureDims, 0.0);
  for (const auto& s : train_set) {
    for (std::size_t k = 0; k < kFeatureDims; ++k) {
      const double d = (*s.x)[k] - model.mean[k];
      var[k] += d * d / count;
    }
  }
  for (std::size_t k = 0; k < kFeatureDims; ++k) model.scale[k] = var[k] > 1e-24 ? std::sqrt(var[k]) : 1.0;

  std::vector<std::vector<double>> normalized(train_set.size(), std::vector<double>(kFeatureDims));
  for (std::size_t s = 0; s < train_set.size(); ++s) {
    for (std::size_t k = 0; k < kFeatureDims; ++k) {
      normalized[s][k] = ((*train_set[s].x)[k] - model.mean[k]) / model.scale[k];
    }
  }

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    for (std::size_t k = order.size(); k > 1; --k) std::swap(order[k - 1], order[rng.below(k)]);
    const double lr = options.learning_rate / (1.0 + 0.05 * epoch);
    for (std::size_t s : order) {
      const auto& x = normalized[s];
      double z = model.bias;
      for (std::size_t k = 0; k < kFeatureDims; ++k) z += model.weights[k] * x[k];
      const double g = sigmoid(z) - train_set[s].label;
      for (std::size_t k = 0; k < kFeatureDims; ++k) {
        model.weights[k] -= lr * (g * x[k] + options.l2 * model.weights[k]);
      }
      model.bias -= lr * g;
    }
  }

  const auto accuracy = [&](const std::vector<std::size_t>& idx) {
    if (idx.empty()) return 0.0;
    std::size_t correct = 0;
    for (std::size_t p : idx) {
      correct += model.cover_confidence(covers[p]) >= 0.5 ? 1 : 0;
      correct += model.cover_confidence(stegos[p]) < 0.5 ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(2 * idx.size());
  };

  TrainReport report;
  report.train_accuracy = accuracy(train_pairs);
  report.validation_accuracy = accuracy(val_pairs);
  report.train_pairs = train_pairs.size();
  report.validation_pairs = val_pairs.size();
  report.model = std::move(model);
  return report;
}

TrainReport train(const std::vector<PixelMatrix>& covers, const std::vector<PixelMatrix>& stegos,
                  const TrainOptions& options) {
  if (covers.empty() || stegos.empty()) throw Error(Errc::InvalidArgument, "empty training dataset");
  if (covers.size() != stegos.size()) throw Error(Errc::InvalidArgument, "cover and stego sets differ in size");
  std::vector<FeatureVector> fc, fs;
  fc.reserve(covers.size());
  fs.reserve(stegos.size());
  for (std::size_t k = 0; k < covers.size(); ++k) {
    if (!covers[k].data.same_shape(stegos[k].data)) {
      throw Error(Errc::DimensionMismatch, "cover/stego pair " + std::to_string(k) + " differs in shape");
    }
    fc.push_back(extract_features(covers[k]));
    fs.push_back(extract_features(stegos[k]));
  }
  return train_on_features(fc, fs, options);
}

namespace {

constexpr std::string_view kModelMagic = "LINM";
constexpr std::uint32_t kModelVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFFu));
}
void put_f64(std::string& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xFFu));
}
std::uint64_t get_le(std::string_view in, std::size_t at, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[at + i])) << (8 * i);
  return v;
}

}  // namespace

std::string encode_model(const LinearModel& model) {
  const std::size_t dims = model.weights.size();
  if (model.mean.size() != dims || model.scale.size() != dims) {
    throw Error(Errc::DimensionMismatch, "model vectors differ in length");
  }
  std::string out(kModelMagic);
  put_u32(out, kModelVersion);
  put_u32(out, static_cast<std::uint32_t>(dims));
  put_f64(out, model.bias);
  for (const auto* v : {&model.mean, &model.scale, &model.weights}) {
    for (double x : *v) put_f64(out, x);
  }
  return out;
}

LinearModel decode_model(std::string_view bytes) {
  if (bytes.size() < 12 || bytes.substr(0, 4) != kModelMagic) throw Error(Errc::BadMagic, "not a LINM model file");
  const auto version = static_cast<std::uint32_t>(get_le(bytes, 4, 4));
  if (version != kModelVersion) throw Error(Errc::UnsupportedFormat, "unsupported model version");
  const auto dims = static_cast<std::size_t>(get_le(bytes, 8, 4));
  if (dims != kFeatureDims) throw Error(Errc::DimensionMismatch, "model dimensionality differs from the feature set");
  const std::size_t expected = 12 + 8 * (1 + 3 * dims);
  if (bytes.size() < expected) throw Error(Errc::Truncated, "model file is truncated");
  if (bytes.size() > expected) throw Error(Errc::MalformedHeader, "model file has trailing bytes");
  LinearModel m;
  std::size_t at = 12;
  const auto next = [&]() {
    const double v = std::bit_cast<double>(get_le(bytes, at, 8));
    at += 8;
    if (!std::isfinite(v)) throw Error(Errc::InvalidValue, "model holds a non-finite value");
    return v;
  };
  m.bias = next();
  for (auto* v : {&m.mean, &m.scale, &m.weights}) {
    v->resize(dims);
    for (double& x : *v) x = next();
  }
  for (double s : m.scale) {
    if (!(s > 0.0)) throw Error(Errc::InvalidValue, "model normalization scale must be positive");
  }
  return m;
}

void save_model(const LinearModel& model, const std::filesystem::path& path) {
  media::write_file(path, encode_model(model));
}

LinearModel load_model(const std::filesystem::path& path) { return decode_model(media::read_file(path)); }

BuiltinEnvironment::BuiltinEnvironment(std::shared_ptr<const LinearModel> model) : model_(std::move(model)) {
  if (!model_ || model_->weights.size() != kFeatureDims) {
    throw Error(Errc::InvalidArgument, "builtin environment needs a 686-dimensional model");
  }
}

double BuiltinEnvironment::cover_confidence(const PixelMatrix& img) {
  return model_->cover_confidence(extract_features(img));
}

double ConfidenceHistogram::fraction_above(double threshold) const {
  if (samples.empty()) return 0.0;
  const auto first = std::lower_bound(samples.begin(), samples.end(), threshold);
  return static_cast<double>(samples.end() - first) / static_cast<double>(samples.size());
}

ConfidenceHistogram confidence_histogram(std::vector<double> confidences, int buckets) {
  if (buckets <= 0) throw Error(Errc::InvalidArgument, "histogram needs at least one bucket");
  ConfidenceHistogram h;
  h.counts.assign(static_cast<std::size_t>(buckets), 0);
  for (double c : confidences) {
    if (!(c >= 0.0 && c <= 1.0)) throw Error(Errc::InvalidValue, "confidence outside [0,1]");
    const auto b = std::min(static_cast<std::size_t>(c * buckets), static_cast<std::size_t>(buckets - 1));
    ++h.counts[b];
  }
  std::sort(confidences.begin(), confidences.end());
  h.samples = std::move(confidences);
  h.quantile_levels = {0.05, 0.25, 0.5, 0.75, 0.95};
  for (double q : h.quantile_levels) {
    if (h.samples.empty()) {
      h.quantiles.push_back(0.0);
      continue;
    }
    // Nearest-rank quantile.
    const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(h.samples.size())));
    h.quantiles.push_back(h.samples[std::max<std::size_t>(rank, 1) - 1]);
  }
  return h;
}

ConfidenceHistogram confidence_histogram(Environment& env, const std::vector<PixelMatrix>& images, int buckets) {
  std::vector<double> c;
  c.reserve(images.size());
  for (const auto& img : images) c.push_back(score(env, img).cover_confidence);
  return confidence_histogram(std::move(c), buckets);
}

}  // namespace mctsteg::env
