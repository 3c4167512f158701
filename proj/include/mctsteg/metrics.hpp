#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mctsteg/environment.hpp"
#include "mctsteg/types.hpp"

namespace mctsteg::metrics {

/// Average frequency of n+1 consecutive equal modifications of polarity k:
/// H(n,k) over rows, V(n,k) over columns, each normalized by its number of
/// (n+1)-cell windows. F(n) = (H(n,1) + H(n,-1) + V(n,1) + V(n,-1)) / 4.
/// A direction without any window contributes 0. Requires
/// 2 <= n <= min(width, height).
double fcc(const ModificationMap& mods, int n);

struct FccReport {
  std::map<int, double> orders;  // n -> F(n), n = 2..4 (where defined)
  double change_rate = 0.0;
};

FccReport fcc_report(const ModificationMap& mods);

/// min over thresholds of (P_FA + P_MD) / 2 where a sample is called stego
/// when its score >= threshold; higher scores are more stego-like.
double p_e(std::span<const double> scores_cover, std::span<const double> scores_stego);

/// P_E of an environment used as a detector: stego score = 1 - cover confidence.
double detector_p_e(env::Environment& detector, const std::vector<PixelMatrix>& covers,
                    const std::vector<PixelMatrix>& stegos);

struct MethodRow {
  std::string method;
  std::size_t images = 0;
  double mean_change_rate = 0.0;
  std::map<int, double> mean_fcc;
  std::optional<double> p_e;
};

/// Mean change rate and F(2..4) over a method's modification maps.
MethodRow summarize(const std::string& method, const std::vector<ModificationMap>& maps,
                    std::optional<double> p_e = std::nullopt);

struct Report {
  std::vector<MethodRow> rows;
};

inline constexpr int kReportSchemaVersion = 1;

std::string to_json(const Report& report);
std::string to_text(const Report& report);

}  // namespace mctsteg::metrics
