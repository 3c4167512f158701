#include "mctsteg/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <json.hpp>
#include <limits>

#include "mctsteg/simulator.hpp"

namespace mctsteg::metrics {

namespace {

// Runs of n+1 equal-to-k cells along one axis, over all windows.
double run_frequency(const ModificationMap& m, int n, int k, bool rows) {
  const int lines = rows ? m.height() : m.width();
  const int length = rows ? m.width() : m.height();
  const int windows = length - n;
  if (windows <= 0) return 0.0;
  std::size_t hits = 0;
  for (int a = 0; a < lines; ++a) {
    int run = 0;
    for (int b = 0; b < length; ++b) {
      const int v = rows ? m(a, b) : m(b, a);
      run = v == k ? run + 1 : 0;
      if (run >= n + 1) ++hits;
    }
  }
  return static_cast<double>(hits) / (static_cast<double>(lines) * windows);
}

std::string fmt(double v, const char* spec) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

double fcc(const ModificationMap& mods, int n) {
  if (n < 2 || n > std::min(mods.width(), mods.height())) {
    throw Error(Errc::InvalidArgument, "FCC order out of range");
  }
  return 0.25 * (run_frequency(mods, n, 1, true) + run_frequency(mods, n, -1, true) +
                 run_frequency(mods, n, 1, false) + run_frequency(mods, n, -1, false));
}

FccReport fcc_report(const ModificationMap& mods) {
  FccReport out;
  const int limit = std::min({4, mods.width(), mods.height()});
  for (int n = 2; n <= limit; ++n) out.orders[n] = fcc(mods, n);
  out.change_rate = simulator::change_rate(mods);
  return out;
}

double p_e(std::span<const double> scores_cover, std::span<const double> scores_stego) {
  if (scores_cover.empty() || scores_stego.empty()) throw Error(Errc::InvalidArgument, "P_E needs both score lists");
  std::vector<double> cover(scores_cover.begin(), scores_cover.end());
  std::vector<double> stego(scores_stego.begin(), scores_stego.end());
  std::sort(cover.begin(), cover.end());
  std::sort(stego.begin(), stego.end());
  std::vector<double> thresholds = cover;
  thresholds.insert(thresholds.end(), stego.begin(), stego.end());
  thresholds.push_back(std::numeric_limits<double>::infinity());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  double best = 1.0;
  for (double t : thresholds) {
    const auto below = [t](const std::vector<double>& v) {
      return static_cast<double>(std::lower_bound(v.begin(), v.end(), t) - v.begin());
    };
    const double fa = 1.0 - below(cover) / cover.size();
    const double md = below(stego) / stego.size();
    best = std::min(best, 0.5 * (fa + md));
  }
  return best;
}

double detector_p_e(env::Environment& detector, const std::vector<PixelMatrix>& covers,
                    const std::vector<PixelMatrix>& stegos) {
  std::vector<double> c;
  std::vector<double> s;
  for (const auto& img : covers) c.push_back(1.0 - env::score(detector, img).cover_confidence);
  for (const auto& img : stegos) s.push_back(1.0 - env::score(detector, img).cover_confidence);
  return p_e(c, s);
}

MethodRow summarize(const std::string& method, const std::vector<ModificationMap>& maps, std::optional<double> pe) {
  MethodRow row;
  row.method = method;
  row.images = maps.size();
  row.p_e = pe;
  if (maps.empty()) return row;
  for (const auto& m : maps) {
    const FccReport r = fcc_report(m);
    row.mean_change_rate += r.change_rate;
    for (const auto& [n, f] : r.orders) row.mean_fcc[n] += f;
  }
  row.mean_change_rate /= maps.size();
  for (auto& [n, f] : row.mean_fcc) f /= maps.size();
  return row;
}

std::string to_json(const Report& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) {
    nlohmann::json fcc_obj = nlohmann::json::object();
    for (const auto& [n, f] : r.mean_fcc) fcc_obj[std::to_string(n)] = f;
    rows.push_back({{"method", r.method},
                    {"images", r.images},
                    {"mean_change_rate", r.mean_change_rate},
                    {"mean_fcc", fcc_obj},
                    {"p_e", r.p_e ? nlohmann::json(*r.p_e) : nlohmann::json(nullptr)}});
  }
  return nlohmann::json{{"schema", "mctsteg.report"}, {"version", kReportSchemaVersion}, {"rows", rows}}.dump(2);
}

std::string to_text(const Report& report) {
  if (report.rows.empty()) return {};
  std::size_t width = 6;
  for (const auto& r : report.rows) width = std::max(width, r.method.size());
  const auto pad = [](std::string s, std::size_t w) {
    s.resize(std::max(s.size(), w), ' ');
    return s;
  };
  std::string out = pad("method", width) + "  images  change_rate     F(2)     F(3)     F(4)      P_E\n";
  for (const auto& r : report.rows) {
    out += pad(r.method, width);
    out += fmt(static_cast<double>(r.images), "  %6.0f");
    out += fmt(r.mean_change_rate * 100.0, "  %10.3f%%");
    for (int n = 2; n <= 4; ++n) {
      const auto it = r.mean_fcc.find(n);
      out += it == r.mean_fcc.end() ? std::string("        -") : fmt(it->second * 100.0, "  %6.3f%%");
    }
    out += r.p_e ? fmt(*r.p_e, "  %7.4f") : std::string("        -");
    out += '\n';
  }
  return out;
}

}  // namespace mctsteg::metrics
