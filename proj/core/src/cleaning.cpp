#include "vdcal/cleaning.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <unordered_map>

#include <fmt/format.h>

#include "vdcal/stats.hpp"

namespace vdcal {

void CleaningConfig::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw InvalidArgument("DBSCAN epsilon must be positive");
  }
  if (min_points < 1) throw InvalidArgument("DBSCAN min_points must be at least 1");
  if (!(min_peak_volume >= 0.0)) throw InvalidArgument("min_peak_volume must be non-negative");
  if (!(min_time_cv >= 0.0)) throw InvalidArgument("min_time_cv must be non-negative");
}

std::vector<NormalizedPoint> normalize_site(std::span<const PairedObservation> observations) {
  if (observations.empty()) throw UnusableSite("site has no observations");
  double max_volume = 0.0, max_time = 0.0;
  for (const auto& o : observations) {
    max_volume = std::max(max_volume, o.volume);
    max_time = std::max(max_time, o.travel_time);
  }
  if (!(max_volume > 0.0)) throw UnusableSite("all volumes are zero");
  if (!(max_time > 0.0)) throw UnusableSite("all travel times are zero");
  std::vector<NormalizedPoint> points;
  points.reserve(observations.size());
  for (const auto& o : observations) {
    points.push_back({o.volume / max_volume, o.travel_time / max_time});
  }
  return points;
}

namespace {

// Uniform grid with cell side epsilon: every neighbour of a point lies in the
// 3x3 block of cells around it.
class NeighbourIndex {
 public:
  NeighbourIndex(std::span<const NormalizedPoint> points, double epsilon)
      : points_(points), eps_(epsilon), eps2_(epsilon * epsilon) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto [cx, cy] = cell(points[i]);
      cells_[key(cx, cy)].push_back(i);
    }
  }

  void query(std::size_t i, std::vector<std::size_t>& out) const {
    out.clear();
    const auto& p = points_[i];
    const auto [cx, cy] = cell(p);
    for (std::int64_t dx = -1; dx <= 1; ++dx) {
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        const auto it = cells_.find(key(cx + dx, cy + dy));
        if (it == cells_.end()) continue;
        for (const auto j : it->second) {
          const double ex = points_[j].x - p.x;
          const double ey = points_[j].y - p.y;
          if (ex * ex + ey * ey <= eps2_) out.push_back(j);
        }
      }
    }
  }

 private:
  std::pair<std::int64_t, std::int64_t> cell(const NormalizedPoint& p) const {
    return {static_cast<std::int64_t>(std::floor(p.x / eps_)),
            static_cast<std::int64_t>(std::floor(p.y / eps_))};
  }
  static std::uint64_t key(std::int64_t cx, std::int64_t cy) {
    return (static_cast<std::uint64_t>(cx) << 32) ^ (static_cast<std::uint64_t>(cy) & 0xffffffffu);
  }

  std::span<const NormalizedPoint> points_;
  double eps_;
  double eps2_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

constexpr int kUnvisited = -2;

}  // namespace

std::vector<int> dbscan(std::span<const NormalizedPoint> points, double epsilon,
                        std::size_t min_points) {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw InvalidArgument("DBSCAN epsilon must be positive");
  }
  if (min_points < 1) throw InvalidArgument("DBSCAN min_points must be at least 1");

  const NeighbourIndex index(points, epsilon);
  std::vector<int> labels(points.size(), kUnvisited);
  std::vector<std::size_t> neighbours, seeds;
  int next_cluster = 0;

  for (std::size_t i = 0; i < points.size(); ++i) {
    if (labels[i] != kUnvisited) continue;
    index.query(i, neighbours);
    if (neighbours.size() < min_points) {
      labels[i] = kNoise;  // may later turn out to be a border point
      continue;
    }
    const int cluster = next_cluster++;
    labels[i] = cluster;
    seeds.assign(neighbours.begin(), neighbours.end());
    for (std::size_t s = 0; s < seeds.size(); ++s) {
      const auto q = seeds[s];
      if (labels[q] == kNoise) labels[q] = cluster;
      if (labels[q] != kUnvisited) continue;
      labels[q] = cluster;
      index.query(q, neighbours);
      if (neighbours.size() >= min_points) {
        seeds.insert(seeds.end(), neighbours.begin(), neighbours.end());
      }
    }
  }
  return labels;
}

CleaningOutcome remove_outliers(std::span<const PairedObservation> observations,
                                const CleaningConfig& config) {
  config.validate();
  CleaningOutcome outcome;
  for (const auto& [site, obs] : group_by_site(observations)) {
    auto& stats = outcome.per_site[site];
    stats.total = obs.size();
    std::vector<NormalizedPoint> points;
    try {
      points = normalize_site(obs);
    } catch (const UnusableSite&) {
      stats.unusable = true;
      stats.kept = obs.size();
      outcome.kept.insert(outcome.kept.end(), obs.begin(), obs.end());
      continue;
    }
    const auto labels = dbscan(points, config.epsilon, config.min_points);
    for (std::size_t i = 0; i < obs.size(); ++i) {
      if (labels[i] == kNoise) {
        outcome.removed.push_back(obs[i]);
        ++stats.removed;
      } else {
        outcome.kept.push_back(obs[i]);
        ++stats.kept;
      }
    }
  }
  return outcome;
}

SiteFilterResult filter_valid_sites(
    const std::map<SiteKey, std::vector<PairedObservation>>& sites, const CleaningConfig& config) {
  SiteFilterResult result;
  for (const auto& [site, obs] : sites) {
    if (obs.empty()) {
      result.rejected.push_back({site, "no observations"});
      continue;
    }
    double peak = 0.0;
    std::vector<double> times;
    times.reserve(obs.size());
    for (const auto& o : obs) {
      peak = std::max(peak, o.volume);
      times.push_back(o.travel_time);
    }
    const double cv = stats::coefficient_of_variation(times);
    if (peak < config.min_peak_volume) {
      result.rejected.push_back(
          {site, fmt::format("low volume (peak {} < {})", peak, config.min_peak_volume)});
    } else if (cv < config.min_time_cv) {
      result.rejected.push_back(
          {site, fmt::format("no delay variation (time cv {:.4f} < {})", cv, config.min_time_cv)});
    } else {
      result.kept.push_back(site);
    }
  }
  return result;
}

void write_cleaning_report(std::ostream& out, const CleaningOutcome& outcome,
                           const SiteFilterResult& filter) {
  std::map<SiteKey, std::string> reasons;
  for (const auto& r : filter.rejected) reasons[r.site] = r.reason;
  out << kCleaningReportHeader << '\n';
  for (const auto& [site, s] : outcome.per_site) {
    std::string reason;
    if (const auto it = reasons.find(site); it != reasons.end()) reason = it->second;
    if (s.unusable && reason.empty()) reason = "unusable (cannot normalize)";
    out << fmt::format("{},{},{},{},{}\n", site.combined_id(), s.total, s.kept, s.removed, reason);
  }
}

}  // namespace vdcal
