#pragma once

#include <cstddef>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "vdcal/types.hpp"

namespace vdcal {

struct CleaningConfig {
  double epsilon = 0.1;          // radius in the normalized volume/time plane
  std::size_t min_points = 5;    // neighbours (self included) for a core point
  double min_peak_volume = 50.0; // veh/h; quieter sites are rejected
  double min_time_cv = 0.02;     // travel-time coefficient of variation floor

  void validate() const;
};

/// Thrown when a site's observations cannot be put on the unit square.
class UnusableSite : public Error {
 public:
  using Error::Error;
};

struct NormalizedPoint {
  double x = 0.0;  // volume / max volume
  double y = 0.0;  // travel time / max travel time
};

std::vector<NormalizedPoint> normalize_site(std::span<const PairedObservation> observations);

inline constexpr int kNoise = -1;

/// DBSCAN with Euclidean distance. A point is core when at least
/// `min_points` points, itself included, lie within `epsilon`. Returns a
/// cluster id (0, 1, ...) per point or kNoise. Border points reachable from
/// several clusters keep the first cluster that reached them.
std::vector<int> dbscan(std::span<const NormalizedPoint> points, double epsilon,
                        std::size_t min_points);

struct SiteCleaning {
  std::size_t total = 0;
  std::size_t kept = 0;
  std::size_t removed = 0;
  bool unusable = false;  // could not be normalized; nothing removed
};

struct CleaningOutcome {
  std::vector<PairedObservation> kept;
  std::vector<PairedObservation> removed;
  std::map<SiteKey, SiteCleaning> per_site;
};

/// Runs DBSCAN per site on normalized points and moves noise points to
/// `removed`. Sites are never pooled.
CleaningOutcome remove_outliers(std::span<const PairedObservation> observations,
                                const CleaningConfig& config);

struct SiteRejection {
  SiteKey site;
  std::string reason;
};

struct SiteFilterResult {
  std::vector<SiteKey> kept;
  std::vector<SiteRejection> rejected;
};

/// Rejects sites whose peak hourly volume is below `min_peak_volume` or whose
/// travel-time coefficient of variation is below `min_time_cv`.
SiteFilterResult filter_valid_sites(
    const std::map<SiteKey, std::vector<PairedObservation>>& sites, const CleaningConfig& config);

inline constexpr std::string_view kCleaningReportHeader =
    "combined_id,total,kept,removed,reject_reason";
void write_cleaning_report(std::ostream& out, const CleaningOutcome& outcome,
                           const SiteFilterResult& filter);

}  // namespace vdcal
