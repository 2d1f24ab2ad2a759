#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <vector>

#include "vdcal/csv.hpp"
#include "vdcal/types.hpp"

namespace vdcal {

struct TravelTimeRecord;  // harvester.hpp

/// One vehicle crossing an automated counter. `point_speed` is carried as
/// recorded (the feed does not state a unit) and is not used downstream.
struct VehicleRecord {
  int site_id = 0;
  Direction direction = Direction::North;
  Date date;
  int time_of_day = 0;  // seconds since midnight
  double point_speed = 0.0;

  SiteKey site() const { return SiteKey{site_id, direction}; }
};

struct HourlyVolume {
  SiteKey site;
  Date date;
  int hour = 1;  // 1..24, the hour the interval ends at
  std::int64_t volume = 0;

  friend bool operator==(const HourlyVolume&, const HourlyVolume&) = default;
};

struct SiteMetadata {
  SiteKey site;
  RoadClass road_class = RoadClass::Unclassified;
  double link_length_m = 0.0;
  double speed_limit_kmh = 0.0;
  double dmrb_capacity_vph = 0.0;
  LatLon origin;
  LatLon destination;
};

using MetadataCatalog = std::map<SiteKey, SiteMetadata>;

inline constexpr std::string_view kCounterHeader = "site,direction,date,time,speed";
inline constexpr std::string_view kMetadataHeader =
    "combined_id,road_class,length_m,speed_limit_kmh,dmrb_capacity_vph,origin_lat,origin_lon,"
    "dest_lat,dest_lon";
inline constexpr std::string_view kHourlyHeader = "combined_id,atc_id,direction,date,hour,volume";
inline constexpr std::string_view kObservationHeader =
    "combined_id,date,hour,volume,travel_time_s";

/// Counter CSV (`site,direction,date,time,speed`). Bad rows become
/// line-numbered errors; the rest are returned.
Parsed<VehicleRecord> parse_vehicle_records(std::istream& in);
VehicleRecord parse_vehicle_record(std::string_view line);
void write_vehicle_record(std::ostream& out, const VehicleRecord& r);

/// One row per (site, date, hour) that has at least one record, sorted.
std::vector<HourlyVolume> aggregate_hourly(std::span<const VehicleRecord> records);

/// Streaming variant for counter files too large to hold as records.
class HourlyAggregator {
 public:
  void add(const VehicleRecord& r);
  std::size_t record_count() const { return records_; }
  std::vector<HourlyVolume> result() const;

 private:
  std::map<std::pair<SiteKey, HourSlot>, std::int64_t> cells_;
  std::size_t records_ = 0;
};

void write_hourly_volumes(std::ostream& out, std::span<const HourlyVolume> volumes);

Parsed<SiteMetadata> parse_metadata(std::istream& in);
void write_metadata(std::ostream& out, std::span<const SiteMetadata> sites);
/// Throws InvalidArgument on duplicate sites.
MetadataCatalog make_catalog(std::span<const SiteMetadata> sites);

struct PairingResult {
  std::vector<PairedObservation> observations;  // sorted by site, date, hour
  std::size_t unmatched_volume_rows = 0;
  std::size_t unmatched_time_slots = 0;
  /// Sites present in the data but missing from the catalog.
  std::vector<SiteIssue> site_errors;
};

/// Inner join of hourly volumes and travel times on (site, date, hour).
/// Travel-time timestamps use the same hour-ending rule as the counters and
/// several records in one hour are averaged.
PairingResult pair_observations(std::span<const HourlyVolume> volumes,
                                std::span<const TravelTimeRecord> times,
                                const MetadataCatalog& catalog);

Parsed<PairedObservation> parse_observations(std::istream& in);
void write_observations(std::ostream& out, std::span<const PairedObservation> observations);

}  // namespace vdcal
