#pragma once

#include <chrono>
#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vdcal/csv.hpp"
#include "vdcal/ingest.hpp"
#include "vdcal/types.hpp"

namespace vdcal {

/// One crowd-sourced traversal duration for a site's origin-destination pair.
struct TravelTimeRecord {
  SiteKey site;
  Timestamp query_time;
  double duration_s = 0.0;

  friend bool operator==(const TravelTimeRecord&, const TravelTimeRecord&) = default;
};

inline constexpr std::string_view kTravelTimeHeader = "combined_id,timestamp_iso8601,duration_s";
inline constexpr std::string_view kDurationPath = "routes[0].legs[0].duration_in_traffic.value";

Parsed<TravelTimeRecord> parse_travel_times(std::istream& in);
void write_travel_times(std::ostream& out, std::span<const TravelTimeRecord> records);
void write_travel_time_row(std::ostream& out, const TravelTimeRecord& record);

struct OdPair {
  SiteKey site;
  LatLon origin;
  LatLon destination;
};

struct ScheduledQuery {
  SiteKey site;
  LatLon origin;
  LatLon destination;
  Timestamp fire_time;
};

struct HarvestPlan {
  std::vector<OdPair> od_pairs;  // sorted by site
  std::chrono::seconds interval{3600};
  Timestamp start;
  Timestamp end;

  /// Fire times start, start+interval, ... strictly before end.
  std::vector<Timestamp> fire_times() const;
  /// Every (site, fire time), ordered by site then time.
  std::vector<ScheduledQuery> schedule() const;
};

/// Throws InvalidArgument for an empty catalog, a non-positive interval, an
/// interval that does not divide one hour, or end <= start.
HarvestPlan plan_requests(const MetadataCatalog& catalog, std::chrono::seconds interval,
                          Timestamp start, Timestamp end);

struct DirectionsQuery {
  SiteKey site;
  LatLon origin;
  LatLon destination;
  Timestamp departure;
};

/// Thrown by providers for a failed request (as opposed to a plain miss).
class ProviderError : public Error {
 public:
  using Error::Error;
};

/// Source of origin-destination durations. `std::nullopt` means the provider
/// had no answer for the query.
class DirectionsProvider {
 public:
  virtual ~DirectionsProvider() = default;
  virtual std::optional<double> travel_time(const DirectionsQuery& query) const = 0;
};

/// File-backed provider keyed by (combined_id, timestamp). Read-only after
/// construction, so one instance can be shared between threads.
class ReplayProvider final : public DirectionsProvider {
 public:
  explicit ReplayProvider(std::span<const TravelTimeRecord> records);
  /// Throws ParseError on the first malformed row.
  static ReplayProvider from_csv(std::istream& in);

  std::optional<double> travel_time(const DirectionsQuery& query) const override;
  std::size_t size() const { return table_.size(); }

 private:
  std::map<std::pair<SiteKey, Timestamp>, double> table_;
};

/// Time source for the scheduler.
class Clock {
 public:
  virtual ~Clock() = default;
  virtual Timestamp now() const = 0;
  virtual void sleep_until(Timestamp t) = 0;
};

/// Jumps straight to each requested time.
class LogicalClock final : public Clock {
 public:
  explicit LogicalClock(Timestamp start) : now_(start) {}
  Timestamp now() const override { return now_; }
  void sleep_until(Timestamp t) override {
    if (t > now_) now_ = t;
  }

 private:
  Timestamp now_;
};

class SystemClock final : public Clock {
 public:
  Timestamp now() const override;
  void sleep_until(Timestamp t) override;
};

struct QueryFailure {
  SiteKey site;
  Timestamp fire_time;
  std::string message;
};

struct HarvestResult {
  std::vector<TravelTimeRecord> records;  // ordered by (site, query time)
  std::size_t planned = 0;
  std::size_t misses = 0;
  std::vector<QueryFailure> failures;
  /// Sites for which no query succeeded.
  std::vector<SiteIssue> warnings;
};

/// Runs every scheduled query against `provider`, waiting on `clock` before
/// each fire time. Misses and provider errors are counted, not thrown.
HarvestResult execute_plan(const HarvestPlan& plan, const DirectionsProvider& provider,
                           Clock& clock);
HarvestResult execute_plan(const HarvestPlan& plan, const DirectionsProvider& provider);

/// Extracts `routes[0].legs[0].duration_in_traffic.value` from a directions
/// response, in whole seconds. Throws ParseError naming the path.
long parse_provider_response(std::string_view json);

}  // namespace vdcal
