#pragma once

#include <chrono>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace vdcal {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed text input (CSV field, JSON document, identifier).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

enum class Direction : char { North = 'N', South = 'S', East = 'E', West = 'W' };

/// Accepts the single initial ("N"), the bare name ("North") or the counter
/// feed spelling ("Northbound"), case-insensitively.
Direction parse_direction(std::string_view text);
std::string_view direction_name(Direction d);  // "Northbound"
constexpr char direction_initial(Direction d) { return static_cast<char>(d); }

/// A directional counter site, written as the decimal site id followed by the
/// direction initial ("11N").
struct SiteKey {
  int site_id = 0;
  Direction direction = Direction::North;

  std::string combined_id() const;
  static SiteKey parse(std::string_view combined_id);

  friend auto operator<=>(const SiteKey&, const SiteKey&) = default;
};

enum class RoadClass { Trunk, Principal, B, C, Unclassified };

inline constexpr RoadClass kAllRoadClasses[] = {RoadClass::Trunk, RoadClass::Principal,
                                                RoadClass::B, RoadClass::C,
                                                RoadClass::Unclassified};

RoadClass parse_road_class(std::string_view text);
std::string_view road_class_name(RoadClass c);

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;
};

// Calendar handling. Dates are local calendar dates and timestamps carry no
// zone; all arithmetic is done on sys_days/sys_seconds as if in UTC.
using Date = std::chrono::year_month_day;
using Timestamp = std::chrono::sys_seconds;

Date parse_date(std::string_view text);  // YYYY-MM-DD
std::string format_date(Date d);

/// HH:MM:SS to seconds since midnight, 0 <= result < 86400.
int parse_time_of_day(std::string_view text);
std::string format_time_of_day(int seconds);

/// YYYY-MM-DDTHH:MM:SS (a space separator is also accepted).
Timestamp parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp t);

Timestamp make_timestamp(Date d, int seconds_of_day);

/// Hour interval a time of day belongs to, counting intervals by the hour
/// they end at: (h-1:00:00, h:00:00] maps to h, and 00:00:00 maps to 1.
int hour_ending(int seconds_of_day);

struct HourSlot {
  Date date;
  int hour = 1;  // 1..24

  friend bool operator==(const HourSlot&, const HourSlot&) = default;
  friend auto operator<=>(const HourSlot& a, const HourSlot& b) {
    if (auto c = std::chrono::sys_days{a.date} <=> std::chrono::sys_days{b.date}; c != 0) {
      return c;
    }
    return a.hour <=> b.hour;
  }
};

HourSlot hour_slot(Timestamp t);

/// One fused (hourly volume, travel time) observation for a site.
struct PairedObservation {
  SiteKey site;
  Date date;
  int hour = 1;
  double volume = 0.0;       // vehicles/hour
  double travel_time = 0.0;  // seconds

  friend bool operator==(const PairedObservation&, const PairedObservation&) = default;
};

bool observation_less(const PairedObservation& a, const PairedObservation& b);

std::map<SiteKey, std::vector<PairedObservation>> group_by_site(
    std::span<const PairedObservation> observations);

/// Site-scoped problem reported without aborting a whole run.
struct SiteIssue {
  SiteKey site;
  std::string message;
};

}  // namespace vdcal
