#include "vdcal/types.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

#include <fmt/format.h>

namespace vdcal {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

// Parses exactly `width` decimal digits at `pos`.
bool digits(std::string_view s, std::size_t pos, std::size_t width, int& out) {
  if (pos + width > s.size()) return false;
  for (std::size_t i = pos; i < pos + width; ++i) {
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
  }
  std::from_chars(s.data() + pos, s.data() + pos + width, out);
  return true;
}

}  // namespace

Direction parse_direction(std::string_view text) {
  const auto t = lower(text);
  if (t == "n" || t == "north" || t == "northbound") return Direction::North;
  if (t == "s" || t == "south" || t == "southbound") return Direction::South;
  if (t == "e" || t == "east" || t == "eastbound") return Direction::East;
  if (t == "w" || t == "west" || t == "westbound") return Direction::West;
  throw ParseError(fmt::format("unknown direction '{}'", text));
}

std::string_view direction_name(Direction d) {
  switch (d) {
    case Direction::North: return "Northbound";
    case Direction::South: return "Southbound";
    case Direction::East: return "Eastbound";
    case Direction::West: return "Westbound";
  }
  return "?";
}

std::string SiteKey::combined_id() const {
  return fmt::format("{}{}", site_id, direction_initial(direction));
}

SiteKey SiteKey::parse(std::string_view combined_id) {
  if (combined_id.size() < 2) {
    throw ParseError(fmt::format("invalid combined site id '{}'", combined_id));
  }
  const auto number = combined_id.substr(0, combined_id.size() - 1);
  int id = 0;
  const auto [ptr, ec] = std::from_chars(number.data(), number.data() + number.size(), id);
  if (ec != std::errc{} || ptr != number.data() + number.size() || id < 0 ||
      !std::isdigit(static_cast<unsigned char>(number.front()))) {
    throw ParseError(fmt::format("invalid combined site id '{}'", combined_id));
  }
  const char initial = combined_id.back();
  if (initial != 'N' && initial != 'S' && initial != 'E' && initial != 'W') {
    throw ParseError(fmt::format("invalid direction in site id '{}'", combined_id));
  }
  return SiteKey{id, static_cast<Direction>(initial)};
}

RoadClass parse_road_class(std::string_view text) {
  const auto t = lower(text);
  if (t == "trunk") return RoadClass::Trunk;
  if (t == "principal") return RoadClass::Principal;
  if (t == "b") return RoadClass::B;
  if (t == "c") return RoadClass::C;
  if (t == "unclassified") return RoadClass::Unclassified;
  throw ParseError(fmt::format("unknown road class '{}'", text));
}

std::string_view road_class_name(RoadClass c) {
  switch (c) {
    case RoadClass::Trunk: return "Trunk";
    case RoadClass::Principal: return "Principal";
    case RoadClass::B: return "B";
    case RoadClass::C: return "C";
    case RoadClass::Unclassified: return "Unclassified";
  }
  return "?";
}

Date parse_date(std::string_view text) {
  int y = 0, m = 0, d = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-' || !digits(text, 0, 4, y) ||
      !digits(text, 5, 2, m) || !digits(text, 8, 2, d)) {
    throw ParseError(fmt::format("invalid date '{}', expected YYYY-MM-DD", text));
  }
  const Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                  std::chrono::day{static_cast<unsigned>(d)}};
  if (!date.ok()) throw ParseError(fmt::format("invalid calendar date '{}'", text));
  return date;
}

std::string format_date(Date d) {
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(d.year()),
                     static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
}

int parse_time_of_day(std::string_view text) {
  int h = 0, m = 0, s = 0;
  if (text.size() != 8 || text[2] != ':' || text[5] != ':' || !digits(text, 0, 2, h) ||
      !digits(text, 3, 2, m) || !digits(text, 6, 2, s) || h > 23 || m > 59 || s > 59) {
    throw ParseError(fmt::format("invalid time '{}', expected HH:MM:SS", text));
  }
  return h * 3600 + m * 60 + s;
}

std::string format_time_of_day(int seconds) {
  return fmt::format("{:02d}:{:02d}:{:02d}", seconds / 3600, seconds / 60 % 60, seconds % 60);
}

Timestamp parse_timestamp(std::string_view text) {
  if (text.size() != 19 || (text[10] != 'T' && text[10] != ' ')) {
    throw ParseError(fmt::format("invalid timestamp '{}', expected YYYY-MM-DDTHH:MM:SS", text));
  }
  return make_timestamp(parse_date(text.substr(0, 10)), parse_time_of_day(text.substr(11)));
}

std::string format_timestamp(Timestamp t) {
  const auto day = std::chrono::floor<std::chrono::days>(t);
  const auto secs = static_cast<int>((t - day).count());
  return fmt::format("{}T{}", format_date(Date{day}), format_time_of_day(secs));
}

Timestamp make_timestamp(Date d, int seconds_of_day) {
  return std::chrono::sys_days{d} + std::chrono::seconds{seconds_of_day};
}

int hour_ending(int seconds_of_day) {
  if (seconds_of_day <= 0) return 1;
  return (seconds_of_day + 3599) / 3600;
}

HourSlot hour_slot(Timestamp t) {
  const auto day = std::chrono::floor<std::chrono::days>(t);
  const auto secs = static_cast<int>((t - day).count());
  return HourSlot{Date{day}, hour_ending(secs)};
}

bool observation_less(const PairedObservation& a, const PairedObservation& b) {
  if (a.site != b.site) return a.site < b.site;
  const HourSlot sa{a.date, a.hour}, sb{b.date, b.hour};
  if (sa != sb) return sa < sb;
  if (a.volume != b.volume) return a.volume < b.volume;
  return a.travel_time < b.travel_time;
}

std::map<SiteKey, std::vector<PairedObservation>> group_by_site(
    std::span<const PairedObservation> observations) {
  std::map<SiteKey, std::vector<PairedObservation>> groups;
  for (const auto& o : observations) groups[o.site].push_back(o);
  return groups;
}

}  // namespace vdcal
