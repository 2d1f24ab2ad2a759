#include "vdcal/ingest.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "vdcal/harvester.hpp"

namespace vdcal {

VehicleRecord parse_vehicle_record(std::string_view line) {
  const auto f = csv::split(line);
  if (f.size() != 5) {
    throw ParseError(fmt::format("expected 5 fields, found {}", f.size()));
  }
  VehicleRecord r;
  const auto id = csv::to_int(f[0], "site");
  if (id < 0 || id > 1'000'000'000) throw ParseError(fmt::format("site id out of range: {}", id));
  r.site_id = static_cast<int>(id);
  r.direction = parse_direction(f[1]);
  r.date = parse_date(f[2]);
  r.time_of_day = parse_time_of_day(f[3]);
  r.point_speed = csv::to_double(f[4], "speed");
  if (r.point_speed < 0.0) throw ParseError("negative speed");
  return r;
}

Parsed<VehicleRecord> parse_vehicle_records(std::istream& in) {
  Parsed<VehicleRecord> out;
  csv::LineReader reader(in, kCounterHeader);
  std::string_view line;
  while (reader.next(line)) {
    try {
      out.rows.push_back(parse_vehicle_record(line));
    } catch (const Error& e) {
      out.errors.push_back({reader.line_number(), e.what()});
    }
  }
  return out;
}

void write_vehicle_record(std::ostream& out, const VehicleRecord& r) {
  out << r.site_id << ',' << direction_name(r.direction) << ',' << format_date(r.date) << ','
      << format_time_of_day(r.time_of_day) << ',' << csv::format_number(r.point_speed) << '\n';
}

void HourlyAggregator::add(const VehicleRecord& r) {
  ++cells_[{r.site(), HourSlot{r.date, hour_ending(r.time_of_day)}}];
  ++records_;
}

std::vector<HourlyVolume> HourlyAggregator::result() const {
  std::vector<HourlyVolume> out;
  out.reserve(cells_.size());
  for (const auto& [key, count] : cells_) {
    out.push_back(HourlyVolume{key.first, key.second.date, key.second.hour, count});
  }
  return out;
}

std::vector<HourlyVolume> aggregate_hourly(std::span<const VehicleRecord> records) {
  HourlyAggregator agg;
  for (const auto& r : records) agg.add(r);
  return agg.result();
}

void write_hourly_volumes(std::ostream& out, std::span<const HourlyVolume> volumes) {
  out << kHourlyHeader << '\n';
  for (const auto& v : volumes) {
    out << v.site.combined_id() << ',' << v.site.site_id << ',' << direction_name(v.site.direction)
        << ',' << format_date(v.date) << ',' << v.hour << ',' << v.volume << '\n';
  }
}

namespace {

SiteMetadata parse_metadata_row(std::string_view line) {
  const auto f = csv::split(line);
  if (f.size() != 9) throw ParseError(fmt::format("expected 9 fields, found {}", f.size()));
  SiteMetadata m;
  m.site = SiteKey::parse(f[0]);
  m.road_class = parse_road_class(f[1]);
  m.link_length_m = csv::to_double(f[2], "length_m");
  m.speed_limit_kmh = csv::to_double(f[3], "speed_limit_kmh");
  m.dmrb_capacity_vph = csv::to_double(f[4], "dmrb_capacity_vph");
  m.origin = {csv::to_double(f[5], "origin_lat"), csv::to_double(f[6], "origin_lon")};
  m.destination = {csv::to_double(f[7], "dest_lat"), csv::to_double(f[8], "dest_lon")};
  if (m.link_length_m <= 0.0) throw ParseError("length_m must be positive");
  if (m.speed_limit_kmh <= 0.0) throw ParseError("speed_limit_kmh must be positive");
  if (m.dmrb_capacity_vph <= 0.0) throw ParseError("dmrb_capacity_vph must be positive");
  return m;
}

}  // namespace

Parsed<SiteMetadata> parse_metadata(std::istream& in) {
  Parsed<SiteMetadata> out;
  csv::LineReader reader(in, kMetadataHeader);
  std::string_view line;
  while (reader.next(line)) {
    try {
      out.rows.push_back(parse_metadata_row(line));
    } catch (const Error& e) {
      out.errors.push_back({reader.line_number(), e.what()});
    }
  }
  return out;
}

void write_metadata(std::ostream& out, std::span<const SiteMetadata> sites) {
  out << kMetadataHeader << '\n';
  for (const auto& m : sites) {
    out << fmt::format("{},{},{},{},{},{},{},{},{}\n", m.site.combined_id(),
                       road_class_name(m.road_class), m.link_length_m, m.speed_limit_kmh,
                       m.dmrb_capacity_vph, m.origin.lat, m.origin.lon, m.destination.lat,
                       m.destination.lon);
  }
}

MetadataCatalog make_catalog(std::span<const SiteMetadata> sites) {
  MetadataCatalog catalog;
  for (const auto& m : sites) {
    if (!catalog.emplace(m.site, m).second) {
      throw InvalidArgument(fmt::format("duplicate metadata for site {}", m.site.combined_id()));
    }
  }
  return catalog;
}

PairingResult pair_observations(std::span<const HourlyVolume> volumes,
                                std::span<const TravelTimeRecord> times,
                                const MetadataCatalog& catalog) {
  struct TimeCell {
    double sum = 0.0;
    std::size_t count = 0;
  };
  std::map<std::pair<SiteKey, HourSlot>, TimeCell> time_cells;
  for (const auto& t : times) {
    auto& cell = time_cells[{t.site, hour_slot(t.query_time)}];
    cell.sum += t.duration_s;
    ++cell.count;
  }

  PairingResult result;
  std::set<SiteKey> missing;
  std::set<std::pair<SiteKey, HourSlot>> matched;
  for (const auto& v : volumes) {
    if (!catalog.contains(v.site)) {
      missing.insert(v.site);
      continue;
    }
    const std::pair key{v.site, HourSlot{v.date, v.hour}};
    const auto it = time_cells.find(key);
    if (it == time_cells.end()) {
      ++result.unmatched_volume_rows;
      continue;
    }
    matched.insert(key);
    result.observations.push_back(PairedObservation{
        v.site, v.date, v.hour, static_cast<double>(v.volume),
        it->second.sum / static_cast<double>(it->second.count)});
  }
  for (const auto& [key, cell] : time_cells) {
    if (!catalog.contains(key.first)) {
      missing.insert(key.first);
    } else if (!matched.contains(key)) {
      ++result.unmatched_time_slots;
    }
  }
  for (const auto& site : missing) {
    result.site_errors.push_back({site, "site absent from metadata catalog"});
  }
  std::sort(result.observations.begin(), result.observations.end(), observation_less);
  // Duplicate volume rows for one slot would double-count the slot.
  result.observations.erase(
      std::unique(result.observations.begin(), result.observations.end(),
                  [](const PairedObservation& a, const PairedObservation& b) {
                    return a.site == b.site && a.date == b.date && a.hour == b.hour;
                  }),
      result.observations.end());
  return result;
}

Parsed<PairedObservation> parse_observations(std::istream& in) {
  Parsed<PairedObservation> out;
  csv::LineReader reader(in, kObservationHeader);
  std::string_view line;
  while (reader.next(line)) {
    try {
      const auto f = csv::split(line);
      if (f.size() != 5) throw ParseError(fmt::format("expected 5 fields, found {}", f.size()));
      PairedObservation o;
      o.site = SiteKey::parse(f[0]);
      o.date = parse_date(f[1]);
      const auto hour = csv::to_int(f[2], "hour");
      if (hour < 1 || hour > 24) throw ParseError("hour outside 1..24");
      o.hour = static_cast<int>(hour);
      o.volume = csv::to_double(f[3], "volume");
      o.travel_time = csv::to_double(f[4], "travel_time_s");
      if (o.volume < 0.0) throw ParseError("negative volume");
      if (o.travel_time <= 0.0) throw ParseError("travel time must be positive");
      out.rows.push_back(o);
    } catch (const Error& e) {
      out.errors.push_back({reader.line_number(), e.what()});
    }
  }
  return out;
}

void write_observations(std::ostream& out, std::span<const PairedObservation> observations) {
  out << kObservationHeader << '\n';
  for (const auto& o : observations) {
    out << fmt::format("{},{},{},{},{}\n", o.site.combined_id(), format_date(o.date), o.hour,
                       o.volume, o.travel_time);
  }
}

}  // namespace vdcal
