#include "vdcal/harvester.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace vdcal {

namespace {

TravelTimeRecord parse_travel_time_row(std::string_view line) {
  const auto f = csv::split(line);
  if (f.size() != 3) throw ParseError(fmt::format("expected 3 fields, found {}", f.size()));
  TravelTimeRecord r;
  r.site = SiteKey::parse(f[0]);
  r.query_time = parse_timestamp(f[1]);
  r.duration_s = csv::to_double(f[2], "duration_s");
  if (r.duration_s <= 0.0) throw ParseError("duration_s must be positive");
  return r;
}

bool record_less(const TravelTimeRecord& a, const TravelTimeRecord& b) {
  if (a.site != b.site) return a.site < b.site;
  return a.query_time < b.query_time;
}

}  // namespace

Parsed<TravelTimeRecord> parse_travel_times(std::istream& in) {
  Parsed<TravelTimeRecord> out;
  csv::LineReader reader(in, kTravelTimeHeader);
  std::string_view line;
  while (reader.next(line)) {
    try {
      out.rows.push_back(parse_travel_time_row(line));
    } catch (const Error& e) {
      out.errors.push_back({reader.line_number(), e.what()});
    }
  }
  return out;
}

void write_travel_times(std::ostream& out, std::span<const TravelTimeRecord> records) {
  out << kTravelTimeHeader << '\n';
  for (const auto& r : records) write_travel_time_row(out, r);
}

void write_travel_time_row(std::ostream& out, const TravelTimeRecord& r) {
  out << r.site.combined_id() << ',' << format_timestamp(r.query_time) << ','
      << csv::format_number(r.duration_s) << '\n';
}

std::vector<Timestamp> HarvestPlan::fire_times() const {
  std::vector<Timestamp> times;
  for (auto t = start; t < end; t += interval) times.push_back(t);
  return times;
}

std::vector<ScheduledQuery> HarvestPlan::schedule() const {
  const auto times = fire_times();
  std::vector<ScheduledQuery> out;
  out.reserve(od_pairs.size() * times.size());
  for (const auto& od : od_pairs) {
    for (const auto t : times) out.push_back({od.site, od.origin, od.destination, t});
  }
  return out;
}

HarvestPlan plan_requests(const MetadataCatalog& catalog, std::chrono::seconds interval,
                          Timestamp start, Timestamp end) {
  if (catalog.empty()) throw InvalidArgument("cannot plan requests for an empty catalog");
  if (interval.count() <= 0) throw InvalidArgument("harvest interval must be positive");
  if (3600 % interval.count() != 0) {
    throw InvalidArgument(
        fmt::format("harvest interval {} s does not divide one hour", interval.count()));
  }
  if (end <= start) throw InvalidArgument("harvest horizon end must be after start");
  HarvestPlan plan;
  plan.interval = interval;
  plan.start = start;
  plan.end = end;
  for (const auto& [site, meta] : catalog) {
    plan.od_pairs.push_back({site, meta.origin, meta.destination});
  }
  return plan;
}

ReplayProvider::ReplayProvider(std::span<const TravelTimeRecord> records) {
  for (const auto& r : records) table_[{r.site, r.query_time}] = r.duration_s;
}

ReplayProvider ReplayProvider::from_csv(std::istream& in) {
  auto parsed = parse_travel_times(in);
  if (!parsed.errors.empty()) {
    const auto& e = parsed.errors.front();
    throw ParseError(fmt::format("replay file line {}: {}", e.line, e.message));
  }
  return ReplayProvider(parsed.rows);
}

std::optional<double> ReplayProvider::travel_time(const DirectionsQuery& query) const {
  const auto it = table_.find({query.site, query.departure});
  if (it == table_.end()) return std::nullopt;
  return it->second;
}

Timestamp SystemClock::now() const {
  return std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
}

void SystemClock::sleep_until(Timestamp t) { std::this_thread::sleep_until(t); }

HarvestResult execute_plan(const HarvestPlan& plan, const DirectionsProvider& provider,
                           Clock& clock) {
  HarvestResult result;
  std::map<SiteKey, std::size_t> successes;
  for (const auto& od : plan.od_pairs) successes[od.site] = 0;

  for (const auto t : plan.fire_times()) {
    clock.sleep_until(t);
    for (const auto& od : plan.od_pairs) {
      ++result.planned;
      const DirectionsQuery query{od.site, od.origin, od.destination, t};
      try {
        const auto duration = provider.travel_time(query);
        if (!duration) {
          ++result.misses;
          continue;
        }
        if (!(*duration > 0.0)) throw ProviderError("non-positive duration");
        result.records.push_back({od.site, t, *duration});
        ++successes[od.site];
      } catch (const Error& e) {
        result.failures.push_back({od.site, t, e.what()});
      }
    }
  }
  std::sort(result.records.begin(), result.records.end(), record_less);
  for (const auto& [site, n] : successes) {
    if (n == 0) result.warnings.push_back({site, "no query succeeded for this site"});
  }
  return result;
}

HarvestResult execute_plan(const HarvestPlan& plan, const DirectionsProvider& provider) {
  LogicalClock clock(plan.start);
  return execute_plan(plan, provider, clock);
}

long parse_provider_response(std::string_view json) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json.begin(), json.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(fmt::format("provider response is not valid JSON: {}", e.what()));
  }
  const auto missing = [](std::string_view at) {
    return ParseError(fmt::format("provider response: missing {} (at {})", kDurationPath, at));
  };
  if (!doc.is_object() || !doc.contains("routes") || !doc["routes"].is_array() ||
      doc["routes"].empty()) {
    throw missing("routes[0]");
  }
  const auto& route = doc["routes"][0];
  if (!route.is_object() || !route.contains("legs") || !route["legs"].is_array() ||
      route["legs"].empty()) {
    throw missing("routes[0].legs[0]");
  }
  const auto& leg = route["legs"][0];
  if (!leg.is_object() || !leg.contains("duration_in_traffic") ||
      !leg["duration_in_traffic"].is_object()) {
    throw missing("routes[0].legs[0].duration_in_traffic");
  }
  const auto& dit = leg["duration_in_traffic"];
  if (!dit.contains("value")) throw missing("routes[0].legs[0].duration_in_traffic.value");
  const auto& value = dit["value"];
  if (!value.is_number()) {
    throw ParseError(fmt::format("provider response: {} is not numeric", kDurationPath));
  }
  const auto seconds = std::lround(value.get<double>());
  if (seconds <= 0) {
    throw ParseError(fmt::format("provider response: {} must be positive", kDurationPath));
  }
  return seconds;
}

}  // namespace vdcal
