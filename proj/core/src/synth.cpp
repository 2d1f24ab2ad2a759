#include "vdcal/synth.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "vdcal/harvester.hpp"

namespace vdcal {

namespace {

// Daily profile for the bimodal law: a night-time floor plus a morning bump
// centred on 08:00 and a wider, slightly lower evening bump centred on 18:00.
// Peak hours land close to capacity so only a few percent of hours exceed it.
constexpr double kNightFloor = 0.04;
constexpr double kMorningPeak = 1.0;
constexpr double kMorningCentre = 8.0;
constexpr double kMorningWidth = 1.5;
constexpr double kEveningPeak = 0.9;
constexpr double kEveningCentre = 18.0;
constexpr double kEveningWidth = 2.0;
constexpr double kDayFactorLow = 0.75;
constexpr double kDayFactorHigh = 1.0;
constexpr double kHourJitter = 0.04;

constexpr double kUniformUpper = 1.2;  // × vc
constexpr double kNoiseTruncation = -0.9;
constexpr double kOutlierLow = 3.0;
constexpr double kOutlierHigh = 4.0;

double daily_profile(int hour) {
  const double h = hour - 0.5;  // middle of the interval ending at `hour`
  const auto bump = [h](double centre, double width) {
    return std::exp(-(h - centre) * (h - centre) / (2.0 * width * width));
  };
  return kNightFloor + (1.0 - kNightFloor) * std::max(kMorningPeak * bump(kMorningCentre, kMorningWidth),
                                                      kEveningPeak * bump(kEveningCentre, kEveningWidth));
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class VolumeSampler {
 public:
  VolumeSampler(const SynthSpec& spec, std::mt19937_64& rng) : spec_(spec), rng_(rng) {}

  double operator()(std::size_t k) {
    const double vc = spec_.truth.vc;
    if (spec_.volume_law == VolumeLaw::Uniform) {
      return std::round(std::uniform_real_distribution<double>(0.0, kUniformUpper * vc)(rng_));
    }
    const std::size_t day = k / 24;
    if (day != current_day_) {
      current_day_ = day;
      day_factor_ = std::uniform_real_distribution<double>(kDayFactorLow, kDayFactorHigh)(rng_);
    }
    const int hour = static_cast<int>(k % 24) + 1;
    const double jitter = std::normal_distribution<double>(0.0, kHourJitter)(rng_);
    return std::max(0.0, std::round(vc * daily_profile(hour) * day_factor_ * (1.0 + jitter)));
  }

 private:
  const SynthSpec& spec_;
  std::mt19937_64& rng_;
  std::size_t current_day_ = static_cast<std::size_t>(-1);
  double day_factor_ = 1.0;
};

PairedObservation slot_observation(const SynthSpec& spec, SiteKey site, std::size_t k) {
  const auto day = std::chrono::sys_days{spec.start_date} + std::chrono::days{k / 24};
  return PairedObservation{site, Date{day}, static_cast<int>(k % 24) + 1, 0.0, 0.0};
}

}  // namespace

std::string_view volume_law_name(VolumeLaw law) {
  return law == VolumeLaw::Uniform ? "uniform" : "bimodal-daily";
}

VolumeLaw parse_volume_law(std::string_view text) {
  if (text == "uniform") return VolumeLaw::Uniform;
  if (text == "bimodal-daily") return VolumeLaw::BimodalDaily;
  throw ParseError(fmt::format("unknown volume law '{}'", text));
}

void SynthSpec::validate() const {
  truth.validate();
  if (!(link_length_m > 0.0)) throw InvalidArgument("link_length_m must be positive");
  if (n_obs < 1) throw InvalidArgument("n_obs must be at least 1");
  if (!(noise_sigma0 >= 0.0)) throw InvalidArgument("sigma0 must be non-negative");
  if (!(noise_growth >= 0.0)) throw InvalidArgument("growth must be non-negative");
  if (!(free_flow_share >= 0.0 && free_flow_share <= 1.0)) {
    throw InvalidArgument("free_flow_share must be within [0, 1]");
  }
}

SynthSite generate_site(const SynthSpec& spec, SiteKey site) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  VolumeSampler volumes(spec, rng);
  std::normal_distribution<double> standard_normal(0.0, 1.0);
  std::bernoulli_distribution zero_volume(spec.free_flow_share);

  SynthSite out;
  out.truth = spec.truth;
  out.observations.reserve(spec.n_obs + spec.outlier_count);
  for (std::size_t k = 0; k < spec.n_obs; ++k) {
    auto o = slot_observation(spec, site, k);
    o.volume = volumes(k);
    if (spec.free_flow_share > 0.0 && zero_volume(rng)) o.volume = 0.0;
    const double sigma = spec.noise_sigma0 + spec.noise_growth * o.volume / spec.truth.vc;
    double e = 0.0;
    if (sigma > 0.0) {
      do {
        e = sigma * standard_normal(rng);
      } while (e <= kNoiseTruncation);
    }
    o.travel_time = bpr_time(spec.truth, o.volume) * (1.0 + e);
    out.observations.push_back(o);
  }
  std::uniform_real_distribution<double> spike(kOutlierLow, kOutlierHigh);
  for (std::size_t j = 0; j < spec.outlier_count; ++j) {
    const std::size_t k = spec.n_obs + j;
    auto o = slot_observation(spec, site, k);
    o.volume = volumes(k);
    o.travel_time = bpr_time(spec.truth, o.volume) * spike(rng);
    out.outlier_indices.push_back(out.observations.size());
    out.observations.push_back(o);
  }
  return out;
}

std::vector<VehicleRecord> vehicle_records_for(const PairedObservation& o, double speed_kmh) {
  const auto n = static_cast<std::int64_t>(o.volume);
  std::vector<VehicleRecord> records;
  records.reserve(static_cast<std::size_t>(n));
  const double speed = std::round(speed_kmh);
  for (std::int64_t i = 0; i < n; ++i) {
    // Spread over (h-1:00:00, h:00:00), strictly inside the hour.
    const int tod = (o.hour - 1) * 3600 + 1 + static_cast<int>(i * 3598 / std::max<std::int64_t>(n, 1));
    records.push_back({o.site.site_id, o.site.direction, o.date, tod, speed});
  }
  return records;
}

CorpusSummary generate_corpus(std::span<const CorpusSite> sites, const CorpusStreams& out) {
  CorpusSummary summary;
  out.counters << kCounterHeader << '\n';
  out.replay << kTravelTimeHeader << '\n';
  out.truth << kTruthHeader << '\n';

  std::vector<SiteMetadata> metadata;
  for (const auto& s : sites) {
    metadata.push_back(s.meta);
    auto generated = generate_site(s.spec, s.meta.site);
    for (const auto& o : generated.observations) {
      for (const auto& r : vehicle_records_for(o, speed_from_time(s.meta.link_length_m, o.travel_time))) {
        write_vehicle_record(out.counters, r);
        ++summary.vehicle_records;
      }
      const TravelTimeRecord t{o.site, make_timestamp(o.date, (o.hour - 1) * 3600 + 1800),
                               o.travel_time};
      write_travel_time_row(out.replay, t);
    }
    const auto& tr = s.spec.truth;
    out.truth << fmt::format("{},{},{},{},{},{},{},{}\n", s.meta.site.combined_id(), tr.t0, tr.vc,
                             tr.alpha, tr.beta, s.spec.noise_sigma0, s.spec.noise_growth,
                             s.spec.seed);
    summary.observations += generated.observations.size();
    summary.generated.push_back(std::move(generated));
    ++summary.sites;
  }
  write_metadata(out.metadata, metadata);
  return summary;
}

std::uint64_t site_seed(std::uint64_t corpus_seed, std::size_t index) {
  return splitmix64(corpus_seed ^ splitmix64(static_cast<std::uint64_t>(index) + 1));
}

namespace {

struct ClassProfile {
  RoadClass road_class;
  int count;
  double speed_limit_kmh;
  double free_flow_kmh_low, free_flow_kmh_high;
  double vc_low, vc_high;
  double length_low, length_high;
  double alpha_low, alpha_high;
  double beta_low, beta_high;
};

// Class mix 6/16/3/3/9 of 37 counters scaled to 24 calibrated sites.
constexpr ClassProfile kProfiles[] = {
    {RoadClass::Trunk, 4, 64.0, 48.0, 56.0, 1400.0, 1900.0, 700.0, 1200.0, 0.35, 0.60, 1.10, 1.40},
    {RoadClass::Principal, 10, 48.0, 26.0, 36.0, 550.0, 950.0, 400.0, 900.0, 1.05, 1.40, 1.50, 1.85},
    {RoadClass::B, 2, 48.0, 30.0, 38.0, 400.0, 650.0, 400.0, 800.0, 0.55, 0.80, 1.30, 1.60},
    {RoadClass::C, 2, 48.0, 34.0, 42.0, 280.0, 450.0, 350.0, 700.0, 0.55, 0.80, 1.35, 1.60},
    {RoadClass::Unclassified, 6, 32.0, 28.0, 36.0, 180.0, 350.0, 250.0, 600.0, 0.50, 0.90, 1.20, 1.60},
};

constexpr std::size_t kDefaultDays = 14;
constexpr double kDefaultSigma0 = 0.05;
constexpr double kDefaultGrowth = 0.10;
constexpr std::size_t kDefaultOutliers = 2;

struct PublishedSite {
  SiteKey site;
  RoadClass road_class;
  double vc, free_flow_kmh, alpha, beta, length_m;
};

// Sites whose observed coefficients are published; lengths other than the
// 561 m Royal Parade link are illustrative.
const PublishedSite kPublishedSites[] = {
    {{9, Direction::South}, RoadClass::Trunk, 1706.8, 53.3, 0.43, 1.16, 950.0},
    {{11, Direction::North}, RoadClass::Principal, 589.9, 28.9, 1.23, 1.68, 561.0},
    {{35, Direction::South}, RoadClass::C, 314.3, 40.8, 0.67, 1.47, 480.0},
};

}  // namespace

std::vector<CorpusSite> default_corpus(std::uint64_t seed) {
  std::mt19937_64 structure(0x5eed5eedULL);
  const auto uniform = [&](double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(structure);
  };
  const auto round_to = [](double v, double step) { return std::round(v / step) * step; };

  std::vector<CorpusSite> corpus;
  int next_id = 1;
  for (const auto& profile : kProfiles) {
    for (int i = 0; i < profile.count; ++i) {
      CorpusSite s;
      s.meta.road_class = profile.road_class;
      s.meta.speed_limit_kmh = profile.speed_limit_kmh;

      double vc = round_to(uniform(profile.vc_low, profile.vc_high), 0.1);
      double ff = round_to(uniform(profile.free_flow_kmh_low, profile.free_flow_kmh_high), 0.1);
      double alpha = round_to(uniform(profile.alpha_low, profile.alpha_high), 0.01);
      double beta = round_to(uniform(profile.beta_low, profile.beta_high), 0.01);
      double length = round_to(uniform(profile.length_low, profile.length_high), 1.0);
      const double dmrb_share = uniform(0.28, 0.40);

      const PublishedSite* published = nullptr;
      for (const auto& p : kPublishedSites) {
        if (p.road_class == profile.road_class && i == 0) published = &p;
      }
      if (published) {
        s.meta.site = published->site;
        vc = published->vc;
        ff = published->free_flow_kmh;
        alpha = published->alpha;
        beta = published->beta;
        length = published->length_m;
      } else {
        while (next_id == 9 || next_id == 11 || next_id == 35) ++next_id;
        s.meta.site = SiteKey{next_id, (next_id % 2) ? Direction::North : Direction::East};
        ++next_id;
      }
      s.meta.link_length_m = length;
      s.meta.dmrb_capacity_vph = round_to(vc / dmrb_share, 100.0);
      const double lat = 51.40 + 0.01 * static_cast<double>(corpus.size());
      const double lon = -0.30 + 0.015 * static_cast<double>(corpus.size());
      s.meta.origin = {lat, lon};
      s.meta.destination = {lat + length / 111'000.0, lon};

      s.spec.truth = BprParams{kMsToKmh * length / ff, vc, alpha, beta, Provenance::DD2};
      s.spec.link_length_m = length;
      s.spec.n_obs = kDefaultDays * 24;
      s.spec.volume_law = VolumeLaw::BimodalDaily;
      s.spec.noise_sigma0 = kDefaultSigma0;
      s.spec.noise_growth = kDefaultGrowth;
      s.spec.outlier_count = kDefaultOutliers;
      s.spec.seed = site_seed(seed, corpus.size());
      corpus.push_back(s);
    }
  }
  return corpus;
}

namespace {

using nlohmann::json;

const json& field(const json& obj, const std::string& path, const char* name) {
  if (!obj.contains(name)) throw ParseError(fmt::format("{}.{}: missing", path, name));
  return obj.at(name);
}

double number(const json& obj, const std::string& path, const char* name) {
  const auto& v = field(obj, path, name);
  if (!v.is_number()) throw ParseError(fmt::format("{}.{}: expected a number", path, name));
  return v.get<double>();
}

std::string text(const json& obj, const std::string& path, const char* name) {
  const auto& v = field(obj, path, name);
  if (!v.is_string()) throw ParseError(fmt::format("{}.{}: expected a string", path, name));
  return v.get<std::string>();
}

LatLon latlon(const json& obj, const std::string& path, const char* name) {
  const auto& v = field(obj, path, name);
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ParseError(fmt::format("{}.{}: expected [lat, lon]", path, name));
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

std::uint64_t unsigned_integer(const json& obj, const std::string& path, const char* name) {
  const auto& v = field(obj, path, name);
  if (!v.is_number_integer() || (!v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    throw ParseError(fmt::format("{}.{}: expected a non-negative integer", path, name));
  }
  return v.get<std::uint64_t>();
}

std::vector<CorpusSite> parse_corpus(std::string_view json_text,
                                     const std::optional<std::uint64_t>& seed_override) {
  json doc;
  try {
    doc = json::parse(json_text.begin(), json_text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("corpus spec is not valid JSON: {}", e.what()));
  }
  if (!doc.is_object()) throw ParseError("corpus spec: expected a JSON object");
  const std::uint64_t seed =
      seed_override ? *seed_override
                    : (doc.contains("seed") ? unsigned_integer(doc, "spec", "seed") : kDefaultCorpusSeed);
  Date start{std::chrono::year{2016}, std::chrono::month{2}, std::chrono::day{27}};
  if (doc.contains("start_date")) {
    try {
      start = parse_date(text(doc, "spec", "start_date"));
    } catch (const ParseError& e) {
      throw ParseError(fmt::format("spec.start_date: {}", e.what()));
    }
  }
  const auto& sites = field(doc, "spec", "sites");
  if (!sites.is_array() || sites.empty()) {
    throw ParseError("spec.sites: expected a non-empty array");
  }

  std::vector<CorpusSite> corpus;
  for (std::size_t i = 0; i < sites.size(); ++i) {
    const auto path = fmt::format("sites[{}]", i);
    const auto& j = sites[i];
    if (!j.is_object()) throw ParseError(fmt::format("{}: expected an object", path));
    CorpusSite s;
    const auto wrap = [&](const char* name, auto&& fn) {
      try {
        fn();
      } catch (const ParseError& e) {
        const std::string msg = e.what();
        if (msg.rfind(path, 0) == 0) throw;
        throw ParseError(fmt::format("{}.{}: {}", path, name, msg));
      } catch (const InvalidArgument& e) {
        throw ParseError(fmt::format("{}.{}: {}", path, name, e.what()));
      }
    };
    wrap("combined_id", [&] { s.meta.site = SiteKey::parse(text(j, path, "combined_id")); });
    wrap("road_class", [&] { s.meta.road_class = parse_road_class(text(j, path, "road_class")); });
    s.meta.link_length_m = number(j, path, "length_m");
    s.meta.speed_limit_kmh = number(j, path, "speed_limit_kmh");
    s.meta.dmrb_capacity_vph = number(j, path, "dmrb_capacity_vph");
    s.meta.origin = latlon(j, path, "origin");
    s.meta.destination = latlon(j, path, "destination");
    s.spec.truth = BprParams{number(j, path, "t0_s"), number(j, path, "vc_vph"),
                             number(j, path, "alpha"), number(j, path, "beta"), Provenance::DD2};
    s.spec.link_length_m = s.meta.link_length_m;
    s.spec.n_obs = static_cast<std::size_t>(unsigned_integer(j, path, "n_obs"));
    wrap("volume_law", [&] { s.spec.volume_law = parse_volume_law(text(j, path, "volume_law")); });
    s.spec.noise_sigma0 = number(j, path, "sigma0");
    s.spec.noise_growth = number(j, path, "growth");
    s.spec.outlier_count = static_cast<std::size_t>(unsigned_integer(j, path, "outliers"));
    if (j.contains("free_flow_share")) s.spec.free_flow_share = number(j, path, "free_flow_share");
    s.spec.seed = (!seed_override && j.contains("seed")) ? unsigned_integer(j, path, "seed")
                                                         : site_seed(seed, i);
    s.spec.start_date = start;

    if (s.meta.link_length_m <= 0.0) throw ParseError(path + ".length_m: must be positive");
    if (s.meta.speed_limit_kmh <= 0.0) throw ParseError(path + ".speed_limit_kmh: must be positive");
    if (s.meta.dmrb_capacity_vph <= 0.0) {
      throw ParseError(path + ".dmrb_capacity_vph: must be positive");
    }
    if (s.spec.n_obs < 1) throw ParseError(path + ".n_obs: must be at least 1");
    if (!(s.spec.truth.t0 > 0.0)) throw ParseError(path + ".t0_s: must be positive");
    if (!(s.spec.truth.vc > 0.0)) throw ParseError(path + ".vc_vph: must be positive");
    if (!(s.spec.truth.alpha >= 0.0)) throw ParseError(path + ".alpha: must be non-negative");
    if (!(s.spec.truth.beta > 0.0)) throw ParseError(path + ".beta: must be positive");
    if (!(s.spec.noise_sigma0 >= 0.0)) throw ParseError(path + ".sigma0: must be non-negative");
    if (!(s.spec.noise_growth >= 0.0)) throw ParseError(path + ".growth: must be non-negative");
    if (!(s.spec.free_flow_share >= 0.0 && s.spec.free_flow_share <= 1.0)) {
      throw ParseError(path + ".free_flow_share: must be within [0, 1]");
    }
    for (const auto& prev : corpus) {
      if (prev.meta.site == s.meta.site) {
        throw ParseError(fmt::format("{}.combined_id: duplicate site {}", path,
                                     s.meta.site.combined_id()));
      }
    }
    corpus.push_back(s);
  }
  return corpus;
}

}  // namespace

std::vector<CorpusSite> corpus_from_json(std::string_view json_text) {
  return parse_corpus(json_text, std::nullopt);
}

std::vector<CorpusSite> corpus_from_json(std::string_view json_text, std::uint64_t seed_override) {
  return parse_corpus(json_text, seed_override);
}

std::string corpus_to_json(std::span<const CorpusSite> sites, std::uint64_t seed) {
  json doc;
  doc["seed"] = seed;
  if (!sites.empty()) doc["start_date"] = format_date(sites.front().spec.start_date);
  doc["sites"] = json::array();
  for (const auto& s : sites) {
    json j;
    j["combined_id"] = s.meta.site.combined_id();
    j["road_class"] = std::string(road_class_name(s.meta.road_class));
    j["length_m"] = s.meta.link_length_m;
    j["speed_limit_kmh"] = s.meta.speed_limit_kmh;
    j["dmrb_capacity_vph"] = s.meta.dmrb_capacity_vph;
    j["origin"] = {s.meta.origin.lat, s.meta.origin.lon};
    j["destination"] = {s.meta.destination.lat, s.meta.destination.lon};
    j["t0_s"] = s.spec.truth.t0;
    j["vc_vph"] = s.spec.truth.vc;
    j["alpha"] = s.spec.truth.alpha;
    j["beta"] = s.spec.truth.beta;
    j["n_obs"] = s.spec.n_obs;
    j["volume_law"] = std::string(volume_law_name(s.spec.volume_law));
    j["sigma0"] = s.spec.noise_sigma0;
    j["growth"] = s.spec.noise_growth;
    j["outliers"] = s.spec.outlier_count;
    if (s.spec.free_flow_share > 0.0) j["free_flow_share"] = s.spec.free_flow_share;
    doc["sites"].push_back(j);
  }
  return doc.dump(2) + "\n";
}

}  // namespace vdcal
