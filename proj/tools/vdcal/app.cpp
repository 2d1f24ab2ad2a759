#include "app.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include <vdcal/evaluate.hpp>
#include <vdcal/synth.hpp>

namespace vdcal::app {

namespace {

using ojson = nlohmann::ordered_json;

constexpr std::size_t kMaxRowErrorsListed = 20;

std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot open {}", path.string()));
  return in;
}

void record_row_errors(std::vector<Problem>& errors, const fs::path& file,
                       const std::vector<RowError>& rows) {
  const auto name = file.filename().string();
  for (std::size_t i = 0; i < rows.size() && i < kMaxRowErrorsListed; ++i) {
    errors.push_back({"file", name, fmt::format("line {}: {}", rows[i].line, rows[i].message)});
  }
  if (rows.size() > kMaxRowErrorsListed) {
    errors.push_back({"file", name,
                      fmt::format("{} further malformed rows", rows.size() - kMaxRowErrorsListed)});
  }
}

std::string_view curve_colour(Provenance p) {
  switch (p) {
    case Provenance::Base: return "#d62728";
    case Provenance::DD1: return "#1f77b4";
    case Provenance::DD2: return "#2ca02c";
  }
  return "black";
}

ojson problems_json(const std::vector<Problem>& problems) {
  ojson arr = ojson::array();
  for (const auto& p : problems) {
    arr.push_back({{"scope", p.scope}, {"where", p.where}, {"message", p.message}});
  }
  return arr;
}

}  // namespace

void write_atomic(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot write {}", tmp.string()));
    body(out);
    out.flush();
    if (!out) {
      out.close();
      fs::remove(tmp);
      throw Error(fmt::format("write failed for {}", path.string()));
    }
  }
  fs::rename(tmp, path);
}

void write_atomic(const fs::path& path, const std::string& content) {
  write_atomic(path, [&](std::ostream& out) { out << content; });
}

std::string read_file(const fs::path& path) {
  auto in = open_input(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SitePlot build_site_plot(const SiteMetadata& meta, std::span<const PairedObservation> observations,
                         std::span<const BprParams> models, int grid, const TagOptions& tag) {
  double vmax = 0.0;
  for (const auto& o : observations) vmax = std::max(vmax, o.volume);
  if (vmax <= 0.0) {
    for (const auto& m : models) vmax = std::max(vmax, m.vc);
  }
  const auto volumes = volume_grid(vmax, grid);

  std::vector<NamedCurve> named;
  for (const auto& m : models) named.push_back({std::string(provenance_name(m.provenance)), m});

  SitePlot out;
  out.samples = sample_curves(named, meta.link_length_m, volumes);
  out.plot.title = fmt::format("Site {} ({})", meta.site.combined_id(),
                               road_class_name(meta.road_class));
  out.plot.x_label = "Volume (veh/h)";
  out.plot.y_label = "Travel time (s)";
  for (const auto& o : observations) out.plot.markers.emplace_back(o.volume, o.travel_time);
  for (const auto& m : models) {
    Series s{std::string(provenance_name(m.provenance)), std::string(curve_colour(m.provenance)),
             {}};
    for (const auto& c : out.samples) {
      if (c.model == s.name) s.points.emplace_back(c.volume, c.time_s);
    }
    out.plot.curves.push_back(std::move(s));
  }

  const auto add_tag = [&](std::string name, std::string colour, auto&& speed_at) {
    Series s{name, std::move(colour), {}};
    for (const double v : volumes) {
      const double speed = speed_at(v);
      const double t = kMsToKmh * meta.link_length_m / speed;
      out.samples.push_back({v, name, t, speed});
      s.points.emplace_back(v, t);
    }
    out.plot.curves.push_back(std::move(s));
  };
  if (tag.class7) {
    add_tag(fmt::format("TAG7 DEVEL={}", tag.class7->devel), "#9467bd",
            [&](double v) { return tag_speed_class7(*tag.class7, v).speed_kmh; });
  }
  if (tag.class10) {
    add_tag(fmt::format("TAG10 INT={} AXS={}", tag.class10->int_per_km, tag.class10->axs_per_km),
            "#8c564b", [&](double v) { return tag_speed_class10(*tag.class10, v).speed_kmh; });
  }
  return out;
}

PipelineResult run_pipeline(const PipelineConfig& config) {
  config.cleaning.validate();
  if (config.grid < 2) throw InvalidArgument("--grid must be at least 2");

  PipelineResult r;
  fs::create_directories(config.out);
  const auto emit = [&](const std::string& rel, const std::function<void(std::ostream&)>& body) {
    write_atomic(config.out / rel, body);
    r.artifacts.push_back(rel);
  };
  const auto finish = [&]() -> PipelineResult& {
    r.artifacts.push_back("summary.json");
    write_atomic(config.out / "summary.json", summary_json(r));
    return r;
  };

  MetadataCatalog catalog;
  try {
    auto in = open_input(config.meta);
    auto parsed = parse_metadata(in);
    record_row_errors(r.errors, config.meta, parsed.errors);
    catalog = make_catalog(parsed.rows);
  } catch (const Error& e) {
    r.errors.push_back({"file", config.meta.filename().string(), e.what()});
    return finish();
  }

  HourlyAggregator aggregator;
  try {
    auto in = open_input(config.counters);
    csv::LineReader reader(in, kCounterHeader);
    std::vector<RowError> bad;
    std::string_view line;
    while (reader.next(line)) {
      try {
        aggregator.add(parse_vehicle_record(line));
      } catch (const Error& e) {
        bad.push_back({reader.line_number(), e.what()});
      }
    }
    record_row_errors(r.errors, config.counters, bad);
  } catch (const Error& e) {
    r.errors.push_back({"file", config.counters.filename().string(), e.what()});
    return finish();
  }
  const auto hourly = aggregator.result();
  r.vehicle_records = aggregator.record_count();
  r.hourly_rows = hourly.size();

  std::vector<TravelTimeRecord> times;
  try {
    auto in = open_input(config.times);
    auto parsed = parse_travel_times(in);
    record_row_errors(r.errors, config.times, parsed.errors);
    times = std::move(parsed.rows);
  } catch (const Error& e) {
    r.errors.push_back({"file", config.times.filename().string(), e.what()});
    return finish();
  }
  r.travel_time_records = times.size();

  const auto pairing = pair_observations(hourly, times, catalog);
  r.paired = pairing.observations.size();
  r.unmatched_volume_rows = pairing.unmatched_volume_rows;
  r.unmatched_time_slots = pairing.unmatched_time_slots;
  for (const auto& e : pairing.site_errors) {
    r.errors.push_back({"site", e.site.combined_id(), e.message});
  }

  const auto by_site = group_by_site(pairing.observations);
  const auto filter = filter_valid_sites(by_site, config.cleaning);
  const auto cleaned = remove_outliers(pairing.observations, config.cleaning);
  r.removed = cleaned.removed.size();
  const auto kept_by_site = group_by_site(cleaned.kept);

  std::map<SiteKey, std::string> rejected;
  for (const auto& rej : filter.rejected) rejected[rej.site] = rej.reason;

  std::vector<SiteEvaluation> evaluations;
  std::vector<PairedObservation> used;
  for (const auto& [site, meta] : catalog) {
    SiteOutcome so{site, "", "", 0, 0};
    if (const auto it = cleaned.per_site.find(site); it != cleaned.per_site.end()) {
      so.paired = it->second.total;
      so.removed = it->second.removed;
    }
    const auto obs = kept_by_site.find(site);
    if (so.paired == 0) {
      so.status = "no_data";
      so.reason = "no paired observations";
      r.warnings.push_back({"site", site.combined_id(), so.reason});
    } else if (const auto rj = rejected.find(site); rj != rejected.end()) {
      so.status = "rejected";
      so.reason = rj->second;
    } else if (obs == kept_by_site.end()) {
      so.status = "error";
      so.reason = "every observation was removed as an outlier";
      r.errors.push_back({"site", site.combined_id(), so.reason});
    } else {
      try {
        auto cal = calibrate_site(meta, obs->second);
        evaluations.push_back({meta, obs->second, cal.base, cal.dd1, cal.dd2});
        used.insert(used.end(), obs->second.begin(), obs->second.end());
        r.calibrations.push_back(std::move(cal));
        so.status = "calibrated";
      } catch (const Error& e) {
        so.status = "error";
        so.reason = e.what();
        r.errors.push_back({"site", site.combined_id(), e.what()});
      }
    }
    r.sites.push_back(std::move(so));
  }
  const auto report = build_report(evaluations);
  for (const auto& w : report.warnings) {
    r.warnings.push_back({"site", w.site.combined_id(), w.message});
  }

  emit("hourly_volumes.csv", [&](std::ostream& o) { write_hourly_volumes(o, hourly); });
  emit("observations.csv", [&](std::ostream& o) { write_observations(o, used); });
  emit("cleaning_report.csv",
       [&](std::ostream& o) { write_cleaning_report(o, cleaned, filter); });
  emit("calibration.csv", [&](std::ostream& o) { write_calibration(o, r.calibrations); });
  emit("mae_report.csv", [&](std::ostream& o) { write_mae_report(o, report); });

  for (const auto& ev : evaluations) {
    const std::vector<BprParams> models{*ev.base, *ev.dd1, *ev.dd2};
    const auto sp = build_site_plot(ev.meta, ev.observations, models, config.grid);
    const auto id = ev.meta.site.combined_id();
    emit(fmt::format("curves/{}.csv", id),
         [&](std::ostream& o) { write_curve_samples(o, sp.samples); });
    emit(fmt::format("plots/{}.svg", id), [&](std::ostream& o) { o << render_svg(sp.plot); });
  }
  return finish();
}

std::string summary_json(const PipelineResult& r) {
  ojson doc;
  doc["status"] = r.errors.empty() ? "ok" : "error";
  doc["counts"] = {{"vehicle_records", r.vehicle_records},
                   {"hourly_rows", r.hourly_rows},
                   {"travel_time_records", r.travel_time_records},
                   {"paired_observations", r.paired},
                   {"removed_outliers", r.removed},
                   {"unmatched_volume_rows", r.unmatched_volume_rows},
                   {"unmatched_time_slots", r.unmatched_time_slots},
                   {"sites_calibrated", r.calibrations.size()}};
  ojson sites = ojson::array();
  for (const auto& s : r.sites) {
    ojson j{{"combined_id", s.site.combined_id()},
            {"status", s.status},
            {"paired", s.paired},
            {"removed", s.removed}};
    if (!s.reason.empty()) j["reason"] = s.reason;
    sites.push_back(std::move(j));
  }
  doc["sites"] = std::move(sites);
  doc["errors"] = problems_json(r.errors);
  doc["warnings"] = problems_json(r.warnings);
  doc["artifacts"] = r.artifacts;
  return doc.dump(2) + "\n";
}

std::vector<std::string> run_plot(const PlotConfig& config) {
  if (config.grid < 2) throw InvalidArgument("--grid must be at least 2");

  std::map<SiteKey, CalibrationRows> calibration;
  {
    auto in = open_input(config.calibration);
    calibration = read_calibration(in);
  }
  std::vector<std::string> names;
  for (const auto& [site, rows] : calibration) names.push_back(site.combined_id());
  const auto unknown = [&] {
    return InvalidArgument(fmt::format("unknown site '{}'; available: {}", config.site,
                                       fmt::join(names, ", ")));
  };
  SiteKey site;
  try {
    site = SiteKey::parse(config.site);
  } catch (const ParseError&) {
    throw unknown();
  }
  const auto cal = calibration.find(site);
  if (cal == calibration.end()) throw unknown();

  MetadataCatalog catalog;
  {
    auto in = open_input(config.meta);
    auto parsed = parse_metadata(in);
    if (!parsed.errors.empty()) {
      throw ParseError(fmt::format("{} line {}: {}", config.meta.filename().string(),
                                   parsed.errors.front().line, parsed.errors.front().message));
    }
    catalog = make_catalog(parsed.rows);
  }
  const auto meta = catalog.find(site);
  if (meta == catalog.end()) {
    throw InvalidArgument(fmt::format("site {} missing from {}", config.site,
                                      config.meta.filename().string()));
  }

  std::vector<PairedObservation> obs;
  {
    auto in = open_input(config.observations);
    auto parsed = parse_observations(in);
    if (!parsed.errors.empty()) {
      throw ParseError(fmt::format("{} line {}: {}", config.observations.filename().string(),
                                   parsed.errors.front().line, parsed.errors.front().message));
    }
    for (auto& o : parsed.rows) {
      if (o.site == site) obs.push_back(o);
    }
  }
  if (obs.empty()) {
    throw InvalidArgument(fmt::format("site {} has no rows in {}", config.site,
                                      config.observations.filename().string()));
  }

  std::vector<BprParams> models;
  for (const auto& [prov, p] : cal->second.models) models.push_back(p);
  const auto sp = build_site_plot(meta->second, obs, models, config.grid, config.tag);
  const auto id = site.combined_id();
  const auto svg = fmt::format("{}.svg", id);
  const auto curves = fmt::format("{}_curves.csv", id);
  write_atomic(config.out / svg, render_svg(sp.plot));
  write_atomic(config.out / curves, [&](std::ostream& o) { write_curve_samples(o, sp.samples); });
  return {svg, curves};
}

HarvestOutcome run_harvest(const HarvestConfig& config) {
  MetadataCatalog catalog;
  {
    auto in = open_input(config.meta);
    auto parsed = parse_metadata(in);
    if (!parsed.errors.empty()) {
      throw ParseError(fmt::format("{} line {}: {}", config.meta.filename().string(),
                                   parsed.errors.front().line, parsed.errors.front().message));
    }
    catalog = make_catalog(parsed.rows);
  }
  auto in = open_input(config.times);
  const auto provider = ReplayProvider::from_csv(in);
  const auto plan = plan_requests(catalog, config.interval, parse_timestamp(config.start),
                                  parse_timestamp(config.end));

  HarvestOutcome out;
  out.result = execute_plan(plan, provider);
  const auto& res = out.result;
  write_atomic(config.out / "travel_times.csv",
               [&](std::ostream& o) { write_travel_times(o, res.records); });

  ojson doc;
  doc["planned"] = res.planned;
  doc["records"] = res.records.size();
  doc["misses"] = res.misses;
  ojson failures = ojson::array();
  for (const auto& f : res.failures) {
    failures.push_back({{"combined_id", f.site.combined_id()},
                        {"fire_time", format_timestamp(f.fire_time)},
                        {"message", f.message}});
  }
  doc["failures"] = std::move(failures);
  ojson warnings = ojson::array();
  for (const auto& w : res.warnings) {
    warnings.push_back({{"combined_id", w.site.combined_id()}, {"message", w.message}});
  }
  doc["warnings"] = std::move(warnings);
  write_atomic(config.out / "harvest_summary.json", doc.dump(2) + "\n");
  out.artifacts = {"travel_times.csv", "harvest_summary.json"};
  return out;
}

SynthOutcome run_synth(const SynthConfig& config) {
  std::vector<CorpusSite> corpus;
  std::uint64_t seed = config.seed.value_or(kDefaultCorpusSeed);
  if (config.spec) {
    const auto text = read_file(*config.spec);
    corpus = config.seed ? corpus_from_json(text, *config.seed) : corpus_from_json(text);
    if (!config.seed) {
      const auto doc = nlohmann::json::parse(text);
      if (doc.contains("seed")) seed = doc["seed"].get<std::uint64_t>();
    }
  } else {
    corpus = default_corpus(seed);
  }

  fs::create_directories(config.out);
  const auto tmp = [&](const char* name) {
    auto p = config.out / name;
    p += ".tmp";
    return p;
  };
  const char* names[] = {"counters.csv", "travel_times.csv", "metadata.csv", "truth.csv"};
  CorpusSummary summary;
  {
    std::ofstream counters(tmp(names[0]), std::ios::binary);
    std::ofstream replay(tmp(names[1]), std::ios::binary);
    std::ofstream metadata(tmp(names[2]), std::ios::binary);
    std::ofstream truth(tmp(names[3]), std::ios::binary);
    if (!counters || !replay || !metadata || !truth) {
      throw Error(fmt::format("cannot write into {}", config.out.string()));
    }
    summary = generate_corpus(corpus, {counters, replay, metadata, truth});
    for (auto* s : {&counters, &replay, &metadata, &truth}) {
      s->flush();
      if (!*s) throw Error(fmt::format("write failed in {}", config.out.string()));
    }
  }
  for (const char* name : names) fs::rename(tmp(name), config.out / name);
  write_atomic(config.out / "corpus.json", corpus_to_json(corpus, seed));

  SynthOutcome out;
  out.sites = summary.sites;
  out.observations = summary.observations;
  out.vehicle_records = summary.vehicle_records;
  out.artifacts = {names[0], names[1], names[2], names[3], "corpus.json"};
  return out;
}

}  // namespace vdcal::app
