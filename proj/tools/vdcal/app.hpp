#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <vdcal/calibrate.hpp>
#include <vdcal/cleaning.hpp>
#include <vdcal/harvester.hpp>
#include <vdcal/ingest.hpp>
#include <vdcal/models.hpp>
#include <vdcal/types.hpp>

#include "svg.hpp"

namespace vdcal::app {

namespace fs = std::filesystem;

/// A file- or site-scoped problem. `where` is a file name or combined id.
struct Problem {
  std::string scope;  // "file" or "site"
  std::string where;
  std::string message;
};

/// Writes through a sibling temporary file and renames it into place.
void write_atomic(const fs::path& path, const std::function<void(std::ostream&)>& body);
void write_atomic(const fs::path& path, const std::string& content);

std::string read_file(const fs::path& path);

struct PipelineConfig {
  fs::path counters;
  fs::path times;
  fs::path meta;
  fs::path out;
  CleaningConfig cleaning;
  int grid = 101;
};

struct SiteOutcome {
  SiteKey site;
  std::string status;  // calibrated, rejected, error, no_data
  std::string reason;
  std::size_t paired = 0;
  std::size_t removed = 0;
};

struct PipelineResult {
  std::size_t vehicle_records = 0;
  std::size_t hourly_rows = 0;
  std::size_t travel_time_records = 0;
  std::size_t paired = 0;
  std::size_t removed = 0;
  std::size_t unmatched_volume_rows = 0;
  std::size_t unmatched_time_slots = 0;
  std::vector<SiteOutcome> sites;
  std::vector<SiteCalibration> calibrations;
  std::vector<Problem> errors;
  std::vector<Problem> warnings;
  std::vector<std::string> artifacts;  // relative to the output directory

  int exit_code() const { return errors.empty() ? 0 : 1; }
};

/// ingest -> clean -> calibrate -> evaluate -> report. Every artifact,
/// including summary.json, lands in `config.out`.
PipelineResult run_pipeline(const PipelineConfig& config);

std::string summary_json(const PipelineResult& result);

struct TagOptions {
  std::optional<TagClass7Params> class7;
  std::optional<TagClass10Params> class10;
};

struct SitePlot {
  std::vector<CurveSample> samples;
  ScatterPlot plot;
};

/// Observations as markers and one time curve per model, sampled on a grid of
/// `grid` points from zero to the largest observed volume.
SitePlot build_site_plot(const SiteMetadata& meta, std::span<const PairedObservation> observations,
                         std::span<const BprParams> models, int grid, const TagOptions& tag = {});

struct PlotConfig {
  fs::path calibration;
  fs::path observations;
  fs::path meta;
  std::string site;
  int grid = 101;
  fs::path out;
  TagOptions tag;
};

/// Writes <out>/<site>.svg and <out>/<site>_curves.csv. Throws InvalidArgument
/// listing the available sites when `site` is unknown.
std::vector<std::string> run_plot(const PlotConfig& config);

struct HarvestConfig {
  fs::path meta;
  fs::path times;
  std::string start;
  std::string end;
  std::chrono::seconds interval{3600};
  fs::path out;
};

struct HarvestOutcome {
  HarvestResult result;
  std::vector<std::string> artifacts;
};

/// Replay-mode harvest: writes travel_times.csv and harvest_summary.json.
HarvestOutcome run_harvest(const HarvestConfig& config);

struct SynthConfig {
  fs::path out;
  std::optional<fs::path> spec;
  std::optional<std::uint64_t> seed;
};

struct SynthOutcome {
  std::size_t sites = 0;
  std::size_t observations = 0;
  std::size_t vehicle_records = 0;
  std::vector<std::string> artifacts;
};

/// Writes counters.csv, travel_times.csv, metadata.csv, truth.csv and the
/// effective corpus.json.
SynthOutcome run_synth(const SynthConfig& config);

}  // namespace vdcal::app
