#include <iostream>

#include <CLI11.hpp>

#include "app.hpp"

namespace app = vdcal::app;

namespace {

constexpr int kExitUsage = 2;
constexpr double kSingleCarriagewayFlow = 5000.0;

int pipeline(const app::PipelineConfig& cfg) {
  const auto r = app::run_pipeline(cfg);
  for (const auto& e : r.errors) std::cerr << "error: " << e.where << ": " << e.message << '\n';
  for (const auto& w : r.warnings) std::cerr << "warning: " << w.where << ": " << w.message << '\n';
  std::cout << r.calibrations.size() << " sites calibrated, " << r.paired
            << " paired observations, " << r.removed << " removed as outliers -> "
            << cfg.out.string() << '\n';
  return r.exit_code();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Calibrate volume-delay curves from counter volumes and travel times"};
  cli.require_subcommand(1);
  cli.set_config("--config", "",
                 "TOML file; keys as the long flags, under a [pipeline], [synth], [plot] or "
                 "[harvest] table. Flags win");

  app::PipelineConfig pc;
  auto* pipe = cli.add_subcommand("pipeline", "ingest, clean, calibrate, evaluate and report");
  pipe->add_option("--counters", pc.counters, "per-vehicle counter CSV")->required();
  pipe->add_option("--times", pc.times, "travel-time CSV")->required();
  pipe->add_option("--meta", pc.meta, "site metadata CSV")->required();
  pipe->add_option("--out", pc.out, "output directory")->required();
  pipe->add_option("--eps", pc.cleaning.epsilon, "DBSCAN radius")->capture_default_str();
  pipe->add_option("--min-points", pc.cleaning.min_points, "DBSCAN core size")
      ->capture_default_str();
  pipe->add_option("--min-peak-volume", pc.cleaning.min_peak_volume,
                   "reject sites whose peak hourly volume is lower")
      ->capture_default_str();
  pipe->add_option("--grid", pc.grid, "curve sample points")->capture_default_str();

  app::SynthConfig sc;
  auto* synth = cli.add_subcommand("synth", "generate a synthetic corpus");
  synth->add_option("--out", sc.out, "output directory")->required();
  synth->add_option("--spec", sc.spec, "JSON corpus description (default: built-in corpus)");
  synth->add_option("--seed", sc.seed, "override the corpus seed");

  app::PlotConfig plc;
  std::optional<double> devel;
  std::optional<std::vector<double>> tag10;
  auto* plot = cli.add_subcommand("plot", "scatter plot with fitted curves for one site");
  plot->add_option("--calibration", plc.calibration, "calibration CSV")->required();
  plot->add_option("--observations", plc.observations, "observations CSV")->required();
  plot->add_option("--meta", plc.meta, "site metadata CSV")->required();
  plot->add_option("--site", plc.site, "combined id, e.g. 11N")->required();
  plot->add_option("--out", plc.out, "output directory")->required();
  plot->add_option("--grid", plc.grid, "curve sample points")->capture_default_str();
  plot->add_option("--tag7-devel", devel, "add the TAG class 7 curve with this DEVEL %");
  plot->add_option("--tag10", tag10, "add the TAG class 10 curve: PHV INT AXS")->expected(3);

  app::HarvestConfig hc;
  long interval = 3600;
  auto* harvest = cli.add_subcommand("harvest", "collect travel times from a replay file");
  harvest->add_option("--meta", hc.meta, "site metadata CSV")->required();
  harvest->add_option("--times", hc.times, "replay CSV")->required();
  harvest->add_option("--start", hc.start, "YYYY-MM-DDTHH:MM:SS")->required();
  harvest->add_option("--end", hc.end, "YYYY-MM-DDTHH:MM:SS (exclusive)")->required();
  harvest->add_option("--interval", interval, "seconds between queries")->capture_default_str();
  harvest->add_option("--out", hc.out, "output directory")->required();

  CLI11_PARSE(cli, argc, argv);

  try {
    if (*pipe) return pipeline(pc);
    if (*synth) {
      const auto r = app::run_synth(sc);
      std::cout << r.sites << " sites, " << r.observations << " observations, "
                << r.vehicle_records << " vehicle records -> " << sc.out.string() << '\n';
      return 0;
    }
    if (*plot) {
      if (devel) plc.tag.class7 = vdcal::TagClass7Params{*devel};
      if (tag10) plc.tag.class10 = vdcal::TagClass10Params{(*tag10)[0], (*tag10)[1], (*tag10)[2]};
      if (plc.tag.class10 && plc.tag.class10->max_realistic_flow() > kSingleCarriagewayFlow) {
        std::cerr << "warning: TAG class 10 QC = " << plc.tag.class10->max_realistic_flow()
                  << " veh/h as written; the curve only bends beyond 0.7 QC\n";
      }
      for (const auto& f : app::run_plot(plc)) std::cout << (plc.out / f).string() << '\n';
      return 0;
    }
    if (*harvest) {
      hc.interval = std::chrono::seconds{interval};
      const auto r = app::run_harvest(hc).result;
      for (const auto& w : r.warnings) {
        std::cerr << "warning: " << w.site.combined_id() << ": " << w.message << '\n';
      }
      std::cout << r.records.size() << " of " << r.planned << " queries answered, " << r.misses
                << " misses, " << r.failures.size() << " failures\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
