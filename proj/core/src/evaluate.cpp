#include "vdcal/evaluate.hpp"

#include <cmath>
#include <map>

#include <fmt/format.h>

namespace vdcal {

VcBin classify_ratio(double r) {
  if (r < 0.25) return VcBin::Q1;
  if (r < 0.50) return VcBin::Q2;
  if (r < 0.75) return VcBin::Q3;
  if (r <= 1.0) return VcBin::Q4;
  return VcBin::Q5;
}

std::string_view bin_label(VcBin bin) {
  switch (bin) {
    case VcBin::Q1: return "<25%";
    case VcBin::Q2: return "25-50%";
    case VcBin::Q3: return "50-75%";
    case VcBin::Q4: return "75-100%";
    case VcBin::Q5: return ">100%";
  }
  return "?";
}

double mae_time(const BprParams& model, std::span<const PairedObservation> observations) {
  if (observations.empty()) throw InvalidArgument("MAE of an empty observation set");
  double sum = 0.0;
  for (const auto& o : observations) sum += std::abs(bpr_time(model, o.volume) - o.travel_time);
  return sum / static_cast<double>(observations.size());
}

double mae_speed(const BprParams& model, double link_length_m,
                 std::span<const PairedObservation> observations) {
  if (observations.empty()) throw InvalidArgument("MAE of an empty observation set");
  if (!(link_length_m > 0.0)) throw InvalidArgument("link length must be positive");
  double sum = 0.0;
  for (const auto& o : observations) {
    sum += std::abs(bpr_speed(model, link_length_m, o.volume) -
                    speed_from_time(link_length_m, o.travel_time));
  }
  return sum / static_cast<double>(observations.size());
}

Strata stratify(std::span<const PairedObservation> observations, double vc) {
  if (!(vc > 0.0)) throw InvalidArgument("stratification needs a positive capacity");
  Strata strata;
  for (const auto& o : observations) {
    strata[static_cast<std::size_t>(classify_ratio(o.volume / vc))].push_back(o);
  }
  return strata;
}

const MaeRow* MaeReport::find(RoadClass c, Provenance m, std::optional<VcBin> bin) const {
  for (const auto& r : rows) {
    if (r.road_class == c && r.model == m && r.bin == bin) return &r;
  }
  return nullptr;
}

MaeReport build_report(std::span<const SiteEvaluation> sites) {
  using Cells = std::array<MaeCell, kBinCount>;
  std::map<RoadClass, std::map<Provenance, Cells>> acc;
  std::map<RoadClass, std::array<std::size_t, kBinCount>> counts;
  MaeReport report;

  for (const auto& s : sites) {
    if (!s.base || !s.dd1 || !s.dd2) {
      report.warnings.push_back({s.meta.site, "missing a model variant; excluded from report"});
      continue;
    }
    const auto strata = stratify(s.observations, s.dd1->vc);
    const double length = s.meta.link_length_m;
    auto& class_counts = counts[s.meta.road_class];
    for (std::size_t b = 0; b < kBinCount; ++b) {
      class_counts[b] += strata[b].size();
      for (const auto* model : {&*s.base, &*s.dd1, &*s.dd2}) {
        auto& cell = acc[s.meta.road_class][model->provenance][b];
        for (const auto& o : strata[b]) {
          ++cell.n;
          cell.sum_abs_time += std::abs(bpr_time(*model, o.volume) - o.travel_time);
          cell.sum_abs_speed += std::abs(bpr_speed(*model, length, o.volume) -
                                         speed_from_time(length, o.travel_time));
        }
      }
    }
  }

  for (const auto& [road_class, by_model] : acc) {
    for (const auto& [model, cells] : by_model) {
      MaeCell total;
      for (std::size_t b = 0; b < kBinCount; ++b) {
        const auto& c = cells[b];
        total.n += c.n;
        total.sum_abs_time += c.sum_abs_time;
        total.sum_abs_speed += c.sum_abs_speed;
        if (c.n > 0) {
          report.rows.push_back(
              {road_class, model, static_cast<VcBin>(b), c.n, c.mae_time(), c.mae_speed()});
        }
      }
      report.rows.push_back(
          {road_class, model, std::nullopt, total.n, total.mae_time(), total.mae_speed()});
    }
  }
  for (const auto& [road_class, c] : counts) report.counts.emplace_back(road_class, c);
  return report;
}

void write_mae_report(std::ostream& out, const MaeReport& report) {
  out << kMaeReportHeader << '\n';
  for (const auto& [road_class, counts] : report.counts) {
    std::size_t total = 0;
    for (auto c : counts) total += c;
    const auto name = road_class_name(road_class);

    out << name << ",obs_count,all";
    for (auto c : counts) out << ',' << c;
    out << ',' << total << ',' << total << '\n';

    out << name << ",obs_pct,all";
    for (auto c : counts) {
      out << ',' << fmt::format("{:.2f}", total ? 100.0 * static_cast<double>(c) / total : 0.0);
    }
    out << ",100.00," << total << '\n';

    for (const bool speed : {true, false}) {
      for (const auto model : kAllProvenances) {
        const auto* tot = report.find(road_class, model, std::nullopt);
        if (!tot) continue;
        out << name << ',' << (speed ? "mae_speed_kmh" : "mae_time_s") << ','
            << provenance_name(model);
        for (const auto bin : kAllBins) {
          out << ',';
          if (const auto* r = report.find(road_class, model, bin)) {
            out << fmt::format("{:.4f}", speed ? r->mae_speed : r->mae_time);
          }
        }
        out << ',' << fmt::format("{:.4f}", speed ? tot->mae_speed : tot->mae_time) << ','
            << tot->n << '\n';
      }
    }
  }
}

}  // namespace vdcal
