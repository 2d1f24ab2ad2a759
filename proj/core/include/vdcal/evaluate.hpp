#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

#include "vdcal/ingest.hpp"
#include "vdcal/models.hpp"
#include "vdcal/types.hpp"

namespace vdcal {

/// Volume-to-capacity strata: [0, 25%), [25, 50%), [50, 75%), [75, 100%],
/// (100%, inf). Interior boundaries belong to the upper bin; exactly 100%
/// belongs to Q4.
enum class VcBin { Q1 = 0, Q2, Q3, Q4, Q5 };

inline constexpr std::size_t kBinCount = 5;
inline constexpr VcBin kAllBins[] = {VcBin::Q1, VcBin::Q2, VcBin::Q3, VcBin::Q4, VcBin::Q5};

VcBin classify_ratio(double volume_to_capacity);
std::string_view bin_label(VcBin bin);  // "<25%", ...

double mae_time(const BprParams& model, std::span<const PairedObservation> observations);
double mae_speed(const BprParams& model, double link_length_m,
                 std::span<const PairedObservation> observations);

using Strata = std::array<std::vector<PairedObservation>, kBinCount>;

Strata stratify(std::span<const PairedObservation> observations, double vc);

/// Everything the report needs for one site.
struct SiteEvaluation {
  SiteMetadata meta;
  std::vector<PairedObservation> observations;
  std::optional<BprParams> base;
  std::optional<BprParams> dd1;
  std::optional<BprParams> dd2;
};

struct MaeCell {
  std::size_t n = 0;
  double sum_abs_time = 0.0;
  double sum_abs_speed = 0.0;

  double mae_time() const { return n ? sum_abs_time / static_cast<double>(n) : 0.0; }
  double mae_speed() const { return n ? sum_abs_speed / static_cast<double>(n) : 0.0; }
};

struct MaeRow {
  RoadClass road_class;
  Provenance model;
  std::optional<VcBin> bin;  // empty for the class total
  std::size_t n = 0;
  double mae_time = 0.0;   // s
  double mae_speed = 0.0;  // km/h
};

struct MaeReport {
  /// Rows with n > 0 for every (class, model, bin), then the class totals.
  std::vector<MaeRow> rows;
  /// Observation counts per class and bin (identical across models).
  std::vector<std::pair<RoadClass, std::array<std::size_t, kBinCount>>> counts;
  std::vector<SiteIssue> warnings;

  const MaeRow* find(RoadClass c, Provenance m, std::optional<VcBin> bin) const;
};

/// Observations are binned by the site's observed capacity (the DD1 vc) for
/// every model, so the bins line up across models. Class totals are
/// observation-weighted. Sites lacking a model are skipped with a warning.
MaeReport build_report(std::span<const SiteEvaluation> sites);

inline constexpr std::string_view kMaeReportHeader =
    "road_class,metric,model,bin_lt25,bin_25_50,bin_50_75,bin_75_100,bin_gt100,total,n_total";
void write_mae_report(std::ostream& out, const MaeReport& report);

}  // namespace vdcal
