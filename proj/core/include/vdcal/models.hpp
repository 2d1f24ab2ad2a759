#pragma once

#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vdcal/types.hpp"

namespace vdcal {

/// Where a set of BPR parameters came from.
///  - Base: t0 from length and speed limit, vc from the DMRB lookup.
///  - DD1:  t0 and vc estimated from observations, alpha = 1, beta = 2.
///  - DD2:  DD1's t0 and vc with alpha and beta fitted by least squares.
enum class Provenance { Base, DD1, DD2 };

inline constexpr Provenance kAllProvenances[] = {Provenance::Base, Provenance::DD1,
                                                 Provenance::DD2};

std::string_view provenance_name(Provenance p);
Provenance parse_provenance(std::string_view text);

/// BPR volume-delay curve t(v) = t0 · (1 + alpha · (v / vc)^beta).
struct BprParams {
  double t0 = 0.0;     // free-flow travel time, s
  double vc = 0.0;     // capacity, veh/h
  double alpha = 1.0;
  double beta = 2.0;
  Provenance provenance = Provenance::Base;

  /// Throws InvalidArgument unless t0 > 0, vc > 0, alpha >= 0, beta > 0.
  void validate() const;
};

/// Unit conversions: lengths in m, times in s, speeds in km/h.
inline constexpr double kMsToKmh = 3.6;

/// Travel time in seconds. Throws InvalidArgument for a negative volume.
double bpr_time(const BprParams& p, double volume);

/// Link speed in km/h, 3.6 · length / bpr_time.
double bpr_speed(const BprParams& p, double link_length_m, double volume);

double speed_from_time(double link_length_m, double travel_time_s);

// DfT TAG speed-flow relationships. Both are linear in flow and can go
// negative, so results are floored at kTagSpeedFloorKmh and flagged.

inline constexpr double kTagSpeedFloorKmh = 1.0;

struct TagSpeed {
  double speed_kmh = 0.0;
  bool floored = false;
  bool clamped = false;  // class 10 flow beyond the maximum realistic flow
};

/// Class 7, urban non-central roads.
struct TagClass7Params {
  double devel = 50.0;  // frontage development, %

  void validate() const;
  double free_flow_speed() const { return 64.5 - devel / 5.0; }
};

/// Class 10, suburban single carriageway.
struct TagClass10Params {
  double phv = 0.0;         // heavy vehicles, %
  double int_per_km = 1.0;  // major intersections per km
  double axs_per_km = 4.0;  // minor intersections per km

  void validate() const;
  /// QC = 1500 · (92 − PHV/80). Evaluated as written; for PHV near zero this
  /// is far above any single-carriageway flow, which in practice means the
  /// second segment and the clamp are never reached.
  double max_realistic_flow() const { return 1500.0 * (92.0 - phv / 80.0); }
  double flow_change_point() const { return 0.7 * max_realistic_flow(); }
  double free_flow_speed() const { return 70.0 - 5.0 * int_per_km - 3.0 * axs_per_km / 20.0; }
};

TagSpeed tag_speed_class7(const TagClass7Params& p, double volume);
TagSpeed tag_speed_class10(const TagClass10Params& p, double volume);

/// `points` evenly spaced volumes from 0 to `max_volume` inclusive.
/// Throws InvalidArgument unless points >= 2 and max_volume > 0.
std::vector<double> volume_grid(double max_volume, int points);

struct CurveSample {
  double volume = 0.0;
  std::string model;
  double time_s = 0.0;
  double speed_kmh = 0.0;
};

struct NamedCurve {
  std::string name;
  BprParams params;
};

std::vector<CurveSample> sample_curves(std::span<const NamedCurve> curves, double link_length_m,
                                       std::span<const double> grid);

inline constexpr std::string_view kCurveHeader = "volume,model,time_s,speed_kmh";
void write_curve_samples(std::ostream& out, std::span<const CurveSample> samples);

}  // namespace vdcal
