#include "vdcal/models.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "vdcal/csv.hpp"
#include "vdcal/types.hpp"

namespace vdcal {

std::string_view provenance_name(Provenance p) {
  switch (p) {
    case Provenance::Base: return "Base";
    case Provenance::DD1: return "DD1";
    case Provenance::DD2: return "DD2";
  }
  return "?";
}

Provenance parse_provenance(std::string_view text) {
  if (text == "Base") return Provenance::Base;
  if (text == "DD1") return Provenance::DD1;
  if (text == "DD2") return Provenance::DD2;
  throw ParseError(fmt::format("unknown model provenance '{}'", text));
}

void BprParams::validate() const {
  if (!(t0 > 0.0) || !std::isfinite(t0)) throw InvalidArgument("BPR t0 must be positive");
  if (!(vc > 0.0) || !std::isfinite(vc)) throw InvalidArgument("BPR capacity must be positive");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw InvalidArgument("BPR alpha must be non-negative");
  }
  if (!(beta > 0.0) || !std::isfinite(beta)) throw InvalidArgument("BPR beta must be positive");
}

double bpr_time(const BprParams& p, double volume) {
  if (!(volume >= 0.0)) throw InvalidArgument("volume must be non-negative");
  if (volume == 0.0) return p.t0;
  return p.t0 * (1.0 + p.alpha * std::pow(volume / p.vc, p.beta));
}

double speed_from_time(double link_length_m, double travel_time_s) {
  return kMsToKmh * link_length_m / travel_time_s;
}

double bpr_speed(const BprParams& p, double link_length_m, double volume) {
  if (!(link_length_m > 0.0)) throw InvalidArgument("link length must be positive");
  return speed_from_time(link_length_m, bpr_time(p, volume));
}

void TagClass7Params::validate() const {
  if (!(devel >= 0.0 && devel <= 100.0)) {
    throw InvalidArgument("frontage development must be within [0, 100] %");
  }
}

void TagClass10Params::validate() const {
  if (!(phv >= 0.0) || !(int_per_km >= 0.0) || !(axs_per_km >= 0.0)) {
    throw InvalidArgument("TAG class 10 parameters must be non-negative");
  }
}

namespace {

TagSpeed floor_speed(double v, bool clamped) {
  if (v < kTagSpeedFloorKmh) return {kTagSpeedFloorKmh, true, clamped};
  return {v, false, clamped};
}

}  // namespace

TagSpeed tag_speed_class7(const TagClass7Params& p, double volume) {
  p.validate();
  if (!(volume >= 0.0)) throw InvalidArgument("volume must be non-negative");
  return floor_speed(p.free_flow_speed() - 30.0 * volume / 1000.0, false);
}

TagSpeed tag_speed_class10(const TagClass10Params& p, double volume) {
  p.validate();
  if (!(volume >= 0.0)) throw InvalidArgument("volume must be non-negative");
  const double qc = p.max_realistic_flow();
  const double qb = p.flow_change_point();
  const double slope = 12.0 + 50.0 * p.int_per_km / 3.0;
  const bool clamped = volume > qc;
  const double q = std::min(volume, qc);
  double v = p.free_flow_speed();
  if (q < qb) {
    v -= slope * q / 1000.0;
  } else {
    v -= slope * qb / 1000.0 + 45.0 * (q - qb) / 1000.0;
  }
  return floor_speed(v, clamped);
}

std::vector<double> volume_grid(double max_volume, int points) {
  if (points < 2) throw InvalidArgument("volume grid needs at least 2 points");
  if (!(max_volume > 0.0)) throw InvalidArgument("volume grid upper bound must be positive");
  std::vector<double> grid(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    grid[static_cast<std::size_t>(i)] = max_volume * i / (points - 1);
  }
  grid.back() = max_volume;
  return grid;
}

std::vector<CurveSample> sample_curves(std::span<const NamedCurve> curves, double link_length_m,
                                       std::span<const double> grid) {
  std::vector<CurveSample> out;
  out.reserve(curves.size() * grid.size());
  for (const auto& c : curves) {
    for (double v : grid) {
      const double t = bpr_time(c.params, v);
      out.push_back({v, c.name, t, speed_from_time(link_length_m, t)});
    }
  }
  return out;
}

void write_curve_samples(std::ostream& out, std::span<const CurveSample> samples) {
  out << kCurveHeader << '\n';
  for (const auto& s : samples) {
    out << fmt::format("{},{},{},{}\n", s.volume, s.model, s.time_s, s.speed_kmh);
  }
}

}  // namespace vdcal
