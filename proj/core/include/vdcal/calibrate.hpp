#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vdcal/ingest.hpp"
#include "vdcal/models.hpp"
#include "vdcal/types.hpp"

namespace vdcal {

/// Below this many observations a site's estimates are flagged low-confidence.
inline constexpr std::size_t kMinConfidentObservations = 20;

inline constexpr double kFreeFlowPercentile = 0.05;
inline constexpr double kCapacityPercentile = 0.95;
inline constexpr double kCapacityBandLow = 1.8;   // × t0, inclusive
inline constexpr double kCapacityBandHigh = 2.2;  // × t0, inclusive

struct FreeFlowEstimate {
  double t0 = 0.0;
  std::size_t n = 0;
  bool low_confidence = false;
};

/// 5th percentile of observed travel times. Throws InvalidArgument if empty.
FreeFlowEstimate estimate_free_flow_time(std::span<const PairedObservation> observations);

struct CapacityEstimate {
  double vc = 0.0;
  std::size_t band_count = 0;
  bool band_empty = false;  // fell back to the maximum observed volume
};

/// 95th percentile of volume among observations whose travel time lies in
/// [1.8·t0, 2.2·t0], i.e. around half the free-flow speed.
CapacityEstimate estimate_capacity(std::span<const PairedObservation> observations, double t0);

BprParams base_params(const SiteMetadata& meta);
BprParams dd1_params(double t0_observed, double vc_observed);

struct FitOptions {
  double alpha_init = 1.0;
  double beta_init = 2.0;
  double alpha_min = 0.0;
  double alpha_max = 10.0;
  double beta_min = 0.1;
  double beta_max = 10.0;
  int max_iterations = 200;
  double sse_rtol = 1e-10;
  double step_tol = 1e-8;
};

struct FitDiagnostics {
  double sse = 0.0;
  double initial_sse = 0.0;
  int iterations = 0;
  bool converged = false;
  bool alpha_at_bound = false;
  bool beta_at_bound = false;
  bool beta_below_one = false;  // concave curve
};

struct FitResult {
  BprParams params;
  FitDiagnostics diagnostics;
};

/// Sum of squared travel-time residuals of `p` over the given points.
double sum_squared_residuals(const BprParams& p, std::span<const double> volumes,
                             std::span<const double> times);

/// Partial derivatives of t0·(1 + alpha·(v/vc)^beta) with respect to alpha
/// and beta.
std::pair<double, double> bpr_gradient(double t0, double vc, double alpha, double beta,
                                       double volume);

/// Least-squares fit of alpha and beta with t0 and vc held fixed, by a
/// bounded Levenberg-Marquardt iteration started at (alpha_init, beta_init).
/// Accepted steps never increase the SSE. Throws InvalidArgument when all
/// volumes are equal, since beta is then unidentifiable.
FitResult fit_bpr(std::span<const double> volumes, std::span<const double> times, double t0,
                  double vc, const FitOptions& options = {});
FitResult fit_bpr(std::span<const PairedObservation> observations, double t0, double vc,
                  const FitOptions& options = {});

/// Base, DD1 and DD2 for one site plus what went into them.
struct SiteCalibration {
  SiteKey site;
  BprParams base;
  BprParams dd1;
  BprParams dd2;
  FreeFlowEstimate free_flow;
  CapacityEstimate capacity;
  FitDiagnostics fit;
  double sse_base = 0.0;
  double sse_dd1 = 0.0;

  /// Semicolon-separated warning flags for reporting.
  std::string flags() const;
};

SiteCalibration calibrate_site(const SiteMetadata& meta,
                               std::span<const PairedObservation> observations,
                               const FitOptions& options = {});

inline constexpr std::string_view kCalibrationHeader =
    "combined_id,provenance,t0_s,vc_vph,alpha,beta,sse,converged,flags";
void write_calibration(std::ostream& out, std::span<const SiteCalibration> sites);

struct CalibrationRows {
  std::map<Provenance, BprParams> models;
};

/// Reads the calibration CSV back into parameter sets keyed by site.
std::map<SiteKey, CalibrationRows> read_calibration(std::istream& in);

}  // namespace vdcal
