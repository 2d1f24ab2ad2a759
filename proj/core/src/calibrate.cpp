#include "vdcal/calibrate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "vdcal/csv.hpp"
#include "vdcal/stats.hpp"

namespace vdcal {

FreeFlowEstimate estimate_free_flow_time(std::span<const PairedObservation> observations) {
  if (observations.empty()) throw InvalidArgument("free-flow estimate needs observations");
  std::vector<double> times;
  times.reserve(observations.size());
  for (const auto& o : observations) times.push_back(o.travel_time);
  FreeFlowEstimate e;
  e.t0 = stats::percentile(times, kFreeFlowPercentile);
  e.n = observations.size();
  e.low_confidence = observations.size() < kMinConfidentObservations;
  return e;
}

CapacityEstimate estimate_capacity(std::span<const PairedObservation> observations, double t0) {
  if (observations.empty()) throw InvalidArgument("capacity estimate needs observations");
  if (!(t0 > 0.0)) throw InvalidArgument("capacity estimate needs a positive t0");
  const double lo = kCapacityBandLow * t0;
  const double hi = kCapacityBandHigh * t0;
  std::vector<double> band;
  double max_volume = 0.0;
  for (const auto& o : observations) {
    max_volume = std::max(max_volume, o.volume);
    if (o.travel_time >= lo && o.travel_time <= hi) band.push_back(o.volume);
  }
  CapacityEstimate e;
  e.band_count = band.size();
  if (band.empty()) {
    e.band_empty = true;
    e.vc = max_volume;
  } else {
    e.vc = stats::percentile(band, kCapacityPercentile);
  }
  if (!(e.vc > 0.0)) throw InvalidArgument("capacity estimate is zero (no positive volumes)");
  return e;
}

BprParams base_params(const SiteMetadata& meta) {
  if (!(meta.link_length_m > 0.0) || !(meta.speed_limit_kmh > 0.0) ||
      !(meta.dmrb_capacity_vph > 0.0)) {
    throw InvalidArgument(
        fmt::format("incomplete metadata for site {}", meta.site.combined_id()));
  }
  BprParams p{kMsToKmh * meta.link_length_m / meta.speed_limit_kmh, meta.dmrb_capacity_vph, 1.0,
              2.0, Provenance::Base};
  return p;
}

BprParams dd1_params(double t0_observed, double vc_observed) {
  BprParams p{t0_observed, vc_observed, 1.0, 2.0, Provenance::DD1};
  p.validate();
  return p;
}

double sum_squared_residuals(const BprParams& p, std::span<const double> volumes,
                             std::span<const double> times) {
  double sse = 0.0;
  for (std::size_t i = 0; i < volumes.size(); ++i) {
    const double r = bpr_time(p, volumes[i]) - times[i];
    sse += r * r;
  }
  return sse;
}

std::pair<double, double> bpr_gradient(double t0, double vc, double alpha, double beta,
                                       double volume) {
  if (volume <= 0.0) return {0.0, 0.0};
  const double x = volume / vc;
  const double xb = std::pow(x, beta);
  return {t0 * xb, t0 * alpha * xb * std::log(x)};
}

namespace {

struct Normal {
  std::array<double, 3> a{};  // JᵀJ as (00, 01, 11)
  std::array<double, 2> g{};  // Jᵀr
};

Normal normal_equations(std::span<const double> volumes, std::span<const double> times, double t0,
                        double vc, double alpha, double beta) {
  Normal n;
  const BprParams p{t0, vc, alpha, beta, Provenance::DD2};
  for (std::size_t i = 0; i < volumes.size(); ++i) {
    const auto [ja, jb] = bpr_gradient(t0, vc, alpha, beta, volumes[i]);
    const double r = bpr_time(p, volumes[i]) - times[i];
    n.a[0] += ja * ja;
    n.a[1] += ja * jb;
    n.a[2] += jb * jb;
    n.g[0] += ja * r;
    n.g[1] += jb * r;
  }
  return n;
}

}  // namespace

FitResult fit_bpr(std::span<const double> volumes, std::span<const double> times, double t0,
                  double vc, const FitOptions& options) {
  if (volumes.size() != times.size()) throw InvalidArgument("volume/time length mismatch");
  if (!(t0 > 0.0) || !(vc > 0.0)) throw InvalidArgument("fit_bpr needs positive t0 and vc");
  if (volumes.empty() ||
      std::all_of(volumes.begin(), volumes.end(), [&](double v) { return v == volumes[0]; })) {
    throw InvalidArgument("beta unidentifiable: fewer than two distinct volumes");
  }
  for (std::size_t i = 0; i < volumes.size(); ++i) {
    if (!(volumes[i] >= 0.0)) throw InvalidArgument("volume must be non-negative");
  }

  const std::array<double, 2> lower{options.alpha_min, options.beta_min};
  const std::array<double, 2> upper{options.alpha_max, options.beta_max};
  std::array<double, 2> x{std::clamp(options.alpha_init, lower[0], upper[0]),
                          std::clamp(options.beta_init, lower[1], upper[1])};
  const auto sse_at = [&](const std::array<double, 2>& q) {
    return sum_squared_residuals({t0, vc, q[0], q[1], Provenance::DD2}, volumes, times);
  };

  FitDiagnostics diag;
  double sse = sse_at(x);
  diag.initial_sse = sse;
  Normal ne = normal_equations(volumes, times, t0, vc, x[0], x[1]);
  double lambda = 1e-3;

  while (diag.iterations < options.max_iterations) {
    if (sse == 0.0) {
      diag.converged = true;
      break;
    }
    ++diag.iterations;

    // Parameters pinned at a bound with the gradient pointing outwards stay
    // fixed; the damped Gauss-Newton system is solved for the rest.
    std::array<bool, 2> free{};
    for (int k = 0; k < 2; ++k) {
      const bool at_lower = x[k] <= lower[k] && ne.g[k] > 0.0;
      const bool at_upper = x[k] >= upper[k] && ne.g[k] < 0.0;
      free[k] = !(at_lower || at_upper);
    }
    const double d0 = std::max(ne.a[0], 1e-12 * (ne.a[0] + ne.a[2]) + 1e-300);
    const double d1 = std::max(ne.a[2], 1e-12 * (ne.a[0] + ne.a[2]) + 1e-300);
    std::array<double, 2> step{0.0, 0.0};
    if (free[0] && free[1]) {
      const double m00 = ne.a[0] + lambda * d0;
      const double m11 = ne.a[2] + lambda * d1;
      const double m01 = ne.a[1];
      const double det = m00 * m11 - m01 * m01;
      step[0] = -(m11 * ne.g[0] - m01 * ne.g[1]) / det;
      step[1] = -(m00 * ne.g[1] - m01 * ne.g[0]) / det;
    } else if (free[0]) {
      step[0] = -ne.g[0] / (ne.a[0] + lambda * d0);
    } else if (free[1]) {
      step[1] = -ne.g[1] / (ne.a[2] + lambda * d1);
    } else {
      diag.converged = true;  // constrained stationary point
      break;
    }

    std::array<double, 2> trial{std::clamp(x[0] + step[0], lower[0], upper[0]),
                                std::clamp(x[1] + step[1], lower[1], upper[1])};
    const std::array<double, 2> taken{trial[0] - x[0], trial[1] - x[1]};
    const double step_norm = std::hypot(taken[0], taken[1]);
    const double x_norm = std::hypot(x[0], x[1]);
    if (step_norm <= options.step_tol * (x_norm + options.step_tol)) {
      diag.converged = true;
      break;
    }

    const double trial_sse = sse_at(trial);
    if (trial_sse <= sse) {
      // Reduction predicted by the undamped linear model for the step taken.
      const double predicted =
          -(2.0 * (taken[0] * ne.g[0] + taken[1] * ne.g[1]) +
            (taken[0] * taken[0] * ne.a[0] + 2.0 * taken[0] * taken[1] * ne.a[1] +
             taken[1] * taken[1] * ne.a[2]));
      const double actual = sse - trial_sse;
      x = trial;
      sse = trial_sse;
      ne = normal_equations(volumes, times, t0, vc, x[0], x[1]);
      lambda = std::max(lambda / 3.0, 1e-12);
      if (sse == 0.0 || (actual <= options.sse_rtol * (sse + actual) &&
                         std::abs(predicted) <= options.sse_rtol * (sse + actual))) {
        diag.converged = true;
        break;
      }
    } else {
      lambda *= 4.0;
      if (lambda > 1e20) {
        diag.converged = true;  // no descent direction left at this precision
        break;
      }
    }
  }

  diag.sse = sse;
  diag.alpha_at_bound = x[0] <= lower[0] || x[0] >= upper[0];
  diag.beta_at_bound = x[1] <= lower[1] || x[1] >= upper[1];
  diag.beta_below_one = x[1] < 1.0;
  return FitResult{BprParams{t0, vc, x[0], x[1], Provenance::DD2}, diag};
}

FitResult fit_bpr(std::span<const PairedObservation> observations, double t0, double vc,
                  const FitOptions& options) {
  std::vector<double> volumes, times;
  volumes.reserve(observations.size());
  times.reserve(observations.size());
  for (const auto& o : observations) {
    volumes.push_back(o.volume);
    times.push_back(o.travel_time);
  }
  return fit_bpr(volumes, times, t0, vc, options);
}

std::string SiteCalibration::flags() const {
  std::vector<std::string_view> f;
  if (free_flow.low_confidence) f.push_back("low_confidence");
  if (capacity.band_empty) f.push_back("empty_capacity_band");
  if (!fit.converged) f.push_back("not_converged");
  if (fit.alpha_at_bound) f.push_back("alpha_at_bound");
  if (fit.beta_at_bound) f.push_back("beta_at_bound");
  if (fit.beta_below_one) f.push_back("beta_below_one");
  return fmt::format("{}", fmt::join(f, ";"));
}

SiteCalibration calibrate_site(const SiteMetadata& meta,
                               std::span<const PairedObservation> observations,
                               const FitOptions& options) {
  SiteCalibration c;
  c.site = meta.site;
  c.base = base_params(meta);
  c.free_flow = estimate_free_flow_time(observations);
  c.capacity = estimate_capacity(observations, c.free_flow.t0);
  c.dd1 = dd1_params(c.free_flow.t0, c.capacity.vc);

  std::vector<double> volumes, times;
  for (const auto& o : observations) {
    volumes.push_back(o.volume);
    times.push_back(o.travel_time);
  }
  FitOptions opts = options;
  opts.alpha_init = c.dd1.alpha;
  opts.beta_init = c.dd1.beta;
  const auto fit = fit_bpr(volumes, times, c.free_flow.t0, c.capacity.vc, opts);
  c.dd2 = fit.params;
  c.fit = fit.diagnostics;
  c.sse_base = sum_squared_residuals(c.base, volumes, times);
  c.sse_dd1 = sum_squared_residuals(c.dd1, volumes, times);
  return c;
}

void write_calibration(std::ostream& out, std::span<const SiteCalibration> sites) {
  out << kCalibrationHeader << '\n';
  for (const auto& c : sites) {
    const auto id = c.site.combined_id();
    std::vector<std::string_view> estimate_flags;
    if (c.free_flow.low_confidence) estimate_flags.push_back("low_confidence");
    if (c.capacity.band_empty) estimate_flags.push_back("empty_capacity_band");
    const auto row = [&](const BprParams& p, double sse, std::string_view converged,
                         std::string_view flags) {
      out << fmt::format("{},{},{},{},{},{},{},{},{}\n", id, provenance_name(p.provenance), p.t0,
                         p.vc, p.alpha, p.beta, sse, converged, flags);
    };
    row(c.base, c.sse_base, "", "");
    row(c.dd1, c.sse_dd1, "", fmt::format("{}", fmt::join(estimate_flags, ";")));
    row(c.dd2, c.fit.sse, c.fit.converged ? "true" : "false", c.flags());
  }
}

std::map<SiteKey, CalibrationRows> read_calibration(std::istream& in) {
  std::map<SiteKey, CalibrationRows> out;
  csv::LineReader reader(in, kCalibrationHeader);
  std::string_view line;
  while (reader.next(line)) {
    try {
      const auto f = csv::split(line);
      if (f.size() != 9) throw ParseError(fmt::format("expected 9 fields, found {}", f.size()));
      BprParams p;
      p.provenance = parse_provenance(f[1]);
      p.t0 = csv::to_double(f[2], "t0_s");
      p.vc = csv::to_double(f[3], "vc_vph");
      p.alpha = csv::to_double(f[4], "alpha");
      p.beta = csv::to_double(f[5], "beta");
      p.validate();
      out[SiteKey::parse(f[0])].models[p.provenance] = p;
    } catch (const Error& e) {
      throw ParseError(fmt::format("calibration line {}: {}", reader.line_number(), e.what()));
    }
  }
  return out;
}

}  // namespace vdcal
