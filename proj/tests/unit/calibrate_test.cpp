#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include <vdcal/calibrate.hpp>
#include <vdcal/cleaning.hpp>
#include <vdcal/synth.hpp>

#include "oracles.hpp"

namespace vdcal {
namespace {

const SiteKey kSite{11, Direction::North};

std::vector<PairedObservation> obs_from(const std::vector<double>& volumes,
                                        const std::vector<double>& times) {
  std::vector<PairedObservation> out;
  const auto day = std::chrono::sys_days{parse_date("2016-03-01")};
  for (std::size_t i = 0; i < volumes.size(); ++i) {
    out.push_back({kSite, Date{day + std::chrono::days{static_cast<int>(i / 24)}},
                   static_cast<int>(i % 24) + 1, volumes[i], times[i]});
  }
  return out;
}

SynthSpec spec(double alpha, double beta, std::size_t n, double sigma0, std::uint64_t seed) {
  SynthSpec s;
  s.truth = {60.0, 800.0, alpha, beta, Provenance::DD2};
  s.n_obs = n;
  s.noise_sigma0 = sigma0;
  s.seed = seed;
  return s;
}

struct PublishedPair {
  double alpha;
  double beta;
};
constexpr PublishedPair kPublished[] = {{0.43, 1.16}, {1.23, 1.68}, {0.67, 1.47}};

TEST(FreeFlow, LinearInterpolationPercentile) {
  std::vector<double> v(100), t(100);
  for (int i = 0; i < 100; ++i) {
    v[i] = 10.0 * i;
    t[i] = i + 1.0;
  }
  const auto e = estimate_free_flow_time(obs_from(v, t));
  EXPECT_NEAR(e.t0, 5.95, 1e-12);
  EXPECT_FALSE(e.low_confidence);
}

TEST(FreeFlow, ConstantTimesAndLowConfidence) {
  const auto e = estimate_free_flow_time(obs_from({1, 2, 3}, {60, 60, 60}));
  EXPECT_EQ(e.t0, 60.0);
  EXPECT_TRUE(e.low_confidence);
  EXPECT_THROW(estimate_free_flow_time({}), InvalidArgument);
}

TEST(FreeFlow, ExactOnNoiseFreeDataWithZeroVolumes) {
  auto s = spec(1.0, 2.0, 400, 0.0, 3);
  s.free_flow_share = 0.1;
  const auto site = generate_site(s);
  EXPECT_EQ(estimate_free_flow_time(site.observations).t0, s.truth.t0);
}

TEST(FreeFlow, AddingAFasterObservationNeverRaisesT0) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(30, 120);
  std::vector<double> v, t;
  for (int i = 0; i < 50; ++i) {
    v.push_back(10.0 * i);
    t.push_back(u(rng));
  }
  auto obs = obs_from(v, t);
  double t0 = estimate_free_flow_time(obs).t0;
  for (int k = 0; k < 30; ++k) {
    auto extra = obs.back();
    extra.hour = (extra.hour % 24) + 1;
    extra.travel_time = t0 * 0.99;
    obs.push_back(extra);
    const double next = estimate_free_flow_time(obs).t0;
    EXPECT_LE(next, t0);
    t0 = next;
  }
}

TEST(Capacity, BandPercentile) {
  std::vector<double> v, t;
  for (int x = 500; x <= 600; x += 5) {
    v.push_back(x);
    t.push_back(100.0);  // 2·t0
  }
  v.push_back(900);  // above the band
  t.push_back(115);
  v.push_back(950);  // at the closed upper edge
  t.push_back(110);
  v.push_back(300);
  t.push_back(50);
  auto e = estimate_capacity(obs_from(v, t), 50.0);
  EXPECT_EQ(e.band_count, 22u);
  EXPECT_FALSE(e.band_empty);

  v.pop_back();
  t.pop_back();
  v.pop_back();
  t.pop_back();
  e = estimate_capacity(obs_from(v, t), 50.0);
  EXPECT_NEAR(e.vc, 595.0, 1e-9);
}

TEST(Capacity, SinglePointAndFallback) {
  auto e = estimate_capacity(obs_from({420, 100}, {95, 50}), 50.0);
  EXPECT_EQ(e.vc, 420.0);
  EXPECT_EQ(e.band_count, 1u);

  e = estimate_capacity(obs_from({100, 250, 180}, {50, 60, 55}), 50.0);
  EXPECT_TRUE(e.band_empty);
  EXPECT_EQ(e.vc, 250.0);
  EXPECT_THROW(estimate_capacity({}, 50.0), InvalidArgument);
  EXPECT_THROW(estimate_capacity(obs_from({1}, {1}), 0.0), InvalidArgument);
}

TEST(Capacity, NoiseFreeRecovery) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    auto s = spec(1.0, 2.0, 1440, 0.0, seed);
    s.volume_law = VolumeLaw::BimodalDaily;
    s.free_flow_share = 0.05;
    const auto site = generate_site(s);
    const auto ff = estimate_free_flow_time(site.observations);
    const auto cap = estimate_capacity(site.observations, ff.t0);
    ASSERT_FALSE(cap.band_empty);
    EXPECT_NEAR(cap.vc / s.truth.vc, 1.0, 0.05) << seed;
  }
}

TEST(BaseParams, FromMetadata) {
  SiteMetadata m{kSite, RoadClass::Principal, 561, 48, 2100, {}, {}};
  auto p = base_params(m);
  EXPECT_DOUBLE_EQ(p.t0, 42.075);
  EXPECT_EQ(p.vc, 2100);
  EXPECT_EQ(p.alpha, 1.0);
  EXPECT_EQ(p.beta, 2.0);
  EXPECT_EQ(p.provenance, Provenance::Base);
  m.link_length_m = 1000;
  m.speed_limit_kmh = 36;
  EXPECT_DOUBLE_EQ(base_params(m).t0, 100.0);
  m.speed_limit_kmh = 0;
  EXPECT_THROW(base_params(m), InvalidArgument);
}

TEST(Dd1Params, PassThrough) {
  const auto p = dd1_params(10, 100);
  EXPECT_EQ(p.t0, 10);
  EXPECT_EQ(p.vc, 100);
  EXPECT_EQ(p.alpha, 1.0);
  EXPECT_EQ(p.beta, 2.0);
  EXPECT_EQ(p.provenance, Provenance::DD1);
  const FitOptions defaults;
  EXPECT_EQ(defaults.alpha_init, p.alpha);
  EXPECT_EQ(defaults.beta_init, p.beta);

  const double t0 = kMsToKmh * 561 / 28.9;
  const auto shaped = dd1_params(t0, 589.9);
  EXPECT_NEAR(bpr_speed(shaped, 561, 0), 28.9, 1e-12);
  EXPECT_NEAR(bpr_speed(shaped, 561, 589.9), 14.45, 1e-12);
}

TEST(Gradient, MatchesCentralDifferences) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> t0d(10, 200), vcd(100, 3000), ad(0.05, 5), bd(0.2, 6),
      rd(0.05, 1.6);
  int checked = 0;
  while (checked < 100) {
    const double t0 = t0d(rng), vc = vcd(rng), a = ad(rng), b = bd(rng), v = rd(rng) * vc;
    const auto [ga, gb] = bpr_gradient(t0, vc, a, b, v);
    const auto [na, nb] = testing::numeric_gradient(t0, vc, a, b, v, 1e-6);
    EXPECT_NEAR(ga, na, 1e-5 * std::max(std::abs(na), 1e-8));
    EXPECT_NEAR(gb, nb, 1e-5 * std::max(std::abs(nb), 1e-8));
    ++checked;
  }
  const auto [g0a, g0b] = bpr_gradient(60, 800, 1, 2, 0);
  EXPECT_EQ(g0a, 0.0);
  EXPECT_EQ(g0b, 0.0);
}

TEST(FitBpr, NoiseFreeRecovery) {
  for (const auto& [a, b] : kPublished) {
    const auto site = generate_site(spec(a, b, 336, 0.0, 5));
    const auto fit = fit_bpr(site.observations, 60.0, 800.0);
    EXPECT_NEAR(fit.params.alpha, a, 1e-6);
    EXPECT_NEAR(fit.params.beta, b, 1e-6);
    EXPECT_TRUE(fit.diagnostics.converged);
    EXPECT_EQ(fit.params.provenance, Provenance::DD2);
  }
}

TEST(FitBpr, NoisyRecoveryAtScale) {
  int hits = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto site = generate_site(spec(1.23, 1.68, 1000, 0.05, seed));
    const auto fit = fit_bpr(site.observations, 60.0, 800.0);
    if (std::abs(fit.params.alpha - 1.23) <= 0.15 && std::abs(fit.params.beta - 1.68) <= 0.2) {
      ++hits;
    }
  }
  EXPECT_GE(hits, 18);
}

TEST(FitBpr, NeverWorseThanGrid) {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto site = generate_site(spec(0.9, 2.4, 200, 0.04, seed));
    std::vector<double> v, t;
    for (const auto& o : site.observations) {
      v.push_back(o.volume);
      t.push_back(o.travel_time);
    }
    const auto fit = fit_bpr(v, t, 60.0, 800.0);
    const auto grid = testing::grid_search(v, t, 60.0, 800.0, 0, 3, 0.5, 6, 0.01);
    EXPECT_LE(fit.diagnostics.sse, grid.sse + 1e-6);
    EXPECT_NEAR(fit.params.alpha, grid.alpha, 0.02);
    EXPECT_NEAR(fit.params.beta, grid.beta, 0.02);
  }
}

TEST(FitBpr, MonotoneAgainstInitialisation) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> ad(0.1, 3), bd(0.6, 5);
  for (int i = 0; i < 30; ++i) {
    auto s = spec(ad(rng), bd(rng), 150, 0.08, 100 + i);
    s.noise_growth = 0.1;
    const auto site = generate_site(s);
    const auto fit = fit_bpr(site.observations, 60.0, 800.0);
    std::vector<double> v, t;
    for (const auto& o : site.observations) {
      v.push_back(o.volume);
      t.push_back(o.travel_time);
    }
    const double sse_dd1 = sum_squared_residuals(dd1_params(60.0, 800.0), v, t);
    EXPECT_LE(fit.diagnostics.sse, sse_dd1);
    EXPECT_DOUBLE_EQ(fit.diagnostics.initial_sse, sse_dd1);
    EXPECT_GE(fit.params.alpha, 0.0);
    EXPECT_LE(fit.params.alpha, 10.0);
    EXPECT_GE(fit.params.beta, 0.1);
    EXPECT_LE(fit.params.beta, 10.0);
  }
}

TEST(FitBpr, DegenerateVolumes) {
  try {
    fit_bpr(obs_from({400, 400, 400}, {60, 70, 80}), 50.0, 800.0);
    FAIL();
  } catch (const InvalidArgument& e) {
    EXPECT_NE(std::string(e.what()).find("beta unidentifiable"), std::string::npos);
  }
}

TEST(FitBpr, ConcaveFitsAreFlagged) {
  std::vector<double> v, t;
  for (int i = 0; i <= 40; ++i) {
    v.push_back(25.0 * i);
    t.push_back(bpr_time({60, 800, 0.8, 0.5, Provenance::DD2}, 25.0 * i));
  }
  const auto fit = fit_bpr(v, t, 60, 800);
  EXPECT_NEAR(fit.params.beta, 0.5, 1e-6);
  EXPECT_TRUE(fit.diagnostics.beta_below_one);
}

TEST(FitBpr, ScaleProperty) {
  auto s = spec(0.67, 1.47, 500, 0.0, 9);
  s.free_flow_share = 0.1;
  const auto site = generate_site(s);
  const SiteMetadata meta{kSite, RoadClass::C, 480, 48, 900, {}, {}};
  const auto base = calibrate_site(meta, site.observations);
  auto scaled = site.observations;
  for (auto& o : scaled) o.travel_time *= 2.5;
  const auto other = calibrate_site(meta, scaled);
  EXPECT_NEAR(other.dd1.t0, 2.5 * base.dd1.t0, 1e-9 * base.dd1.t0);
  EXPECT_NEAR(other.dd2.alpha, base.dd2.alpha, 1e-6);
  EXPECT_NEAR(other.dd2.beta, base.dd2.beta, 1e-6);
}

// Data shaped like the published Principal-road site: 336 hourly points with
// 5 % base noise growing with load. One draw has a standard error of about
// 0.1 on beta, so the tolerance is applied to the mean over seeds.
TEST(FitBpr, PrincipalSiteShape) {
  const double t0 = kMsToKmh * 561 / 28.9;
  double sum_a = 0, sum_b = 0;
  constexpr int kSeeds = 20;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    SynthSpec s;
    s.truth = {t0, 589.9, 1.23, 1.68, Provenance::DD2};
    s.link_length_m = 561;
    s.volume_law = VolumeLaw::BimodalDaily;
    s.noise_sigma0 = 0.05;
    s.noise_growth = 0.10;
    s.outlier_count = 2;
    s.seed = static_cast<std::uint64_t>(seed);
    const auto site = generate_site(s, kSite);
    const auto cleaned = remove_outliers(site.observations, {});
    const auto fit = fit_bpr(cleaned.kept, t0, 589.9);
    sum_a += fit.params.alpha;
    sum_b += fit.params.beta;
  }
  EXPECT_NEAR(sum_a / kSeeds, 1.23, 0.05);
  EXPECT_NEAR(sum_b / kSeeds, 1.68, 0.05);
}

TEST(CalibrateSite, LadderAndCsvRoundTrip) {
  auto s = spec(1.23, 1.68, 336, 0.03, 12);
  s.volume_law = VolumeLaw::BimodalDaily;
  const auto site = generate_site(s, kSite);
  const SiteMetadata meta{kSite, RoadClass::Principal, 561, 48, 2100, {}, {}};
  const auto c = calibrate_site(meta, site.observations);
  EXPECT_EQ(c.base.provenance, Provenance::Base);
  EXPECT_EQ(c.dd1.t0, c.dd2.t0);
  EXPECT_EQ(c.dd1.vc, c.dd2.vc);
  EXPECT_LE(c.fit.sse, c.sse_dd1);

  std::ostringstream out;
  const std::vector<SiteCalibration> all{c};
  write_calibration(out, all);
  std::istringstream in(out.str());
  const auto rows = read_calibration(in);
  const auto& models = rows.at(kSite).models;
  ASSERT_EQ(models.size(), 3u);
  EXPECT_EQ(models.at(Provenance::DD2).alpha, c.dd2.alpha);
  EXPECT_EQ(models.at(Provenance::DD2).beta, c.dd2.beta);
  EXPECT_EQ(models.at(Provenance::Base).t0, c.base.t0);
}

}  // namespace
}  // namespace vdcal
