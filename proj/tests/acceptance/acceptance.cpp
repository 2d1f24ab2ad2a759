// One PASS/FAIL line per acceptance criterion; exits non-zero on any FAIL.

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include <vdcal/calibrate.hpp>
#include <vdcal/cleaning.hpp>
#include <vdcal/evaluate.hpp>
#include <vdcal/ingest.hpp>
#include <vdcal/models.hpp>
#include <vdcal/synth.hpp>

#include "fixtures.hpp"
#include "oracles.hpp"

namespace {

using namespace vdcal;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool pass = true;
  std::string detail;
};

bool all_ok = true;

void criterion(int id, const char* name, double budget_s, const std::function<Verdict()>& body) {
  const auto start = Clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, fmt::format("threw: {}", e.what())};
  }
  const double secs = std::chrono::duration<double>(Clock::now() - start).count();
  if (budget_s > 0 && secs >= budget_s) {
    v.pass = false;
    v.detail += fmt::format("; over budget ({} s)", budget_s);
  }
  all_ok = all_ok && v.pass;
  std::cout << fmt::format("{} {} {} [{:.2f} s] {}", v.pass ? "PASS" : "FAIL", id, name, secs,
                           v.detail)
            << std::endl;
}

bool rel_close(double a, double b, double tol) {
  return std::abs(a - b) <= tol * std::max(std::abs(a), std::abs(b));
}

struct PublishedSite {
  const char* id;
  double vc, v0, alpha, beta;
};
constexpr PublishedSite kPublished[] = {
    {"9S", 1706.8, 53.3, 0.43, 1.16},
    {"11N", 589.9, 28.9, 1.23, 1.68},
    {"35S", 314.3, 40.8, 0.67, 1.47},
};

SynthSpec fit_spec(double alpha, double beta, std::size_t n, double sigma0, std::uint64_t seed) {
  SynthSpec s;
  s.truth = {60.0, 800.0, alpha, beta, Provenance::DD2};
  s.n_obs = n;
  s.noise_sigma0 = sigma0;
  s.seed = seed;
  return s;
}

Verdict bpr_identities() {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> t0d(5, 600), vcd(50, 6000), ad(0, 10), bd(0.1, 10);
  int bad = 0;
  for (int i = 0; i < 1000; ++i) {
    const BprParams p{t0d(rng), vcd(rng), ad(rng), bd(rng), Provenance::DD2};
    if (!rel_close(bpr_time(p, 0), p.t0, 1e-12)) ++bad;
    if (!rel_close(bpr_time(p, p.vc), (1 + p.alpha) * p.t0, 1e-12)) ++bad;
    const BprParams q{p.t0, p.vc, 1.0, 2.0, Provenance::DD1};
    const double length = 100 + p.t0;
    if (!rel_close(bpr_speed(q, length, q.vc), 0.5 * bpr_speed(q, length, 0), 1e-12)) ++bad;
  }
  return {bad == 0, fmt::format("{} violations in 1000 draws", bad)};
}

Verdict published_coefficients() {
  int bad = 0;
  std::string detail;
  for (const auto& s : kPublished) {
    const double length = 500;
    const BprParams p{3.6 * length / s.v0, s.vc, s.alpha, s.beta, Provenance::DD2};
    const double got = bpr_speed(p, length, s.vc);
    const double want = s.v0 / (1 + s.alpha);
    if (!rel_close(got, want, 1e-9)) ++bad;
    detail += fmt::format("{}: {:.4f} ", s.id, got);
  }
  const TagClass7Params tag{50};
  const double v0 = tag.free_flow_speed();
  const double v1000 = tag_speed_class7(tag, 1000).speed_kmh;
  if (std::abs(v0 - 54.5) > 1e-9 || std::abs(v1000 - 24.5) > 1e-9) ++bad;
  detail += fmt::format("TAG7 v0={} v(1000)={}", v0, v1000);
  return {bad == 0, detail};
}

Verdict fit_recovery() {
  double worst = 0;
  for (const auto& s : kPublished) {
    const auto site = generate_site(fit_spec(s.alpha, s.beta, 336, 0.0, 5));
    const auto fit = fit_bpr(site.observations, 60.0, 800.0);
    worst = std::max({worst, std::abs(fit.params.alpha - s.alpha),
                      std::abs(fit.params.beta - s.beta)});
  }
  bool pass = worst <= 1e-6;
  std::string detail = fmt::format("noise-free max error {:.2e};", worst);
  for (const auto& s : kPublished) {
    int hits = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto site = generate_site(fit_spec(s.alpha, s.beta, 1000, 0.05, seed));
      const auto fit = fit_bpr(site.observations, 60.0, 800.0);
      hits += std::abs(fit.params.alpha - s.alpha) <= 0.15 &&
              std::abs(fit.params.beta - s.beta) <= 0.2;
    }
    pass = pass && hits >= 18;
    detail += fmt::format(" {} noisy {}/20", s.id, hits);
  }
  return {pass, detail};
}

Verdict grid_oracle() {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> ad(0.2, 2.5), bd(0.8, 5.0);
  double worst = -1e300;
  for (std::uint64_t i = 0; i < 10; ++i) {
    const auto site = generate_site(fit_spec(ad(rng), bd(rng), 200, 0.04, 100 + i));
    std::vector<double> v, t;
    for (const auto& o : site.observations) {
      v.push_back(o.volume);
      t.push_back(o.travel_time);
    }
    const auto fit = fit_bpr(v, t, 60.0, 800.0);
    const auto grid = testing::grid_search(v, t, 60.0, 800.0, 0, 3, 0.5, 6, 0.01);
    worst = std::max(worst, fit.diagnostics.sse - grid.sse);
  }
  return {worst <= 1e-6, fmt::format("max SSE(solver) - SSE(grid) = {:.3e} over 10 sites", worst)};
}

// Observations as they reach the pipeline: hours with no vehicles never pair.
std::vector<PairedObservation> bundled_observations(const std::vector<CorpusSite>& corpus) {
  std::vector<PairedObservation> out;
  for (const auto& s : corpus) {
    for (const auto& o : generate_site(s.spec, s.meta.site).observations) {
      if (o.volume > 0) out.push_back(o);
    }
  }
  return out;
}

Verdict dbscan_oracle(const std::vector<CorpusSite>& corpus) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  int mismatched = 0;
  for (int inst = 0; inst < 50; ++inst) {
    std::vector<NormalizedPoint> pts(200);
    const int clusters = 1 + inst % 4;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (i % 10 == 0) {
        pts[i] = {u(rng), u(rng)};
      } else {
        const double cx = 0.2 + 0.6 * static_cast<double>(i % clusters) / clusters;
        pts[i] = {cx + 0.08 * (u(rng) - 0.5), 0.5 + 0.3 * (u(rng) - 0.5)};
      }
    }
    const auto labels = dbscan(pts, 0.1, 5);
    const auto noise = testing::brute_force_noise(pts, 0.1, 5);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if ((labels[i] == kNoise) != noise[i]) {
        ++mismatched;
        break;
      }
    }
  }
  const auto obs = bundled_observations(corpus);
  const auto cleaned = remove_outliers(obs, {});
  const double fraction = static_cast<double>(cleaned.removed.size()) / obs.size();
  const bool pass = mismatched == 0 && fraction >= 0.001 && fraction <= 0.02;
  return {pass, fmt::format("{}/50 instances differ; removed {}/{} = {:.2f}%", mismatched,
                            cleaned.removed.size(), obs.size(), 100 * fraction)};
}

Verdict estimator_recovery() {
  double worst_t0 = 0, worst_vc = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    SynthSpec s = fit_spec(1.0, 2.0, 1440, 0.0, seed);
    s.volume_law = VolumeLaw::BimodalDaily;
    s.free_flow_share = 0.1;
    const auto site = generate_site(s);
    const auto ff = estimate_free_flow_time(site.observations);
    const auto cap = estimate_capacity(site.observations, ff.t0);
    if (cap.band_empty) return {false, fmt::format("seed {}: empty 2x-delay band", seed)};
    worst_t0 = std::max(worst_t0, std::abs(ff.t0 - s.truth.t0));
    worst_vc = std::max(worst_vc, std::abs(cap.vc / s.truth.vc - 1));
  }
  // Reported for context: a flat volume law over-states capacity.
  SynthSpec flat = fit_spec(1.0, 2.0, 1440, 0.0, 1);
  flat.free_flow_share = 0.1;
  const auto fs_site = generate_site(flat);
  const auto flat_vc =
      estimate_capacity(fs_site.observations, estimate_free_flow_time(fs_site.observations).t0).vc;
  return {worst_t0 == 0.0 && worst_vc <= 0.05,
          fmt::format("20 seeds: max |t0 err| = {}, max vc err = {:.2f}% (uniform law: {:+.1f}%)",
                      worst_t0, 100 * worst_vc, 100 * (flat_vc / flat.truth.vc - 1))};
}

Verdict mae_and_pattern(const std::vector<CorpusSite>& corpus) {
  const SiteKey key{11, Direction::North};
  const BprParams model{60, 800, 1, 2, Provenance::DD1};
  const auto date = parse_date("2016-03-07");
  std::vector<PairedObservation> hand;
  int h = 1;
  for (const double r : {10.0, -10.0, 20.0, -20.0}) {
    hand.push_back({key, date, h++, 400, bpr_time(model, 400) - r});
  }
  std::vector<PairedObservation> speed;
  const double ms = bpr_speed(model, 500, 400);
  for (const double ds : {4.0, -6.0}) speed.push_back({key, date, 1, 400, 3.6 * 500 / (ms - ds)});
  bool pass = mae_time(model, hand) == 15.0 && std::abs(mae_speed(model, 500, speed) - 5.0) < 1e-12;
  std::string detail = fmt::format("hand MAE {} s / {:.12g} km/h;", mae_time(model, hand),
                                   mae_speed(model, 500, speed));

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0, 1.6);
  int broken = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const double vc = 100 + static_cast<double>(rng() % 2000);
    std::vector<PairedObservation> obs(1 + rng() % 60);
    for (std::size_t i = 0; i < obs.size(); ++i) {
      obs[i] = {key, date, static_cast<int>(i % 24) + 1, std::round(u(rng) * vc), 60};
    }
    const auto strata = stratify(obs, vc);
    std::size_t total = 0;
    for (std::size_t b = 0; b < kBinCount; ++b) {
      total += strata[b].size();
      for (const auto& o : strata[b]) {
        if (static_cast<std::size_t>(classify_ratio(o.volume / vc)) != b) ++broken;
      }
    }
    if (total != obs.size()) ++broken;
  }
  pass = pass && broken == 0;
  detail += fmt::format(" partition violations {};", broken);

  const auto grouped = group_by_site(bundled_observations(corpus));
  std::map<SiteKey, SiteMetadata> meta;
  for (const auto& s : corpus) meta[s.meta.site] = s.meta;
  const auto filtered = filter_valid_sites(grouped, {});
  std::vector<PairedObservation> usable;
  for (const auto& site : filtered.kept) {
    const auto& o = grouped.at(site);
    usable.insert(usable.end(), o.begin(), o.end());
  }
  const auto cleaned = group_by_site(remove_outliers(usable, {}).kept);
  std::vector<SiteEvaluation> evals;
  int sse_bad = 0;
  for (const auto& [site, obs] : cleaned) {
    const auto cal = calibrate_site(meta.at(site), obs);
    if (cal.fit.sse > cal.sse_dd1) ++sse_bad;
    evals.push_back({meta.at(site), obs, cal.base, cal.dd1, cal.dd2});
  }
  const auto report = build_report(evals);
  int order_bad = 0;
  for (const auto c : kAllRoadClasses) {
    const auto* base = report.find(c, Provenance::Base, std::nullopt);
    const auto* dd1 = report.find(c, Provenance::DD1, std::nullopt);
    const auto* dd2 = report.find(c, Provenance::DD2, std::nullopt);
    if (!base || !dd1 || !dd2) continue;
    if (!(base->mae_speed > dd1->mae_speed && dd1->mae_speed >= dd2->mae_speed)) ++order_bad;
    detail += fmt::format(" {} {:.2f}/{:.2f}/{:.2f}", road_class_name(c), base->mae_speed,
                          dd1->mae_speed, dd2->mae_speed);
  }
  pass = pass && order_bad == 0 && sse_bad == 0;
  detail += fmt::format("; {} classes out of order, {} sites with SSE(DD2) > SSE(DD1)", order_bad,
                        sse_bad);
  return {pass, detail};
}

std::string quote(const fs::path& p) { return "'" + p.string() + "'"; }

int run_cli(const std::string& args) {
  const std::string cmd = std::string(VDCAL_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Verdict pipeline_determinism(const testing::TempDir& dir) {
  const auto in = "--counters " + quote(dir / "corpus/counters.csv") + " --times " +
                  quote(dir / "corpus/travel_times.csv") + " --meta " +
                  quote(dir / "corpus/metadata.csv");
  const auto start = Clock::now();
  const int a = run_cli("pipeline " + in + " --out " + quote(dir / "run_a"));
  const double first = std::chrono::duration<double>(Clock::now() - start).count();
  const int b = run_cli("pipeline " + in + " --out " + quote(dir / "run_b"));
  const bool same = testing::same_tree(dir / "run_a", dir / "run_b");
  return {a == 0 && b == 0 && same && first < 60,
          fmt::format("exit codes {}/{}, trees {}, one run {:.2f} s", a, b,
                      same ? "identical" : "DIFFER", first)};
}

Verdict conservation(const std::vector<CorpusSite>& corpus) {
  int bad = 0;
  std::string detail;
  const auto check = [&](std::span<const CorpusSite> sites, const std::string& name) {
    std::ostringstream c, r, m, t;
    const auto summary = generate_corpus(sites, {c, r, m, t});
    std::istringstream in(c.str());
    const auto parsed = parse_vehicle_records(in);
    std::int64_t total = 0;
    for (const auto& h : aggregate_hourly(parsed.rows)) total += h.volume;
    double generated = 0;
    for (const auto& s : summary.generated) {
      for (const auto& o : s.observations) generated += o.volume;
    }
    const bool ok = parsed.errors.empty() &&
                    static_cast<std::size_t>(total) == parsed.rows.size() &&
                    parsed.rows.size() == summary.vehicle_records &&
                    static_cast<double>(total) == generated;
    bad += !ok;
    detail += fmt::format("{}: {} records {}; ", name, parsed.rows.size(), ok ? "ok" : "MISMATCH");
  };
  check(corpus, "default");
  for (const std::uint64_t seed : {1u, 2u, 3u}) {
    const auto other = default_corpus(seed);
    check(std::span(other).subspan(0, 6), fmt::format("seed {}", seed));
  }

  std::istringstream fixture(testing::peak_morning_counter_csv());
  const auto parsed = parse_vehicle_records(fixture);
  std::ostringstream hourly;
  write_hourly_volumes(hourly, aggregate_hourly(parsed.rows));
  const bool rows_ok = parsed.errors.empty() && hourly.str() ==
                                                    "combined_id,atc_id,direction,date,hour,volume\n"
                                                    "11N,11,Northbound,2016-03-07,6,152\n"
                                                    "11N,11,Northbound,2016-03-07,7,420\n"
                                                    "11N,11,Northbound,2016-03-07,8,694\n"
                                                    "11N,11,Northbound,2016-03-07,9,496\n";
  bad += !rows_ok;
  detail += fmt::format("fixture rows {}", rows_ok ? "match" : "DIFFER");
  return {bad == 0, detail};
}

}  // namespace

int main() {
  testing::TempDir dir("acceptance");
  const auto corpus = default_corpus();
  if (run_cli("synth --out " + quote(dir / "corpus")) != 0) {
    std::cout << "FAIL setup: synth could not write the bundled corpus\n";
    return 1;
  }

  criterion(1, "bpr-identities", 1, bpr_identities);
  criterion(2, "published-coefficients", 0, published_coefficients);
  criterion(3, "fit-recovery", 10, fit_recovery);
  criterion(4, "grid-oracle", 30, grid_oracle);
  criterion(5, "dbscan-oracle", 10, [&] { return dbscan_oracle(corpus); });
  criterion(6, "estimator-recovery", 0, estimator_recovery);
  criterion(7, "mae-and-pattern", 0, [&] { return mae_and_pattern(corpus); });
  criterion(8, "pipeline-determinism", 120, [&] { return pipeline_determinism(dir); });
  criterion(9, "ingest-conservation", 0, [&] { return conservation(corpus); });
  return all_ok ? 0 : 1;
}
