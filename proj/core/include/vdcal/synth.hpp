#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vdcal/ingest.hpp"
#include "vdcal/models.hpp"
#include "vdcal/types.hpp"

namespace vdcal {

enum class VolumeLaw {
  Uniform,       // independent draws over [0, 1.2·vc]
  BimodalDaily,  // hour-of-day profile with morning and evening peaks
};

std::string_view volume_law_name(VolumeLaw law);
VolumeLaw parse_volume_law(std::string_view text);

/// Ground truth and noise model for one synthetic site.
struct SynthSpec {
  BprParams truth{60.0, 600.0, 1.0, 2.0, Provenance::DD2};
  double link_length_m = 500.0;
  std::size_t n_obs = 336;
  VolumeLaw volume_law = VolumeLaw::Uniform;
  double noise_sigma0 = 0.0;  // relative s.d. of travel time at zero volume
  double noise_growth = 0.0;  // extra relative s.d. per unit v/vc
  std::size_t outlier_count = 0;
  std::uint64_t seed = 1;
  /// Fraction of the n_obs points forced to zero volume.
  double free_flow_share = 0.0;
  Date start_date{std::chrono::year{2016}, std::chrono::month{2}, std::chrono::day{27}};

  void validate() const;
};

struct SynthSite {
  std::vector<PairedObservation> observations;  // n_obs regular points, then outliers
  BprParams truth;
  std::vector<std::size_t> outlier_indices;
};

/// Deterministic for a fixed spec. Regular points are
/// t = bpr_time(truth, v)·(1 + e), e ~ N(0, (sigma0 + growth·v/vc)²)
/// truncated below at -0.9. Outliers sit at 3-4 times the curve.
/// Observation k occupies day k / 24, hour k % 24 + 1 from start_date.
SynthSite generate_site(const SynthSpec& spec, SiteKey site = {});

struct CorpusSite {
  SiteMetadata meta;
  SynthSpec spec;
};

struct CorpusSummary {
  std::size_t sites = 0;
  std::size_t observations = 0;
  std::size_t vehicle_records = 0;
  std::vector<SynthSite> generated;
};

/// Destination streams for a synthetic bundle.
struct CorpusStreams {
  std::ostream& counters;  // counter CSV
  std::ostream& replay;    // replay / travel-time CSV
  std::ostream& metadata;  // metadata catalog CSV
  std::ostream& truth;     // ground-truth sidecar CSV
};

inline constexpr std::string_view kTruthHeader =
    "combined_id,t0_s,vc_vph,alpha,beta,sigma0,growth,seed";

/// Writes per-vehicle counter records whose hourly aggregation reproduces
/// each observation's volume exactly, one replay record per observation
/// (timestamped mid-hour), the metadata catalog and the truth sidecar.
CorpusSummary generate_corpus(std::span<const CorpusSite> sites, const CorpusStreams& out);

/// Per-vehicle records for one observation.
std::vector<VehicleRecord> vehicle_records_for(const PairedObservation& o, double speed_kmh);

inline constexpr std::uint64_t kDefaultCorpusSeed = 20160227;

/// 24 sites mirroring the road-class mix of the London counter network. The
/// seed only drives the noise; site structure is fixed.
std::vector<CorpusSite> default_corpus(std::uint64_t seed = kDefaultCorpusSeed);

/// Seed of the site at `index` in a corpus with the given corpus seed.
std::uint64_t site_seed(std::uint64_t corpus_seed, std::size_t index);

/// JSON corpus description. Throws ParseError naming the offending field.
std::vector<CorpusSite> corpus_from_json(std::string_view json);
std::vector<CorpusSite> corpus_from_json(std::string_view json, std::uint64_t seed_override);
std::string corpus_to_json(std::span<const CorpusSite> sites, std::uint64_t seed);

}  // namespace vdcal
