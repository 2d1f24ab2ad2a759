#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include <vdcal/harvester.hpp>

namespace vdcal {
namespace {

using std::chrono::seconds;

const SiteKey k11N{11, Direction::North};
const SiteKey k9S{9, Direction::South};

MetadataCatalog catalog(std::initializer_list<SiteKey> sites) {
  MetadataCatalog c;
  for (const auto s : sites) c[s] = {s, RoadClass::Trunk, 950, 64, 4500, {51.5, 0.1}, {51.51, 0.1}};
  return c;
}

Timestamp ts(const char* text) { return parse_timestamp(text); }

TEST(PlanRequests, GridOfSitesAndTimes) {
  const auto plan = plan_requests(catalog({k11N, k9S}), seconds{3600}, ts("2016-03-07T06:00:00"),
                                  ts("2016-03-07T09:00:00"));
  EXPECT_EQ(plan.schedule().size(), 6u);
  const auto half = plan_requests(catalog({k11N}), seconds{1800}, ts("2016-03-07T06:00:00"),
                                  ts("2016-03-07T07:00:00"));
  EXPECT_EQ(half.schedule().size(), 2u);
}

TEST(PlanRequests, Completeness) {
  const auto cat = catalog({k11N, k9S});
  for (const long interval : {600L, 900L, 1200L, 3600L}) {
    for (const long horizon : {1L, 599L, 3600L, 7201L, 86400L}) {
      const auto start = ts("2016-03-07T00:00:00");
      const auto plan = plan_requests(cat, seconds{interval}, start, start + seconds{horizon});
      const auto expected = cat.size() * static_cast<std::size_t>((horizon + interval - 1) / interval);
      EXPECT_EQ(plan.schedule().size(), expected) << interval << " " << horizon;
    }
  }
}

TEST(PlanRequests, Errors) {
  const auto start = ts("2016-03-07T06:00:00");
  EXPECT_THROW(plan_requests(catalog({k11N}), seconds{0}, start, start + seconds{60}),
               InvalidArgument);
  EXPECT_THROW(plan_requests(catalog({k11N}), seconds{7}, start, start + seconds{60}),
               InvalidArgument);
  EXPECT_THROW(plan_requests({}, seconds{3600}, start, start + seconds{3600}), InvalidArgument);
  EXPECT_THROW(plan_requests(catalog({k11N}), seconds{3600}, start, start), InvalidArgument);
}

class FlakyProvider final : public DirectionsProvider {
 public:
  std::optional<double> travel_time(const DirectionsQuery& q) const override {
    if (q.site == k9S) throw ProviderError("quota exceeded");
    return 100.0;
  }
};

TEST(ExecutePlan, ReplayLookup) {
  const std::vector<TravelTimeRecord> replay{{k11N, ts("2016-03-07T07:00:00"), 95}};
  const ReplayProvider provider(replay);
  const auto plan = plan_requests(catalog({k11N}), seconds{3600}, ts("2016-03-07T07:00:00"),
                                  ts("2016-03-07T08:00:00"));
  const auto r = execute_plan(plan, provider);
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0], replay[0]);
  EXPECT_EQ(r.misses, 0u);
}

TEST(ExecutePlan, MissesAreCounted) {
  std::vector<TravelTimeRecord> replay;
  const auto start = ts("2016-03-07T00:00:00");
  for (int h = 0; h < 24; ++h) {
    if (h == 3 || h == 17) continue;
    replay.push_back({k11N, start + seconds{3600 * h}, 90.0 + h});
  }
  const ReplayProvider provider(replay);
  const auto plan = plan_requests(catalog({k11N}), seconds{3600}, start, start + seconds{86400});
  const auto r = execute_plan(plan, provider);
  EXPECT_EQ(r.planned, 24u);
  EXPECT_EQ(r.records.size(), 22u);
  EXPECT_EQ(r.misses, 2u);
  EXPECT_TRUE(r.warnings.empty());
}

TEST(ExecutePlan, FailingSiteIsWarnedAndOthersSurvive) {
  const auto start = ts("2016-03-07T00:00:00");
  const auto plan = plan_requests(catalog({k11N, k9S}), seconds{3600}, start, start + seconds{7200});
  const auto r = execute_plan(plan, FlakyProvider{});
  EXPECT_EQ(r.records.size(), 2u);
  EXPECT_EQ(r.failures.size(), 2u);
  ASSERT_EQ(r.warnings.size(), 1u);
  EXPECT_EQ(r.warnings[0].site, k9S);
}

TEST(ExecutePlan, OrderedOutputWithinPlanAndDeterministic) {
  std::vector<TravelTimeRecord> replay;
  const auto start = ts("2016-03-07T00:00:00");
  for (int i = 0; i < 48; ++i) {
    replay.push_back({(i % 2) ? k11N : k9S, start + seconds{1800 * (i / 2)}, 50.0 + i});
  }
  const ReplayProvider provider(replay);
  const auto plan = plan_requests(catalog({k11N, k9S}), seconds{1800}, start, start + seconds{43200});
  const auto a = execute_plan(plan, provider);
  const auto b = execute_plan(plan, provider);
  std::ostringstream sa, sb;
  write_travel_times(sa, a.records);
  write_travel_times(sb, b.records);
  EXPECT_EQ(sa.str(), sb.str());

  const auto scheduled = plan.schedule();
  for (std::size_t i = 1; i < a.records.size(); ++i) {
    const auto& p = a.records[i - 1];
    const auto& q = a.records[i];
    EXPECT_TRUE(p.site < q.site || (p.site == q.site && p.query_time < q.query_time));
  }
  for (const auto& r : a.records) {
    EXPECT_TRUE(std::any_of(scheduled.begin(), scheduled.end(), [&](const ScheduledQuery& s) {
      return s.site == r.site && s.fire_time == r.query_time;
    }));
  }
}

TEST(ExecutePlan, LogicalClockReachesEveryFireTime) {
  const auto start = ts("2016-03-07T00:00:00");
  const auto plan = plan_requests(catalog({k11N}), seconds{900}, start, start + seconds{3600});
  LogicalClock clock(start);
  execute_plan(plan, ReplayProvider({}), clock);
  EXPECT_EQ(clock.now(), start + seconds{2700});
}

TEST(ReplayProvider, CsvRoundTripAndBadRows) {
  const std::vector<TravelTimeRecord> rows{{k11N, ts("2016-03-07T07:00:00"), 95},
                                           {k9S, ts("2016-03-07T07:00:00"), 61.5}};
  std::ostringstream out;
  write_travel_times(out, rows);
  std::istringstream in(out.str());
  const auto p = ReplayProvider::from_csv(in);
  EXPECT_EQ(p.size(), 2u);
  EXPECT_EQ(p.travel_time({k9S, {}, {}, ts("2016-03-07T07:00:00")}), 61.5);

  std::istringstream bad("combined_id,timestamp_iso8601,duration_s\n11N,2016-03-07T07:00:00,0\n");
  EXPECT_THROW(ReplayProvider::from_csv(bad), ParseError);
}

TEST(ProviderResponse, DurationInTraffic) {
  EXPECT_EQ(parse_provider_response(
                R"({"routes":[{"legs":[{"duration_in_traffic":{"value":95}}]}]})"),
            95);
  EXPECT_EQ(parse_provider_response(
                R"({"routes":[{"legs":[{"duration":{"value":80},"duration_in_traffic":{"value":95.4,"text":"2 mins"}}]}]})"),
            95);
}

TEST(ProviderResponse, ErrorsNameThePath) {
  const char* cases[] = {
      R"({"routes":[{"legs":[{"duration":{"value":80}}]}]})",
      R"({"routes":[]})",
      R"({"routes":[{"legs":[{"duration_in_traffic":{"value":"95"}}]}]})",
      R"({"routes":[{"legs":[{"duration_in_traffic":{"value":0}}]}]})",
  };
  for (const char* c : cases) {
    try {
      parse_provider_response(c);
      ADD_FAILURE() << c;
    } catch (const ParseError& e) {
      EXPECT_NE(std::string(e.what()).find("duration_in_traffic"), std::string::npos) << e.what();
    }
  }
  EXPECT_THROW(parse_provider_response("not json"), ParseError);
}

}  // namespace
}  // namespace vdcal
