#include "doctest.h"

#include "epidelay/error.hpp"
#include "epidelay/linelist.hpp"
#include "epidelay/synthdata.hpp"

#include <cmath>
#include <numeric>
#include <set>

using namespace epidelay;

namespace {

CaseRecord make_case(std::string id, double p_lo, double p_hi, double s_lo, double s_hi) {
  return {std::move(id), EventWindow::interval(p_lo, p_hi), EventWindow::interval(s_lo, s_hi), {}, true};
}

std::string error_of(const std::string& csv, const IngestOptions& options = {}) {
  try {
    ingest_csv_string(csv, options);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return "";
}

} // namespace

TEST_CASE("ingest parses interval, point and disjoint windows") {
  const auto ll = ingest_csv_string("id,primary_window,secondary_window,strata_sex\n"
                                    "c1,3:4,8:9,F\n"
                                    "c2,3,8,M\n"
                                    "c3,0:1|4:5,10:11,F\n");
  REQUIRE(ll.cases.size() == 3);
  CHECK(ll.cases[0].primary == EventWindow::interval(3, 4));
  CHECK(ll.cases[0].secondary == EventWindow::interval(8, 9));
  // A single reported date is still a one-day censoring window.
  CHECK(ll.cases[1].primary == EventWindow::interval(3, 4));
  CHECK(ll.cases[1].secondary == EventWindow::interval(8, 9));
  CHECK(ll.cases[2].primary.segments().size() == 2);
  CHECK(ll.cases[2].strata.at("sex") == "F");
  CHECK(ll.cases[1].id == "c2");
}

TEST_CASE("ingest errors carry the row number") {
  const std::string header = "id,primary_window,secondary_window\n";
  CHECK(error_of(header + "c1,3:4,8:9\nc2,3,8\nc3,3:2,8:9\n") == "window upper <= lower at row 3");
  CHECK(error_of(header + "c1,0:2|1:3,8:9\n") == "overlapping window segments at row 1");
  CHECK(error_of(header + "c1,x:2,8:9\n") == "non-numeric window bound 'x' at row 1");
  CHECK(error_of("id,primary_window\nc1,3\n") == "missing column 'secondary_window'");
  CHECK(error_of(header + "c1,9,2\n").find("row 1") != std::string::npos);

  IngestOptions truncated;
  truncated.metadata.observation_time = 10.0;
  CHECK(error_of(header + "c1,3,9\nc2,3,10\n", truncated).find("row 2") != std::string::npos);
}

TEST_CASE("ingest converts calendar dates relative to the epoch") {
  IngestOptions options;
  options.metadata.epoch_date = "2024-02-27";
  const auto ll = ingest_csv_string(
      "id,primary_window,secondary_window\nc1,2024-02-28:2024-03-01,2024-03-05\n", options);
  CHECK(ll.cases[0].primary == EventWindow::interval(1, 3)); // 2024 is a leap year
  CHECK(ll.cases[0].secondary == EventWindow::interval(7, 8));
}

TEST_CASE("export then ingest is the identity on linelists") {
  OutbreakScenario sc;
  sc.observation.n_cases = 300;
  sc.observation.growth_rate = 0.1;
  sc.observation.truncation_time = 30.0;
  auto sim = simulate_linelist(sc);
  sim.linelist.cases[3].strata["region"] = "north, upper";
  sim.linelist.cases[5].strata["region"] = "south";
  const auto text = export_csv_string(sim.linelist);
  IngestOptions options;
  options.metadata = sim.linelist.meta;
  const auto back = ingest_csv_string(text, options);
  CHECK(back.cases.size() == sim.linelist.cases.size());
  CHECK(export_csv_string(back) == text);
  CHECK(back.cases[3].strata.at("region") == "north, upper");
  CHECK(back.cases[0].strata.at("region").empty());
  CHECK(data_hash(back) == data_hash(sim.linelist));

  // Daily windows are exactly representable, so the structures match field for field.
  for (auto& c : sim.linelist.cases) {
    if (!c.strata.empty()) continue;
    c.strata["region"] = "";
  }
  CHECK(back == sim.linelist);
}

TEST_CASE("metadata sidecar round trips") {
  LinelistMetadata meta;
  meta.observation_time = 21.5;
  meta.allow_negative = true;
  meta.delay_name = "serial interval";
  meta.epoch_date = "2020-01-01";
  CHECK(metadata_from_json(metadata_to_json(meta)) == meta);
  CHECK_FALSE(metadata_from_json(R"({"observation_time": "none"})").observation_time);
}

TEST_CASE("privacy widening snaps windows outward to a coarser grid") {
  Linelist ll;
  ll.meta.observation_time = 20.0;
  ll.cases.push_back(make_case("a", 3, 4, 8, 9));
  ll.cases.push_back({"b", EventWindow({{0, 1}, {1.5, 2}}), EventWindow::interval(18, 19), {}, true});
  ExportOptions options;
  options.widen_to_grid = 7.0;
  const auto text = export_csv_string(ll, options);
  CHECK(text == "id,primary_window,secondary_window\na,0:7,7:14\nb,0:7,14:20\n");
}

TEST_CASE("cohort examples") {
  Linelist ll;
  ll.cases.push_back(make_case("a", 0, 1, 5, 6));
  ll.cases.push_back(make_case("b", 1, 2, 5, 6));
  const auto fwd = cohort(ll, Direction::Forward, 1.0);
  REQUIRE(fwd.size() == 2);
  CHECK(fwd[0].cases.size() == 1);
  CHECK(fwd[1].cases.size() == 1);
  const auto bwd = cohort(ll, Direction::Backward, 1.0);
  REQUIRE(bwd.size() == 1);
  CHECK(bwd[0].bin == 5);
  CHECK(bwd[0].cases.size() == 2);
  CHECK_THROWS_AS(cohort(ll, Direction::Forward, 0.0), ValidationError);
}

TEST_CASE("cohorts partition the case set") {
  OutbreakScenario sc;
  sc.observation.n_cases = 500;
  sc.observation.growth_rate = 0.1;
  const auto ll = simulate_linelist(sc).linelist;
  for (auto dir : {Direction::Forward, Direction::Backward}) {
    for (double width : {0.5, 1.0, 3.0}) {
      std::multiset<std::string> seen;
      std::int64_t prev = std::numeric_limits<std::int64_t>::min();
      for (const auto& co : cohort(ll, dir, width)) {
        CHECK(co.bin > prev);
        prev = co.bin;
        for (const auto& c : co.cases) seen.insert(c.id);
      }
      CHECK(seen.size() == ll.cases.size());
      CHECK(std::set<std::string>(seen.begin(), seen.end()).size() == ll.cases.size());
    }
  }
}

TEST_CASE("epidemic curve examples") {
  Linelist ll;
  ll.cases.push_back(make_case("a", 0, 1, 5, 6));
  ll.cases.push_back(make_case("b", 0, 1, 6, 7));
  ll.cases.push_back(make_case("c", 2, 3, 8, 9));
  const auto curve = epidemic_curve(ll);
  CHECK(curve.first_day == 0);
  CHECK(curve.counts == std::vector<double>{2, 0, 1});
  CHECK(curve.total() == 3.0);
  const auto secondary = epidemic_curve(ll, EventKind::Secondary);
  CHECK(secondary.first_day == 5);
  CHECK(secondary.counts.size() == 4);
  CHECK_THROWS_AS(epidemic_curve(Linelist{}), ValidationError);
}

TEST_CASE("growth rate examples") {
  EpidemicCurve exact;
  EpidemicCurve large;
  for (int t = 0; t <= 20; ++t) {
    exact.counts.push_back(100.0 * std::exp(0.1 * t));
    large.counts.push_back(1e6 * std::exp(0.1 * t));
  }
  const auto g = estimate_growth_rate(exact);
  CHECK(std::abs(g.rate - 0.1) < 5e-4);
  // numpy polyfit on ln(100 e^{0.1 t} + 0.5)
  CHECK(g.rate == doctest::Approx(0.0997955948607345).epsilon(1e-12));
  CHECK(std::abs(estimate_growth_rate(large).rate - 0.1) < 1e-6);

  EpidemicCurve flat;
  flat.counts.assign(10, 7.0);
  CHECK(std::abs(estimate_growth_rate(flat).rate) < 1e-14);

  EpidemicCurve alternating;
  for (int t = 0; t < 20; ++t) alternating.counts.push_back(t % 2 == 0 ? 1.0 : 0.0);
  const auto alt = estimate_growth_rate(alternating);
  // numpy lstsq oracle
  CHECK(alt.rate == doctest::Approx(-0.008260242771940676).epsilon(1e-10));
  CHECK(alt.std_error == doctest::Approx(0.022368843170287544).epsilon(1e-10));
  CHECK(alt.std_error > std::abs(alt.rate));

  CHECK_THROWS_AS(estimate_growth_rate(flat, 0, 1), ValidationError);
  EpidemicCurve zeros;
  zeros.counts.assign(5, 0.0);
  CHECK_THROWS_AS(estimate_growth_rate(zeros), ValidationError);
}

TEST_CASE("growth rate recovered from exact exponential counts of at least 1e3 per day") {
  for (double r : {-0.2, -0.05, 0.0, 0.07, 0.3}) {
    EpidemicCurve c;
    c.first_day = 5;
    for (int t = 0; t < 15; ++t) c.counts.push_back(std::round(1e5 * std::exp(r * t)));
    CHECK(std::abs(estimate_growth_rate(c).rate - r) < 1e-3);
  }
}

TEST_CASE("growth rate on a simulated epidemic curve") {
  OutbreakScenario sc;
  sc.observation.growth_rate = 0.1;
  sc.observation.n_cases = 5000;
  sc.observation.duration = 40.0;
  sc.seed = 5;
  const auto curve = epidemic_curve(simulate_linelist(sc).linelist);
  const auto g = estimate_growth_rate(curve, 0, 39);
  CHECK(std::abs(g.rate - 0.1) < 3.0 * g.std_error + 0.005);
}

TEST_CASE("negative interval policies") {
  Linelist ll;
  ll.meta.allow_negative = true;
  ll.meta.delay_name = "serial interval";
  ll.cases.push_back(make_case("neg", 5, 6, 2, 3));
  ll.cases.push_back(make_case("pos", 1, 2, 4, 5));

  const auto reversed = apply_negative_policy(ll, NegativePolicy::Reverse);
  CHECK(reversed.cases[0].primary == EventWindow::interval(2, 3));
  CHECK(reversed.cases[0].secondary == EventWindow::interval(5, 6));
  CHECK(reversed.cases[1] == ll.cases[1]);
  // Swapping the affected cases back recovers the input exactly.
  CaseRecord restored = reversed.cases[0];
  std::swap(restored.primary, restored.secondary);
  CHECK(restored == ll.cases[0]);
  CHECK_FALSE(negative_capable(reversed.cases[0]));
  CHECK(apply_negative_policy(reversed, NegativePolicy::Reverse) == reversed);

  const auto dropped = apply_negative_policy(ll, NegativePolicy::Drop);
  REQUIRE(dropped.cases.size() == 1);
  CHECK(dropped.cases[0].id == "pos");

  CHECK(apply_negative_policy(ll, NegativePolicy::Keep) == ll);

  Linelist positive;
  positive.cases.push_back(make_case("a", 0, 1, 3, 4));
  positive.cases.push_back(make_case("b", 2, 3, 2, 3));
  for (auto p : {NegativePolicy::Keep, NegativePolicy::Drop, NegativePolicy::Reverse}) {
    CHECK(apply_negative_policy(positive, p) == positive);
  }
}

TEST_CASE("naive delays use window centroids") {
  Linelist ll;
  ll.cases.push_back(make_case("a", 0, 1, 5, 6));
  ll.cases.push_back({"b", EventWindow({{0, 1}, {4, 5}}), EventWindow::interval(10, 11), {}, true});
  const auto d = naive_delays(ll);
  CHECK(d[0] == 5.0);
  CHECK(d[1] == 8.0);
  CHECK_THROWS_AS(naive_delays(Linelist{}), ValidationError);
}

TEST_CASE("window invariants") {
  CHECK_THROWS_AS(EventWindow({}), ValidationError);
  CHECK_THROWS_AS(EventWindow::interval(2, 2), ValidationError);
  CHECK_THROWS_AS(EventWindow({{0, 2}, {1, 3}}), ValidationError);
  const EventWindow w({{4, 5}, {0, 1}});
  CHECK(w.lower() == 0.0);
  CHECK(w.upper() == 5.0);
  CHECK(w.measure() == 2.0);
}
