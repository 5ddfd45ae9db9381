#include "vcsurv/errors.hpp"
#include "vcsurv/io.hpp"
#include "vcsurv/simulation.hpp"

#include <doctest.h>

#include <sstream>

using namespace vcsurv;

namespace {

constexpr const char* kSubjects =
    "id,time,event\n"
    "a,0.6,1\n"
    "b,0.9,0\n";

constexpr const char* kLongitudinal =
    "id,obs_time,z1\n"
    "a,0.5,1\n"
    "b,0.55,-1\n"
    "b,0.2,0.25\n";

std::string context_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ingest);
    return std::string(e.what()) + " @ " + e.context();
  }
  FAIL("expected an ingest error");
  return {};
}

}  // namespace

TEST_SUITE("io") {
  TEST_CASE("two-subject fixture") {
    const Dataset d = ingest_text(kSubjects, kLongitudinal);
    REQUIRE(d.size() == 2);
    CHECK(d.p() == 1);
    CHECK(d.tau() == 0.9);
    CHECK(d[0].id == "a");
    CHECK(d[0].follow_up_time == 0.6);
    CHECK(d[0].event);
    CHECK(d[0].obs_times == std::vector<double>{0.5});
    CHECK(d[0].covariates(0, 0) == 1.0);
    CHECK(d[1].id == "b");
    CHECK_FALSE(d[1].event);
    CHECK(d[1].obs_times == std::vector<double>{0.2, 0.55});
    CHECK(d[1].covariates(0, 0) == 0.25);
    CHECK(d[1].covariates(1, 0) == -1.0);
    CHECK(ingest_text(kSubjects, kLongitudinal, 1.0).tau() == 1.0);
  }

  TEST_CASE("row order does not matter") {
    const Dataset sorted = ingest_text(kSubjects, kLongitudinal);
    const Dataset shuffled = ingest_text("id,time,event\nb,0.9,0\na,0.6,1\n",
                                         "id,obs_time,z1\nb,0.2,0.25\na,0.5,1\nb,0.55,-1\n");
    CHECK(sorted == shuffled);
    // Numeric ids sort as numbers.
    const Dataset num = ingest_text("id,time,event\n10,0.5,1\n9,0.4,1\n",
                                    "id,obs_time,z1\n10,0.3,1\n9,0.2,2\n");
    CHECK(num[0].id == "9");
  }

  TEST_CASE("ingest errors name the problem") {
    const auto unknown = context_of([] {
      static_cast<void>(ingest_text(kSubjects, "id,obs_time,z1\na,0.5,1\nzz,0.3,1\n"));
    });
    CHECK(unknown.find("'zz'") != std::string::npos);
    CHECK(unknown.find("longitudinal:3") != std::string::npos);

    const auto bad = context_of([] {
      static_cast<void>(ingest_text("id,time,event\na,x,1\n", "id,obs_time,z1\na,0.5,1\n"));
    });
    CHECK(bad.find("subjects:2 column 'time'") != std::string::npos);

    const auto dup = context_of([] {
      static_cast<void>(ingest_text(kSubjects, "id,obs_time,z1\na,0.5,1\na,0.5,2\n"));
    });
    CHECK(dup.find("duplicate observation") != std::string::npos);

    context_of([] { static_cast<void>(ingest_text("id,time,event\na,0.5,1\na,0.6,0\n", kLongitudinal)); });
    context_of([] { static_cast<void>(ingest_text(kSubjects, "id,obs_time,z1\n")); });
    context_of([] { static_cast<void>(ingest_text("id,time,event\na,0.5,2\n", kLongitudinal)); });
    context_of([] { static_cast<void>(ingest_text("id,time\na,0.5\n", kLongitudinal)); });
    context_of([] { static_cast<void>(ingest_text(kSubjects, "id,obs_time\na,0.5\n")); });
    context_of([] { static_cast<void>(ingest_text("id,time,event\na,0.5\n", kLongitudinal)); });
  }

  TEST_CASE("csv parsing") {
    const CsvTable t = parse_csv("a,b\r\n\"x,1\",\"say \"\"hi\"\"\"\r\n\r\n3,4\n");
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0][0] == "x,1");
    CHECK(t.rows[0][1] == "say \"hi\"");
    CHECK(t.lines[1] == 4);
    CHECK(t.number(1, 1) == 4.0);
    CHECK(csv_escape("plain") == "plain");
    CHECK(csv_escape("a,b") == "\"a,b\"");
    CHECK(csv_escape("q\"") == "\"q\"\"\"");
    CHECK_THROWS_AS(parse_csv("a\n\"open\n"), Error);
  }

  TEST_CASE("export then ingest is the identity") {
    ScenarioConfig cfg;
    cfg.n = 80;
    Rng rng = make_rng(5);
    const Dataset d = simulate_dataset(cfg, 0.68, rng);
    std::ostringstream s;
    std::ostringstream l;
    write_dataset(d, s, l);
    const Dataset back = ingest_text(s.str(), l.str(), d.tau());
    CHECK(back == d);
    std::ostringstream s2;
    std::ostringstream l2;
    write_dataset(back, s2, l2);
    CHECK(s2.str() == s.str());
    CHECK(l2.str() == l.str());
  }

  TEST_CASE("number formatting") {
    CHECK(format_value(0.1234567891) == "0.123457");
    CHECK(format_value(std::numeric_limits<double>::quiet_NaN()) == "NA");
    CHECK(format_exact(0.1) == "0.1");
    CHECK(std::stod(format_exact(1.0 / 3.0)) == 1.0 / 3.0);
  }
}
