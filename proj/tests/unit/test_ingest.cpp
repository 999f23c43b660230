#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "psephos/ingest.hpp"
#include "test_util.hpp"

using namespace psephos;
using testutil::TempDir;
using testutil::write_file;

namespace {

const char* kHeader = "province_id,district_id,county_id,box_id,electorate,valid_votes,E,K\n";

std::string sample_csv() {
  return std::string(kHeader) +
         "p1,d1,c1,b1,100,80,40,40\n"
         "p1,d1,c1,b2,200,120,30,90\n"
         "p1,d2,c2,b3,50,50,50,0\n"
         "p2,d3,c3,b4,300,0,0,0\n";  // zero valid: dropped
}

}  // namespace

TEST_SUITE("ingest") {

TEST_CASE("parse drops zero-valid boxes and counts them") {
  TempDir tmp;
  write_file(tmp.file("r.csv"), sample_csv());
  auto round = parse_round(tmp.file("r.csv"));
  CHECK(round.boxes.size() == 3);
  CHECK(round.dropped_zero_valid == 1);
  CHECK(round.candidates == std::vector<std::string>{"E", "K"});
  // row order preserved
  CHECK(round.boxes[0].box_id == "b1");
  CHECK(round.boxes[2].box_id == "b3");
  CHECK(round.hierarchy_counts == HierarchyCounts{1, 2, 2});
  CHECK(testutil::round_invariants_hold(round));
}

TEST_CASE("empty file with valid header parses to an empty round") {
  TempDir tmp;
  write_file(tmp.file("empty.csv"), kHeader);
  auto round = parse_round(tmp.file("empty.csv"));
  CHECK(round.boxes.empty());
  CHECK(round.dropped_zero_valid == 0);
  CHECK(round.hierarchy_counts == HierarchyCounts{0, 0, 0});
}

TEST_CASE("malformed rows cite the line number") {
  TempDir tmp;
  write_file(tmp.file("bad.csv"), std::string(kHeader) + "p1,d1,c1,b1,100,80,40,xyz\n");
  try {
    parse_round(tmp.file("bad.csv"));
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line == 2);
  }

  write_file(tmp.file("short.csv"), std::string(kHeader) + "p1,d1,c1,b1,100,80\n");
  CHECK_THROWS_AS(parse_round(tmp.file("short.csv")), ParseError);

  write_file(tmp.file("neg.csv"), std::string(kHeader) + "p1,d1,c1,b1,100,80,-5,85\n");
  CHECK_THROWS_AS(parse_round(tmp.file("neg.csv")), ParseError);
}

TEST_CASE("validation errors cite the box id") {
  TempDir tmp;
  write_file(tmp.file("over.csv"), std::string(kHeader) + "p1,d1,c1,bx,100,150,75,75\n");
  try {
    parse_round(tmp.file("over.csv"));
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(e.box_id == "bx");
  }

  write_file(tmp.file("sum.csv"), std::string(kHeader) + "p1,d1,c1,by,100,80,50,40\n");
  CHECK_THROWS_AS(parse_round(tmp.file("sum.csv")), ValidationError);

  write_file(tmp.file("dup.csv"), std::string(kHeader) +
                                      "p1,d1,c1,bz,100,80,40,40\n"
                                      "p1,d1,c1,bz,100,80,40,40\n");
  CHECK_THROWS_AS(parse_round(tmp.file("dup.csv")), ValidationError);
}

TEST_CASE("wrong header is rejected") {
  TempDir tmp;
  write_file(tmp.file("h.csv"), "a,b,c,d,e,f,E\n");
  CHECK_THROWS_AS(parse_round(tmp.file("h.csv")), ParseError);
  write_file(tmp.file("nocand.csv"),
             "province_id,district_id,county_id,box_id,electorate,valid_votes\n");
  CHECK_THROWS_AS(parse_round(tmp.file("nocand.csv")), ParseError);
}

TEST_CASE("lenient mode drops invalid rows and keeps the rest") {
  TempDir tmp;
  write_file(tmp.file("mixed.csv"), std::string(kHeader) +
                                        "p1,d1,c1,b1,100,80,40,40\n"
                                        "p1,d1,c1,b2,100,150,75,75\n"  // invalid
                                        "p1,d1,c1,b3,100,banana,1,1\n"  // malformed
                                        "p1,d1,c1,b4,100,90,45,45\n");
  IngestConfig config;
  config.lenient = true;
  auto round = parse_round(tmp.file("mixed.csv"), config);
  CHECK(round.boxes.size() == 2);
  CHECK(round.dropped_invalid == 2);
}

TEST_CASE("quoted ids with commas round-trip") {
  TempDir tmp;
  write_file(tmp.file("q.csv"), std::string(kHeader) +
                                    "\"p,1\",d1,\"c\"\"x\",b1,100,80,40,40\n");
  auto round = parse_round(tmp.file("q.csv"));
  REQUIRE(round.boxes.size() == 1);
  CHECK(round.boxes[0].province_id == "p,1");
  CHECK(round.boxes[0].county_id == "c\"x");

  write_round(round, tmp.file("q2.csv"));
  auto reparsed = parse_round(tmp.file("q2.csv"));
  CHECK(round.same_content(reparsed));
}

TEST_CASE("round-trip: write then parse yields identical content") {
  TempDir tmp;
  write_file(tmp.file("r.csv"), sample_csv());
  auto round = parse_round(tmp.file("r.csv"));
  write_round(round, tmp.file("rt.csv"));
  auto reparsed = parse_round(tmp.file("rt.csv"));
  CHECK(round.same_content(reparsed));
  CHECK(reparsed.hierarchy_counts == round.hierarchy_counts);
}

TEST_CASE("derive_shares arithmetic") {
  auto box = testutil::make_box("b", "p", "d", "c", 100, 80, {40});
  auto shares = derive_shares(box);
  CHECK(shares.turnout == doctest::Approx(0.80));
  CHECK(shares.vote_share[0] == doctest::Approx(0.50));

  auto saturated = testutil::make_box("b", "p", "d", "c", 50, 50, {50});
  auto s2 = derive_shares(saturated);
  CHECK(s2.turnout == 1.0);
  CHECK(s2.vote_share[0] == 1.0);

  auto multi = testutil::make_box("b", "p", "d", "c", 200, 120, {30, 90});
  auto s3 = derive_shares(multi);
  CHECK(s3.turnout == doctest::Approx(0.60));
  CHECK(s3.vote_share[0] == doctest::Approx(0.25));
  CHECK(s3.vote_share[1] == doctest::Approx(0.75));

  auto zero = testutil::make_box("b", "p", "d", "c", 0, 0, {0});
  CHECK_THROWS_AS(derive_shares(zero), std::domain_error);
}

TEST_CASE("filter_min_electorate basics and composition property") {
  TempDir tmp;
  write_file(tmp.file("r.csv"), sample_csv());
  auto round = parse_round(tmp.file("r.csv"));

  auto same = filter_min_electorate(round, 0);
  CHECK(same.boxes.size() == round.boxes.size());

  auto filtered = filter_min_electorate(round, 100);
  CHECK(filtered.boxes.size() == 2);  // b3 has electorate 50
  CHECK(round.boxes.size() == 3);     // original untouched
  CHECK(filtered.dropped_zero_valid == round.dropped_zero_valid);

  // filter(filter(r, a), b) == filter(r, max(a, b))
  std::mt19937 gen(42);
  std::uniform_int_distribution<int> dist(0, 400);
  for (int trial = 0; trial < 50; ++trial) {
    std::int64_t a = dist(gen), b = dist(gen);
    auto chained = filter_min_electorate(filter_min_electorate(round, a), b);
    auto direct = filter_min_electorate(round, std::max(a, b));
    CHECK(chained.same_content(direct));
  }
}

TEST_CASE("boxes_per_district counts at the county triple") {
  auto round = testutil::make_round(
      {"E"}, {testutil::make_box("b1", "p1", "d1", "c1", 100, 50, {25}),
              testutil::make_box("b2", "p1", "d1", "c1", 100, 50, {25}),
              testutil::make_box("b3", "p1", "d1", "c2", 100, 50, {25})});
  auto counts = boxes_per_district(round);
  CHECK(counts.size() == 2);
  CHECK(counts.at("p1/d1/c1") == 2);
  CHECK(counts.at("p1/d1/c2") == 1);
  CHECK(small_area_box_count(round, Level::county) == 3);

  auto empty = testutil::make_round({"E"}, {});
  CHECK(boxes_per_district(empty).empty());

  // district level groups by (province, district)
  auto by_district = boxes_per_district(round, Level::district);
  CHECK(by_district.size() == 1);
  CHECK(by_district.at("p1/d1") == 3);
}

TEST_CASE("county ids repeated across provinces stay distinct") {
  auto round = testutil::make_round(
      {"E"}, {testutil::make_box("b1", "p1", "d1", "merkez", 100, 50, {25}),
              testutil::make_box("b2", "p2", "d1", "merkez", 100, 50, {25})});
  CHECK(round.boxes.size() == 2);
  auto counts = compute_hierarchy_counts(round);
  CHECK(counts == HierarchyCounts{2, 2, 2});
}

TEST_CASE("total valid votes invariant under input reordering") {
  TempDir tmp;
  write_file(tmp.file("a.csv"), sample_csv());
  auto round = parse_round(tmp.file("a.csv"));

  // same rows, different order
  write_file(tmp.file("b.csv"), std::string(kHeader) +
                                    "p1,d2,c2,b3,50,50,50,0\n"
                                    "p2,d3,c3,b4,300,0,0,0\n"
                                    "p1,d1,c1,b2,200,120,30,90\n"
                                    "p1,d1,c1,b1,100,80,40,40\n");
  auto shuffled = parse_round(tmp.file("b.csv"));
  CHECK(round.total_valid_votes() == shuffled.total_valid_votes());
  CHECK(round.hierarchy_counts == shuffled.hierarchy_counts);
}

}  // TEST_SUITE
