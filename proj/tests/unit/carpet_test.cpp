#include <gtest/gtest.h>

#include <random>

#include "carpetlab/carpet.hpp"
#include "carpetlab/carpet_io.hpp"
#include "carpetlab/catalog.hpp"
#include "carpetlab/errors.hpp"
#include "random_carpets.hpp"

using namespace carpetlab;

namespace {

GLCarpet two_row_layout() {
  GLCarpet c;
  for (long d : {0L, 1L}) {
    c.rows.push_back({Rational(1, 2), Rational(d, 2), {{Rational(1, 4), Rational(0)}, {Rational(1, 4), Rational(3, 4)}}});
  }
  return c;
}

}  // namespace

TEST(Rational, LowestTermsAndParse) {
  Rational r(6, -8);
  EXPECT_EQ(r.numerator(), -3);
  EXPECT_EQ(r.denominator(), 4);
  EXPECT_EQ(Rational::parse("3/4"), Rational(3, 4));
  EXPECT_EQ(Rational::parse("-2"), Rational(-2));
  EXPECT_THROW(Rational::parse("1/0"), ParseError);
  EXPECT_THROW(Rational::parse("1/x"), ParseError);
  EXPECT_THROW(Rational::parse(""), ParseError);
}

TEST(Rational, ExactBigPowers) {
  // 3^25 < 2^40
  EXPECT_LT(Rational(3).pow(25), Rational(2).pow(40));
  EXPECT_EQ(Rational(3).pow(25).numerator(), BigInt("847288609443"));
  EXPECT_NEAR(log_of(Rational(1, 3).pow(400)), -400 * std::log(3.0), 1e-9);
}

TEST(ValidateGL, CanonicalLayoutIsValid) { EXPECT_TRUE(validate_gl(two_row_layout()).ok()); }

TEST(ValidateGL, CellAsWideAsRowFails) {
  GLCarpet c;
  c.rows.push_back({Rational(1, 2), Rational(0), {{Rational(1, 2), Rational(0)}}});
  auto r = validate_gl(c);
  ASSERT_FALSE(r.ok());
  EXPECT_TRUE(r.has("a_lt_b"));
  EXPECT_NE(r.summary().find("a_ij < b_i fails"), std::string::npos);
}

TEST(ValidateGL, OverlappingCellsFail) {
  GLCarpet c;
  c.rows.push_back({Rational(1, 2), Rational(0), {{Rational(1, 3), Rational(0)}, {Rational(1, 3), Rational(1, 4)}}});
  auto r = validate_gl(c);
  EXPECT_TRUE(r.has("cell_overlap"));
  EXPECT_NE(r.summary().find("cell interiors overlap"), std::string::npos);
}

TEST(ValidateGL, ReportsEveryViolation) {
  GLCarpet c;
  c.rows.push_back({Rational(1, 2), Rational(0), {{Rational(1, 2), Rational(0)}}});
  c.rows.push_back({Rational(1, 2), Rational(1, 4), {{Rational(1, 3), Rational(0)}, {Rational(1, 3), Rational(1, 4)}}});
  auto r = validate_gl(c);
  EXPECT_TRUE(r.has("a_lt_b"));
  EXPECT_TRUE(r.has("cell_overlap"));
  EXPECT_TRUE(r.has("row_overlap"));
}

TEST(ValidateBaranski, Examples) {
  BaranskiCarpet ok{{Rational(1, 2), Rational(1, 2)}, {Rational(1, 2), Rational(1, 2)}, {{0, 0}, {1, 1}}};
  EXPECT_TRUE(validate_baranski(ok).ok());
  BaranskiCarpet bad_sum{{Rational(1, 3), Rational(1, 3)}, {Rational(1, 2), Rational(1, 2)}, {{0, 0}}};
  auto r = validate_baranski(bad_sum);
  EXPECT_TRUE(r.has("sum_a"));
  EXPECT_NE(r.summary().find("Σa_i ≠ 1"), std::string::npos);
  BaranskiCarpet out_of_range{{Rational(1, 2), Rational(1, 2)}, {Rational(1, 2), Rational(1, 2)}, {{2, 0}}};
  auto r2 = validate_baranski(out_of_range);
  EXPECT_TRUE(r2.has("index_range"));
  EXPECT_NE(r2.summary().find("index out of range"), std::string::npos);
}

TEST(AsMaps, UniformStandardLayout) {
  auto maps = as_maps(catalog::uniform_grid(Rational(1, 4), Rational(1, 2), 2, 2));
  ASSERT_EQ(maps.size(), 4u);
  for (const auto& f : maps) {
    EXPECT_EQ(f.x_scale, Rational(1, 4));
    EXPECT_EQ(f.y_scale, Rational(1, 2));
  }
}

TEST(AsMaps, BaranskiPrefixSums) {
  BaranskiCarpet c{{Rational(1, 4), Rational(1, 2), Rational(1, 4)}, {Rational(1, 2), Rational(1, 2)}, {{0, 0}, {2, 0}}};
  auto maps = as_maps(c);
  ASSERT_EQ(maps.size(), 2u);
  EXPECT_EQ(maps[1].x_offset, Rational(3, 4));
  EXPECT_EQ(maps[1].y_offset, Rational(0));
}

TEST(AsMaps, GLCountIsSumOfRowSizes) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto c = testsupport::random_gl(rng, 3);
    EXPECT_EQ(as_maps(c).size(), c.map_count());
  }
}

TEST(AsMaps, InvalidCarpetRejected) {
  GLCarpet c;
  c.rows.push_back({Rational(1, 2), Rational(0), {{Rational(1, 2), Rational(0)}}});
  EXPECT_THROW(as_maps(c), PreconditionError);
}

TEST(CarpetProperties, MapsRevalidateAndHaveDisjointInteriors) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    auto c = canonical(testsupport::random_gl(rng, 1 + trial % 3));
    ASSERT_TRUE(validate_gl(c).ok());
    auto maps = as_maps(c);
    auto back = gl_from_maps(maps);
    ASSERT_TRUE(back.has_value());
    EXPECT_TRUE(*back == c);
    for (std::size_t i = 0; i < maps.size(); ++i)
      for (std::size_t j = i + 1; j < maps.size(); ++j) EXPECT_TRUE(interiors_disjoint(maps[i], maps[j]));
    auto bk = testsupport::random_baranski(rng, 6);
    auto bmaps = as_maps(bk);
    for (std::size_t i = 0; i < bmaps.size(); ++i)
      for (std::size_t j = i + 1; j < bmaps.size(); ++j) EXPECT_TRUE(interiors_disjoint(bmaps[i], bmaps[j]));
  }
}

TEST(CarpetIO, RoundTripIsBitExact) {
  std::mt19937_64 rng(3);
  std::vector<Carpet> carpets = {catalog::uniform_grid(Rational(1, 3), Rational(1, 2), 2, 2),
                                 catalog::cantor_product(Rational(1, 4), Rational(1, 3)),
                                 testsupport::random_gl(rng, 3)};
  for (const auto& c : carpets) {
    std::string text = serialize_carpet(c);
    Carpet back = parse_carpet(text);
    EXPECT_EQ(serialize_carpet(back), text);
    EXPECT_EQ(serialize_carpet(parse_carpet(serialize_carpet(back))), text);
  }
}

TEST(CarpetIO, CanonicalOrderOnParse) {
  const char* text = R"({"type":"gatzouras-lalley","rows":[
    {"b":"1/2","d":"1/2","cells":[{"a":"1/4","c":"3/4"},{"a":"1/4","c":"0"}]},
    {"b":"1/2","d":"0","cells":[{"a":"1/4","c":"0"}]}]})";
  auto c = std::get<GLCarpet>(parse_carpet(text));
  EXPECT_EQ(c.rows[0].d, Rational(0));
  EXPECT_EQ(c.rows[1].cells[0].c, Rational(0));
}

TEST(CarpetIO, MalformedInputsCarryLocation) {
  try {
    parse_carpet("{\n  \"type\": \"uniform\",\n  \"a\": 1/3\n}");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
    EXPECT_GT(e.column(), 0u);
  }
  EXPECT_THROW(parse_carpet(R"({"type":"uniform","a":"1/0","b":"1/2","m":1,"n":1,"row_offsets":["0"],"cell_offsets":[["0"]]})"),
               ParseError);
  EXPECT_THROW(parse_carpet(R"({"type":"hexagonal"})"), ParseError);
}
