#include <gtest/gtest.h>

#include "crisk/csv.hpp"
#include "crisk/dates.hpp"
#include "crisk/decimal.hpp"
#include "crisk/error.hpp"
#include "crisk/universe.hpp"
#include "support.hpp"

using namespace crisk;

TEST(Dates, ParsesAndFormatsCalendarDates) {
  const auto d = parse_date("2024-02-29");
  ASSERT_TRUE(d);
  EXPECT_EQ(format_date(*d), "2024-02-29");
  EXPECT_FALSE(parse_date("2023-02-29"));
  EXPECT_FALSE(parse_date("2023-13-01"));
  EXPECT_FALSE(parse_date("2023-1-01"));
  EXPECT_FALSE(parse_date("2023-01-01x"));
}

TEST(Dates, TimestampOffsetsNormalizeToUtc) {
  const auto z = parse_timestamp("2023-03-02T01:15:00Z");
  ASSERT_TRUE(z);
  EXPECT_EQ(parse_timestamp("2023-03-01 20:15:00-05:00"), z);
  EXPECT_EQ(parse_timestamp("2023-03-02T03:15:00+02:00"), z);
  EXPECT_EQ(parse_timestamp("2023-03-02T03:15:00+0200"), z);
  EXPECT_EQ(parse_timestamp("2023-03-02T01:15:00.75Z"), z);
  EXPECT_EQ(format_date(day_of(*parse_timestamp("2023-03-01 20:15:00-05:00"))), "2023-03-02");
  EXPECT_FALSE(parse_timestamp("2023-03-02T01:15:00"));
  EXPECT_FALSE(parse_timestamp("2023-03-02"));
}

TEST(Dates, MinusYearsClampsLeapDay) {
  EXPECT_EQ(format_date(minus_years(*parse_date("2024-02-29"), 1)), "2023-02-28");
  EXPECT_EQ(format_date(minus_years(*parse_date("2024-03-01"), 3)), "2021-03-01");
}

TEST(Csv, SplitsQuotedRecords) {
  std::vector<std::string> f;
  ASSERT_TRUE(csv::split_record(R"(a, "b,c" ,"d""e",)", f));
  ASSERT_EQ(f.size(), 4u);
  EXPECT_EQ(f[0], "a");
  EXPECT_EQ(f[1], "b,c");
  EXPECT_EQ(f[2], "d\"e");
  EXPECT_EQ(f[3], "");
  EXPECT_FALSE(csv::split_record(R"(a,"b)", f));
}

TEST(Csv, QuotesOnlyWhenNeeded) {
  EXPECT_EQ(csv::quote("plain"), "plain");
  EXPECT_EQ(csv::quote("a,b"), "\"a,b\"");
  EXPECT_EQ(csv::quote("say \"hi\""), "\"say \"\"hi\"\"\"");
}

TEST(Csv, NumbersRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 123456789.125, -2.5}) {
    double back = 0.0;
    ASSERT_TRUE(csv::parse_double(csv::format_number(v), back));
    EXPECT_EQ(back, v);
  }
  EXPECT_EQ(csv::format_number(-0.0), "0");
  double x = 0.0;
  EXPECT_FALSE(csv::parse_double("1.5x", x));
  EXPECT_FALSE(csv::parse_double("", x));
  EXPECT_TRUE(csv::parse_double("+2", x));
  EXPECT_EQ(x, 2.0);
}

TEST(Csv, ReaderReportsLineNumbers) {
  const auto dir = crisk::testing::scratch_dir("csv_reader");
  const auto path = crisk::testing::write_file(dir / "a.csv", "\xEF\xBB\xBFx,y\n1,2\n\n3\n");
  csv::Reader r(path, {"x", "y"});
  std::vector<std::string> f;
  ASSERT_TRUE(r.next(f));
  EXPECT_EQ(r.line(), 2u);
  try {
    (void)r.next(f);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 4u);
    EXPECT_EQ(e.kind(), ErrorKind::kParse);
  }
  EXPECT_THROW(csv::Reader(path, {"x", "z"}), ParseError);
  EXPECT_THROW(csv::Reader((dir / "missing.csv").string(), {"x"}), IoError);
}

TEST(TokenAmount, ParsesExactly) {
  const auto a = TokenAmount::parse("1.000000000000000001");
  ASSERT_TRUE(a);
  EXPECT_EQ(a->raw(), TokenAmount::kScale + 1);
  EXPECT_EQ(a->to_string(), "1.000000000000000001");
  EXPECT_EQ(TokenAmount::parse("-0.5")->to_string(), "-0.5");
  EXPECT_EQ(TokenAmount::parse("+3")->to_string(), "3");
  EXPECT_FALSE(TokenAmount::parse("0.0000000000000000001"));
  EXPECT_FALSE(TokenAmount::parse("1e3"));
  EXPECT_FALSE(TokenAmount::parse(""));
  EXPECT_FALSE(TokenAmount::parse("."));
}

TEST(TokenAmount, SumsWithoutDrift) {
  TokenAmount sum;
  const auto tenth = *TokenAmount::parse("0.1");
  for (int i = 0; i < 10; ++i) sum += tenth;
  EXPECT_EQ(sum, TokenAmount::from_integer(1));
  sum += -TokenAmount::from_integer(1);
  EXPECT_TRUE(sum.is_zero());
}

TEST(Universe, ParsesEntries) {
  std::istringstream in(
      "# demo\n"
      "symbols = BTC, ETH, USDC\n"
      "default_cap = 0.3\n"
      "ETH.cap = 0.5\n"
      "USDC.stablecoin = true\n"
      "BTC.launch_date = 2009-01-03\n"
      "ETH.eth_variant = yes\n");
  const UniverseConfig u = parse_universe(in, "demo");
  ASSERT_EQ(u.entries.size(), 3u);
  EXPECT_EQ(u.find("ETH")->rank, 2);
  EXPECT_DOUBLE_EQ(u.find("ETH")->cap, 0.5);
  EXPECT_DOUBLE_EQ(u.find("BTC")->cap, 0.3);
  EXPECT_TRUE(u.find("USDC")->stablecoin);
  EXPECT_TRUE(u.find("BTC")->launch_date.has_value());
  const auto caps = u.caps_for({"ETH", "XYZ"});
  EXPECT_DOUBLE_EQ(caps[0], 0.5);
  EXPECT_DOUBLE_EQ(caps[1], kDefaultCap);
}

TEST(Universe, RejectsUnknownSymbolKeys) {
  std::istringstream in("symbols = BTC\nETH.cap = 0.5\n");
  try {
    (void)parse_universe(in, "bad");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}
