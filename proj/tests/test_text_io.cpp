#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "test_support.hpp"
#include "toxscreen/config.hpp"
#include "toxscreen/error.hpp"
#include "toxscreen/text_io.hpp"

using namespace toxscreen;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorKind::io;
}

}  // namespace

TEST(Csv, QuotesCommentsAndHeader) {
  const auto t = parse_csv("# hello\na,b,c\n1,\"x,y\",\"say \"\"hi\"\"\"\n\n# tail\n2,,z\n", "t");
  ASSERT_EQ(t.header, (std::vector<std::string>{"a", "b", "c"}));
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[0][1], "x,y");
  EXPECT_EQ(t.rows[0][2], "say \"hi\"");
  EXPECT_EQ(t.rows[1][1], "");
  EXPECT_EQ(t.comments.size(), 2u);
  EXPECT_EQ(t.column("c"), 2u);
  EXPECT_EQ(kind_of([&] { (void)t.column("zz"); }), ErrorKind::format);
}

TEST(Csv, RaggedRowIsFormatError) {
  EXPECT_EQ(kind_of([] { parse_csv("a,b\n1\n", "t"); }), ErrorKind::format);
  EXPECT_EQ(kind_of([] { parse_csv("a,b\n\"1,2\n", "t"); }), ErrorKind::format);
}

TEST(Csv, EscapeRoundTrip) {
  for (const std::string s : {"plain", "with,comma", "with \"quote\"", ""}) {
    const auto t = parse_csv("h\n" + csv_escape(s) + "\n", "t");
    if (s.empty()) {
      EXPECT_TRUE(t.rows.empty() || t.rows[0][0].empty());
    } else {
      EXPECT_EQ(t.rows.at(0).at(0), s);
    }
  }
}

TEST(FormatReal, RoundTripsExactly) {
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double v = rng.normal() * std::pow(10.0, rng.uniform(-30, 30));
    EXPECT_EQ(parse_real(format_real(v), "v"), v);
  }
  EXPECT_EQ(format_real(std::numeric_limits<double>::infinity()), "inf");
  EXPECT_EQ(format_real(-std::numeric_limits<double>::infinity()), "-inf");
  EXPECT_EQ(format_real(0.5), "0.5");
  EXPECT_EQ(kind_of([] { parse_real("1.5x", "v"); }), ErrorKind::format);
}

TEST(Fnv, KnownVectors) {
  EXPECT_EQ(fnv1a_hex(""), "cbf29ce484222325");
  EXPECT_EQ(fnv1a_hex("a"), "af63dc4c8601ec8c");
}

TEST(Config, TypedGettersAndUnknownKeys) {
  auto kv = KeyValueConfig::parse("# c\nepochs = 3\nlr = 1e-4\nflag = true\nlist = 1, 2,3\ntypo = 1\n", "cfg");
  EXPECT_EQ(kv.get_u64("epochs", 0), 3u);
  EXPECT_EQ(kv.get_real("lr", 0), 1e-4);
  EXPECT_TRUE(kv.get_bool("flag", false));
  EXPECT_EQ(kv.get_reals("list", {}), (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(kv.get_real("absent", 7.0), 7.0);
  EXPECT_EQ(kind_of([&] { kv.check_all_used(); }), ErrorKind::validation);
  (void)kv.get_u64("typo", 0);
  EXPECT_NO_THROW(kv.check_all_used());
}

TEST(Config, MalformedLines) {
  EXPECT_EQ(kind_of([] { KeyValueConfig::parse("novalue\n", "cfg"); }), ErrorKind::format);
  EXPECT_EQ(kind_of([] { KeyValueConfig::parse("a = 1\na = 2\n", "cfg"); }), ErrorKind::validation);
}

TEST(Files, MissingFileIsIoError) {
  EXPECT_EQ(kind_of([] { read_file("/nonexistent/toxscreen/file"); }), ErrorKind::io);
}

TEST(Errors, ExitCodes) {
  EXPECT_EQ(exit_code(ErrorKind::validation), 2);
  EXPECT_EQ(exit_code(ErrorKind::format), 2);
  EXPECT_EQ(exit_code(ErrorKind::numeric), 3);
  EXPECT_EQ(exit_code(ErrorKind::io), 4);
}
