#include <doctest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "sgf/common/csv.hpp"
#include "sgf/common/digest.hpp"
#include "sgf/common/error.hpp"
#include "sgf/common/time.hpp"
#include "support/synthetic.hpp"

using namespace sgf;

TEST_CASE("csv reads quoted fields, doubled quotes and embedded newlines") {
  std::istringstream in("a,\"b,c\",\"say \"\"hi\"\"\"\r\n\"multi\nline\",,x\n");
  const auto rows = csv::read_all(in);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == csv::Row{"a", "b,c", "say \"hi\""});
  CHECK(rows[1] == csv::Row{"multi\nline", "", "x"});
}

TEST_CASE("csv write then read is the identity on random fields") {
  std::mt19937 rng(7);
  const std::string alphabet = "ab ,\"\n\r";
  for (int trial = 0; trial < 200; ++trial) {
    csv::Row row;
    const int n = 1 + int(rng() % 5);
    for (int i = 0; i < n; ++i) {
      std::string f;
      const int len = int(rng() % 6);
      for (int k = 0; k < len; ++k) f += alphabet[rng() % alphabet.size()];
      row.push_back(f);
    }
    // A lone empty field is written as an empty line, which readers skip.
    if (row.size() == 1 && row[0].empty()) row[0] = "x";
    std::ostringstream out;
    csv::write_row(out, row);
    std::istringstream in(out.str());
    const auto back = csv::read_row(in);
    REQUIRE(back.has_value());
    CHECK(*back == row);
  }
}

TEST_CASE("csv table column lookup") {
  std::istringstream in("\xEF\xBB\xBFid,label\n1,present\n");
  const auto t = csv::Table::parse(in);
  CHECK(t.column("id") == 0);
  CHECK(t.column("label") == 1);
  CHECK_FALSE(t.find_column("missing").has_value());
  CHECK_THROWS_AS(t.column("missing"), FormatError);
  CHECK(t.rows().size() == 1);
}

TEST_CASE("sha256 of known vectors") {
  CHECK(sha256_hex(std::string_view("")) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex(std::string_view("abc")) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  testing::TempDir dir("digest");
  { std::ofstream(dir / "f.txt") << "abc"; }
  CHECK(sha256_file(dir / "f.txt") == sha256_hex(std::string_view("abc")));
  const std::string abc = "abc";
  CHECK(digest64(std::as_bytes(std::span(abc.data(), abc.size()))) == 0xba7816bf8f01cfeaULL);
}

TEST_CASE("instants format and parse") {
  using namespace std::chrono;
  const Instant t = sys_days{2021y / 6 / 15} + 13h + 4min + 5s + 678ms;
  CHECK(format_instant(t) == "2021-06-15T13:04:05.678Z");
  CHECK(parse_instant("2021-06-15T13:04:05.678Z") == t);
  CHECK(parse_instant("2021-06-15 13:04:05.678") == t);
  CHECK(parse_instant("2021-06-15T13:04:05Z") == Instant(sys_days{2021y / 6 / 15} + 13h + 4min + 5s));
  CHECK_FALSE(parse_instant("yesterday").has_value());
  CHECK(format_date(2020y / 9 / 3) == "2020-09-03");
  CHECK(parse_date("2020-09-03") == year_month_day{2020y / 9 / 3});
  CHECK_FALSE(parse_date("2020-13-03").has_value());
}
