#include <doctest.h>

#include <fstream>

#include "fixtures.hpp"
#include "sexism_alert/common.hpp"
#include "sexism_alert/text.hpp"

using namespace sexism_alert;
using namespace std::chrono;

TEST_CASE("rfc3339 round trip") {
  const Timestamp t = parse_rfc3339("2023-01-20T10:15:30Z");
  CHECK(format_rfc3339(t) == "2023-01-20T10:15:30Z");
  CHECK(parse_rfc3339("2023-01-20T12:15:30+02:00") == t);
  CHECK(parse_rfc3339("2023-01-20T10:15:30.250Z") - t == milliseconds(250));
  CHECK(format_rfc3339(t + milliseconds(250)) == "2023-01-20T10:15:30.250Z");
  CHECK_THROWS_AS(parse_rfc3339("20 January 2023"), Error);
  CHECK_THROWS_AS(parse_rfc3339("2023-13-01T00:00:00Z"), Error);
  CHECK_THROWS_AS(parse_rfc3339(""), Error);
}

TEST_CASE("jsonl io") {
  fixtures::TempDir dir;
  const auto path = dir / "x.jsonl";
  write_jsonl(path, {{{"a", 1}}, {{"a", "ñ"}}});
  auto rows = read_jsonl(path);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1]["a"] == "ñ");

  {
    std::ofstream out(path);
    out << "{\"a\":1}\n\n{broken\n";
  }
  try {
    read_jsonl(path);
    FAIL("expected a parse error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kParse);
    CHECK(std::string(e.what()).find(":3") != std::string::npos);
  }
  CHECK_THROWS_AS(read_jsonl(dir / "missing.jsonl"), Error);
}

TEST_CASE("normalize_text") {
  // "é" as e + combining acute composes to U+00E9.
  CHECK(normalize_text("  cafe\xCC\x81 \n") == "caf\xC3\xA9");
  CHECK(normalize_text("Hola 😀") == "Hola 😀");
  CHECK(normalize_text("MAYÚSCULAS") == "MAYÚSCULAS");
  CHECK(is_blank(" \t\n"));
  CHECK(is_blank("\xC2\xA0"));  // no-break space
  CHECK_FALSE(is_blank(" x "));
  CHECK_THROWS_AS(normalize_text("bad \xFF byte"), Error);
}

TEST_CASE("tokenize") {
  const auto tokens = tokenize("¡Qué MUJER tan histérica!! 😀");
  const std::vector<std::string> expected{"¡", "qué", "mujer", "tan", "histérica", "!", "!",
                                          "😀"};
  CHECK(tokens == expected);
  CHECK(tokenize("").empty());
  CHECK(tokenize("cafe\xCC\x81") == std::vector<std::string>{"cafe\xCC\x81"});
}

TEST_CASE("keyed_hash") {
  CHECK(keyed_hash("E5-1", 1) == keyed_hash("E5-1", 1));
  CHECK(keyed_hash("E5-1", 1) != keyed_hash("E5-1", 2));
  CHECK(keyed_hash("E5-1", 1) != keyed_hash("E5-2", 1));
}
