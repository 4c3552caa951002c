#include "litsim/common.hpp"
#include "litsim/text.hpp"

#include <doctest.h>

using namespace litsim;

TEST_CASE("dates parse with optional time suffix and reject impossible days")
{
    CHECK(Date::parse("2021-03-04").to_string() == "2021-03-04");
    CHECK(Date::parse("2021-03-04T12:00:00Z") == Date(2021, 3, 4));
    CHECK(Date::parse("2021-03-04 08:15") == Date(2021, 3, 4));
    CHECK(Date::try_parse("2021-02-29") == std::nullopt);
    CHECK(Date::try_parse("2020-02-29").has_value());
    CHECK(Date::try_parse("2021-13-01") == std::nullopt);
    CHECK(Date::try_parse("21-03-04") == std::nullopt);
    CHECK(Date::try_parse("") == std::nullopt);
    CHECK_THROWS_AS(Date::parse("yesterday"), Error);
    CHECK(Date(2020, 1, 1) < Date(2020, 1, 2));
}

TEST_CASE("default window is inclusive at both ends")
{
    DateWindow w;
    CHECK(w.contains(Date(1990, 1, 1)));
    CHECK(w.contains(Date(2024, 12, 31)));
    CHECK_FALSE(w.contains(Date(1989, 12, 31)));
    CHECK_FALSE(w.contains(Date(2025, 1, 1)));
}

TEST_CASE("sha256 matches the published test vectors")
{
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("utf8 helpers count and cut on code point boundaries")
{
    const std::string s = "na\xC3\xAFve \xE2\x88\x91x";  // naïve ∑x
    CHECK(utf8_length(s) == 8);
    CHECK(utf8_truncate(s, 3) == "na\xC3\xAF");
    CHECK(utf8_truncate(s, 100) == s);
    CHECK(utf8_truncate(s, 0).empty());
    CHECK(trim("  a b \n") == "a b");
}

TEST_CASE("tokenizer lowercases, splits on punctuation and keeps digits")
{
    CHECK(text::tokenize("BM25 baselines, Self-Supervised!") ==
          std::vector<std::string>{"bm25", "baselines", "self", "supervised"});
    CHECK(text::tokenize("").empty());
    CHECK(text::tokenize("  ... ").empty());
    CHECK(text::tokenize("GPT-4o 2017") == std::vector<std::string>{"gpt", "4o", "2017"});
}

TEST_CASE("tokenizer folds non-ASCII letters and survives invalid bytes")
{
    const auto t = text::tokenize("\xC3\x89tude na\xC3\xAFve");
    REQUIRE(t.size() == 2);
    CHECK(t[0] == "\xC3\xA9tude");
    CHECK(text::tokenize("ok\xFF\xFEyes").size() >= 1);
    CHECK(text::tokenize("trunc\xE2\x88").size() >= 1);
}
