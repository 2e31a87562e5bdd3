#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "cgt/csv.hpp"

using namespace cgt;

TEST_CASE("price csv parses date,price[,rate] with strict header") {
    std::istringstream in("date,price,rate\n2020-01-01,100.0,0.02\n2020-01-02,101.5,0.021\n");
    const auto s = read_price_csv(in);
    REQUIRE(s.size() == 2);
    CHECK(s.dates[0] == "2020-01-01");
    CHECK(s.prices[1] == 101.5);
    REQUIRE(s.has_rates());
    CHECK(s.rates[1] == 0.021);
}

TEST_CASE("price csv without rate column yields no rates") {
    std::istringstream in("date,price\n2020-01-01,100\n2020-01-02,99.5\n");
    const auto s = read_price_csv(in);
    REQUIRE(s.size() == 2);
    CHECK_FALSE(s.has_rates());
}

TEST_CASE("price csv tolerates CRLF line endings") {
    std::istringstream in("date,price\r\n2020-01-01,100\r\n2020-01-02,99.5\r\n");
    const auto s = read_price_csv(in);
    REQUIRE(s.size() == 2);
    CHECK(s.prices[1] == 99.5);
}

TEST_CASE("price csv errors name the offending row") {
    SECTION("bad header") {
        std::istringstream in("time,close\n2020-01-01,100\n");
        CHECK_THROWS_AS(read_price_csv(in), std::invalid_argument);
    }
    SECTION("missing price field") {
        std::istringstream in("date,price\n2020-01-01,100\n2020-01-02,\n");
        CHECK_THROWS_WITH(read_price_csv(in), Catch::Matchers::ContainsSubstring("2020-01-02"));
    }
    SECTION("non-numeric price") {
        std::istringstream in("date,price\n2020-01-01,abc\n");
        CHECK_THROWS_WITH(read_price_csv(in), Catch::Matchers::ContainsSubstring("2020-01-01"));
    }
    SECTION("non-positive price") {
        std::istringstream in("date,price\n2020-01-01,100\n2020-01-02,0\n");
        CHECK_THROWS_WITH(read_price_csv(in), Catch::Matchers::ContainsSubstring("2020-01-02"));
    }
    SECTION("out-of-order dates") {
        std::istringstream in("date,price\n2020-01-02,100\n2020-01-01,101\n");
        CHECK_THROWS_AS(read_price_csv(in), std::invalid_argument);
    }
}

TEST_CASE("return csv round-trips exactly") {
    ReturnSeries rs;
    rs.dates = {"2020-01-02", "2020-01-03", "2020-01-06"};
    rs.returns = {0.001234567890123, -0.25, std::log(1.1)};
    std::ostringstream out;
    write_return_csv(rs, out);

    std::istringstream in(out.str());
    const auto back = read_return_csv(in);
    REQUIRE(back.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(back.dates[i] == rs.dates[i]);
        CHECK(back.returns[i] == rs.returns[i]);  // bitwise: shortest round-trip formatting
    }
}

TEST_CASE("return csv requires its own header") {
    std::istringstream in("date,price\n2020-01-01,0.01\n");
    CHECK_THROWS_AS(read_return_csv(in), std::invalid_argument);
}
