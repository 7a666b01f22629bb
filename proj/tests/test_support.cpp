#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "framebench/csv.hpp"
#include "framebench/errors.hpp"
#include "framebench/rng.hpp"

using namespace framebench;

TEST_CASE("rng streams are reproducible and seed-sensitive") {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) {
        const uint64_t x = a.next_u64();
        CHECK(x == b.next_u64());
    }
    bool any_diff = false;
    for (int i = 0; i < 10; ++i) any_diff |= (a.next_u64() != c.next_u64());
    CHECK(any_diff);
}

TEST_CASE("bounded draws stay in range and cover values") {
    Rng rng(1);
    std::set<uint64_t> seen;
    for (int i = 0; i < 2000; ++i) {
        const uint64_t v = rng.next_below(7);
        CHECK(v < 7);
        seen.insert(v);
    }
    CHECK(seen.size() == 7);
    CHECK(rng.next_below(1) == 0);
    CHECK(rng.next_below(0) == 0);
}

TEST_CASE("shuffle permutes without loss") {
    Rng rng(5);
    auto p = rng.permutation(50);
    std::set<size_t> s(p.begin(), p.end());
    CHECK(s.size() == 50);
    CHECK(*s.begin() == 0);
    CHECK(*s.rbegin() == 49);
}

TEST_CASE("derive_seed distinguishes tags") {
    CHECK(derive_seed(42, "a") != derive_seed(42, "b"));
    CHECK(derive_seed(42, "a") == derive_seed(42, "a"));
    CHECK(derive_seed(42, 1) != derive_seed(42, 2));
}

TEST_CASE("csv parses quoted fields, escapes, and embedded newlines") {
    const auto t = csv::parse("id,text,label\n1,\"a, \"\"quoted\"\" field\",AR01\n2,\"two\nlines\",\n");
    CHECK(t.delimiter == ',');
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0][1] == "a, \"quoted\" field");
    CHECK(t.rows[1][1] == "two\nlines");
    CHECK(t.rows[1][2].empty());
    CHECK(t.column("text") == size_t{1});
    CHECK(!t.column("missing").has_value());
    CHECK_THROWS_AS(t.require_column("missing"), SchemaError);
}

TEST_CASE("csv autodetects tab-delimited input") {
    const auto t = csv::parse("id\ttext\n1\thello, world\n");
    CHECK(t.delimiter == '\t');
    REQUIRE(t.rows.size() == 1);
    CHECK(t.rows[0][1] == "hello, world");
}

TEST_CASE("csv rejects ragged rows with a line number") {
    try {
        csv::parse("a,b\n1,2\n3\n");
        FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
        CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
}

TEST_CASE("csv round-trips awkward content byte-for-byte") {
    Rng rng(9);
    csv::Table t;
    t.header = {"id", "text"};
    const std::string alphabet = "ab,\"\n\r\téü ";
    for (int i = 0; i < 50; ++i) {
        std::string text;
        const size_t len = rng.next_below(30);
        for (size_t j = 0; j < len; ++j) text.push_back(alphabet[rng.next_below(alphabet.size())]);
        t.rows.push_back({std::to_string(i), text});
    }
    // Any field holding a delimiter, quote, or line break gets quoted on
    // write, so the round trip is byte-exact.
    const auto reparsed = csv::parse(csv::format(t), ',');
    REQUIRE(reparsed.rows.size() == t.rows.size());
    for (size_t i = 0; i < t.rows.size(); ++i) {
        CHECK(reparsed.rows[i][1] == t.rows[i][1]);
    }
}

TEST_CASE("csv file io") {
    const auto dir = std::filesystem::temp_directory_path() / "framebench_csv_test";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "t.csv").string();
    csv::Table t;
    t.header = {"x"};
    t.rows = {{"1"}};
    csv::write_file(path, t);
    const auto back = csv::read_file(path);
    CHECK(back.rows == t.rows);
    CHECK_THROWS_AS(csv::read_file((dir / "absent.csv").string()), IoError);
    std::filesystem::remove_all(dir);
}
