// Copyright 2026 The purcellnet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <sstream>

#include "purcell/csv.hpp"
#include "purcell/touchstone.hpp"

using namespace purcell;
using Catch::Approx;

namespace {

TouchstoneData parse(const std::string &text, int ports) {
    std::istringstream in(text);
    return parse_touchstone(in, ports);
}

}  // namespace

TEST_CASE("port count from file name", "[touchstone]") {
    CHECK(touchstone_ports_from_name("a/b/filter.s2p") == 2);
    CHECK(touchstone_ports_from_name("X.S3P") == 3);
    CHECK(touchstone_ports_from_name("net.s12p") == 12);
    CHECK(touchstone_ports_from_name("spectrum.csv") == 0);
    CHECK(touchstone_ports_from_name("noext") == 0);
    CHECK(touchstone_ports_from_name("odd.sxp") == 0);
}

TEST_CASE("two-port column order and formats", "[touchstone]") {
    const auto ri = parse("! comment\n# MHz S RI R 75\n"
                          "100  0.1 0.0  0.2 0.0  0.3 0.0  0.4 0.0\n"
                          "200  0.1 0.1  0.2 0.2  0.3 0.3  0.4 0.4 ! trailing\n",
                          2);
    REQUIRE(ri.frequencies.size() == 2);
    CHECK(ri.z_ref == 75.0);
    CHECK(ri.frequencies[0] == 100e6);
    CHECK(ri.s[0](0, 0) == cplx(0.1));
    CHECK(ri.s[0](1, 0) == cplx(0.2));  // S21 is the second pair
    CHECK(ri.s[0](0, 1) == cplx(0.3));
    CHECK(ri.s[0](1, 1) == cplx(0.4));

    const auto ma = parse("# Hz S MA\n1e9 1 0 0.5 90 0.5 90 1 180\n", 2);
    CHECK(ma.z_ref == 50.0);
    CHECK(std::abs(ma.s[0](1, 0) - cplx(0.0, 0.5)) < 1e-15);
    CHECK(std::abs(ma.s[0](1, 1) - cplx(-1.0, 0.0)) < 1e-15);

    const auto db = parse("# GHZ S DB R 50\n5 -20 0 -6.0206 -45 -6.0206 -45 0 0\n", 2);
    CHECK(db.frequencies[0] == 5e9);
    CHECK(std::abs(db.s[0](0, 0)) == Approx(0.1).epsilon(1e-12));
    CHECK(std::abs(db.s[0](1, 0)) == Approx(0.5).epsilon(1e-5));
    CHECK(std::arg(db.s[0](1, 0)) == Approx(-std::numbers::pi / 4).epsilon(1e-12));

    // Default options are GHz and MA.
    const auto def = parse("1 0.5 0\n", 1);
    CHECK(def.frequencies[0] == 1e9);
    CHECK(def.s[0](0, 0) == cplx(0.5));
}

TEST_CASE("multi-port records span lines in row-major order", "[touchstone]") {
    const auto d = parse("# GHZ S RI R 50\n"
                         "1 11 0 12 0 13 0\n"
                         "  21 0 22 0 23 0\n"
                         "  31 0 32 0 33 0\n",
                         3);
    REQUIRE(d.s.size() == 1);
    for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) CHECK(d.s[0](j, k).real() == 10.0 * (j + 1) + (k + 1));
}

TEST_CASE("malformed touchstone input", "[touchstone]") {
    CHECK_THROWS_AS(parse("# GHZ Z RI R 50\n1 1 0\n", 1), InputError);
    CHECK_THROWS_AS(parse("# GHZ S RI R fifty\n1 1 0\n", 1), InputError);
    CHECK_THROWS_AS(parse("# GHZ S XY\n1 1 0\n", 1), InputError);
    CHECK_THROWS_AS(parse("1 1 0 2\n", 1), InputError);
    CHECK_THROWS_AS(parse("1 1 abc\n", 1), InputError);
    CHECK_THROWS_AS(parse("2 1 0\n1 1 0\n", 1), InputError);
    CHECK_THROWS_AS(parse("1 1 0\n", 0), InputError);
    try {
        parse("# GHZ S RI\n1 1 0\n2 1 0\n2 1 0\n", 1);
        FAIL("expected an error");
    } catch (const InputError &e) {
        CHECK(std::string(e.what()).find("line 4") != std::string::npos);
    }
}

TEST_CASE("property: touchstone write then read is lossless", "[touchstone][property]") {
    std::mt19937_64 rng(41);
    std::normal_distribution<double> g(0.0, 0.4);
    for (int ports : {1, 2, 3, 4, 5}) {
        TouchstoneData d;
        d.ports = ports;
        d.z_ref = 50.0;
        for (int i = 0; i < 7; ++i) {
            d.frequencies.push_back(1e9 + 1.234567e8 * i);
            CMatrix s(ports, ports);
            for (int j = 0; j < ports; ++j)
                for (int k = 0; k < ports; ++k) s(j, k) = cplx(g(rng), g(rng));
            d.s.push_back(s);
        }
        std::stringstream io;
        write_touchstone(io, d);
        const auto back = parse_touchstone(io, ports);
        REQUIRE(back.frequencies.size() == d.frequencies.size());
        for (std::size_t i = 0; i < d.frequencies.size(); ++i) {
            REQUIRE(back.frequencies[i] == Approx(d.frequencies[i]).epsilon(1e-15));
            REQUIRE(back.s[i] == d.s[i]);
        }
    }
}

TEST_CASE("csv helpers", "[csv]") {
    CHECK(format_number(0.1) == "0.1");
    CHECK(format_number(-2.5e-17) == "-2.5e-17");
    CHECK(format_number(std::numeric_limits<double>::quiet_NaN()) == "nan");
    CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
    CHECK(parse_number(" 3.25 ").value() == 3.25);
    CHECK(parse_number("1e-3").value() == 1e-3);
    CHECK_FALSE(parse_number("abc").has_value());
    CHECK_FALSE(parse_number("1.5x").has_value());
    CHECK_FALSE(parse_number("").has_value());

    std::istringstream in("# comment\nfrequency_hz,s21_db\n\n1e9,-3\n2e9 , -4.5\n");
    const auto t = parse_csv(in);
    REQUIRE(t.header.size() == 2);
    CHECK(t.header[1] == "s21_db");
    REQUIRE(t.rows.size() == 2);
    CHECK(t.number(t.rows[1], 1) == -4.5);
    CHECK(t.rows[1].line == 5);
    CHECK_THROWS_AS(t.number(t.rows[0], 2), InputError);

    std::istringstream labelled("g,0.1,0.2\ne,1,2\n");
    const auto lt = parse_csv(labelled, true);
    CHECK(lt.header.empty());
    CHECK(lt.rows.size() == 2);

    std::istringstream bad("1,2\n3,oops\n");
    const auto bt = parse_csv(bad);
    try {
        bt.number(bt.rows[1], 1);
        FAIL("expected an error");
    } catch (const InputError &e) {
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }

    std::ostringstream out;
    CsvWriter w(out);
    w.header({"a", "b"});
    w.row({1.0, 0.25});
    CHECK(out.str() == "a,b\n1,0.25\n");
}
