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

#include <array>
#include <random>

#include "purcell/network.hpp"
#include "support/network_helpers.hpp"

using namespace purcell;
using purcell::testing::ladder_abcd;
using purcell::testing::random_netlist;
using Catch::Approx;

namespace {

double rel(cplx a, cplx b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace

TEST_CASE("netlist validation", "[netlist]") {
    Netlist net;
    net.add_node("a");
    net.add_capacitor("C1", "a", "b", 1e-15);
    CHECK_THROWS_AS(net.validate(), InputError);

    Netlist floating;
    floating.add_node("a");
    floating.add_node("b");
    floating.add_capacitor("C1", "a", "b", 1e-15);
    CHECK_THROWS_AS(floating.validate(), InputError);

    Netlist neg;
    neg.add_node("a");
    neg.add_resistor("R", "a", kGround, -5.0);
    CHECK_THROWS_AS(neg.validate(), InputError);

    Netlist dup;
    dup.add_node("a");
    dup.add_resistor("R", "a", kGround, 5.0);
    dup.add_port("p", "a", 50.0).add_port("p", "a", 50.0);
    CHECK_THROWS_AS(dup.validate(), InputError);
}

TEST_CASE("netlist JSON round trip", "[netlist]") {
    std::mt19937_64 rng(3);
    const auto net = random_netlist(rng);
    const auto back = netlist_from_json(to_json(net));
    CHECK(to_json(back) == to_json(net));
    CHECK_THROWS_AS(netlist_from_json(nlohmann::json::parse(R"({"nodes": ["a"], "elements": [{"name": "x"}]})")),
                    InputError);
    CHECK_THROWS_AS(netlist_from_json(nlohmann::json::parse(
                        R"({"nodes": ["a"], "elements": [{"name": "x", "kind": "diode", "value": 1, "nodes": ["a", "gnd"]}]})")),
                    InputError);
}

TEST_CASE("admittance stamping", "[network]") {
    const double f = 1.3e9, w = kTwoPi * f;
    Netlist c1;
    c1.add_node("a");
    c1.add_capacitor("C", "a", kGround, 2e-12);
    const auto y1 = assemble_admittance(c1, f);
    REQUIRE(y1.rows() == 1);
    CHECK(rel(y1(0, 0), kJ * w * 2e-12) < 1e-15);

    // RC divider: in -R- out -C- gnd, hand stamped.
    Netlist rc;
    rc.add_node("in");
    rc.add_node("out");
    rc.add_resistor("R", "in", "out", 100.0);
    rc.add_capacitor("C", "out", kGround, 1e-12);
    const auto y = assemble_admittance(rc, f);
    const cplx g = 1.0 / 100.0, yc = kJ * w * 1e-12;
    CHECK(rel(y(0, 0), g) < 1e-15);
    CHECK(rel(y(0, 1), -g) < 1e-15);
    CHECK(rel(y(1, 0), -g) < 1e-15);
    CHECK(rel(y(1, 1), g + yc) < 1e-15);

    CHECK_THROWS_AS(assemble_admittance(rc, 0.0), InputError);

    std::mt19937_64 rng(99);
    for (int i = 0; i < 100; ++i) {
        const auto net = random_netlist(rng);
        const auto m = assemble_admittance(net, 2.7e9 + 1e7 * i);
        REQUIRE((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * m.cwiseAbs().maxCoeff());
    }
}

TEST_CASE("line stamp at a half-wave frequency is reported", "[network]") {
    Netlist net;
    net.add_node("a");
    net.add_node("b");
    net.add_tline("TL", "a", "b", {50.0, 1e8, 0.01});
    net.add_resistor("R", "b", kGround, 50.0);
    const double f_half = 1e8 / (2 * 0.01);
    CHECK_THROWS_AS(assemble_admittance(net, f_half), SingularNetworkError);
}

TEST_CASE("solve_ac basics", "[network]") {
    SECTION("Ohm's law") {
        Netlist net;
        net.add_node("a");
        net.add_resistor("R", "a", kGround, 75.0);
        net.add_port("src", "a");
        const auto sol = solve_ac(net, "src", 1e9);
        CHECK(rel(sol.source_current, 1.0 / 75.0) < 1e-14);
        CHECK(sol.kcl_residual < kKclTolerance);
    }
    SECTION("quarter-wave open stub shorts the source node") {
        const double f = 5e9, v = 1.19e8;
        Netlist net;
        net.add_node("s");
        net.add_node("x");
        net.add_node("e");
        net.add_resistor("Rs", "s", "x", 50.0);
        net.add_tline("stub", "x", "e", {50.0, v, v / (4 * f)});
        net.add_port("src", "s");
        const auto sol = solve_ac(net, "src", f);
        CHECK(std::abs(sol.voltage("x")) < 1e-10);
        CHECK(rel(sol.source_current, 1.0 / 50.0) < 1e-9);
    }
    SECTION("RC low-pass 3 dB point") {
        const double r = 1e3, c = 1e-12, f3 = 1.0 / (kTwoPi * r * c);
        Netlist net;
        net.add_node("in");
        net.add_node("out");
        net.add_resistor("R", "in", "out", r);
        net.add_capacitor("C", "out", kGround, c);
        net.add_port("src", "in");
        const auto sol = solve_ac(net, "src", f3);
        CHECK(std::abs(sol.voltage("out")) == Approx(1.0 / std::sqrt(2.0)).epsilon(1e-12));
    }
    SECTION("undamped tank resonance is a diagnosed singularity") {
        // src -C1- t, with L || C2 from t to ground: singular at 1/sqrt(L (C1 + C2)).
        const double c1 = 1e-12, c2 = 3e-12, l = 2e-9;
        const double f0 = 1.0 / (kTwoPi * std::sqrt(l * (c1 + c2)));
        Netlist net;
        net.add_node("s");
        net.add_node("t");
        net.add_capacitor("C1", "s", "t", c1);
        net.add_capacitor("C2", "t", kGround, c2);
        net.add_inductor("L", "t", kGround, l);
        net.add_port("src", "s");
        try {
            solve_ac(net, "src", f0);
            FAIL("expected a singular-network error");
        } catch (const SingularNetworkError &e) {
            CHECK(e.frequency_hz == f0);
            CHECK(std::string(e.what()).find("Hz") != std::string::npos);
        }
        CHECK_NOTHROW(solve_ac(net, "src", 1.1 * f0));
    }
}

TEST_CASE("transfer impedance and driving-point admittance", "[network]") {
    Netlist shared;
    shared.add_node("a");
    shared.add_resistor("R", "a", kGround, 33.0);
    shared.add_port("p", "a").add_port("q", "a");
    CHECK(rel(transfer_impedance(shared, "p", "q", 2e9).value(), 33.0) < 1e-14);

    Netlist cap;
    cap.add_node("a");
    cap.add_capacitor("C", "a", kGround, 5e-13);
    cap.add_port("p", "a");
    CHECK(rel(driving_point_admittance(cap, "p", 3e9), kJ * kTwoPi * 3e9 * 5e-13) < 1e-14);

    Netlist res;
    res.add_node("a");
    res.add_resistor("R", "a", kGround, 20.0);
    res.add_port("p", "a");
    const auto y = driving_point_admittance(res, "p", 3e9);
    CHECK(y.real() == Approx(0.05).epsilon(1e-14));
    CHECK(y.imag() == 0.0);
}

TEST_CASE("output-power estimate of Re Y", "[network]") {
    SECTION("source loaded directly by the output termination") {
        Netlist net;
        net.add_node("q");
        net.add_port("qubit", "q");
        net.add_port("out", "q", 50.0);
        net.add_capacitor("Cpar", "q", kGround, 1e-15);
        CHECK(re_y_via_output_power(net, "qubit", "out", 4e9) == Approx(1.0 / 50.0).epsilon(1e-14));
    }
    SECTION("decoupled output") {
        const double f = 5e9, v = 1.19e8;
        Netlist net;
        net.add_node("q");
        net.add_node("x");
        net.add_node("o");
        net.add_node("e");
        net.add_capacitor("Cq", "q", "x", 1e-15);
        net.add_tline("stub", "x", "e", {50.0, v, v / (4 * f)});
        net.add_capacitor("Co", "x", "o", 1e-14);
        net.add_port("qubit", "q");
        net.add_port("out", "o", 50.0);
        CHECK(re_y_via_output_power(net, "qubit", "out", f) < 1e-30);
    }
    SECTION("unterminated output is rejected") {
        Netlist net;
        net.add_node("q");
        net.add_resistor("R", "q", kGround, 1.0);
        net.add_port("qubit", "q");
        net.add_port("probe", "q");
        CHECK_THROWS_AS(re_y_via_output_power(net, "qubit", "probe", 1e9), InputError);
    }
}

TEST_CASE("s-parameters", "[network]") {
    SECTION("matched load") {
        Netlist net;
        net.add_node("a");
        net.add_resistor("R", "a", kGround, 50.0);
        net.add_port("p", "a", 50.0);
        CHECK(std::abs(s_parameters(net, 1e9).s(0, 0)) < 1e-14);
    }
    SECTION("open port") {
        Netlist net;
        net.add_node("a");
        net.add_node("b");
        net.add_capacitor("C", "a", "b", 1e-15);
        net.add_resistor("R", "b", kGround, 10.0);
        net.add_port("p", "a", 50.0);
        // Tiny series capacitor: nearly open. A port on a node that carries only
        // the termination is exactly open.
        CHECK(std::abs(s_parameters(net, 1e6).s(0, 0) - 1.0) < 1e-6);
        Netlist bare;
        bare.add_node("a");
        bare.add_port("p", "a", 50.0);
        CHECK(std::abs(s_parameters(bare, 1e9).s(0, 0) - 1.0) < 1e-15);
    }
    SECTION("agrees with the impedance-matrix conversion") {
        std::mt19937_64 rng(5);
        for (int i = 0; i < 50; ++i) {
            auto net = random_netlist(rng);
            const double f = 1.1e9 + 1.3e8 * i;
            const auto sp = s_parameters(net, f);
            const auto z = z_parameters(net, sp.ports, f);
            const auto n = z.rows();
            const CMatrix r = CMatrix::Identity(n, n) * 50.0;
            const CMatrix s_ref = (z - r) * (z + r).inverse();
            REQUIRE((sp.s - s_ref).cwiseAbs().maxCoeff() < 1e-9);
        }
    }
    SECTION("unequal references follow the power-wave definition") {
        Netlist net;
        net.add_node("a");
        net.add_node("b");
        net.add_resistor("R1", "a", "b", 30.0);
        net.add_capacitor("C", "b", kGround, 2e-12);
        net.add_port("p1", "a", 25.0);
        net.add_port("p2", "b", 75.0);
        const double f = 2e9;
        const auto sp = s_parameters(net, f);
        const auto z = z_parameters(net, sp.ports, f);
        Eigen::Matrix2cd rr = Eigen::Matrix2cd::Zero(), rs = Eigen::Matrix2cd::Zero(), ri = Eigen::Matrix2cd::Zero();
        rr(0, 0) = 25.0, rr(1, 1) = 75.0;
        rs(0, 0) = std::sqrt(25.0), rs(1, 1) = std::sqrt(75.0);
        ri(0, 0) = 1 / std::sqrt(25.0), ri(1, 1) = 1 / std::sqrt(75.0);
        const Eigen::Matrix2cd zz = z;
        const Eigen::Matrix2cd s_ref = ri * (zz - rr) * (zz + rr).inverse() * rs;
        CHECK((sp.s - s_ref).cwiseAbs().maxCoeff() < 1e-12);
    }
    SECTION("no terminated port") {
        Netlist net;
        net.add_node("a");
        net.add_resistor("R", "a", kGround, 1.0);
        net.add_port("probe", "a");
        CHECK_THROWS_AS(s_parameters(net, 1e9), InputError);
    }
}

TEST_CASE("property: reciprocity of Z and S", "[network][property]") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> fd(0.3e9, 9e9);
    int checked = 0;
    for (int i = 0; i < 100; ++i) {
        const auto net = random_netlist(rng);
        const double f = fd(rng);
        try {
            std::vector<std::string> names;
            for (const auto &p : net.ports()) names.push_back(p.name);
            const auto z = z_parameters(net, names, f);
            REQUIRE((z - z.transpose()).cwiseAbs().maxCoeff() <= 1e-9 * std::max(1.0, z.cwiseAbs().maxCoeff()));
            const auto s = s_parameters(net, f).s;
            REQUIRE((s - s.transpose()).cwiseAbs().maxCoeff() <= 1e-9);
            for (const auto &a : names)
                for (const auto &b : names)
                    REQUIRE(rel(transfer_impedance(net, a, b, f).value(), transfer_impedance(net, b, a, f).value()) <
                            1e-9);
            ++checked;
        } catch (const SingularNetworkError &) {
        }
    }
    CHECK(checked >= 95);
}

TEST_CASE("property: passivity", "[network][property]") {
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> fd(0.3e9, 9e9);
    for (int i = 0; i < 100; ++i) {
        const auto net = random_netlist(rng);
        const double f = fd(rng);
        try {
            for (const auto &p : net.ports()) REQUIRE(driving_point_admittance(net, p.name, f).real() >= -1e-12);
            const auto s = s_parameters(net, f).s;
            REQUIRE(s.cwiseAbs().maxCoeff() <= 1.0 + 1e-9);
            // Strictly: the largest singular value of S is at most one.
            REQUIRE(Eigen::JacobiSVD<CMatrix>(s).singularValues()(0) <= 1.0 + 1e-9);
        } catch (const SingularNetworkError &) {
        }
    }
}

TEST_CASE("property: transfer impedance matches the matrix inverse", "[network][property]") {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> fd(0.3e9, 9e9);
    for (int i = 0; i < 100; ++i) {
        const auto net = random_netlist(rng);
        const double f = fd(rng);
        CMatrix y;
        try {
            y = assemble_admittance(net, f);
        } catch (const SingularNetworkError &) {
            continue;
        }
        const CMatrix inv = y.inverse();
        const int a = net.node_index(net.port("p1").node), b = net.node_index(net.port("p2").node);
        const auto z = transfer_impedance(net, "p2", "p1", f);
        REQUIRE_FALSE(z.is_pole());
        REQUIRE(rel(z.value(), inv(b, a)) < 1e-10);
    }
}


TEST_CASE("property: exact line stamp is the limit of a fine LC ladder", "[network][property]") {
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 20; ++i) {
        const double z0 = 20 + 80 * u(rng), v = 1.19e8, len = (1 + 20 * u(rng)) * 1e-3;
        const double rl = 5 + 200 * u(rng);
        const double bl = 0.05 + 1.5 * u(rng);  // below pi/2
        const double f = bl * v / (kTwoPi * len);

        Netlist net;
        net.add_node("a");
        net.add_node("b");
        net.add_tline("TL", "a", "b", {z0, v, len});
        net.add_resistor("RL", "b", kGround, rl);
        net.add_port("in", "a");
        const cplx z_exact = 1.0 / driving_point_admittance(net, "in", f);

        const auto m = ladder_abcd(z0, v, len, f, 4096);
        const cplx z_ladder = (m[0] * rl + m[1]) / (m[2] * rl + m[3]);
        REQUIRE(rel(z_exact, z_ladder) < 1e-3);
    }
}

TEST_CASE("sweeps", "[network]") {
    FrequencySweep bad{2e9, 1e9, 11};
    CHECK_THROWS_AS(bad.frequencies(), InputError);
    FrequencySweep one{3e9, 3e9, 1};
    CHECK(one.frequencies() == std::vector<double>{3e9});
    FrequencySweep lg{1e9, 1e10, 3, Spacing::log};
    const auto f = lg.frequencies();
    CHECK(f[1] == Approx(std::sqrt(1e19)).epsilon(1e-12));

    // Singular points come back empty, in order.
    Netlist net;
    net.add_node("a");
    net.add_node("b");
    net.add_tline("TL", "a", "b", {50.0, 1e8, 0.01});
    net.add_resistor("R", "b", kGround, 50.0);
    net.add_port("p", "a");
    const auto pts = sweep(net, {4e9, 6e9, 3}, [](const Netlist &n, double fr) {
        return driving_point_admittance(n, "p", fr);
    });
    REQUIRE(pts.size() == 3);
    CHECK(pts[0].value.has_value());
    CHECK_FALSE(pts[1].value.has_value());
    CHECK(pts[1].frequency_hz == 5e9);
    CHECK(pts[2].value.has_value());
}
