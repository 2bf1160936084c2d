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

#include "purcell/purcell_model.hpp"

using namespace purcell;
using Catch::Approx;

namespace {

std::vector<std::size_t> local_maxima(const TpCurve &c, double lo, double hi) {
    std::vector<std::size_t> out;
    for (std::size_t i = 1; i + 1 < c.size(); ++i)
        if (c.frequencies[i] >= lo && c.frequencies[i] <= hi && c.flags[i] == TpFlag::ok &&
            c.tp[i] > c.tp[i - 1] && c.tp[i] > c.tp[i + 1])
            out.push_back(i);
    return out;
}

}  // namespace

TEST_CASE("geometry validation and presets", "[purcell_model]") {
    const auto g = default_geometry();
    CHECK_NOTHROW(g.validate());
    CHECK(g.l_p1 / g.total_length() == Approx(0.01));
    CHECK(g.l_p3 == Approx(kDefaultPhaseVelocity / (4 * 5e9)).epsilon(1e-15));

    const auto mid = preset_geometry("mid_tap");
    CHECK(mid.l_p1 / mid.total_length() == Approx(0.39));
    CHECK(mid.total_length() == Approx(g.total_length()).epsilon(1e-15));
    CHECK(mid.l_p3 == g.l_p3);
    CHECK_THROWS_AS(preset_geometry("nope"), InputError);

    auto bad = g;
    bad.c_qr = 0.0;
    CHECK_THROWS_AS(bad.validate(), InputError);
    bad = g;
    bad.l_p2 = -1e-3;
    CHECK_THROWS_AS(bad.validate(), InputError);
    bad = g;
    bad.l_p1 = bad.l_p2 = bad.l_p3 = 0.0;
    CHECK_THROWS_AS(bad.validate(), InputError);
    CHECK_THROWS_AS(g.with_tap_ratio(0.9), InputError);
}

TEST_CASE("geometry JSON overrides a preset", "[purcell_model]") {
    const auto g = geometry_from_json(nlohmann::json::parse(R"({"preset": "mid_tap", "c_q": 80e-15})"));
    CHECK(g.c_q == 80e-15);
    CHECK(g.l_p1 == preset_geometry("mid_tap").l_p1);
    const auto back = geometry_from_json(to_json(g));
    CHECK(to_json(back) == to_json(g));
    CHECK_THROWS_AS(geometry_from_json(nlohmann::json::parse(R"({"c_q": "big"})")), InputError);
    CHECK_THROWS_AS(geometry_from_json(nlohmann::json::parse(R"({"c_q": -1})")), InputError);
}

TEST_CASE("netlist construction", "[purcell_model]") {
    const auto g = default_geometry();
    for (auto v : {Variant::with_stub, Variant::without_stub}) {
        const auto net = build_netlist(g, v);
        CHECK(net.ports().size() == 3);
        CHECK(net.port("in").terminated());
        CHECK(net.port("out").terminated());
        CHECK_FALSE(net.port("qubit").terminated());
    }
    // A stub of zero length is the stubless filter.
    auto folded = g;
    folded.l_p2 += folded.l_p3;
    folded.l_p3 = 0.0;
    CHECK(to_json(build_netlist(folded, Variant::with_stub)) ==
          to_json(build_netlist(g, Variant::without_stub)));
    CHECK(to_json(build_netlist(folded, Variant::without_stub)) ==
          to_json(build_netlist(g, Variant::without_stub)));

    CHECK(parse_variant("without_stub") == Variant::without_stub);
    CHECK_THROWS_AS(parse_variant("stubby"), InputError);
}

TEST_CASE("fundamental transmission peak of the default filter", "[purcell_model]") {
    const auto net = build_netlist(default_geometry(), Variant::with_stub);
    double best = 0.0, f_best = 0.0;
    for (double f = 3.0e9; f <= 4.5e9; f += 0.5e6) {
        const double s = std::abs(filter_s21(net, f));
        if (s > best) best = s, f_best = f;
    }
    CHECK(f_best > 3.5e9);
    CHECK(f_best < 3.7e9);
}

TEST_CASE("closed-form transfer impedance", "[purcell_model]") {
    auto g = default_geometry();
    CHECK(std::abs(z23_closed_form(g, 5e9).value()) < 1e-12 * g.line.z0);
    auto tap = g.with_tap_ratio(0.2);
    const double f1 = tap.line.v_phase / (4 * tap.l_p1);
    CHECK(std::abs(z23_closed_form(tap, f1).value()) < 1e-12 * g.line.z0);
    const double f_pole = g.line.v_phase / (2 * g.total_length());
    CHECK(z23_closed_form(g, f_pole).is_pole());
    CHECK_THROWS_AS(z23_closed_form(g, 0.0), InputError);
}

TEST_CASE("property: closed form equals the nodal solution of the bare line", "[purcell_model][property]") {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> fd(1e9, 8e9), ratio(0.0, 0.6);
    int compared = 0;
    for (int geo = 0; geo < 5; ++geo) {
        const auto g = default_geometry().with_tap_ratio(geo == 0 ? 0.01 : ratio(rng));
        const auto net = build_bare_line_netlist(g);
        for (int i = 0; i < 100; ++i) {
            const double f = fd(rng);
            const double bl = propagation_constant(f, g.line.v_phase) * g.total_length();
            if (std::abs(std::sin(bl)) < 1e-6) continue;
            const auto closed = z23_closed_form(g, f);
            const auto num = transfer_impedance(net, "out", "qubit", f);
            REQUIRE_FALSE(num.is_pole());
            const double scale = std::max(std::abs(closed.value()), 1e-3 * g.line.z0);
            REQUIRE(std::abs(closed.value() - num.value()) / scale < 1e-9);
            ++compared;
        }
    }
    CHECK(compared >= 490);
}

TEST_CASE("notch placement", "[purcell_model]") {
    const auto g = default_geometry();
    const auto n = notch_frequencies(g, 1e9, 8e9);
    REQUIRE(n.size() == 1);
    CHECK(n[0].family == NotchFamily::stub);
    CHECK(n[0].frequency_hz == Approx(5e9).epsilon(1e-15));
    for (const auto &x : notch_frequencies(g, 1e9, 20e9))
        CHECK(x.family == NotchFamily::stub);

    const auto mid = preset_geometry("mid_tap");
    bool found = false;
    for (const auto &x : notch_frequencies(mid, 1e9, 8e9)) {
        if (x.family == NotchFamily::input_segment) {
            found = true;
            CHECK(std::abs(x.frequency_hz - 4.2e9) < 0.5e9);
        }
        CHECK(std::abs(z23_closed_form(mid, x.frequency_hz).value()) < 1e-9 * mid.line.z0);
    }
    CHECK(found);

    auto list = notch_frequencies(mid, 1e9, 30e9);
    CHECK(std::is_sorted(list.begin(), list.end(),
                         [](const Notch &a, const Notch &b) { return a.frequency_hz < b.frequency_hz; }));
    CHECK(notch_frequencies(g, 5.1e9, 5.2e9).empty());
    CHECK_THROWS_AS(notch_frequencies(g, 2e9, 1e9), InputError);
}

TEST_CASE("Purcell-limited lifetime of the default filter", "[purcell_model]") {
    const auto g = default_geometry();
    const FrequencySweep band{3e9, 8e9, 2001};
    const auto with = tp_curve(g, Variant::with_stub, band);
    const auto without = tp_curve(g, Variant::without_stub, band);

    const auto run = band_above(with, 1e-3, 5e9);
    REQUIRE(run.has_value());
    CHECK(run->second - run->first >= 800e6);

    const auto net_with = build_netlist(g, Variant::with_stub);
    const auto net_without = build_netlist(g, Variant::without_stub);
    const double tp_notch = g.c_q / re_y(net_with, 5e9, ReYMethod::full_admittance);
    const double tp_notch_without = g.c_q / re_y(net_without, 5e9, ReYMethod::full_admittance);
    CHECK(tp_notch >= 1.0);
    CHECK(tp_notch / tp_notch_without >= 100.0);

    for (std::size_t i = 0; i < without.size(); ++i)
        if (without.frequencies[i] >= 4.5e9 && without.frequencies[i] <= 5.5e9)
            REQUIRE(without.tp[i] < 30e-6);

    // Interference maximum between the fundamental and the readout mode.
    CHECK_FALSE(local_maxima(with, 3.7e9, 6.4e9).empty());
}

TEST_CASE("mid-tap filter adds the input-segment peak", "[purcell_model]") {
    const auto mid = preset_geometry("mid_tap");
    const auto c = tp_curve(mid, Variant::with_stub, {3e9, 8e9, 2001});
    const auto peaks = local_maxima(c, 3.7e9, 4.7e9);
    REQUIRE_FALSE(peaks.empty());
    CHECK(std::abs(c.frequencies[peaks.front()] - 4.2e9) < 0.5e9);
    CHECK(total_band_above(c, 1e-3) > 1.5e9);

    const auto def = tp_curve(default_geometry(), Variant::with_stub, {3e9, 8e9, 2001});
    CHECK(local_maxima(def, 3.7e9, 4.7e9).empty());
}

TEST_CASE("output-power method tracks the full admittance", "[purcell_model]") {
    const auto net = build_netlist(default_geometry(), Variant::with_stub);
    for (double f : {3.3e9, 4.0e9, 4.6e9, 5.4e9, 6.3e9, 7.5e9}) {
        const double full = re_y(net, f, ReYMethod::full_admittance);
        const double out = re_y(net, f, ReYMethod::output_power);
        // The output port carries most, not all, of the loss; the input port takes the rest.
        CHECK(out <= full * (1 + 1e-9));
        CHECK(out >= 0.0);
    }
    CHECK(parse_method("output_power") == ReYMethod::output_power);
    CHECK_THROWS_AS(parse_method("magic"), InputError);
}

TEST_CASE("lossless environment is above the ceiling", "[purcell_model]") {
    Netlist net;
    net.add_node("q");
    net.add_node("x");
    net.add_capacitor("Cq", "q", kGround, 90e-15);
    net.add_capacitor("Cc", "q", "x", 5e-15);
    net.add_tline("TL", "x", kGround, {50.0, kDefaultPhaseVelocity, 5e-3});
    net.add_port("qubit", "q");
    const auto c = tp_curve(net, 90e-15, {4e9, 6e9, 51}, ReYMethod::full_admittance);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(c.flags[i] != TpFlag::ok);
    CHECK(std::count(c.flags.begin(), c.flags.end(), TpFlag::above_ceiling) >= 50);
}

TEST_CASE("singular points become gaps", "[purcell_model]") {
    // The stub is a half wave at twice its notch frequency: its stamp is undefined.
    const auto g = default_geometry();
    const auto net = build_netlist(g, Variant::with_stub);
    const double f_half = g.line.v_phase / (2 * g.l_p3);
    const auto c = tp_curve(net, g.c_q, {f_half, f_half, 1}, ReYMethod::full_admittance);
    REQUIRE(c.size() == 1);
    CHECK(c.flags[0] == TpFlag::gap);
    CHECK(std::isnan(c.tp[0]));
}

TEST_CASE("property: joint rescaling of frequency and geometry", "[purcell_model][property]") {
    const auto g = default_geometry();
    for (double s : {0.5, 2.0, 3.7}) {
        auto h = g;
        h.l_p1 /= s, h.l_p2 /= s, h.l_p3 /= s, h.resonator.length /= s;
        h.c_in /= s, h.c_out /= s, h.c_qf /= s, h.c_qr /= s, h.c_fr /= s, h.c_q /= s;
        const auto a = tp_curve(g, Variant::with_stub, {3e9, 8e9, 101});
        const auto b = tp_curve(h, Variant::with_stub, {3e9 * s, 8e9 * s, 101});
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (a.flags[i] != TpFlag::ok) continue;
            REQUIRE(b.tp[i] * s == Approx(a.tp[i]).epsilon(1e-7));
        }
    }
}

TEST_CASE("bands and CSV export", "[purcell_model]") {
    TpCurve c;
    c.frequencies = {1, 2, 3, 4, 5, 6};
    c.tp = {1, 5, 5, 1, 5, 1};
    c.flags = std::vector<TpFlag>(6, TpFlag::ok);
    c.flags[5] = TpFlag::above_ceiling;
    const auto runs = bands_above(c, 2.0);
    REQUIRE(runs.size() == 2);
    CHECK(runs[0] == std::pair<double, double>{2, 3});
    CHECK(runs[1] == std::pair<double, double>{5, 6});
    CHECK(total_band_above(c, 2.0) == 2.0);
    CHECK(band_above(c, 2.0, 2.9)->second == 3.0);
    CHECK_FALSE(band_above(c, 2.0, 4.0).has_value());

    std::ostringstream out;
    write_tp_csv(out, c);
    CHECK(out.str().rfind("f_hz,tp_seconds,ceiling_flag\n1,1,0\n", 0) == 0);
}

TEST_CASE("single-mode Purcell rate", "[purcell_model]") {
    CHECK(single_mode_purcell_rate(0.0, 20.2e6, 2e9) == 0.0);
    CHECK(single_mode_purcell_rate(50e6, 20.2e6, 4e9) ==
          Approx(single_mode_purcell_rate(50e6, 20.2e6, 2e9) / 4).epsilon(1e-15));
    const double gamma = single_mode_purcell_rate(50e6, 20.2e6, 2e9);
    CHECK(gamma == Approx(12625.0).epsilon(1e-12));
    CHECK(1.0 / (kTwoPi * gamma) == Approx(12.6e-6).epsilon(2e-3));
    CHECK_THROWS_AS(single_mode_purcell_rate(1e6, 1e6, 0.0), std::domain_error);
}
