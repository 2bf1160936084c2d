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

// purcellnet: filter sweeps, Purcell limits, spectrum and reset fits, readout
// statistics. Each run writes resolved-config.json next to its output.

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "purcell/purcell.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace purcell;

namespace {

constexpr const char *kVersion = "0.1.0";
constexpr int kExitInput = 2;
constexpr int kExitNumerical = 3;

// Numerical failure that should still leave its output on disk.
struct NumericalFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Kind { text, integer, number, path };

struct OptSpec {
    std::string name;
    Kind kind;
    json fallback;  // null = unset
    std::string help;
};

// One subcommand: its option table, the raw flag strings and the runner.
struct Command {
    std::string name, help;
    std::vector<OptSpec> opts;
    std::map<std::string, std::string> raw;
    CLI::App *app = nullptr;
    std::string config_path;
};

// Resolved settings for a run: defaults, then the config file, then flags.
class Settings {
  public:
    explicit Settings(json values) : v_(std::move(values)) {
    }
    bool has(const std::string &k) const {
        return v_.contains(k) && !v_.at(k).is_null();
    }
    std::string text(const std::string &k) const {
        if (!has(k)) throw InputError("missing required option --" + k);
        return v_.at(k).get<std::string>();
    }
    double number(const std::string &k) const {
        if (!has(k)) throw InputError("missing required option --" + k);
        return v_.at(k).get<double>();
    }
    std::uint64_t integer(const std::string &k) const {
        if (!has(k)) throw InputError("missing required option --" + k);
        return v_.at(k).get<std::uint64_t>();
    }
    std::optional<double> maybe_number(const std::string &k) const {
        return has(k) ? std::optional<double>(number(k)) : std::nullopt;
    }
    const json &values() const {
        return v_;
    }
    void set(const std::string &k, json v) {
        v_[k] = std::move(v);
    }

  private:
    json v_;
};

json convert(const OptSpec &o, const std::string &s) {
    switch (o.kind) {
    case Kind::integer: {
        std::uint64_t x = 0;
        const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
        if (ec != std::errc{} || end != s.data() + s.size())
            throw InputError("--" + o.name + ": '" + s + "' is not a non-negative integer");
        return x;
    }
    case Kind::number: {
        const auto x = parse_number(s);
        if (!x || !std::isfinite(*x)) throw InputError("--" + o.name + ": '" + s + "' is not a number");
        return *x;
    }
    case Kind::path:
        return fs::absolute(s).lexically_normal().string();
    case Kind::text:
        break;
    }
    return s;
}

json check_config_value(const OptSpec &o, const json &v) {
    if (v.is_null()) return v;
    if (o.kind == Kind::integer && !v.is_number_unsigned())
        throw InputError("config key '" + o.name + "' must be a non-negative integer");
    if (o.kind == Kind::number && !v.is_number())
        throw InputError("config key '" + o.name + "' must be a number");
    if ((o.kind == Kind::text || o.kind == Kind::path) && !v.is_string())
        throw InputError("config key '" + o.name + "' must be a string");
    return v;
}

Settings resolve(const Command &c) {
    json out = json::object();
    for (const auto &o : c.opts) out[o.name] = o.fallback;
    if (!c.config_path.empty()) {
        std::ifstream in(c.config_path);
        if (!in) throw InputError("cannot open config '" + c.config_path + "'");
        json file;
        try {
            file = json::parse(in);
        } catch (const json::exception &e) {
            throw InputError("config '" + c.config_path + "': " + e.what());
        }
        if (!file.is_object()) throw InputError("config must be a JSON object");
        if (file.contains("command") && file.at("command") != c.name)
            throw InputError("config was written for '" + file.at("command").get<std::string>() + "', not '" +
                             c.name + "'");
        const json &opts = file.contains("options") ? file.at("options") : file;
        for (const auto &[k, v] : opts.items()) {
            if (k == "command" || k == "version") continue;
            const auto it = std::find_if(c.opts.begin(), c.opts.end(), [&](const auto &o) { return o.name == k; });
            if (it == c.opts.end()) throw InputError("config key '" + k + "' is not an option of " + c.name);
            out[k] = check_config_value(*it, v);
        }
    }
    for (const auto &o : c.opts)
        if (c.app->count("--" + o.name)) out[o.name] = convert(o, c.raw.at(o.name));
    return Settings(out);
}

void write_resolved(const Command &c, const Settings &s, const fs::path &out) {
    const fs::path dir = out.has_parent_path() ? out.parent_path() : fs::path(".");
    std::ofstream f(dir / "resolved-config.json", std::ios::binary);
    if (!f) throw InputError("cannot write resolved-config.json in '" + dir.string() + "'");
    f << json{{"command", c.name}, {"version", kVersion}, {"options", s.values()}}.dump(2) << '\n';
}

std::ofstream open_out(const fs::path &p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream f(p, std::ios::binary);
    if (!f) throw InputError("cannot write '" + p.string() + "'");
    return f;
}

fs::path sibling(const fs::path &p, const std::string &ext) {
    fs::path q = p;
    q.replace_extension(ext);
    return q;
}

std::pair<double, double> parse_ghz_range(const std::string &name, const std::string &s) {
    const auto colon = s.find(':');
    if (colon == std::string::npos) throw InputError("--" + name + " expects <ghz>:<ghz>, got '" + s + "'");
    const auto a = parse_number(s.substr(0, colon));
    const auto b = parse_number(s.substr(colon + 1));
    if (!a || !b) throw InputError("--" + name + ": cannot read '" + s + "'");
    return {*a * 1e9, *b * 1e9};
}

FrequencySweep sweep_from(const Settings &s) {
    const auto [lo, hi] = parse_ghz_range("band", s.text("band"));
    FrequencySweep band;
    band.start_hz = lo;
    band.stop_hz = hi;
    band.points = static_cast<std::size_t>(s.integer("points"));
    const auto sp = s.text("spacing");
    if (sp == "linear") band.spacing = Spacing::linear;
    else if (sp == "log") band.spacing = Spacing::log;
    else throw InputError("unknown spacing '" + sp + "' (expected linear or log)");
    band.validate();
    return band;
}

void require_format(const Settings &s, std::initializer_list<const char *> allowed) {
    const auto f = s.text("format");
    for (const char *a : allowed)
        if (f == a) return;
    std::string list;
    for (const char *a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
    throw InputError("--format '" + f + "' not supported here (use " + list + ")");
}

FilterGeometry geometry_from(const Settings &s) {
    if (s.has("geometry")) return load_geometry(s.text("geometry"));
    return preset_geometry(s.text("preset"));
}

void write_json(const fs::path &p, const json &j) {
    auto f = open_out(p);
    f << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// spectrum

int run_spectrum(const Settings &s) {
    require_format(s, {"csv", "touchstone"});
    const auto band = sweep_from(s);
    Netlist net = s.has("netlist") ? load_netlist(s.text("netlist"))
                                   : build_netlist(geometry_from(s), parse_variant(s.text("variant")));
    const auto ports = terminated_ports(net);
    if (ports.size() < 2)
        throw InputError("S21 needs two ports with a reference impedance, found " + std::to_string(ports.size()));
    const auto pts = sweep(net, band, [](const Netlist &n, double f) { return s_parameters(n, f); });

    const fs::path out = s.text("out");
    auto f = open_out(out);
    CsvWriter w(f);
    w.header({"f_hz", "s21_re", "s21_im", "s21_db", "singular"});
    std::size_t singular = 0;
    for (const auto &p : pts) {
        if (!p.value) {
            ++singular;
            const double nan = std::numeric_limits<double>::quiet_NaN();
            w.row({p.frequency_hz, nan, nan, nan, 1.0});
            continue;
        }
        const cplx s21 = p.value->s(1, 0);
        const double mag = std::abs(s21);
        const double db = mag > 0 ? std::max(kDbFloor, 20.0 * std::log10(mag)) : kDbFloor;
        w.row({p.frequency_hz, s21.real(), s21.imag(), db, 0.0});
    }

    if (s.text("format") == "touchstone") {
        TouchstoneData ts;
        ts.ports = static_cast<int>(ports.size());
        ts.z_ref = net.port(ports[0]).z_ref.value();
        for (const auto &name : ports)
            if (*net.port(name).z_ref != ts.z_ref)
                throw InputError("Touchstone output needs equal reference impedances on all ports");
        for (const auto &p : pts)
            if (p.value) {
                ts.frequencies.push_back(p.frequency_hz);
                ts.s.push_back(p.value->s);
            }
        auto tf = open_out(sibling(out, ".s" + std::to_string(ts.ports) + "p"));
        write_touchstone(tf, ts);
    }
    if (singular) std::cerr << "purcellnet: warning: " << singular << " singular frequencies flagged\n";
    return 0;
}

// ---------------------------------------------------------------------------
// tp

int run_tp(const Settings &s) {
    require_format(s, {"csv", "svg"});
    const auto band = sweep_from(s);
    const auto geom = geometry_from(s);
    const auto c = tp_curve(geom, parse_variant(s.text("variant")), band, parse_method(s.text("method")));
    const fs::path out = s.text("out");
    {
        auto f = open_out(out);
        write_tp_csv(f, c);
    }
    if (s.text("format") == "svg") {
        SvgSeries ser{to_string(c.variant), {}, {}};
        for (std::size_t i = 0; i < c.size(); ++i) {
            ser.x.push_back(c.frequencies[i] / 1e9);
            ser.y.push_back(c.tp[i]);
        }
        auto f = open_out(sibling(out, ".svg"));
        write_svg_lines(f, {ser}, {"Purcell limit", "frequency (GHz)", "T_p (s)", true});
    }
    std::size_t gaps = 0;
    for (auto fl : c.flags) gaps += fl == TpFlag::gap;
    const double total = total_band_above(c, 1e-3);
    std::cout << "band with T_p >= 1 ms: " << format_number(total / 1e6) << " MHz\n";
    if (gaps) std::cerr << "purcellnet: warning: " << gaps << " singular frequencies flagged\n";
    return 0;
}

// ---------------------------------------------------------------------------
// fit-s21

int run_fit_s21(const Settings &s) {
    require_format(s, {"json"});
    const auto data = load_spectrum(s.text("data"));
    const auto n = static_cast<std::size_t>(s.integer("resonators"));
    SpectrumData win;
    if (s.has("window")) {
        const auto [lo, hi] = parse_ghz_range("window", s.text("window"));
        if (!(hi > lo)) throw InputError("--window must be increasing");
        win = data.window(lo, hi);
        if (win.size() < 10) throw InputError("window holds fewer than 10 points");
    } else {
        // +-10 guessed linewidths around the detected mode.
        const auto g = auto_initial_guess(data, n);
        win = data.window(g.omega_f - 10.0 * g.kappa_f, g.omega_f + 10.0 * g.kappa_f);
        if (win.size() < 10) win = data;
    }
    const auto init = auto_initial_guess(win, n);
    LeastSquaresOptions opt;
    opt.max_iterations = static_cast<int>(s.integer("max-iterations"));
    const auto r = fit_s21(win, init, opt);
    json j = to_json(r);
    j["window_hz"] = {win.frequencies.front(), win.frequencies.back()};
    j["points"] = win.size();
    write_json(s.text("out"), j);
    if (!r.converged) throw NumericalFailure("fit did not converge: " + r.status);
    return 0;
}

// ---------------------------------------------------------------------------
// reset

ResetParams reset_params_from(const Settings &s, const std::string &fallback_preset) {
    ResetParams p;
    if (s.has("params")) {
        std::ifstream in(s.text("params"));
        if (!in) throw InputError("cannot open '" + s.text("params") + "'");
        json j;
        try {
            j = json::parse(in);
        } catch (const json::exception &e) {
            throw InputError("'" + s.text("params") + "': " + e.what());
        }
        p = reset_params_from_json(j);
    } else {
        const auto name = s.has("preset") ? s.text("preset") : fallback_preset;
        if (name == "eg") p = reference::kEgReset;
        else if (name == "fe") p = reference::kFeReset;
        else throw InputError("unknown reset preset '" + name + "' (expected eg or fe)");
    }
    if (auto g = s.maybe_number("g-mhz")) p.g_qf = *g * 1e6;
    if (auto k = s.maybe_number("kappa-mhz")) p.kappa_f = *k * 1e6;
    if (auto fl = s.maybe_number("floor")) p.p_exc_ss = *fl;
    p.validate();
    return p;
}

int run_reset(const Settings &s) {
    const auto mode = s.text("mode");
    const fs::path out = s.text("out");
    if (mode == "evaluate") {
        const auto p = reset_params_from(s, "eg");
        const auto n = static_cast<std::size_t>(s.integer("points"));
        const double t_max = s.number("t-max-ns") * 1e-9;
        if (n < 1 || !(t_max >= 0.0)) throw InputError("need points >= 1 and t-max-ns >= 0");
        ResetCurve c;
        for (std::size_t i = 0; i < n; ++i) {
            const double t = n == 1 ? 0.0 : t_max * static_cast<double>(i) / static_cast<double>(n - 1);
            c.times.push_back(t);
            c.p_e.push_back(residual_excitation(p, t));
        }
        {
            auto f = open_out(out);
            write_reset_curve_csv(f, c);
        }
        const double thr = s.number("threshold");
        const double t = time_to_threshold(p, thr);
        std::cout << "regime " << to_string(classify_regime(p)) << ", last crossing of " << format_number(thr)
                  << " at " << format_number(t * 1e9) << " ns\n";
        return 0;
    }
    if (mode == "fit") {
        const auto c = load_reset_curve(s.text("curve"));
        const auto r = fit_reset_curve(c.times, c.p_e);
        json j = to_json(r);
        try {
            j["time_to_threshold_s"] = time_to_threshold(r.params, s.number("threshold"));
        } catch (const UnreachableError &) {
            j["time_to_threshold_s"] = nullptr;
        }
        write_json(out, j);
        if (!r.converged) throw NumericalFailure("reset fit did not converge: " + r.status);
        return 0;
    }
    if (mode == "cascade" || mode == "lru") {
        const auto initial = parse_state(s.text("initial"));
        const double t_f = s.number("t-f-ns") * 1e-9;
        json j;
        if (mode == "lru") {
            const auto fe = reset_params_from(s, "fe");
            const auto pops = lru_evaluate(t_f, fe, initial);
            j = {{"populations", to_json(pops)}, {"fe", to_json(fe)}};
        } else {
            // Cascade takes the f-e and e-g presets; --floor etc. do not apply.
            CascadeSchedule sch;
            sch.t_rst_f = t_f;
            sch.t_rst_e = s.number("t-e-ns") * 1e-9;
            sch.qubit = reference::kQubit;
            ResetParams fe = reference::kFeReset, eg = reference::kEgReset;
            if (s.has("params")) {
                std::ifstream in(s.text("params"));
                if (!in) throw InputError("cannot open '" + s.text("params") + "'");
                json pj;
                try {
                    pj = json::parse(in);
                } catch (const json::exception &e) {
                    throw InputError("'" + s.text("params") + "': " + e.what());
                }
                if (!pj.contains("fe") || !pj.contains("eg"))
                    throw InputError("cascade parameters need 'fe' and 'eg' objects");
                fe = reset_params_from_json(pj.at("fe"));
                eg = reset_params_from_json(pj.at("eg"));
            }
            const auto pops = cascade_evaluate(sch, fe, eg, initial);
            j = {{"populations", to_json(pops)}, {"schedule", to_json(sch)}, {"fe", to_json(fe)}, {"eg", to_json(eg)}};
        }
        j["total_duration_s"] = j["populations"]["duration_s"];
        write_json(out, j);
        return 0;
    }
    throw InputError("unknown reset mode '" + mode + "' (expected evaluate, fit, cascade or lru)");
}

// ---------------------------------------------------------------------------
// readout

int run_readout(const Settings &s) {
    require_format(s, {"json", "svg"});
    const auto set = load_shots(s.text("shots"));
    const auto blobs = fit_blobs(set, s.number("trim-sigma"), static_cast<std::size_t>(s.integer("min-shots")));
    const auto m = assignment_matrix(set, blobs);
    const auto e = error_breakdown(m, blobs);
    json jb = json::object();
    for (const auto &[label, b] : blobs) jb[label] = to_json(b);
    json j = {{"blobs", jb}, {"assignment", to_json(m)}, {"errors", to_json(e)}};
    // Binomial standard error of each measured epsilon.
    json se = json::object();
    for (std::size_t k = 0; k < e.labels.size(); ++k) {
        const double eps = e.epsilon[k];
        se[e.labels[k]] = std::sqrt(eps * (1.0 - eps) / static_cast<double>(m.counts[k]));
    }
    j["epsilon_std_error"] = se;
    if (s.has("f-eg-ghz") && blobs.contains("g") && blobs.contains("e")) {
        try {
            j["effective_temperature_k"] = effective_temperature(m.at("g", "e"), m.at("g", "g"), s.number("f-eg-ghz") * 1e9);
        } catch (const std::domain_error &ex) {
            j["effective_temperature_k"] = nullptr;
            std::cerr << "purcellnet: warning: no effective temperature: " << ex.what() << '\n';
        }
    }
    if (s.has("t1-us") && s.has("tau-m-us"))
        j["t1_error_bound"] = t1_error_bound(s.number("t1-us") * 1e-6, s.number("tau-m-us") * 1e-6);
    const fs::path out = s.text("out");
    write_json(out, j);
    if (s.text("format") == "svg") {
        auto f = open_out(sibling(out, ".svg"));
        write_svg_scatter(f, set, blobs);
    }
    for (const auto &w : e.warnings) std::cerr << "purcellnet: warning: " << w << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// synth

int run_synth(const Settings &s) {
    const auto kind = s.text("kind");
    const auto seed = s.integer("seed");
    const fs::path out = s.text("out");
    auto f = open_out(out);
    if (kind == "mode-a" || kind == "mode-b") {
        const auto p = kind == "mode-a" ? reference::mode_a() : reference::mode_b();
        const auto n = s.has("points") ? static_cast<std::size_t>(s.integer("points"))
                                       : (kind == "mode-a" ? reference::kModeAPoints : reference::kModeBPoints);
        const double noise = s.has("noise") ? s.number("noise") : reference::kNoiseDb;
        write_spectrum_csv(f, synthesize_spectrum(p, reference::probe_grid(p, n), noise, seed));
    } else if (kind == "reset-eg" || kind == "reset-fe") {
        const auto p = kind == "reset-eg" ? reference::kEgReset : reference::kFeReset;
        const double noise = s.has("noise") ? s.number("noise") : reference::kCurveNoise;
        write_reset_curve_csv(f, synthesize_reset_curve(p, reference::curve_times(), noise, seed));
    } else if (kind == "readout") {
        auto gen = reference_generator(seed);
        if (s.has("points")) gen.shots_per_state = static_cast<std::size_t>(s.integer("points"));
        write_shots_csv(f, synthesize_readout(gen));
    } else {
        throw InputError("unknown fixture kind '" + kind + "' (mode-a, mode-b, reset-eg, reset-fe, readout)");
    }
    return 0;
}

// ---------------------------------------------------------------------------
// export

int run_export(const Settings &s) {
    const auto what = s.text("what");
    const auto geom = geometry_from(s);
    if (what == "geometry") write_json(s.text("out"), to_json(geom));
    else if (what == "netlist") write_json(s.text("out"), to_json(build_netlist(geom, parse_variant(s.text("variant")))));
    else throw InputError("unknown export '" + what + "' (expected geometry or netlist)");
    return 0;
}

// ---------------------------------------------------------------------------

std::vector<OptSpec> sweep_opts(const char *points, const char *out) {
    return {{"band", Kind::text, "3:7", "sweep band in GHz, <start>:<stop>"},
            {"points", Kind::integer, std::stoull(points), "number of sweep points"},
            {"spacing", Kind::text, "linear", "linear or log"},
            {"out", Kind::path, out, "output file"}};
}

std::vector<OptSpec> operator+(std::vector<OptSpec> a, const std::vector<OptSpec> &b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

const OptSpec kSeed{"seed", Kind::integer, 0, "seed for synthetic generators"};
const OptSpec kPreset{"preset", Kind::text, "default", "filter preset (default, mid_tap)"};
const OptSpec kVariant{"variant", Kind::text, "with_stub", "with_stub or without_stub"};

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"purcellnet: transmission-line Purcell filter design and readout analysis"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::vector<Command> cmds;
    cmds.push_back({"spectrum", "S21 of a netlist or preset filter",
                    sweep_opts("4001", "spectrum.csv") +
                        std::vector<OptSpec>{{"netlist", Kind::path, nullptr, "netlist JSON"},
                                             {"geometry", Kind::path, nullptr, "filter geometry JSON"},
                                             kPreset, kVariant,
                                             {"format", Kind::text, "csv", "csv or touchstone (CSV plus .sNp)"},
                                             kSeed}});
    cmds.push_back({"tp", "Purcell-limited lifetime T_p over a band",
                    sweep_opts("2001", "tp.csv") +
                        std::vector<OptSpec>{{"geometry", Kind::path, nullptr, "filter geometry JSON"},
                                             kPreset, kVariant,
                                             {"method", Kind::text, "full_admittance", "full_admittance or output_power"},
                                             {"format", Kind::text, "csv", "csv or svg (CSV plus plot)"},
                                             kSeed}});
    cmds.push_back({"fit-s21", "fit the filter-mode transmission model",
                    {{"data", Kind::path, nullptr, "spectrum CSV (f_hz, s21_db) or .s2p"},
                     {"window", Kind::text, nullptr, "fit window in GHz, <lo>:<hi>"},
                     {"resonators", Kind::integer, 0, "number of coupled readout resonators"},
                     {"max-iterations", Kind::integer, 500, "iteration cap"},
                     {"out", Kind::path, "fit.json", "output JSON"},
                     {"format", Kind::text, "json", "json"},
                     kSeed}});
    cmds.push_back({"reset", "residual excitation, reset fits, cascade and leakage reduction",
                    {{"mode", Kind::text, "evaluate", "evaluate, fit, cascade or lru"},
                     {"preset", Kind::text, nullptr, "reset parameters: eg or fe"},
                     {"params", Kind::path, nullptr, "reset parameter JSON (cascade: {fe, eg})"},
                     {"curve", Kind::path, nullptr, "measured curve CSV (t_seconds, p_e) for fit"},
                     {"g-mhz", Kind::number, nullptr, "override g_qf / 2pi in MHz"},
                     {"kappa-mhz", Kind::number, nullptr, "override kappa_f / 2pi in MHz"},
                     {"floor", Kind::number, nullptr, "override steady-state excitation"},
                     {"threshold", Kind::number, 0.01, "reset threshold"},
                     {"t-max-ns", Kind::number, 1000.0, "evaluate: curve length"},
                     {"points", Kind::integer, 1001, "evaluate: curve points"},
                     {"t-f-ns", Kind::number, 64.0, "f-e stage duration"},
                     {"t-e-ns", Kind::number, 242.0, "e-g stage duration"},
                     {"initial", Kind::text, "f", "initial state g, e or f"},
                     {"out", Kind::path, nullptr, "output file"},
                     kSeed}});
    cmds.push_back({"readout", "assignment matrix and error budget from IQ shots",
                    {{"shots", Kind::path, nullptr, "shots CSV (label, i, q)"},
                     {"trim-sigma", Kind::number, kDefaultTrimSigma, "core radius for blob fits"},
                     {"min-shots", Kind::integer, kMinShotsPerLabel, "minimum shots per label"},
                     {"f-eg-ghz", Kind::number, nullptr, "qubit frequency for the effective temperature"},
                     {"t1-us", Kind::number, nullptr, "T1 for the decay bound"},
                     {"tau-m-us", Kind::number, nullptr, "measurement time for the decay bound"},
                     {"out", Kind::path, "readout.json", "output JSON"},
                     {"format", Kind::text, "json", "json or svg (JSON plus scatter)"},
                     kSeed}});
    cmds.push_back({"synth", "write a synthetic fixture",
                    {{"kind", Kind::text, nullptr, "mode-a, mode-b, reset-eg, reset-fe or readout"},
                     {"points", Kind::integer, nullptr, "samples (shots per state for readout)"},
                     {"noise", Kind::number, nullptr, "noise level (dB for spectra, population for curves)"},
                     {"out", Kind::path, nullptr, "output file"},
                     {"seed", Kind::integer, 1, "generator seed"}}});
    cmds.push_back({"export", "write a preset's geometry or netlist as JSON",
                    {kPreset, kVariant,
                     {"geometry", Kind::path, nullptr, "filter geometry JSON"},
                     {"what", Kind::text, "geometry", "geometry or netlist"},
                     {"out", Kind::path, nullptr, "output JSON"},
                     kSeed}});

    for (auto &c : cmds) {
        c.app = app.add_subcommand(c.name, c.help);
        c.app->add_option("--config", c.config_path, "JSON config; flags override its values");
        for (const auto &o : c.opts) {
            std::string help = o.help;
            if (!o.fallback.is_null()) help += " [" + (o.fallback.is_string() ? o.fallback.get<std::string>() : o.fallback.dump()) + "]";
            c.app->add_option("--" + o.name, c.raw[o.name], help);
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitInput;
    }

    const std::map<std::string, int (*)(const Settings &)> runners = {
        {"spectrum", run_spectrum}, {"tp", run_tp},       {"fit-s21", run_fit_s21}, {"reset", run_reset},
        {"readout", run_readout},   {"synth", run_synth}, {"export", run_export}};

    for (auto &c : cmds) {
        if (!c.app->parsed()) continue;
        std::optional<Settings> s;
        try {
            s = resolve(c);
            if (c.name == "reset" && !s->has("out"))
                s->set("out", convert({"out", Kind::path, nullptr, ""},
                                      s->text("mode") == "evaluate" ? "reset.csv" : "reset.json"));
            int rc = 0;
            try {
                rc = runners.at(c.name)(*s);
            } catch (const NumericalFailure &e) {
                std::cerr << "purcellnet: " << e.what() << '\n';
                rc = kExitNumerical;
            } catch (const UnreachableError &e) {
                std::cerr << "purcellnet: " << e.what() << '\n';
                rc = kExitNumerical;
            }
            write_resolved(c, *s, s->text("out"));
            return rc;
        } catch (const InputError &e) {
            std::cerr << "purcellnet: error: " << e.what() << '\n';
            return kExitInput;
        } catch (const SingularNetworkError &e) {
            std::cerr << "purcellnet: " << e.what() << '\n';
            return kExitNumerical;
        } catch (const json::exception &e) {
            std::cerr << "purcellnet: error: " << e.what() << '\n';
            return kExitInput;
        } catch (const std::exception &e) {
            std::cerr << "purcellnet: internal error: " << e.what() << '\n';
            return 1;
        }
    }
    return kExitInput;
}
