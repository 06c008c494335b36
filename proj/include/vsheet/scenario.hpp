#pragma once

// Declarative scenario files: one human-editable `key = value` text file per
// experiment, comments carrying the units. Parsing and serialization
// round-trip exactly (serialize . parse . serialize is a fixed point).

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "vsheet/birkhoff_rott.hpp"
#include "vsheet/curve.hpp"
#include "vsheet/errors.hpp"

namespace vsheet {

struct MarkerSpec {
    double cx = 0, cy = 0, side = 0.2;
    int per_side = 8;
};

struct Scenario {
    std::string name = "unnamed";

    enum class CurveKind { Flat, Graph, Circle, Dumbbell, File };
    CurveKind kind = CurveKind::Flat;
    int n_points = 128;
    std::vector<GraphMode> modes; // graph curves
    double circle_radius = 1.0;
    Vec2 circle_center{0.0, 0.0};
    bool circle_ccw = true;
    double dumbbell_gap = 0.25;
    double dumbbell_scale = 1.0;
    std::string curve_file;

    enum class StrengthKind { Zero, Constant, Modes };
    StrengthKind strength_kind = StrengthKind::Zero;
    double strength_constant = 0.0;
    std::vector<GraphMode> strength_modes;

    SimConfig config;

    bool diag_energy = true;
    bool diag_chord_arc = true;
    bool diag_jump = true;
    bool diag_min_metric = false;
    bool diag_riccati = true;
    int probe_mode = 0;                           // 0 = off
    std::vector<std::pair<int, int>> tracked_pairs; // grid indices
    std::vector<MarkerSpec> markers;
    double contact_threshold = 0.0; // 0 = off
    double pair_window = 0.4;       // label half-width for vertical projections
};

// ---------------------------------------------------------------------------
// Parsing.

namespace detail {

inline std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline double parse_num(const std::string& s, const std::string& key) {
    try {
        size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (trim(s.substr(pos)).empty()) return v;
    } catch (...) {
    }
    throw ParseError("scenario: bad number for " + key + ": '" + s + "'");
}

inline int parse_int(const std::string& s, const std::string& key) {
    const double v = parse_num(s, key);
    if (v != std::floor(v)) throw ParseError("scenario: expected integer for " + key);
    return (int)v;
}

inline bool parse_flag(const std::string& s, const std::string& key) {
    if (s == "on" || s == "true" || s == "1") return true;
    if (s == "off" || s == "false" || s == "0") return false;
    throw ParseError("scenario: expected on/off for " + key + ": '" + s + "'");
}

inline std::vector<GraphMode> parse_modes(const std::string& s, const std::string& key) {
    std::vector<GraphMode> out;
    for (const auto& part : split(s, ',')) {
        const auto f = split(trim(part), ':');
        if (f.size() != 3) throw ParseError("scenario: " + key + " entry needs k:cos:sin");
        out.push_back({parse_int(f[0], key), parse_num(f[1], key), parse_num(f[2], key)});
    }
    return out;
}

} // namespace detail

inline Scenario parse_scenario(std::istream& is) {
    using namespace detail;
    Scenario sc;
    std::string line;
    int line_no = 0;
    bool saw_t_end = false;
    while (std::getline(is, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("scenario line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));

        if (key == "name") sc.name = val;
        else if (key == "curve") {
            if (val == "flat") sc.kind = Scenario::CurveKind::Flat;
            else if (val == "graph") sc.kind = Scenario::CurveKind::Graph;
            else if (val == "circle") sc.kind = Scenario::CurveKind::Circle;
            else if (val == "dumbbell") sc.kind = Scenario::CurveKind::Dumbbell;
            else if (val.rfind("file:", 0) == 0) {
                sc.kind = Scenario::CurveKind::File;
                sc.curve_file = trim(val.substr(5));
            } else throw ParseError("scenario: unknown curve kind '" + val + "'");
        }
        else if (key == "n_points") sc.n_points = parse_int(val, key);
        else if (key == "modes") sc.modes = parse_modes(val, key);
        else if (key == "circle_radius") sc.circle_radius = parse_num(val, key);
        else if (key == "circle_center") {
            const auto f = split(val, ':');
            if (f.size() != 2) throw ParseError("scenario: circle_center needs cx:cy");
            sc.circle_center = {parse_num(f[0], key), parse_num(f[1], key)};
        }
        else if (key == "circle_orientation") {
            if (val == "ccw") sc.circle_ccw = true;
            else if (val == "cw") sc.circle_ccw = false;
            else throw ParseError("scenario: circle_orientation must be ccw or cw");
        }
        else if (key == "dumbbell_gap") sc.dumbbell_gap = parse_num(val, key);
        else if (key == "dumbbell_scale") sc.dumbbell_scale = parse_num(val, key);
        else if (key == "strength") {
            if (val == "zero") sc.strength_kind = Scenario::StrengthKind::Zero;
            else if (val == "constant") sc.strength_kind = Scenario::StrengthKind::Constant;
            else if (val == "modes") sc.strength_kind = Scenario::StrengthKind::Modes;
            else throw ParseError("scenario: unknown strength kind '" + val + "'");
        }
        else if (key == "strength_constant") sc.strength_constant = parse_num(val, key);
        else if (key == "strength_modes") sc.strength_modes = parse_modes(val, key);
        else if (key == "surface_tension") sc.config.surface_tension = parse_num(val, key);
        else if (key == "gravity") sc.config.gravity = parse_num(val, key);
        else if (key == "dt") sc.config.dt = parse_num(val, key);
        else if (key == "t_end") { sc.config.t_end = parse_num(val, key); saw_t_end = true; }
        else if (key == "filter_threshold") sc.config.filter_threshold = parse_num(val, key);
        else if (key == "output_every") sc.config.output_every = parse_int(val, key);
        else if (key == "diag_energy") sc.diag_energy = parse_flag(val, key);
        else if (key == "diag_chord_arc") sc.diag_chord_arc = parse_flag(val, key);
        else if (key == "diag_jump") sc.diag_jump = parse_flag(val, key);
        else if (key == "diag_min_metric") sc.diag_min_metric = parse_flag(val, key);
        else if (key == "diag_riccati") sc.diag_riccati = parse_flag(val, key);
        else if (key == "probe_mode") sc.probe_mode = parse_int(val, key);
        else if (key == "track_pair") {
            const auto f = split(val, ':');
            if (f.size() != 2) throw ParseError("scenario: track_pair needs i0:i1");
            sc.tracked_pairs.emplace_back(parse_int(f[0], key), parse_int(f[1], key));
        }
        else if (key == "marker") {
            const auto f = split(val, ':');
            if (f.size() != 4) throw ParseError("scenario: marker needs cx:cy:side:per_side");
            sc.markers.push_back({parse_num(f[0], key), parse_num(f[1], key),
                                  parse_num(f[2], key), parse_int(f[3], key)});
        }
        else if (key == "contact_threshold") sc.contact_threshold = parse_num(val, key);
        else if (key == "pair_window") sc.pair_window = parse_num(val, key);
        else throw ParseError("scenario: unknown key '" + key + "'");
    }
    if (!saw_t_end) throw ParseError("scenario: t_end is required");
    return sc;
}

inline Scenario parse_scenario_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open scenario: " + path);
    return parse_scenario(is);
}

inline void serialize_scenario(std::ostream& os, const Scenario& sc) {
    char buf[256];
    auto num = [&](const char* key, double v) {
        std::snprintf(buf, sizeof buf, "%s = %.17g\n", key, v);
        os << buf;
    };
    auto modes_line = [&](const char* key, const std::vector<GraphMode>& ms) {
        os << key << " = ";
        for (size_t i = 0; i < ms.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%s%d:%.17g:%.17g", i ? "," : "", ms[i].wavenumber,
                          ms[i].cos_amp, ms[i].sin_amp);
            os << buf;
        }
        os << "\n";
    };
    os << "# vortex-sheet scenario\n";
    os << "name = " << sc.name << "\n";
    os << "curve = ";
    switch (sc.kind) {
        case Scenario::CurveKind::Flat: os << "flat\n"; break;
        case Scenario::CurveKind::Graph: os << "graph\n"; break;
        case Scenario::CurveKind::Circle: os << "circle\n"; break;
        case Scenario::CurveKind::Dumbbell: os << "dumbbell\n"; break;
        case Scenario::CurveKind::File: os << "file:" << sc.curve_file << "\n"; break;
    }
    os << "n_points = " << sc.n_points << "   # grid size, even and >= 16\n";
    if (!sc.modes.empty()) modes_line("modes", sc.modes);
    if (sc.kind == Scenario::CurveKind::Circle) {
        num("circle_radius", sc.circle_radius);
        std::snprintf(buf, sizeof buf, "circle_center = %.17g:%.17g\n", sc.circle_center.x,
                      sc.circle_center.y);
        os << buf;
        os << "circle_orientation = " << (sc.circle_ccw ? "ccw" : "cw") << "\n";
    }
    if (sc.kind == Scenario::CurveKind::Dumbbell) {
        num("dumbbell_gap", sc.dumbbell_gap);
        num("dumbbell_scale", sc.dumbbell_scale);
    }
    os << "strength = ";
    switch (sc.strength_kind) {
        case Scenario::StrengthKind::Zero: os << "zero\n"; break;
        case Scenario::StrengthKind::Constant: os << "constant\n"; break;
        case Scenario::StrengthKind::Modes: os << "modes\n"; break;
    }
    if (sc.strength_kind == Scenario::StrengthKind::Constant)
        num("strength_constant", sc.strength_constant);
    if (!sc.strength_modes.empty()) modes_line("strength_modes", sc.strength_modes);
    num("surface_tension", sc.config.surface_tension); os << "# sigma [force/length]\n";
    num("gravity", sc.config.gravity);
    num("dt", sc.config.dt); os << "# [time]; explicit RK4 stability: dt <= 0.5 N^{-3/2} at sigma = 1\n";
    num("t_end", sc.config.t_end);
    num("filter_threshold", sc.config.filter_threshold);
    os << "output_every = " << sc.config.output_every << "\n";
    os << "diag_energy = " << (sc.diag_energy ? "on" : "off") << "\n";
    os << "diag_chord_arc = " << (sc.diag_chord_arc ? "on" : "off") << "\n";
    os << "diag_jump = " << (sc.diag_jump ? "on" : "off") << "\n";
    os << "diag_min_metric = " << (sc.diag_min_metric ? "on" : "off") << "\n";
    os << "diag_riccati = " << (sc.diag_riccati ? "on" : "off") << "\n";
    os << "probe_mode = " << sc.probe_mode << "\n";
    for (const auto& p : sc.tracked_pairs)
        os << "track_pair = " << p.first << ":" << p.second << "\n";
    for (const auto& m : sc.markers) {
        std::snprintf(buf, sizeof buf, "marker = %.17g:%.17g:%.17g:%d\n", m.cx, m.cy, m.side,
                      m.per_side);
        os << buf;
    }
    if (sc.contact_threshold > 0.0) num("contact_threshold", sc.contact_threshold);
    num("pair_window", sc.pair_window);
}

inline std::string serialize_scenario(const Scenario& sc) {
    std::ostringstream os;
    serialize_scenario(os, sc);
    return os.str();
}

// ---------------------------------------------------------------------------
// Validation and state construction.

inline void validate_scenario(const Scenario& sc) {
    ReferenceGrid grid(sc.n_points); // throws on bad N
    if (sc.config.surface_tension <= 0.0)
        throw ParseError("scenario: surface_tension must be > 0");
    sc.config.validate();
    if (sc.config.t_end <= 0.0) throw ParseError("scenario: t_end must be > 0");
    for (const auto& p : sc.tracked_pairs)
        if (p.first < 0 || p.first >= sc.n_points || p.second < 0 || p.second >= sc.n_points ||
            p.first == p.second)
            throw ParseError("scenario: tracked pair labels out of range");
    if (sc.kind == Scenario::CurveKind::Dumbbell &&
        (sc.dumbbell_gap <= 0.0 || sc.dumbbell_gap >= 1.0))
        throw ParseError("scenario: dumbbell_gap must be in (0, 1)");
    if (sc.probe_mode < 0 || sc.probe_mode > sc.n_points / 2)
        throw ParseError("scenario: probe_mode out of range");
    for (const auto& m : sc.markers)
        if (m.side <= 0.0 || m.per_side < 1) throw ParseError("scenario: bad marker spec");
}

inline InterfaceState build_initial_state(const Scenario& sc) {
    InterfaceState st;
    switch (sc.kind) {
        case Scenario::CurveKind::Flat: st.curve = make_flat_sheet(sc.n_points); break;
        case Scenario::CurveKind::Graph: st.curve = make_graph_sheet(sc.n_points, sc.modes); break;
        case Scenario::CurveKind::Circle:
            st.curve = make_circle(sc.n_points, sc.circle_radius, sc.circle_center,
                                   sc.circle_ccw ? Orientation::CCW : Orientation::CW);
            break;
        case Scenario::CurveKind::Dumbbell:
            st.curve = make_dumbbell(sc.n_points, sc.dumbbell_gap, sc.dumbbell_scale);
            break;
        case Scenario::CurveKind::File: {
            std::vector<double> s;
            st.curve = read_curve_file(sc.curve_file, &s);
            if (st.curve.size() != sc.n_points)
                throw ParseError("scenario: curve file grid size disagrees with n_points");
            break;
        }
    }
    st.strength.assign(sc.n_points, 0.0);
    switch (sc.strength_kind) {
        case Scenario::StrengthKind::Zero: break;
        case Scenario::StrengthKind::Constant:
            std::fill(st.strength.begin(), st.strength.end(), sc.strength_constant);
            break;
        case Scenario::StrengthKind::Modes:
            for (int j = 0; j < sc.n_points; ++j) {
                const double x = st.curve.grid.label(j);
                double v = 0.0;
                for (const auto& m : sc.strength_modes)
                    v += m.cos_amp * std::cos(m.wavenumber * x) +
                         m.sin_amp * std::sin(m.wavenumber * x);
                st.strength[j] = v;
            }
            break;
    }
    st.time = 0.0;
    st.validate();
    return st;
}

} // namespace vsheet
