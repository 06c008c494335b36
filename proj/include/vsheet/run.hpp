#pragma once

// Run orchestration: step the simulation, evaluate the enabled diagnostics on
// the output cadence, persist snapshots/series/manifest, and post-process run
// directories into plot data and a pass/fail summary. Also the batch driver
// for coefficient-family blow-up studies.
//
// Termination by NearSingularKernel is a recorded scientific outcome, not a
// crash; a run that ends that way still writes all of its outputs.

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vsheet/riccati.hpp"
#include "vsheet/scenario.hpp"
#include "vsheet/splash.hpp"

#ifndef VSHEET_GIT_DESCRIBE
#define VSHEET_GIT_DESCRIBE "unknown"
#endif

namespace vsheet {

struct RunRecord {
    Scenario scenario;
    std::string status = "t_end"; // t_end | NearSingularKernel | UnstableStep
    std::string status_detail;
    long total_steps = 0;

    std::vector<double> times;
    std::vector<double> energy, length, energy_plus_length;
    std::vector<double> chord_arc_series;
    std::vector<double> min_metric;
    std::vector<double> max_x;
    std::vector<double> jump_tau_err, jump_n_err;
    std::vector<double> mode_amp;
    std::vector<std::vector<double>> pair_gaps;
    std::vector<PairTrace> traces;
    RiccatiSeries live_riccati; // at the first tracked label, when enabled
    std::vector<std::vector<double>> marker_areas; // one series per marker
    bool marker_escaped = false;
    long marker_escape_step = -1;

    std::vector<HistoryFrame> frames; // in-memory history for diagnostics
};

namespace detail {

inline double mode_cos_amplitude(const InterfaceState& st, int k) {
    const int n = st.curve.size();
    double proj = 0.0;
    for (int j = 0; j < n; ++j)
        proj += st.curve.positions[j].y * std::cos(k * st.curve.grid.label(j));
    return 2.0 * proj / n;
}

inline std::string format_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

// ---------------------------------------------------------------------------
// The run loop.

inline RunRecord run(const Scenario& scenario, const std::string& out_dir = "", int threads = 1) {
    validate_scenario(scenario);
    RunRecord rec;
    rec.scenario = scenario;
    const SimConfig& config = scenario.config;

    InterfaceState st = build_initial_state(scenario);
    std::optional<MarkerSet> markers;
    std::vector<MarkerRegion> marker_regions;
    for (const auto& ms : scenario.markers) {
        auto region = make_square_marker({ms.cx, ms.cy}, ms.side, ms.per_side);
        marker_regions.push_back(region);
    }
    if (!marker_regions.empty()) {
        markers = MarkerSet{};
        for (const auto& r : marker_regions)
            markers->vertices.insert(markers->vertices.end(), r.boundary.vertices.begin(),
                                     r.boundary.vertices.end());
    }
    rec.marker_areas.resize(marker_regions.size());
    rec.pair_gaps.resize(scenario.tracked_pairs.size());
    for (const auto& p : scenario.tracked_pairs) {
        PairTrace tr;
        tr.index0 = p.first;
        tr.index1 = p.second;
        tr.label0 = st.curve.grid.label(p.first);
        tr.label1 = st.curve.grid.label(p.second);
        rec.traces.push_back(tr);
    }
    rec.live_riccati.guard = 1e300; // live series never trips the guard itself

    namespace fs = std::filesystem;
    const bool persist = !out_dir.empty();
    if (persist) fs::create_directories(out_dir);

    auto record_frame = [&](long step_index) {
        const auto geom = geometry(st.curve);
        auto vel = one_sided(st, br_velocity(st, geom, threads), geom);
        rec.times.push_back(st.time);
        if (scenario.diag_energy) {
            const double e = kinetic_energy(st, vel, geom);
            const double L = sheet_length(geom, st.curve.grid);
            rec.energy.push_back(e);
            rec.length.push_back(L);
            rec.energy_plus_length.push_back(e + config.surface_tension * L);
        }
        if (scenario.diag_chord_arc) rec.chord_arc_series.push_back(chord_arc(st.curve));
        rec.min_metric.push_back(*std::min_element(geom.metric.begin(), geom.metric.end()));
        if (scenario.diag_jump) {
            double tau_err = 0.0, n_err = 0.0;
            for (int j = 0; j < st.curve.size(); ++j) {
                const Vec2 jump = vel.u_plus[j] - vel.u_minus[j];
                tau_err = std::max(tau_err,
                                   std::abs(dot(jump, geom.tangent[j]) - st.strength[j]));
                n_err = std::max(n_err, std::abs(st.strength[j] *
                                                 dot(geom.tangent[j], geom.normal[j])));
            }
            rec.jump_tau_err.push_back(tau_err);
            rec.jump_n_err.push_back(n_err);
        }
        if (scenario.diag_riccati) {
            auto x = vorticity_derivative(st, geom);
            rec.max_x.push_back(*std::max_element(x.begin(), x.end()));
            if (!rec.traces.empty()) {
                auto rc = forcing_and_coefficient(st, vel, geom, config.surface_tension);
                const int j = rec.traces.front().index0;
                rec.live_riccati.t.push_back(st.time);
                rec.live_riccati.x.push_back(x[j]);
                rec.live_riccati.frak_a.push_back(rc.frak_a[j]);
                rec.live_riccati.cal_a.push_back(rc.cal_a[j]);
            }
        }
        if (scenario.probe_mode > 0)
            rec.mode_amp.push_back(detail::mode_cos_amplitude(st, scenario.probe_mode));
        for (size_t p = 0; p < rec.traces.size(); ++p) {
            auto& tr = rec.traces[p];
            tr.times.push_back(st.time);
            tr.delta_eta.push_back(st.curve.positions[tr.index0] -
                                   st.curve.positions[tr.index1]);
            tr.delta_u.push_back(vel.u_minus[tr.index0] - vel.u_minus[tr.index1]);
            rec.pair_gaps[p].push_back(norm(tr.delta_eta.back()));
        }
        if (markers) {
            size_t offset = 0;
            bool all_simple = true;
            for (size_t r = 0; r < marker_regions.size(); ++r) {
                MarkerRegion region;
                region.boundary.vertices.assign(
                    markers->vertices.begin() + offset,
                    markers->vertices.begin() + offset + marker_regions[r].boundary.vertices.size());
                rec.marker_areas[r].push_back(region.area());
                all_simple = all_simple && region.simple();
                offset += marker_regions[r].boundary.vertices.size();
            }
            if (!all_simple) {
                // boundary stopped being simple: the region is no longer valid
                rec.marker_escaped = true;
                rec.marker_escape_step = step_index;
                markers.reset();
            }
        }
        rec.frames.push_back({st, std::move(vel)});
        if (persist) {
            char name[64];
            std::snprintf(name, sizeof name, "state_%06ld.txt", step_index);
            write_curve_file((fs::path(out_dir) / name).string(), st.curve, &st.strength);
        }
    };

    const long n_steps = std::lround(config.t_end / config.dt);
    long step_index = 0;
    bool stopped = false;
    auto handle_stop = [&](const char* status, const std::string& detail) {
        rec.status = status;
        rec.status_detail = detail;
        stopped = true;
    };
    try {
        record_frame(0);
    } catch (const NearSingularKernel& e) {
        handle_stop("NearSingularKernel", e.what());
    } catch (const DegenerateMetric& e) {
        handle_stop("UnstableStep", e.what());
    }
    while (!stopped && step_index < n_steps) {
        try {
            InterfaceState next = step(st, config, config.dt,
                                       markers ? &*markers : nullptr, threads);
            st = std::move(next);
            ++step_index;
            if (step_index % config.output_every == 0 || step_index == n_steps)
                record_frame(step_index);
        } catch (const MarkerEscaped& e) {
            rec.marker_escaped = true;
            rec.marker_escape_step = step_index;
            rec.status_detail = e.what();
            markers.reset(); // freeze marker tracking, keep the run going
        } catch (const NearSingularKernel& e) {
            handle_stop("NearSingularKernel", e.what());
        } catch (const UnstableStep& e) {
            handle_stop("UnstableStep", e.what());
        } catch (const DegenerateMetric& e) {
            // parameterization collapse; the run is over for the same reason
            // an unstable field would end it
            handle_stop("UnstableStep", e.what());
        }
    }
    rec.total_steps = step_index;
    // final frame for the state the run stopped at, if not yet recorded
    if (!rec.times.empty() && rec.times.back() < st.time) {
        try {
            record_frame(step_index);
        } catch (const Error&) {
            // terminal state too degenerate to evaluate; the previous frame stands
        }
    }

    if (persist) {
        // columnar series
        std::ofstream series((fs::path(out_dir) / "series.txt").string());
        series << "# t";
        if (scenario.diag_energy) series << " energy length energy_plus_length";
        if (scenario.diag_chord_arc) series << " chord_arc_min";
        series << " min_metric";
        if (scenario.diag_jump) series << " jump_tau_err jump_n_err";
        if (scenario.diag_riccati) series << " max_X";
        if (scenario.probe_mode > 0) series << " mode_amp";
        for (size_t p = 0; p < rec.pair_gaps.size(); ++p) series << " gap" << p;
        for (size_t r = 0; r < rec.marker_areas.size(); ++r) series << " area" << r;
        series << "\n";
        for (size_t i = 0; i < rec.times.size(); ++i) {
            series << detail::format_g(rec.times[i]);
            if (scenario.diag_energy)
                series << " " << detail::format_g(rec.energy[i]) << " "
                       << detail::format_g(rec.length[i]) << " "
                       << detail::format_g(rec.energy_plus_length[i]);
            if (scenario.diag_chord_arc)
                series << " " << detail::format_g(rec.chord_arc_series[i]);
            series << " " << detail::format_g(rec.min_metric[i]);
            if (scenario.diag_jump)
                series << " " << detail::format_g(rec.jump_tau_err[i]) << " "
                       << detail::format_g(rec.jump_n_err[i]);
            if (scenario.diag_riccati) series << " " << detail::format_g(rec.max_x[i]);
            if (scenario.probe_mode > 0) series << " " << detail::format_g(rec.mode_amp[i]);
            for (const auto& g : rec.pair_gaps)
                series << " " << (i < g.size() ? detail::format_g(g[i]) : "nan");
            for (const auto& a : rec.marker_areas)
                series << " " << (i < a.size() ? detail::format_g(a[i]) : "nan");
            series << "\n";
        }

        for (size_t p = 0; p < rec.traces.size(); ++p) {
            char name[64];
            std::snprintf(name, sizeof name, "pair%zu_trace.txt", p);
            std::ofstream tf((fs::path(out_dir) / name).string());
            tf << "# t deta1 deta2 du1 du2 gap\n";
            const auto& tr = rec.traces[p];
            for (size_t i = 0; i < tr.times.size(); ++i)
                tf << detail::format_g(tr.times[i]) << " "
                   << detail::format_g(tr.delta_eta[i].x) << " "
                   << detail::format_g(tr.delta_eta[i].y) << " "
                   << detail::format_g(tr.delta_u[i].x) << " "
                   << detail::format_g(tr.delta_u[i].y) << " "
                   << detail::format_g(norm(tr.delta_eta[i])) << "\n";
        }
        if (scenario.diag_riccati && !rec.traces.empty()) {
            std::ofstream rf((fs::path(out_dir) / "riccati_live.txt").string());
            write_riccati_series(rf, rec.live_riccati);
        }

        // manifest
        nlohmann::json j;
        j["name"] = scenario.name;
        j["version"] = VSHEET_GIT_DESCRIBE;
        j["status"] = rec.status;
        j["status_detail"] = rec.status_detail;
        j["steps"] = rec.total_steps;
        j["marker_escaped"] = rec.marker_escaped;
        j["scenario_text"] = serialize_scenario(scenario);
        j["config"] = {{"surface_tension", config.surface_tension},
                       {"gravity", config.gravity},
                       {"rho_plus", config.rho_plus},
                       {"rho_minus", config.rho_minus},
                       {"dt", config.dt},
                       {"t_end", config.t_end},
                       {"filter_threshold", config.filter_threshold},
                       {"output_every", config.output_every},
                       {"n_points", scenario.n_points},
                       {"probe_mode", scenario.probe_mode}};
        auto put_series = [&](const char* key, const std::vector<double>& v) {
            if (!v.empty()) j["series"][key] = v;
        };
        put_series("t", rec.times);
        put_series("energy", rec.energy);
        put_series("length", rec.length);
        put_series("energy_plus_length", rec.energy_plus_length);
        put_series("chord_arc_min", rec.chord_arc_series);
        put_series("min_metric", rec.min_metric);
        put_series("max_X", rec.max_x);
        put_series("jump_tau_err", rec.jump_tau_err);
        put_series("jump_n_err", rec.jump_n_err);
        put_series("mode_amp", rec.mode_amp);
        for (size_t p = 0; p < rec.pair_gaps.size(); ++p)
            put_series(("gap" + std::to_string(p)).c_str(), rec.pair_gaps[p]);
        for (size_t r = 0; r < rec.marker_areas.size(); ++r)
            put_series(("area" + std::to_string(r)).c_str(), rec.marker_areas[r]);
        std::ofstream mf((fs::path(out_dir) / "run.json").string());
        mf << j.dump(2) << "\n";
    }
    return rec;
}

// ---------------------------------------------------------------------------
// Frequency fit for the dispersion verdict.

/// Angular frequency from the zero crossings of an oscillating series
/// (spacing pi/omega). Returns 0 when fewer than two crossings exist.
inline double fit_mode_frequency(const std::vector<double>& t, const std::vector<double>& a) {
    std::vector<double> zeros;
    for (size_t i = 1; i < a.size(); ++i)
        if ((a[i - 1] > 0) != (a[i] > 0))
            zeros.push_back(t[i - 1] + (t[i] - t[i - 1]) * a[i - 1] / (a[i - 1] - a[i]));
    if (zeros.size() < 2) return 0.0;
    const double pi = 3.14159265358979323846;
    return pi / ((zeros.back() - zeros.front()) / double(zeros.size() - 1));
}

// ---------------------------------------------------------------------------
// Report.

struct CheckLine {
    std::string name;
    double value = 0;
    double threshold = 0;
    bool pass = true;
    bool is_upper_bound = true; // value must stay below threshold
};

struct ReportResult {
    std::vector<std::string> lines;
    bool all_pass = true;
};

namespace detail {

inline nlohmann::json load_manifest(const std::string& dir) {
    const auto path = std::filesystem::path(dir) / "run.json";
    std::ifstream is(path);
    if (!is) throw MissingManifest("no run.json in " + dir);
    nlohmann::json j;
    try {
        is >> j;
    } catch (const std::exception& e) {
        throw MissingManifest("unreadable run.json in " + dir + ": " + e.what());
    }
    return j;
}

inline void write_xy(const std::string& path, const std::string& header,
                     const std::vector<double>& x, const std::vector<double>& y) {
    std::ofstream os(path);
    os << "# " << header << "\n";
    const size_t n = std::min(x.size(), y.size());
    for (size_t i = 0; i < n; ++i)
        os << format_g(x[i]) << " " << format_g(y[i]) << "\n";
}

} // namespace detail

/// Post-process run directories: emit x-y plot files next to each manifest
/// and collect one pass/fail line per enabled check. With exactly two runs
/// whose dt differ by a factor 2, a Richardson convergence order for the
/// energy+length drift is appended.
inline ReportResult report(const std::vector<std::string>& dirs, const std::string& format = "text") {
    namespace fs = std::filesystem;
    ReportResult out;
    std::vector<double> drifts, dts;

    auto add_check = [&](const std::string& run_name, const std::string& check, double value,
                         double threshold, bool pass) {
        out.all_pass = out.all_pass && pass;
        std::ostringstream line;
        if (format == "csv") {
            line << run_name << "," << check << "," << detail::format_g(value) << ","
                 << detail::format_g(threshold) << "," << (pass ? "pass" : "fail");
        } else {
            line << "  [" << (pass ? "PASS" : "FAIL") << "] " << check << ": value "
                 << detail::format_g(value) << " vs " << detail::format_g(threshold);
        }
        out.lines.push_back(line.str());
    };

    for (const auto& dir : dirs) {
        auto j = detail::load_manifest(dir);
        const std::string name = j.value("name", "run");
        if (format != "csv")
            out.lines.push_back("run " + name + " (" + dir + "): status " +
                                j.value("status", "?") + ", steps " +
                                std::to_string((long)j.value("steps", 0L)));
        if (!j.contains("series")) continue;
        const auto& s = j["series"];
        auto get = [&](const char* key) {
            return s.contains(key) ? s[key].get<std::vector<double>>() : std::vector<double>{};
        };
        const auto t = get("t");

        const auto epl = get("energy_plus_length");
        if (!epl.empty()) {
            const double drift = std::abs(epl.back() - epl.front()) / std::abs(epl.front());
            add_check(name, "energy+length relative drift", drift, 1e-3, drift < 1e-3);
            drifts.push_back(drift);
            dts.push_back(j["config"].value("dt", 0.0));
            detail::write_xy((fs::path(dir) / "energy_length.txt").string(),
                             "t energy_plus_length", t, epl);
        }
        const auto jt = get("jump_tau_err");
        if (!jt.empty()) {
            const double worst = *std::max_element(jt.begin(), jt.end());
            add_check(name, "jump tangential residual", worst, 1e-12, worst < 1e-12);
            const auto jn = get("jump_n_err");
            const double worst_n = *std::max_element(jn.begin(), jn.end());
            add_check(name, "jump normal residual (by construction)", worst_n, 0.0,
                      worst_n == 0.0);
        }
        const auto ca = get("chord_arc_min");
        if (!ca.empty()) {
            const double worst = *std::min_element(ca.begin(), ca.end());
            add_check(name, "chord-arc minimum stays positive", worst, 0.0, worst > 0.0);
        }
        const auto amp = get("mode_amp");
        const int probe = j["config"].value("probe_mode", 0);
        if (!amp.empty() && probe > 0) {
            const double sigma = j["config"].value("surface_tension", 1.0);
            const double rho = j["config"].value("rho_plus", 1.0) +
                               j["config"].value("rho_minus", 1.0);
            const double expected = std::sqrt(sigma * probe * probe * probe / rho);
            const double omega = fit_mode_frequency(t, amp);
            const double rel = std::abs(omega - expected) / expected;
            add_check(name, "capillary dispersion (measured vs expected omega)", rel, 0.01,
                      rel < 0.01 && omega > 0.0);
            detail::write_xy((fs::path(dir) / "mode_amp.txt").string(), "t mode_amp", t, amp);
        }
        for (int p = 0;; ++p) {
            const auto gap = get(("gap" + std::to_string(p)).c_str());
            if (gap.empty()) break;
            const double mn = *std::min_element(gap.begin(), gap.end());
            add_check(name, "tracked gap " + std::to_string(p) + " stays positive", mn, 0.0,
                      mn > 0.0);
            detail::write_xy((fs::path(dir) / ("gap" + std::to_string(p) + "_vs_time.txt")).string(),
                             "t gap", t, gap);
        }
        for (int r = 0;; ++r) {
            const auto area = get(("area" + std::to_string(r)).c_str());
            if (area.empty()) break;
            const double drift = std::abs(area.back() - area.front()) / std::abs(area.front());
            add_check(name, "marker area " + std::to_string(r) + " relative drift", drift, 1e-3,
                      drift < 1e-3);
            detail::write_xy((fs::path(dir) / ("area" + std::to_string(r) + ".txt")).string(),
                             "t area", t, area);
        }
        // X(T-t) plot data when the live series supports a blow-up fit
        if (s.contains("max_X")) {
            std::ifstream rf((fs::path(dir) / "riccati_live.txt").string());
            if (rf) {
                std::string header;
                std::getline(rf, header);
                RiccatiSeries live;
                double tt, xx, fa, cc;
                while (rf >> tt >> xx >> fa >> cc) {
                    live.t.push_back(tt);
                    live.x.push_back(xx);
                    live.frak_a.push_back(fa);
                    live.cal_a.push_back(cc);
                }
                if (!live.t.empty()) {
                    live.x0 = live.x.front();
                    live.reached_guard = true; // treat the recorded end as the guard
                    try {
                        auto est = blowup_fit(live);
                        std::vector<double> xt(live.t.size());
                        for (size_t i = 0; i < live.t.size(); ++i)
                            xt[i] = live.x[i] * (est.t_est - live.t[i]);
                        detail::write_xy((fs::path(dir) / "x_times_T_minus_t.txt").string(),
                                         "t X*(T_est - t)", live.t, xt);
                    } catch (const InsufficientWindow&) {
                        // no blow-up regime in this run; nothing to plot
                    }
                }
            }
        }
    }

    if (drifts.size() == 2 && dts.size() == 2 && dts[0] > 0 && dts[1] > 0) {
        const double ratio = dts[0] / dts[1];
        if (std::abs(ratio - 2.0) < 1e-9 || std::abs(ratio - 0.5) < 1e-9) {
            const double coarse = ratio > 1 ? drifts[0] : drifts[1];
            const double fine = ratio > 1 ? drifts[1] : drifts[0];
            if (fine > 0.0) {
                const double order = std::log2(coarse / fine);
                std::ostringstream line;
                if (format == "csv")
                    line << "pair,convergence order," << detail::format_g(order) << ",4,info";
                else
                    line << "  convergence order from dt halving: " << detail::format_g(order)
                         << " (expected about 4)";
                out.lines.push_back(line.str());
            }
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Riccati coefficient-family studies.

struct RiccatiMember {
    std::string label;
    double x0 = 1.0;
    std::string frak_spec = "zero";
    std::string cal_spec = "zero";
};

struct RiccatiFamily {
    double t_end = 4.0;
    double cadence = 0.01;
    double guard = 1e8;
    std::vector<RiccatiMember> members;
};

/// zero | const:<v> | sin:<amp>:<freq>:<phase> | affine:<c0>:<c1>:<freq>:<phase>
inline TimeFunction coefficient_from_spec(const std::string& spec) {
    using detail::parse_num;
    const auto f = detail::split(spec, ':');
    if (f[0] == "zero") return [](double) { return 0.0; };
    if (f[0] == "const" && f.size() == 2) {
        const double v = parse_num(f[1], "const");
        return [v](double) { return v; };
    }
    if (f[0] == "sin" && f.size() == 4) {
        const double a = parse_num(f[1], "sin"), w = parse_num(f[2], "sin"),
                     p = parse_num(f[3], "sin");
        return [a, w, p](double t) { return a * std::sin(w * t + p); };
    }
    if (f[0] == "affine" && f.size() == 5) {
        const double c0 = parse_num(f[1], "affine"), c1 = parse_num(f[2], "affine"),
                     w = parse_num(f[3], "affine"), p = parse_num(f[4], "affine");
        return [c0, c1, w, p](double t) { return c0 + c1 * std::sin(w * t + p); };
    }
    throw ParseError("riccati family: bad coefficient spec '" + spec + "'");
}

inline RiccatiFamily parse_riccati_family(std::istream& is) {
    using namespace detail;
    RiccatiFamily fam;
    std::string line;
    int line_no = 0;
    int counter = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("family line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key == "t_end") fam.t_end = parse_num(val, key);
        else if (key == "cadence") fam.cadence = parse_num(val, key);
        else if (key == "guard") fam.guard = parse_num(val, key);
        else if (key == "member") {
            RiccatiMember m;
            m.label = "member" + std::to_string(counter++);
            for (const auto& tok : split(val, ' ')) {
                const auto kv = split(trim(tok), '=');
                if (kv.size() != 2 || kv[0].empty()) continue;
                if (kv[0] == "x0") m.x0 = parse_num(kv[1], "x0");
                else if (kv[0] == "frakA") m.frak_spec = kv[1];
                else if (kv[0] == "calA") m.cal_spec = kv[1];
                else throw ParseError("family: unknown member field '" + kv[0] + "'");
            }
            fam.members.push_back(m);
        } else if (key == "random") {
            int count = 0;
            unsigned seed = 1;
            double bound = 1.0, x0 = 5.0;
            for (const auto& tok : split(val, ' ')) {
                const auto kv = split(trim(tok), '=');
                if (kv.size() != 2 || kv[0].empty()) continue;
                if (kv[0] == "count") count = parse_int(kv[1], "count");
                else if (kv[0] == "seed") seed = (unsigned)parse_int(kv[1], "seed");
                else if (kv[0] == "bound") bound = parse_num(kv[1], "bound");
                else if (kv[0] == "x0") x0 = parse_num(kv[1], "x0");
                else throw ParseError("family: unknown random field '" + kv[0] + "'");
            }
            std::mt19937 rng(seed);
            std::uniform_real_distribution<double> half(-bound / 2.0, bound / 2.0);
            std::uniform_real_distribution<double> freq(0.5, 3.0);
            for (int i = 0; i < count; ++i) {
                RiccatiMember m;
                m.label = "random" + std::to_string(counter++);
                m.x0 = x0;
                char buf[128];
                std::snprintf(buf, sizeof buf, "affine:%.17g:%.17g:%.17g:%.17g", half(rng),
                              half(rng), freq(rng), half(rng));
                m.frak_spec = buf;
                std::snprintf(buf, sizeof buf, "affine:%.17g:%.17g:%.17g:%.17g", half(rng),
                              half(rng), freq(rng), half(rng));
                m.cal_spec = buf;
                fam.members.push_back(m);
            }
        } else {
            throw ParseError("family: unknown key '" + key + "'");
        }
    }
    if (fam.members.empty()) throw ParseError("family: no members");
    return fam;
}

struct StudyRow {
    std::string label;
    double x0 = 0;
    double t_est = 0, rate = 0, residual = 0, c6 = 0, bound_margin = 0;
    std::string status; // "blow-up" | "no-blow-up"
};

inline std::vector<StudyRow> riccati_study(const RiccatiFamily& fam,
                                           const std::string& out_dir = "") {
    namespace fs = std::filesystem;
    const bool persist = !out_dir.empty();
    if (persist) fs::create_directories(out_dir);
    std::vector<StudyRow> rows;
    for (size_t i = 0; i < fam.members.size(); ++i) {
        const auto& m = fam.members[i];
        StudyRow row;
        row.label = m.label;
        row.x0 = m.x0;
        auto series = riccati_integrate(m.x0, coefficient_from_spec(m.frak_spec),
                                        coefficient_from_spec(m.cal_spec), 0.0, fam.t_end,
                                        fam.cadence, fam.guard);
        row.c6 = measured_c6(series);
        if (series.reached_guard) {
            auto est = blowup_fit(series);
            est.residual = identity_residual(series, est.t_est);
            row.t_est = est.t_est;
            row.rate = est.rate;
            row.residual = est.residual;
            row.bound_margin = envelope_bound_check(series, est.t_est, row.c6).min_margin;
            row.status = "blow-up";
            if (persist) {
                std::ofstream rp((fs::path(out_dir) / (m.label + "_report.txt")).string());
                write_blowup_report(rp, est);
            }
        } else {
            row.status = "no-blow-up";
        }
        if (persist) {
            std::ofstream sf((fs::path(out_dir) / (m.label + "_series.txt")).string());
            write_riccati_series(sf, series);
        }
        rows.push_back(row);
    }
    if (persist) {
        std::ofstream sum((fs::path(out_dir) / "summary.txt").string());
        sum << "# label x0 T_est rate identity_residual c6 bound_margin status\n";
        for (const auto& r : rows)
            sum << r.label << " " << detail::format_g(r.x0) << " " << detail::format_g(r.t_est)
                << " " << detail::format_g(r.rate) << " " << detail::format_g(r.residual) << " "
                << detail::format_g(r.c6) << " " << detail::format_g(r.bound_margin) << " "
                << r.status << "\n";
    }
    return rows;
}

} // namespace vsheet
