#pragma once

// Two-phase incompressible, irrotational velocity field induced by the sheet
// strength, via the periodic Birkhoff-Rott integral
//
//   u1 - i u2 (z) = (1/(2 pi i)) PV int gamma(a) (pi/P) cot(pi (z - z(a))/P) da,
//
// with gamma = s/G the unnormalized strength (gamma da is the circulation
// element) and P the horizontal period of the kernel (the channel width,
// 2*pi, also used for closed curves, which then represent a periodic array).
// The principal value on the sheet is evaluated with the alternate-point
// trapezoid rule (skip same-parity nodes), spectrally accurate for analytic
// curves. Off-sheet evaluation uses the plain trapezoid rule.
//
// One-sided limits: u+- = W -+ ... concretely u± = W ± (s/2) tau, which makes
// the jump purely tangential with magnitude s. With n pointing into the minus
// (upper) phase a flat sheet of constant strength s has u- = -(s/2) e1 above
// and u+ = +(s/2) e1 below.
//
// cot(pi dz/P) is evaluated as i (E_j + E_k)/(E_j - E_k) with E = exp(2 pi i z/P),
// one complex exponential per node per evaluation.

#include <cmath>
#include <complex>
#include <thread>
#include <vector>

#include "vsheet/curve.hpp"
#include "vsheet/errors.hpp"
#include "vsheet/geometry.hpp"

namespace vsheet {

struct InterfaceState {
    Curve curve;
    std::vector<double> strength; // s = (delta v . tau) at nodes
    double time = 0.0;

    void validate() const {
        curve.validate();
        if (strength.size() != curve.positions.size())
            throw Error("InterfaceState: strength count does not match grid");
        for (double s : strength)
            if (!std::isfinite(s)) throw Error("InterfaceState: non-finite strength");
    }
};

struct VelocityField {
    std::vector<Vec2> average; // W = (u+ + u-)/2, the BR principal value
    std::vector<Vec2> u_plus;
    std::vector<Vec2> u_minus;
};

struct SimConfig {
    double surface_tension = 1.0; // sigma, force/length
    double gravity = 0.0;         // g, acceleration; drops out at rho+ = rho-
    double rho_plus = 1.0;        // densities fixed at 1
    double rho_minus = 1.0;
    double dt = 1e-3;               // time step
    double filter_threshold = 1e-13; // Krasny filter, relative to the peak mode
    double t_end = 1.0;
    int output_every = 10; // output cadence in steps

    void validate() const {
        if (surface_tension < 0.0) throw Error("SimConfig: sigma must be >= 0");
        if (dt <= 0.0) throw Error("SimConfig: dt must be > 0");
        if (output_every < 1) throw Error("SimConfig: output_every must be >= 1");
    }
};

// ---------------------------------------------------------------------------
// Deterministic data parallelism: contiguous index chunks, each target index
// computed by a fixed-order inner loop, so results are bit-identical for any
// thread count.

template <class F>
inline void parallel_for(int n, int threads, F&& body) {
    if (threads <= 1 || n < 64) {
        for (int i = 0; i < n; ++i) body(i);
        return;
    }
    const int nt = std::min(threads, n);
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(nt);
    for (int t = 0; t < nt; ++t) {
        const int lo = (int)((long long)n * t / nt);
        const int hi = (int)((long long)n * (t + 1) / nt);
        pool.emplace_back([&, lo, hi, t] {
            try {
                for (int i = lo; i < hi; ++i) body(i);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Kernel workspace shared by on-sheet and off-sheet evaluations.

struct BrWorkspace {
    std::vector<std::complex<double>> expz; // E_j = exp(2 pi i z_j / P)
    std::vector<double> gamma;              // s |eta'|
    std::vector<Vec2> nodes;
    double kernel_period = two_pi;
    double mean_spacing = 0.0; // arc length per node
};

inline BrWorkspace make_br_workspace(const InterfaceState& state,
                                     const GeometrySnapshot& geom) {
    const int n = state.curve.size();
    BrWorkspace w;
    w.kernel_period = state.curve.closed() ? two_pi : state.curve.period_x;
    w.nodes = state.curve.positions;
    w.expz.resize(n);
    w.gamma.resize(n);
    double arc = 0.0;
    const double scale = two_pi / w.kernel_period;
    for (int j = 0; j < n; ++j) {
        const Vec2 z = state.curve.positions[j];
        // exp(i*scale*(x + i y)) = exp(-scale*y) (cos(scale x) + i sin(scale x))
        const double r = std::exp(-scale * z.y);
        w.expz[j] = {r * std::cos(scale * z.x), r * std::sin(scale * z.x)};
        w.gamma[j] = state.strength[j] * geom.metric[j];
        arc += geom.metric[j];
    }
    w.mean_spacing = arc / n * state.curve.grid.spacing();
    return w;
}

namespace detail {

/// Guard against quadrature breakdown: any node pair closer than 0.1 of the
/// local grid spacing signals splash proximity.
inline void near_singular_check(const InterfaceState& state, const GeometrySnapshot& geom) {
    const int n = state.curve.size();
    const double h = state.curve.grid.spacing();
    for (int j = 0; j < n; ++j) {
        for (int k = j + 1; k < n; ++k) {
            const double local = h * std::min(geom.metric[j], geom.metric[k]);
            const double lim = 0.1 * local;
            if (norm2(state.curve.positions[j] - state.curve.positions[k]) < lim * lim)
                throw NearSingularKernel("nodes at labels " +
                                         std::to_string(state.curve.grid.label(j)) + " and " +
                                         std::to_string(state.curve.grid.label(k)) +
                                         " closer than 0.1 grid spacings");
        }
    }
}

} // namespace detail

/// BR principal value W_j = (u+ + u-)/2 at the nodes, alternate-point rule.
inline std::vector<Vec2> br_velocity(const InterfaceState& state,
                                     const GeometrySnapshot& geom, int threads = 1) {
    const int n = state.curve.size();
    detail::near_singular_check(state, geom);
    const BrWorkspace w = make_br_workspace(state, geom);
    const double pref = two_pi / (double(n) * w.kernel_period);
    std::vector<Vec2> out(n);
    parallel_for(n, threads, [&](int j) {
        const std::complex<double> Ej = w.expz[j];
        std::complex<double> acc = 0.0;
        for (int k = (j % 2 == 0) ? 1 : 0; k < n; k += 2) {
            const std::complex<double> Ek = w.expz[k];
            acc += w.gamma[k] * ((Ej + Ek) / (Ej - Ek));
        }
        acc *= pref; // this is u1 - i u2
        out[j] = {acc.real(), -acc.imag()};
    });
    return out;
}

inline std::vector<Vec2> br_velocity(const InterfaceState& state, int threads = 1) {
    return br_velocity(state, geometry(state.curve), threads);
}

/// One-sided limits u+- = W +- (s/2) tau. The jump is exactly s tau.
inline VelocityField one_sided(const InterfaceState& state, std::vector<Vec2> average,
                               const GeometrySnapshot& geom) {
    const int n = state.curve.size();
    VelocityField v;
    v.u_plus.resize(n);
    v.u_minus.resize(n);
    for (int j = 0; j < n; ++j) {
        const Vec2 half = (0.5 * state.strength[j]) * geom.tangent[j];
        v.u_plus[j] = average[j] + half;
        v.u_minus[j] = average[j] - half;
    }
    v.average = std::move(average);
    return v;
}

/// ds/dt = -(grad_T u+ . tau) s + sigma grad_T H - g (rho+ - rho-) grad_T eta2.
/// The sign of the curvature forcing follows this library's convention
/// H = G(G eta')' . n (n into the minus phase), under which the flat-sheet
/// linearization oscillates at the capillary frequency.
inline std::vector<double> strength_rate(const InterfaceState& state,
                                         const VelocityField& vel,
                                         const GeometrySnapshot& geom,
                                         const SimConfig& config) {
    const int n = state.curve.size();
    const auto& sp = spectral(n);
    std::vector<double> up1(n), up2(n), eta2(n);
    for (int j = 0; j < n; ++j) {
        up1[j] = vel.u_plus[j].x;
        up2[j] = vel.u_plus[j].y;
        eta2[j] = state.curve.positions[j].y;
    }
    auto d1 = sp.derivative(up1);
    auto d2 = sp.derivative(up2);
    auto de2 = sp.derivative(eta2);
    const double drho = config.rho_plus - config.rho_minus; // 0 at matched densities
    std::vector<double> rate(n);
    for (int j = 0; j < n; ++j) {
        const double stretch = geom.metric_inv[j] *
                               (d1[j] * geom.tangent[j].x + d2[j] * geom.tangent[j].y);
        rate[j] = -stretch * state.strength[j] +
                  config.surface_tension * geom.curvature_tangential_derivative[j] -
                  config.gravity * drho * geom.metric_inv[j] * de2[j];
    }
    return rate;
}

/// The interface is advected by the flow of u-.
inline std::vector<Vec2> position_rate(const VelocityField& vel) { return vel.u_minus; }

// ---------------------------------------------------------------------------
// Off-interface evaluation.

/// Desingularized (plain trapezoid) BR sum at points off the curve. The
/// caller asserts each point lies strictly in the requested phase; the value
/// itself is single-valued off the sheet.
inline std::vector<Vec2> velocity_at_ws(const BrWorkspace& w, const std::vector<Vec2>& points,
                                        int threads = 1) {
    const int n = (int)w.expz.size();
    const int m = (int)points.size();
    const double scale = two_pi / w.kernel_period;
    const double pref = std::numbers::pi / (double(n) * w.kernel_period);
    const double lim2 = 4.0 * w.mean_spacing * w.mean_spacing;
    std::vector<Vec2> out(m);
    parallel_for(m, threads, [&](int i) {
        const Vec2 p = points[i];
        for (int k = 0; k < n; ++k) {
            Vec2 d = p - w.nodes[k];
            if (w.kernel_period > 0.0)
                d.x -= std::round(d.x / w.kernel_period) * w.kernel_period;
            if (norm2(d) < lim2)
                throw PointTooClose("evaluation point within 2 grid spacings of the curve");
        }
        const double r = std::exp(-scale * p.y);
        const std::complex<double> P(r * std::cos(scale * p.x), r * std::sin(scale * p.x));
        std::complex<double> acc = 0.0;
        for (int k = 0; k < n; ++k)
            acc += w.gamma[k] * ((P + w.expz[k]) / (P - w.expz[k]));
        acc *= pref;
        out[i] = {acc.real(), -acc.imag()};
    });
    return out;
}

inline std::vector<Vec2> velocity_at(const InterfaceState& state, const std::vector<Vec2>& points,
                                     Phase /*side*/, int threads = 1) {
    return velocity_at_ws(make_br_workspace(state, geometry(state.curve)), points, threads);
}

// ---------------------------------------------------------------------------
// Stream function and the energy + length monitor.

/// Stream function (u- = grad^perp psi) on the nodes, from
/// psi(z) = (1/2pi) int gamma(a) log|sin(pi (z - z(a))/P)| da,
/// with the log singularity split off and summed exactly in Fourier space.
/// Gauge-free (and equal to the kinetic-energy potential) only for zero-mean
/// gamma.
inline std::vector<double> stream_function(const InterfaceState& state,
                                           const GeometrySnapshot& geom) {
    const int n = state.curve.size();
    const auto& sp = spectral(n);
    const BrWorkspace w = make_br_workspace(state, geom);
    const double P = w.kernel_period;
    const double scale = two_pi / P;
    const double h = state.curve.grid.spacing();

    // Singular part: int gamma(a') log|2 sin((a - a')/2)| da' has Fourier
    // multiplier -pi/|k| (k != 0).
    auto c = sp.coefficients(w.gamma);
    const double gamma_mean = c[0].real();
    c[0] = 0.0;
    for (int k = 1; k < (int)c.size(); ++k) c[k] *= -std::numbers::pi / double(k);
    auto singular = sp.synthesize(c);

    // Smooth remainder by plain trapezoid; the diagonal limit of the split
    // kernel is log|(pi/P) z'(a)|.
    std::vector<std::complex<double>> z(n);
    for (int j = 0; j < n; ++j) z[j] = {state.curve.positions[j].x, state.curve.positions[j].y};
    std::vector<double> psi(n);
    for (int j = 0; j < n; ++j) {
        double smooth = 0.0;
        const double xj = state.curve.grid.label(j);
        for (int k = 0; k < n; ++k) {
            double rj;
            if (k == j) {
                rj = std::log(std::numbers::pi / P * geom.metric[j]);
            } else {
                const std::complex<double> num = std::sin(0.5 * scale * (z[j] - z[k]));
                const double den = 2.0 * std::sin(0.5 * (xj - state.curve.grid.label(k)));
                rj = std::log(std::abs(num / den));
            }
            smooth += w.gamma[k] * rj;
        }
        smooth *= h;
        // log|sin| = log|2 sin| - log 2 on the split factor
        psi[j] = (singular[j] + smooth - gamma_mean * two_pi * std::log(2.0)) / two_pi;
    }
    return psi;
}

/// E = (1/2) ||u-||^2 over the minus phase by the boundary quadrature
/// E = (1/2) closed-int psi (u- . tau) ds  (Green's identity; the outward
/// normal of the minus phase along the sheet is -n).
inline double kinetic_energy(const InterfaceState& state, const VelocityField& vel,
                             const GeometrySnapshot& geom) {
    const auto psi = stream_function(state, geom);
    const int n = state.curve.size();
    const double h = state.curve.grid.spacing();
    double e = 0.0;
    for (int j = 0; j < n; ++j)
        e += psi[j] * dot(vel.u_minus[j], geom.tangent[j]) * geom.metric[j];
    return 0.5 * e * h;
}

/// Sheet length per period.
inline double sheet_length(const GeometrySnapshot& geom, const ReferenceGrid& grid) {
    double L = 0.0;
    for (double m : geom.metric) L += m;
    return L * grid.spacing();
}

// ---------------------------------------------------------------------------
// Time stepping.

struct MarkerSet {
    std::vector<Vec2> vertices;
};

namespace detail {

struct StageRates {
    std::vector<Vec2> dpos;
    std::vector<double> dstrength;
    std::vector<Vec2> dmarkers;
};

inline StageRates evaluate_rates(const InterfaceState& state, const SimConfig& config,
                                 const MarkerSet* markers, int threads) {
    const auto geom = geometry(state.curve);
    auto W = br_velocity(state, geom, threads);
    auto vel = one_sided(state, std::move(W), geom);
    StageRates r;
    r.dstrength = strength_rate(state, vel, geom, config);
    r.dpos = position_rate(vel);
    if (markers && !markers->vertices.empty()) {
        try {
            r.dmarkers = velocity_at_ws(make_br_workspace(state, geom), markers->vertices, threads);
        } catch (const PointTooClose&) {
            throw MarkerEscaped("marker vertex within 2 grid spacings of the interface");
        }
    }
    return r;
}

inline void check_stable(const InterfaceState& state, double scale0) {
    for (const auto& p : state.curve.positions)
        if (!(std::abs(p.x) <= 1e6 * scale0) || !(std::abs(p.y) <= 1e6 * scale0))
            throw UnstableStep("position exceeded 1e6 x initial scale");
    for (double s : state.strength)
        if (!(std::abs(s) <= 1e6 * scale0)) throw UnstableStep("strength exceeded 1e6 x initial scale");
}

} // namespace detail

/// One classical RK4 step of (eta, s) with the Krasny filter applied after
/// the update. Markers, when given, ride the same RK4 stages so the passive
/// advection converges at the same order. dt may be negative.
inline InterfaceState step(const InterfaceState& state, const SimConfig& config,
                           double dt, MarkerSet* markers = nullptr, int threads = 1) {
    state.validate();
    const int n = state.curve.size();
    double scale0 = 1.0;
    for (const auto& p : state.curve.positions)
        scale0 = std::max({scale0, std::abs(p.x), std::abs(p.y)});
    for (double s : state.strength) scale0 = std::max(scale0, std::abs(s));

    const int nm = markers ? (int)markers->vertices.size() : 0;
    auto advance = [&](const detail::StageRates& r, double factor) {
        InterfaceState out = state;
        for (int j = 0; j < n; ++j) out.curve.positions[j] += factor * r.dpos[j];
        for (int j = 0; j < n; ++j) out.strength[j] += factor * r.dstrength[j];
        return out;
    };
    auto advance_markers = [&](const detail::StageRates& r, double factor) {
        MarkerSet out = *markers;
        for (int j = 0; j < nm; ++j) out.vertices[j] += factor * r.dmarkers[j];
        return out;
    };

    const auto k1 = detail::evaluate_rates(state, config, markers, threads);
    InterfaceState s2 = advance(k1, dt / 2);
    MarkerSet m2, m3, m4;
    if (markers) m2 = advance_markers(k1, dt / 2);
    detail::check_stable(s2, scale0);
    const auto k2 = detail::evaluate_rates(s2, config, markers ? &m2 : nullptr, threads);
    InterfaceState s3 = advance(k2, dt / 2);
    if (markers) m3 = advance_markers(k2, dt / 2);
    detail::check_stable(s3, scale0);
    const auto k3 = detail::evaluate_rates(s3, config, markers ? &m3 : nullptr, threads);
    InterfaceState s4 = advance(k3, dt);
    if (markers) m4 = advance_markers(k3, dt);
    detail::check_stable(s4, scale0);
    const auto k4 = detail::evaluate_rates(s4, config, markers ? &m4 : nullptr, threads);

    InterfaceState out = state;
    for (int j = 0; j < n; ++j)
        out.curve.positions[j] += (dt / 6.0) * (k1.dpos[j] + 2.0 * k2.dpos[j] +
                                                2.0 * k3.dpos[j] + k4.dpos[j]);
    for (int j = 0; j < n; ++j)
        out.strength[j] += (dt / 6.0) * (k1.dstrength[j] + 2.0 * k2.dstrength[j] +
                                         2.0 * k3.dstrength[j] + k4.dstrength[j]);
    if (markers)
        for (int j = 0; j < nm; ++j)
            markers->vertices[j] += (dt / 6.0) * (k1.dmarkers[j] + 2.0 * k2.dmarkers[j] +
                                                  2.0 * k3.dmarkers[j] + k4.dmarkers[j]);
    out.time = state.time + dt;
    detail::check_stable(out, scale0);

    // Krasny filter: strip round-off-seeded modes from eta and s.
    if (config.filter_threshold > 0.0) {
        const auto& sp = spectral(n);
        std::vector<double> p1, p2;
        out.curve.periodic_part(p1, p2);
        sp.krasny_filter(p1, config.filter_threshold);
        sp.krasny_filter(p2, config.filter_threshold);
        sp.krasny_filter(out.strength, config.filter_threshold);
        const double slope = out.curve.period_x / two_pi;
        for (int j = 0; j < n; ++j)
            out.curve.positions[j] = {p1[j] + slope * out.curve.grid.label(j), p2[j]};
    }
    return out;
}

inline InterfaceState step(const InterfaceState& state, const SimConfig& config) {
    return step(state, config, config.dt);
}

} // namespace vsheet
