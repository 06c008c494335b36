#pragma once

// Dynamics of the tangential vorticity derivative X = G (s' . tau) along the
// sheet: X satisfies the Riccati equation
//
//   dX/dt = X^2 - frakA(t) X - calA(t),
//
// with damping coefficient frakA = 2 grad_T u+ . tau and forcing
// calA = s grad_T(grad_T u+ . tau) - sigma grad_T(grad_T H). Solutions with
// bounded coefficients blow up like 1/(T - t); this module integrates the
// equation with a guarded adaptive stepper, fits the blow-up time and rate
// from 1/X, and verifies the reciprocal identity and the derived sup bound.

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "vsheet/birkhoff_rott.hpp"
#include "vsheet/errors.hpp"

namespace vsheet {

struct RiccatiSeries {
    std::vector<double> t;
    std::vector<double> x;
    std::vector<double> frak_a; // damping coefficient samples
    std::vector<double> cal_a;  // forcing samples
    double x0 = 0.0;
    double guard = 1e8;
    bool reached_guard = false;

    /// Scale against which fit windows are measured.
    double initial_scale() const { return std::max(std::abs(x0), 1.0); }
};

struct BlowupEstimate {
    double t_est = 0.0;
    double rate = 0.0;
    double window_lo = 0.0;
    double window_hi = 0.0;
    double residual = std::numeric_limits<double>::quiet_NaN();
};

// ---------------------------------------------------------------------------
// Pointwise quantities from a live state.

/// X_j = G s' at the nodes (= grad_T (delta u . T) composed with eta; the
/// curvature correction s (tau' . tau) vanishes because |tau| = 1).
inline std::vector<double> vorticity_derivative(const InterfaceState& state,
                                                const GeometrySnapshot& geom) {
    detail::check_metric(geom.metric);
    auto ds = spectral(state.curve.size()).derivative(state.strength);
    std::vector<double> x(state.curve.size());
    for (int j = 0; j < state.curve.size(); ++j) x[j] = geom.metric_inv[j] * ds[j];
    return x;
}

struct RiccatiCoefficients {
    std::vector<double> frak_a;
    std::vector<double> cal_a;
};

/// frakA = 2 grad_T u+ . tau and calA = s grad_T(grad_T u+ . tau)
/// - sigma grad_T(grad_T H), both sampled on the grid. The curvature term
/// carries the sign of this library's H convention (see strength_rate).
inline RiccatiCoefficients forcing_and_coefficient(const InterfaceState& state,
                                                   const VelocityField& vel,
                                                   const GeometrySnapshot& geom,
                                                   double sigma = 1.0) {
    const int n = state.curve.size();
    const auto& sp = spectral(n);
    std::vector<double> up1(n), up2(n);
    for (int j = 0; j < n; ++j) {
        up1[j] = vel.u_plus[j].x;
        up2[j] = vel.u_plus[j].y;
    }
    auto d1 = sp.derivative(up1);
    auto d2 = sp.derivative(up2);
    std::vector<double> stretch(n);
    for (int j = 0; j < n; ++j)
        stretch[j] = geom.metric_inv[j] *
                     (d1[j] * geom.tangent[j].x + d2[j] * geom.tangent[j].y);

    auto dstretch = tangential_derivative(stretch, geom);
    auto d2h = tangential_derivative(geom.curvature_tangential_derivative, geom);

    RiccatiCoefficients rc;
    rc.frak_a.resize(n);
    rc.cal_a.resize(n);
    for (int j = 0; j < n; ++j) {
        rc.frak_a[j] = 2.0 * stretch[j];
        rc.cal_a[j] = state.strength[j] * dstretch[j] - sigma * d2h[j];
    }
    return rc;
}

// ---------------------------------------------------------------------------
// Guarded adaptive integration (Dormand-Prince 5(4)).

using TimeFunction = std::function<double(double)>;

namespace detail {

struct Dp54Step {
    double y_next;
    double error;
};

template <class RHS>
inline Dp54Step dp54(const RHS& f, double t, double y, double dt) {
    const double k1 = f(t, y);
    const double k2 = f(t + dt / 5.0, y + dt * (k1 / 5.0));
    const double k3 = f(t + 3.0 * dt / 10.0, y + dt * (3.0 / 40.0 * k1 + 9.0 / 40.0 * k2));
    const double k4 = f(t + 4.0 * dt / 5.0,
                        y + dt * (44.0 / 45.0 * k1 - 56.0 / 15.0 * k2 + 32.0 / 9.0 * k3));
    const double k5 = f(t + 8.0 * dt / 9.0,
                        y + dt * (19372.0 / 6561.0 * k1 - 25360.0 / 2187.0 * k2 +
                                  64448.0 / 6561.0 * k3 - 212.0 / 729.0 * k4));
    const double k6 = f(t + dt, y + dt * (9017.0 / 3168.0 * k1 - 355.0 / 33.0 * k2 +
                                          46732.0 / 5247.0 * k3 + 49.0 / 176.0 * k4 -
                                          5103.0 / 18656.0 * k5));
    const double y5 = y + dt * (35.0 / 384.0 * k1 + 500.0 / 1113.0 * k3 + 125.0 / 192.0 * k4 -
                                2187.0 / 6784.0 * k5 + 11.0 / 84.0 * k6);
    const double k7 = f(t + dt, y5);
    const double y4 = y + dt * (5179.0 / 57600.0 * k1 + 7571.0 / 16695.0 * k3 +
                                393.0 / 640.0 * k4 - 92097.0 / 339200.0 * k5 +
                                187.0 / 2100.0 * k6 + k7 / 40.0);
    return {y5, std::abs(y5 - y4)};
}

} // namespace detail

/// Integrate dX/dt = X^2 - frakA X - calA from t0 with adaptive steps.
/// Terminates normally either at t_end or when X reaches the guard (blow-up
/// detected). Samples are recorded on the cadence grid and, once X has grown
/// past 10x its initial scale, at every accepted step.
inline RiccatiSeries riccati_integrate(double x0, const TimeFunction& frak_a,
                                       const TimeFunction& cal_a, double t0, double t_end,
                                       double cadence = 0.0, double guard = 1e8) {
    if (t_end <= t0) throw Error("riccati_integrate: empty time span");
    if (cadence <= 0.0) cadence = (t_end - t0) / 512.0;
    const double rtol = 1e-10, atol = 1e-12;

    RiccatiSeries out;
    out.x0 = x0;
    out.guard = guard;
    auto rhs = [&](double t, double y) { return y * y - frak_a(t) * y - cal_a(t); };
    auto record = [&](double t, double y) {
        if (!out.t.empty() && t <= out.t.back()) return;
        out.t.push_back(t);
        out.x.push_back(y);
        out.frak_a.push_back(frak_a(t));
        out.cal_a.push_back(cal_a(t));
    };

    double t = t0, y = x0;
    double dt = std::min(cadence, 1e-3);
    const double dense_from = 10.0 * out.initial_scale();
    record(t, y);
    long next_cadence = 1;
    long steps = 0;
    const long max_steps = 20'000'000;

    while (t < t_end && !out.reached_guard) {
        double t_target = std::min(t0 + double(next_cadence) * cadence, t_end);
        while (t_target <= t && t_target < t_end) {
            ++next_cadence;
            t_target = std::min(t0 + double(next_cadence) * cadence, t_end);
        }
        const bool lands = dt >= t_target - t;
        const double dt_try = lands ? t_target - t : dt;
        const auto trial = detail::dp54(rhs, t, y, dt_try);
        const double scale = atol + rtol * std::max(std::abs(y), std::abs(trial.y_next));
        const double err = trial.error / scale;
        if (err <= 1.0 && std::isfinite(trial.y_next)) {
            t = lands ? t_target : t + dt_try;
            y = trial.y_next;
            if (y >= dense_from) record(t, y);
            if (lands) {
                record(t, y);
                ++next_cadence;
            }
            if (y >= guard) {
                record(t, y);
                out.reached_guard = true;
            }
        }
        const double grow = (err > 0.0) ? 0.9 * std::pow(err, -0.2) : 5.0;
        dt *= std::min(5.0, std::max(0.2, grow));
        if (!std::isfinite(dt) || dt <= 0.0) throw Error("riccati_integrate: step collapse");
        if (++steps > max_steps) throw Error("riccati_integrate: step budget exhausted");
    }
    return out;
}

// ---------------------------------------------------------------------------
// Blow-up fit and identity checks.

namespace detail {

/// Indices of the fit window: X at least 100x the initial scale (falling
/// back to 10x when the guard stopped the run almost immediately).
inline std::vector<int> fit_window(const RiccatiSeries& s) {
    long past10 = 0;
    for (double x : s.x)
        if (x > 10.0 * s.initial_scale()) ++past10;
    if (past10 < 20)
        throw InsufficientWindow("fewer than 20 samples past 10x the initial scale");
    std::vector<int> idx;
    for (int i = 0; i < (int)s.x.size(); ++i)
        if (s.x[i] >= 100.0 * s.initial_scale()) idx.push_back(i);
    if ((int)idx.size() < 5) {
        idx.clear();
        for (int i = 0; i < (int)s.x.size(); ++i)
            if (s.x[i] > 10.0 * s.initial_scale()) idx.push_back(i);
    }
    return idx;
}

} // namespace detail

/// Regression of 1/X against t on the final window. 1/X is asymptotically
/// linear with slope -1; a cubic model absorbs the O((T-t)^2) and O((T-t)^3)
/// corrections that bounded coefficients induce. The estimated blow-up time
/// is the fitted zero crossing past the last sample and the rate is |dy/dt|
/// there.
inline BlowupEstimate blowup_fit(const RiccatiSeries& series) {
    if (!series.reached_guard)
        throw InsufficientWindow("series did not reach the blow-up guard");
    const auto idx = detail::fit_window(series);

    double tbar = 0.0, span = 0.0;
    for (int i : idx) tbar += series.t[i];
    tbar /= double(idx.size());
    for (int i : idx) span = std::max(span, std::abs(series.t[i] - tbar));
    if (span <= 0.0) throw InsufficientWindow("degenerate fit window");

    // weighted cubic regression of y = 1/X on u = (t - tbar)/span with
    // weights 1/y^2 (relative residuals), so the samples nearest the pole pin
    // the zero crossing. Orthogonal-polynomial form keeps the extreme weight
    // range well conditioned.
    const int m = (int)idx.size();
    std::vector<long double> u(m), y(m), w(m);
    for (int q = 0; q < m; ++q) {
        u[q] = (series.t[idx[q]] - tbar) / span;
        y[q] = 1.0 / series.x[idx[q]];
        w[q] = 1.0 / (y[q] * y[q]);
    }
    auto wdot = [&](auto&& f, auto&& g) {
        long double s = 0;
        for (int q = 0; q < m; ++q) s += w[q] * f(q) * g(q);
        return s;
    };
    auto one = [](int) { return 1.0L; };
    const long double n00 = wdot(one, one);
    const long double a1 = wdot([&](int q) { return u[q]; }, one) / n00;
    auto p1 = [&](int q) { return u[q] - a1; };
    const long double n11 = wdot(p1, p1);
    const long double a2 = wdot([&](int q) { return u[q] * p1(q); }, p1) / n11;
    const long double g2 = n11 / n00;
    auto p2 = [&](int q) { return (u[q] - a2) * p1(q) - g2; };
    const long double n22 = wdot(p2, p2);
    const long double a3 = wdot([&](int q) { return u[q] * p2(q); }, p2) / n22;
    const long double g3 = n22 / n11;
    auto p3 = [&](int q) { return (u[q] - a3) * p2(q) - g3 * p1(q); };
    const long double n33 = wdot(p3, p3);
    auto yf = [&](int q) { return y[q]; };
    const long double c0 = wdot(yf, one) / n00;
    const long double c1 = wdot(yf, p1) / n11;
    const long double c2 = wdot(yf, p2) / n22;
    const long double c3 = (m >= 8) ? wdot(yf, p3) / n33 : 0.0L;

    // expand into monomial coefficients: p1 = u - a1,
    // p2 = u^2 - (a1+a2) u + (a1 a2 - g2),
    // p3 = u^3 - (a1+a2+a3) u^2 + (a1 a2 + a1 a3 + a2 a3 - g2 - g3) u
    //      - (a1 a2 a3 - g2 a3 - g3 a1)
    const double b3 = (double)c3;
    const double b2 = (double)(c2 - c3 * (a1 + a2 + a3));
    const double b1 =
        (double)(c1 - c2 * (a1 + a2) + c3 * (a1 * a2 + a1 * a3 + a2 * a3 - g2 - g3));
    const double b0 = (double)(c0 - c1 * a1 + c2 * (a1 * a2 - g2) -
                               c3 * (a1 * a2 * a3 - g2 * a3 - g3 * a1));

    auto f = [&](double v) { return b0 + v * (b1 + v * (b2 + v * b3)); };
    auto fp = [&](double v) { return b1 + v * (2.0 * b2 + v * 3.0 * b3); };

    // bracket the zero crossing just past the last sample and refine
    const double u_last = (series.t.back() - tbar) / span;
    const double f_last = f(u_last);
    if (f_last <= 0.0) throw InsufficientWindow("fit already nonpositive at the last sample");
    double lo = u_last, hi = u_last;
    double stride = std::max(1e-18, 2.0 * f_last / std::abs(b1));
    bool bracketed = false;
    for (int it = 0; it < 200 && !bracketed; ++it) {
        hi = lo + stride;
        if (f(hi) <= 0.0) bracketed = true;
        else lo = hi;
        stride *= 2.0;
        if (hi - u_last > 10.0) break;
    }
    if (!bracketed) throw InsufficientWindow("fit has no blow-up time past the last sample");
    double u_root = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double fm = f(u_root);
        const double d = fp(u_root);
        double cand = (d != 0.0) ? u_root - fm / d : u_root;
        if (!(cand > lo && cand < hi)) cand = 0.5 * (lo + hi);
        if ((f(cand) > 0.0)) lo = cand;
        else hi = cand;
        u_root = 0.5 * (lo + hi);
        if (hi - lo < 1e-17 * std::max(1.0, std::abs(u_root))) break;
    }

    BlowupEstimate est;
    est.t_est = tbar + span * u_root;
    est.rate = std::abs(fp(u_root)) / span;
    est.window_lo = series.t[idx.front()];
    est.window_hi = series.t[idx.back()];
    if (!(est.t_est > series.t.back()))
        throw InsufficientWindow("fitted blow-up time does not exceed the last sample");
    return est;
}

/// Max relative residual of X(t) = [T - t - int_t^T (frakA/X + calA/X^2)]^{-1}
/// over the fit window. The integral runs over the recorded series; the tail
/// beyond the last sample is extrapolated with the fitted rate-1 asymptote
/// X ~ 1/(T - s). As in envelope_bound_check, samples in the last two
/// decades of approach are excluded: the residual there measures only the
/// uncertainty of t_est itself.
inline double identity_residual(const RiccatiSeries& series, double t_est) {
    if (!series.reached_guard)
        throw InsufficientWindow("series did not reach the blow-up guard");
    const auto idx = detail::fit_window(series);
    const double dt_floor = 100.0 * std::max(t_est - series.t.back(), 0.0);
    const int m = (int)series.t.size();

    // suffix trapezoid of frakA/X + calA/X^2 from each sample to the last
    std::vector<double> suffix(m, 0.0);
    auto integrand = [&](int i) {
        return series.frak_a[i] / series.x[i] + series.cal_a[i] / (series.x[i] * series.x[i]);
    };
    for (int i = m - 2; i >= 0; --i)
        suffix[i] = suffix[i + 1] +
                    0.5 * (integrand(i) + integrand(i + 1)) * (series.t[i + 1] - series.t[i]);
    const double dt_tail = t_est - series.t.back();
    const double tail = series.frak_a.back() * dt_tail * dt_tail / 2.0 +
                        series.cal_a.back() * dt_tail * dt_tail * dt_tail / 3.0;

    double worst = 0.0;
    bool any = false;
    for (int i : idx) {
        if (t_est - series.t[i] <= dt_floor) continue;
        const double denom = t_est - series.t[i] - (suffix[i] + tail);
        if (denom <= 0.0) return std::numeric_limits<double>::infinity();
        const double rhs = 1.0 / denom;
        worst = std::max(worst, std::abs(series.x[i] - rhs) / std::abs(series.x[i]));
        any = true;
    }
    if (!any) throw InsufficientWindow("no samples outside the undecidable terminal band");
    return worst;
}

/// Measured sup of |frakA| + |calA| over a recorded series.
inline double measured_c6(const RiccatiSeries& series) {
    double c6 = 0.0;
    for (int i = 0; i < (int)series.t.size(); ++i)
        c6 = std::max(c6, std::abs(series.frak_a[i]) + std::abs(series.cal_a[i]));
    return c6;
}

struct BoundCheck {
    bool pass = false;
    double min_margin = 0.0;
};

/// Verify X(t) <= (1 + (1 + 2 c6)(T - t))/(T - t) on the fit window. The last
/// two decades of approach are left out: there T_est's own uncertainty (of
/// order T_est minus the final sample time) dominates the bound's slack and
/// the comparison is not decidable.
inline BoundCheck envelope_bound_check(const RiccatiSeries& series, double t_est, double c6) {
    const auto idx = detail::fit_window(series);
    const double dt_floor = 100.0 * std::max(t_est - series.t.back(), 0.0);
    BoundCheck r;
    r.min_margin = std::numeric_limits<double>::infinity();
    for (int i : idx) {
        const double dt = t_est - series.t[i];
        if (dt <= dt_floor) continue;
        const double bound = (1.0 + (1.0 + 2.0 * c6) * dt) / dt;
        r.min_margin = std::min(r.min_margin, bound - series.x[i]);
    }
    if (!std::isfinite(r.min_margin))
        throw InsufficientWindow("no samples outside the undecidable terminal band");
    r.pass = r.min_margin >= 0.0;
    return r;
}

// ---------------------------------------------------------------------------
// Closed-form transport solution by quadrature.

/// s(t) = s0 exp(-A(t)) - exp(-A(t)) int_0^t f(r) exp(A(r)) dr with
/// A(t) = int_0^t a. Both integrals by composite Simpson on a fine fixed
/// grid; this path evaluates the integrating-factor formula and never
/// integrates the transport ODE itself.
inline double integrating_factor_solution(double s0, const TimeFunction& a,
                                          const TimeFunction& f, double t,
                                          int panels = 2048) {
    if (t == 0.0) return s0;
    const double h = t / panels;
    double A = 0.0;      // cumulative integral of a
    double B = 0.0;      // cumulative integral of f exp(A)
    double a_lo = a(0.0);
    double g_lo = f(0.0) * std::exp(A);
    for (int i = 0; i < panels; ++i) {
        const double t_lo = i * h;
        const double a_q = a(t_lo + 0.25 * h);
        const double a_mid = a(t_lo + 0.5 * h);
        const double a_3q = a(t_lo + 0.75 * h);
        const double a_hi = a(t_lo + h);
        const double A_mid = A + h / 12.0 * (a_lo + 4.0 * a_q + a_mid);
        const double A_hi = A_mid + h / 12.0 * (a_mid + 4.0 * a_3q + a_hi);
        const double g_mid = f(t_lo + 0.5 * h) * std::exp(A_mid);
        const double g_hi = f(t_lo + h) * std::exp(A_hi);
        B += h / 6.0 * (g_lo + 4.0 * g_mid + g_hi);
        A = A_hi;
        a_lo = a_hi;
        g_lo = g_hi;
    }
    return std::exp(-A) * (s0 - B);
}

// ---------------------------------------------------------------------------
// Persistence.

inline void write_riccati_series(std::ostream& os, const RiccatiSeries& s) {
    os << "# t X frakA calA\n";
    char buf[160];
    for (int i = 0; i < (int)s.t.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g\n", s.t[i], s.x[i],
                      s.frak_a[i], s.cal_a[i]);
        os << buf;
    }
}

inline void write_blowup_report(std::ostream& os, const BlowupEstimate& e) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "T_est = %.17g\n", e.t_est);
    os << buf;
    std::snprintf(buf, sizeof buf, "rate = %.17g\n", e.rate);
    os << buf;
    std::snprintf(buf, sizeof buf, "window = [%.17g, %.17g]\n", e.window_lo, e.window_hi);
    os << buf;
    std::snprintf(buf, sizeof buf, "identity_residual = %.17g\n", e.residual);
    os << buf;
}

} // namespace vsheet
