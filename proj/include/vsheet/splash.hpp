#pragma once

// Diagnostics around a putative splash: tracked point pairs, the vertical
// projection onto the facing wall, the path-integral decomposition of the
// velocity difference (one vertical leg through the minus phase, one leg
// along the interface), the 2x2 separation matrix M(t) with delta_eta_t =
// M delta_eta, the quantitative flatness (cone) condition, the power-law
// separation lower bound, passive marker-area monitoring, and the minimum
// metric monitor.
//
// Everything here reads immutable recorded state; nothing advances time.

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "vsheet/birkhoff_rott.hpp"
#include "vsheet/curve.hpp"
#include "vsheet/errors.hpp"
#include "vsheet/geometry.hpp"

namespace vsheet {

struct Mat2 {
    double a11 = 0, a12 = 0, a21 = 0, a22 = 0;
};

/// One recorded output frame of a run.
struct HistoryFrame {
    InterfaceState state;
    VelocityField velocity;
};

struct PairTrace {
    int index0 = 0, index1 = 0;  // grid indices of the tracked labels
    double label0 = 0, label1 = 0;
    std::vector<double> times;
    std::vector<Vec2> delta_eta; // eta(x0) - eta(x1)
    std::vector<Vec2> delta_u;   // u-(eta(x0)) - u-(eta(x1))
    std::vector<Mat2> matrix;    // filled by extract_matrix
};

struct ConeReport {
    double label = 0;
    double value = 0;   // |N.e1| + |T.e2| in the rotated frame
    double epsilon = 0; // threshold
    double frame_angle = 0;
    bool pass = false;
};

struct MarkerRegion {
    MarkerSet boundary; // advected by the minus-phase flow inside step()

    double area() const {
        const auto& v = boundary.vertices;
        double a = 0.0;
        for (size_t i = 0; i < v.size(); ++i) a += cross(v[i], v[(i + 1) % v.size()]);
        return 0.5 * a;
    }

    /// The polygon stays valid only while its boundary is simple.
    bool simple() const {
        const auto& v = boundary.vertices;
        const size_t m = v.size();
        auto orient = [](Vec2 a, Vec2 b, Vec2 c) { return cross(b - a, c - a); };
        for (size_t i = 0; i < m; ++i) {
            const Vec2 a = v[i], b = v[(i + 1) % m];
            for (size_t j = i + 1; j < m; ++j) {
                if (j == i || (j + 1) % m == i || (i + 1) % m == j) continue;
                const Vec2 c = v[j], d = v[(j + 1) % m];
                const double o1 = orient(a, b, c), o2 = orient(a, b, d);
                const double o3 = orient(c, d, a), o4 = orient(c, d, b);
                if (((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0))) return false;
            }
        }
        return true;
    }
};

inline MarkerRegion make_square_marker(Vec2 center, double side, int per_side = 8) {
    MarkerRegion r;
    const double h = side / per_side;
    const Vec2 c0 = center - Vec2{side / 2, side / 2};
    for (int i = 0; i < per_side; ++i) r.boundary.vertices.push_back(c0 + Vec2{i * h, 0});
    for (int i = 0; i < per_side; ++i) r.boundary.vertices.push_back(c0 + Vec2{side, i * h});
    for (int i = 0; i < per_side; ++i)
        r.boundary.vertices.push_back(c0 + Vec2{side - i * h, side});
    for (int i = 0; i < per_side; ++i) r.boundary.vertices.push_back(c0 + Vec2{0, side - i * h});
    return r;
}

// ---------------------------------------------------------------------------
// Pair tracking.

inline PairTrace track_pair(const std::vector<HistoryFrame>& history, int index0, int index1) {
    if (history.empty()) throw Error("track_pair: empty history");
    const int n = history.front().state.curve.size();
    if (index0 < 0 || index0 >= n || index1 < 0 || index1 >= n || index0 == index1)
        throw Error("track_pair: labels out of range");
    PairTrace tr;
    tr.index0 = index0;
    tr.index1 = index1;
    tr.label0 = history.front().state.curve.grid.label(index0);
    tr.label1 = history.front().state.curve.grid.label(index1);
    for (const auto& f : history) {
        tr.times.push_back(f.state.time);
        tr.delta_eta.push_back(f.state.curve.positions[index0] - f.state.curve.positions[index1]);
        tr.delta_u.push_back(f.velocity.u_minus[index0] - f.velocity.u_minus[index1]);
    }
    return tr;
}

// ---------------------------------------------------------------------------
// Vertical projection.

struct VerticalProjection {
    double label = 0;
    Vec2 point;
    int bracket_count = 0; // sign changes seen by the scan (1 under the cone condition)
};

/// Unique parameter in [window_lo, window_hi] where eta_1 equals point.x,
/// located by a bracketing scan on the trigonometric interpolant and
/// bisection/Newton refinement. The window must be horizontally monotone
/// (cone condition |T.e2| < 1); otherwise NonMonotone is thrown.
inline VerticalProjection vertical_projection(const Curve& curve, Vec2 point, double window_lo,
                                              double window_hi) {
    if (!(window_hi > window_lo)) throw Error("vertical_projection: empty window");
    CurveInterpolant interp(curve);
    const int scans = std::max(64, 8 * (int)std::ceil((window_hi - window_lo) /
                                                      curve.grid.spacing()));

    // monotonicity of eta_1 over the window (Rolle: a turning tangent would
    // make the vertical line cross more than once)
    double prev_d = interp.derivative(window_lo).x;
    for (int i = 1; i <= scans; ++i) {
        const double x = window_lo + (window_hi - window_lo) * i / scans;
        const double d = interp.derivative(x).x;
        if (d == 0.0 || (d > 0) != (prev_d > 0))
            throw NonMonotone("window tangent turns vertical; projection not unique");
        prev_d = d;
    }

    auto g = [&](double x) { return interp.position(x).x - point.x; };
    double lo = window_lo, hi = window_hi;
    double glo = g(lo), ghi = g(hi);
    if ((glo > 0) == (ghi > 0))
        throw NoIntersection("vertical line misses the window's horizontal span");
    int brackets = 0;
    double pg = glo;
    for (int i = 1; i <= scans; ++i) {
        const double x = window_lo + (window_hi - window_lo) * i / scans;
        const double gv = g(x);
        if ((pg > 0) != (gv > 0)) ++brackets;
        pg = gv;
    }

    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double gm = g(mid);
        // Newton candidate from the midpoint
        const double dm = interp.derivative(mid).x;
        if (dm != 0.0) {
            const double cand = mid - gm / dm;
            if (cand > lo && cand < hi) {
                const double gc = g(cand);
                if (std::abs(gc) < 1e-15 * (1.0 + std::abs(point.x))) {
                    VerticalProjection r;
                    r.label = cand;
                    r.point = interp.position(cand);
                    r.bracket_count = brackets;
                    return r;
                }
                if ((gc > 0) == (glo > 0)) {
                    lo = cand;
                    glo = gc;
                } else {
                    hi = cand;
                    ghi = gc;
                }
                continue;
            }
        }
        if ((gm > 0) == (glo > 0)) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
            ghi = gm;
        }
        if (hi - lo < 1e-15) break;
    }
    VerticalProjection r;
    r.label = 0.5 * (lo + hi);
    r.point = interp.position(r.label);
    r.bracket_count = brackets;
    return r;
}

// ---------------------------------------------------------------------------
// On-curve velocity gradient from boundary data.

/// Full Cartesian gradient of the minus-side velocity at the nodes, built
/// from tangential derivatives of the boundary values and the div/curl-free
/// identities grad_N u . n = -grad_T u . tau, grad_N u . tau = grad_T u . n.
inline std::vector<Mat2> boundary_velocity_gradient(const Curve& curve,
                                                    const std::vector<Vec2>& u,
                                                    const GeometrySnapshot& geom) {
    const int n = curve.size();
    const auto& sp = spectral(n);
    std::vector<double> u1(n), u2(n);
    for (int j = 0; j < n; ++j) {
        u1[j] = u[j].x;
        u2[j] = u[j].y;
    }
    auto d1 = sp.derivative(u1);
    auto d2 = sp.derivative(u2);
    std::vector<Mat2> out(n);
    for (int j = 0; j < n; ++j) {
        const Vec2 gt{geom.metric_inv[j] * d1[j], geom.metric_inv[j] * d2[j]}; // grad_T u
        const double gt_tau = dot(gt, geom.tangent[j]);
        const double gt_n = dot(gt, geom.normal[j]);
        // grad_N u = (grad_T u . n) tau - (grad_T u . tau) n
        const Vec2 gn = gt_n * geom.tangent[j] - gt_tau * geom.normal[j];
        // d_j u_i = (grad_T u_i) tau_j + (grad_N u_i) n_j
        out[j].a11 = gt.x * geom.tangent[j].x + gn.x * geom.normal[j].x;
        out[j].a12 = gt.x * geom.tangent[j].y + gn.x * geom.normal[j].y;
        out[j].a21 = gt.y * geom.tangent[j].x + gn.y * geom.normal[j].x;
        out[j].a22 = gt.y * geom.tangent[j].y + gn.y * geom.normal[j].y;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Path decomposition.

struct PathDecomposition {
    // row-1 pieces, as in the estimate for delta u_1
    double vertical_integral = 0;   // int over the vertical leg of du2/dx1 dy
    double tangential_integral = 0; // int along the interface of grad_T u1 ds
    double total = 0;               // their sum; equals delta u_1 directly
    double direct = 0;              // u1(x0) - u1(x1) from the samples

    // mean-value averages feeding the separation matrix
    double v1 = 0, v2 = 0; // vertical-leg averages of du2/dx1 (= d2u1) and d2u2
    double a1 = 0, a2 = 0; // interface-leg averages of d1u1, d1u2 against delta eta_1
    double b1 = 0, b2 = 0; // interface-leg averages of d2u1, d2u2 against w
    double w = 0;          // eta_2(z) - eta_2(x1), the Claim-1 small height
    Vec2 delta_eta;
    double z_label = 0;
    Vec2 z_point;
    double time = 0;
};

namespace detail {

/// Integral of the natural cubic spline through (x_i, y_i) over [x_0, x_m].
inline double spline_integral(const std::vector<double>& x, const std::vector<double>& y) {
    const int m = (int)x.size();
    if (m < 2) return 0.0;
    if (m == 2) return 0.5 * (y[0] + y[1]) * (x[1] - x[0]);
    std::vector<double> h(m - 1);
    for (int i = 0; i + 1 < m; ++i) h[i] = x[i + 1] - x[i];
    // tridiagonal system for second derivatives, natural ends
    std::vector<double> a(m, 0), b(m, 0), c(m, 0), r(m, 0), mm(m, 0);
    b[0] = b[m - 1] = 1.0;
    for (int i = 1; i + 1 < m; ++i) {
        a[i] = h[i - 1];
        b[i] = 2.0 * (h[i - 1] + h[i]);
        c[i] = h[i];
        r[i] = 6.0 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1]);
    }
    for (int i = 1; i < m; ++i) {
        const double f = a[i] / b[i - 1];
        b[i] -= f * c[i - 1];
        r[i] -= f * r[i - 1];
    }
    mm[m - 1] = r[m - 1] / b[m - 1];
    for (int i = m - 2; i >= 0; --i) mm[i] = (r[i] - c[i] * mm[i + 1]) / b[i];
    double integral = 0.0;
    for (int i = 0; i + 1 < m; ++i)
        integral += 0.5 * h[i] * (y[i] + y[i + 1]) - h[i] * h[i] * h[i] * (mm[i] + mm[i + 1]) / 24.0;
    return integral;
}

/// Integral of the trig interpolant of periodic node samples from label a to
/// label b (signed).
inline double periodic_sample_integral(const std::vector<double>& samples, double a, double b) {
    const auto& sp = spectral((int)samples.size());
    auto c = sp.coefficients(samples);
    const double mean = c[0].real();
    auto anti = antiderivative_coefficients(c);
    return mean * (b - a) + trig_eval(anti, b) - trig_eval(anti, a);
}

} // namespace detail

/// Decompose delta u- between tracked labels into the vertical leg through
/// the minus phase (from the projection point z up/down to eta(x0)) and the
/// interface leg (from eta(x1) to z). Off-curve gradients come from centered
/// differences of `off_eval` with offset max(1e-4, 0.1 x distance-to-curve);
/// integrand values inside the 2.5-grid-spacing evaluation ban are replaced
/// by the spline through the trustworthy samples plus the exact on-curve
/// endpoint gradients.
inline PathDecomposition path_decomposition_core(
    const Curve& curve, const std::vector<Vec2>& u_minus, const GeometrySnapshot& geom,
    const std::function<Vec2(Vec2)>& off_eval, int index0, int index1, double window_half_width,
    double safe_distance) {
    const int n = curve.size();
    PathDecomposition out;
    const Vec2 p0 = curve.positions[index0];
    const Vec2 p1 = curve.positions[index1];
    const double lbl1 = curve.grid.label(index1);
    out.delta_eta = p0 - p1;

    auto proj = vertical_projection(curve, p0, lbl1 - window_half_width,
                                    lbl1 + window_half_width);
    out.z_label = proj.label;
    out.z_point = proj.point;
    out.w = proj.point.y - p1.y;

    // the vertical segment must stay in the minus phase (64 interior probes)
    const PhaseOracle phase(curve);
    for (int i = 1; i < 64; ++i) {
        const double t = i / 64.0;
        const Vec2 q{p0.x, proj.point.y + t * (p0.y - proj.point.y)};
        if (phase(q) != Phase::Minus)
            throw SegmentExitsPhase("vertical probe segment leaves the minus phase");
    }

    // --- vertical leg: quadrature of d2(u1, u2) = (d1u2, -d1u1) from z to p0
    const auto grad_nodes = boundary_velocity_gradient(curve, u_minus, geom);
    CurveInterpolant interp(curve);
    auto grad_entry = [&](double label, int which) {
        // spectral interpolation of a gradient entry along the curve
        std::vector<double> s(n);
        for (int j = 0; j < n; ++j)
            s[j] = which == 0   ? grad_nodes[j].a11
                   : which == 1 ? grad_nodes[j].a12
                   : which == 2 ? grad_nodes[j].a21
                                : grad_nodes[j].a22;
        auto c = spectral(n).coefficients(s);
        return trig_eval(c, label);
    };

    const double y_lo = proj.point.y, y_hi = p0.y;
    const double seg_len = std::abs(y_hi - y_lo);
    std::vector<double> xs, g12, g22; // samples of d1u2 and d2u2 along the segment
    // on-curve anchors at both ends
    xs.push_back(0.0);
    g12.push_back(grad_entry(proj.label, 2)); // d1u2 at z
    g22.push_back(grad_entry(proj.label, 3)); // d2u2 at z
    const int quad_nodes = 24;
    for (int i = 1; i <= quad_nodes; ++i) {
        const double t = double(i) / (quad_nodes + 1);
        const Vec2 q{p0.x, y_lo + t * (y_hi - y_lo)};
        double dist = std::numeric_limits<double>::infinity();
        for (int j = 0; j < n; ++j) dist = std::min(dist, norm(q - curve.positions[j]));
        if (dist < safe_distance) continue;
        const double h = std::max(1e-4, 0.1 * dist);
        const Vec2 vp = off_eval({q.x + h, q.y});
        const Vec2 vm = off_eval({q.x - h, q.y});
        const Vec2 vp2 = off_eval({q.x + 2 * h, q.y});
        const Vec2 vm2 = off_eval({q.x - 2 * h, q.y});
        // 4-point centered differences in x give d1u; div/curl-free fill the rest
        const double d1u1 = (-vp2.x + 8 * vp.x - 8 * vm.x + vm2.x) / (12 * h);
        const double d1u2 = (-vp2.y + 8 * vp.y - 8 * vm.y + vm2.y) / (12 * h);
        xs.push_back(t * seg_len);
        g12.push_back(d1u2);
        g22.push_back(-d1u1); // d2u2 = -d1u1
    }
    xs.push_back(seg_len);
    g12.push_back(grad_entry(curve.grid.label(index0), 2));
    g22.push_back(grad_entry(curve.grid.label(index0), 3));

    const double dir = (y_hi >= y_lo) ? 1.0 : -1.0;
    // int from z to p0 of d2u1 dy, with d2u1 = d1u2 (curl-free)
    out.vertical_integral = dir * detail::spline_integral(xs, g12);
    const double vertical2 = dir * detail::spline_integral(xs, g22);
    const double dy = p0.y - proj.point.y;
    out.v1 = (std::abs(dy) > 1e-14) ? out.vertical_integral / dy : g12.front();
    out.v2 = (std::abs(dy) > 1e-14) ? vertical2 / dy : g22.front();

    // --- interface leg from eta(x1) to z, split into coordinate pieces
    std::vector<double> i11(n), i12(n), i21(n), i22(n);
    const auto dpos = geom.position_derivative;
    for (int j = 0; j < n; ++j) {
        i11[j] = grad_nodes[j].a11 * dpos[j].x; // d1u1 eta1'
        i12[j] = grad_nodes[j].a12 * dpos[j].y; // d2u1 eta2'
        i21[j] = grad_nodes[j].a21 * dpos[j].x; // d1u2 eta1'
        i22[j] = grad_nodes[j].a22 * dpos[j].y; // d2u2 eta2'
    }
    const double c11 = detail::periodic_sample_integral(i11, lbl1, proj.label);
    const double c12 = detail::periodic_sample_integral(i12, lbl1, proj.label);
    const double c21 = detail::periodic_sample_integral(i21, lbl1, proj.label);
    const double c22 = detail::periodic_sample_integral(i22, lbl1, proj.label);
    out.tangential_integral = c11 + c12; // int of grad_T u1 ds from x1 to z
    const double de1 = out.delta_eta.x;
    out.a1 = (std::abs(de1) > 1e-14) ? c11 / de1 : grad_entry(lbl1, 0);
    out.a2 = (std::abs(de1) > 1e-14) ? c21 / de1 : grad_entry(lbl1, 2);
    out.b1 = (std::abs(out.w) > 1e-14) ? c12 / out.w : grad_entry(lbl1, 1);
    out.b2 = (std::abs(out.w) > 1e-14) ? c22 / out.w : grad_entry(lbl1, 3);

    out.total = out.vertical_integral + out.tangential_integral;
    out.direct = u_minus[index0].x - u_minus[index1].x;
    return out;
}

/// Live wrapper over the BR field of a state.
inline PathDecomposition path_decomposition(const InterfaceState& state,
                                            const VelocityField& vel,
                                            const GeometrySnapshot& geom, int index0, int index1,
                                            double window_half_width = 0.4) {
    const BrWorkspace ws = make_br_workspace(state, geom);
    auto off = [&ws](Vec2 p) { return velocity_at_ws(ws, {p}, 1)[0]; };
    return path_decomposition_core(state.curve, vel.u_minus, geom, off, index0, index1,
                                   window_half_width, 2.5 * ws.mean_spacing);
}

// ---------------------------------------------------------------------------
// Separation matrix extraction.

struct CoefficientSample {
    double time = 0;
    double beta1 = 0, alpha2 = 0, eps1 = 0, e2 = 0;
    bool in_range = false;
};

struct MatrixExtraction {
    std::vector<Mat2> matrices;
    std::vector<CoefficientSample> coefficients; // only when t_est was supplied
    bool all_in_range = true;
};

/// Assemble M(t) from per-time path decompositions: the vertical leg feeds
/// the second column (mean-value average against delta eta_2), the interface
/// leg the first; the Claim-1 height w, itself proportional to delta eta_1,
/// is folded into column 1. With t_est given, also report
/// beta1 = -(T-t) M11, eps1 = (T-t) M12, E2 = (T-t) M21, alpha2 = (T-t) M22
/// and flag the ranges beta1, alpha2 in [-2 eps, 1 + 2 c9 (T-t)],
/// eps1, E2 in [-2 eps, 2 eps] with c9 = 1 + 2 c6.
inline MatrixExtraction extract_matrix(PairTrace& trace,
                                       const std::vector<PathDecomposition>& aux,
                                       std::optional<double> t_est = std::nullopt,
                                       double epsilon = 0.0, double c6 = 0.0,
                                       double curve_scale = 1.0) {
    if (aux.size() != trace.times.size())
        throw Error("extract_matrix: one decomposition per trace sample required");
    MatrixExtraction out;
    trace.matrix.clear();
    for (size_t i = 0; i < aux.size(); ++i) {
        const auto& d = aux[i];
        const Vec2 de = d.delta_eta;
        if (norm(de) < 1e-12 * curve_scale)
            throw DegeneratePair("tracked pair separation below 1e-12 of the curve scale");
        Mat2 m;
        m.a12 = d.v1;
        m.a22 = d.v2;
        if (std::abs(de.x) > 1e-12 * curve_scale) {
            m.a11 = d.a1 + (d.b1 - d.v1) * d.w / de.x;
            m.a21 = d.a2 + (d.b2 - d.v2) * d.w / de.x;
        } else if (std::abs(de.y) > 1e-12 * curve_scale) {
            // degenerate horizontal separation: attribute the w terms to column 2
            m.a11 = d.a1;
            m.a21 = d.a2;
            m.a12 += (d.b1 - d.v1) * d.w / de.y;
            m.a22 += (d.b2 - d.v2) * d.w / de.y;
        } else {
            m.a11 = d.a1;
            m.a21 = d.a2;
        }
        trace.matrix.push_back(m);
        out.matrices.push_back(m);

        if (t_est) {
            const double dt = *t_est - trace.times[i];
            CoefficientSample c;
            c.time = trace.times[i];
            c.beta1 = -dt * m.a11;
            c.eps1 = dt * m.a12;
            c.e2 = dt * m.a21;
            c.alpha2 = dt * m.a22;
            const double c9 = 1.0 + 2.0 * c6;
            const double hi = 1.0 + 2.0 * c9 * dt;
            c.in_range = c.beta1 >= -2.0 * epsilon && c.beta1 <= hi && c.alpha2 >= -2.0 * epsilon &&
                         c.alpha2 <= hi && std::abs(c.eps1) <= 2.0 * epsilon &&
                         std::abs(c.e2) <= 2.0 * epsilon;
            out.all_in_range = out.all_in_range && c.in_range;
            out.coefficients.push_back(c);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Separation lower bound.

struct SeparationBound {
    bool pass = false;
    double min_margin = 0; // min over samples of (|de|^2 - rhs)/rhs
};

/// Verify |delta eta(t)|^2 >= |delta eta(t_a)|^2 (T-t)^{2+C eps} / (T-t_a)^{2+C eps}
/// pointwise over the trace, t_a being the first sample.
inline SeparationBound separation_lower_bound_check(const PairTrace& trace, double t_est,
                                                    double epsilon, double C) {
    if (trace.times.empty()) throw Error("separation bound: empty trace");
    if (!(t_est > trace.times.back()))
        throw Error("separation bound: t_est must exceed the trace window");
    const double expo = 2.0 + C * epsilon;
    const double t_a = trace.times.front();
    const double base = norm2(trace.delta_eta.front());
    SeparationBound r;
    r.min_margin = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < trace.times.size(); ++i) {
        const double rhs = base * std::pow((t_est - trace.times[i]) / (t_est - t_a), expo);
        const double margin = (norm2(trace.delta_eta[i]) - rhs) / rhs;
        r.min_margin = std::min(r.min_margin, margin);
    }
    r.pass = r.min_margin >= -1e-12;
    return r;
}

// ---------------------------------------------------------------------------
// Cone condition.

/// |N.e1| + |T.e2| per label in the frame rotated so the putative contact
/// tangent (at angle frame_angle) becomes e1.
inline std::vector<ConeReport> cone_check(const Curve& curve, const std::vector<int>& indices,
                                          double frame_angle, double epsilon) {
    const auto geom = geometry(curve);
    const double c = std::cos(frame_angle), s = std::sin(frame_angle);
    auto rot = [&](Vec2 v) { return Vec2{c * v.x + s * v.y, -s * v.x + c * v.y}; };
    std::vector<ConeReport> out;
    for (int j : indices) {
        if (j < 0 || j >= curve.size()) throw Error("cone_check: label out of range");
        ConeReport r;
        r.label = curve.grid.label(j);
        const Vec2 t = rot(geom.tangent[j]);
        const Vec2 nn = rot(geom.normal[j]);
        r.value = std::abs(nn.x) + std::abs(t.y);
        r.epsilon = epsilon;
        r.frame_angle = frame_angle;
        r.pass = r.value < epsilon;
        out.push_back(r);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Marker area series.

inline std::vector<double> marker_area_series(const std::vector<MarkerRegion>& snapshots) {
    std::vector<double> a;
    a.reserve(snapshots.size());
    for (const auto& s : snapshots) a.push_back(s.area());
    return a;
}

// ---------------------------------------------------------------------------
// Minimum metric monitor.

struct MetricSample {
    double time = 0;
    double min_metric = 0;   // min |eta'|
    double sup_gradient = 0; // finite-difference sup of |grad u-| at probes
    double ratio = 0;        // sup_gradient * min_metric, the empirical bound proxy
};

/// Per frame: min |eta'| and the sup of the finite-difference velocity
/// gradient at probes 2.5 mean spacings into the minus phase (every
/// max(1, N/32) nodes); the product is the run's empirical stand-in for the
/// bound sup|grad u-| <= const / min|eta'|.
inline std::vector<MetricSample> min_metric_monitor(const std::vector<HistoryFrame>& history) {
    std::vector<MetricSample> out;
    for (const auto& f : history) {
        const auto geom = geometry(f.state.curve);
        const BrWorkspace ws = make_br_workspace(f.state, geom);
        MetricSample m;
        m.time = f.state.time;
        m.min_metric = *std::min_element(geom.metric.begin(), geom.metric.end());
        const int n = f.state.curve.size();
        const int stride = std::max(1, n / 32);
        const double d = 2.5 * ws.mean_spacing;
        const double h = std::max(1e-4, 0.1 * d);
        double sup = 0.0;
        for (int j = 0; j < n; j += stride) {
            const Vec2 q = f.state.curve.positions[j] + d * geom.normal[j];
            try {
                auto v = velocity_at_ws(ws, {{q.x + h, q.y}, {q.x - h, q.y}}, 1);
                const double d1u1 = (v[0].x - v[1].x) / (2 * h);
                const double d1u2 = (v[0].y - v[1].y) / (2 * h);
                sup = std::max({sup, std::abs(d1u1), std::abs(d1u2)});
            } catch (const PointTooClose&) {
                // probe fell into another wall's exclusion band; skip it
            }
        }
        m.sup_gradient = sup;
        m.ratio = sup * m.min_metric;
        out.push_back(m);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Bracketing points around a cone-flat window.

struct BracketCheck {
    double left_offset = 0;  // |eta_1(X^l) - eta_1(x1)|
    double right_offset = 0; // |eta_1(X^r) - eta_1(x1)|
    double lo = 0, hi = 0;   // admissible band [eps/(4 c7), eps/(2 c7)]
    bool pass = false;
};

/// Points at arc distance eps/(4 c7 (1-eps)) on each side of the label have
/// horizontal offsets within [eps/(4 c7), eps/(2 c7)], where c7 is the
/// measured curvature proxy sup|H| (1+eps).
inline BracketCheck bracket_points_check(const Curve& curve, int index, double epsilon) {
    const auto geom = geometry(curve);
    double supH = 0.0;
    for (double h : geom.curvature) supH = std::max(supH, std::abs(h));
    const double c7 = supH * (1.0 + epsilon);
    if (c7 <= 0.0) throw Error("bracket_points_check: flat window has no curvature scale");
    const double target = epsilon / (4.0 * c7 * (1.0 - epsilon));

    ArcLength arc(curve);
    const double s0 = arc.cumulative(curve.grid.label(index));
    CurveInterpolant interp(curve);
    auto label_at_arc = [&](double s_target, double guess) {
        double x = guess;
        for (int it = 0; it < 60; ++it) {
            const double f = arc.cumulative(x) - s_target;
            const double d = norm(interp.derivative(x));
            x -= f / d;
        }
        return x;
    };
    const double x0 = curve.grid.label(index);
    const double xl = label_at_arc(s0 - target, x0 - target / geom.metric[index]);
    const double xr = label_at_arc(s0 + target, x0 + target / geom.metric[index]);

    BracketCheck r;
    const double e1_0 = interp.position(x0).x;
    r.left_offset = std::abs(interp.position(xl).x - e1_0);
    r.right_offset = std::abs(interp.position(xr).x - e1_0);
    r.lo = epsilon / (4.0 * c7);
    r.hi = epsilon / (2.0 * c7);
    r.pass = r.left_offset >= r.lo && r.left_offset <= r.hi && r.right_offset >= r.lo &&
             r.right_offset <= r.hi;
    return r;
}

} // namespace vsheet
