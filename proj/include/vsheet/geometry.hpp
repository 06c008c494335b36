#pragma once

// Differential geometry of the sampled interface: metric factor G = 1/|eta'|,
// unit tangent/normal, curvature H = G(G eta')' . n and its tangential
// derivative, arc distances, chord-arc ratio, proximity detection, and the
// tangent Lipschitz bound |T(a) - T(b)| <= sup|H| d_Gamma(a,b).
//
// Conventions: n is tau rotated by +pi/2, so n points into the minus (upper)
// phase for left-to-right sheets and into the interior of CCW closed curves.

#include <algorithm>
#include <cmath>
#include <vector>

#include "vsheet/curve.hpp"
#include "vsheet/errors.hpp"
#include "vsheet/spectral.hpp"
#include "vsheet/vec2.hpp"

namespace vsheet {

struct GeometrySnapshot {
    std::vector<Vec2> position_derivative; // eta'
    std::vector<double> metric;            // |eta'|
    std::vector<double> metric_inv;        // G = 1/|eta'|
    std::vector<Vec2> tangent;             // tau
    std::vector<Vec2> normal;              // n = tau^perp
    std::vector<double> curvature;         // H
    std::vector<double> curvature_tangential_derivative; // grad_T H
};

struct ContactPair {
    double label_a = 0.0;
    double label_b = 0.0;
    double euclidean_gap = 0.0;
    double arc_gap = 0.0;
};

struct ContactReport {
    std::vector<ContactPair> pairs;
    double chord_arc_min = 0.0;
};

namespace detail {

inline void check_metric(const std::vector<double>& speed) {
    double mn = speed[0], sum = 0.0;
    for (double s : speed) {
        mn = std::min(mn, s);
        sum += s;
    }
    const double mean = sum / double(speed.size());
    if (mn < 1e-10 * mean)
        throw DegenerateMetric("min|eta'| below 1e-10 of its mean");
}

} // namespace detail

inline GeometrySnapshot geometry(const Curve& curve) {
    curve.validate();
    const int n = curve.size();
    const auto& sp = spectral(n);

    GeometrySnapshot g;
    g.position_derivative = curve.derivative();
    g.metric.resize(n);
    g.metric_inv.resize(n);
    g.tangent.resize(n);
    g.normal.resize(n);
    for (int j = 0; j < n; ++j) {
        g.metric[j] = norm(g.position_derivative[j]);
        g.metric_inv[j] = 1.0 / g.metric[j];
        g.tangent[j] = g.position_derivative[j] * g.metric_inv[j];
        g.normal[j] = perp(g.tangent[j]);
    }
    detail::check_metric(g.metric);

    // H n = G (G eta')' = G tau'; project onto n.
    std::vector<double> t1(n), t2(n);
    for (int j = 0; j < n; ++j) {
        t1[j] = g.tangent[j].x;
        t2[j] = g.tangent[j].y;
    }
    auto d1 = sp.derivative(t1);
    auto d2 = sp.derivative(t2);
    g.curvature.resize(n);
    for (int j = 0; j < n; ++j)
        g.curvature[j] = g.metric_inv[j] * (d1[j] * g.normal[j].x + d2[j] * g.normal[j].y);

    auto dh = sp.derivative(g.curvature);
    g.curvature_tangential_derivative.resize(n);
    for (int j = 0; j < n; ++j)
        g.curvature_tangential_derivative[j] = g.metric_inv[j] * dh[j];
    return g;
}

/// grad_T f sampled on the grid: G f' with f' spectral.
inline std::vector<double> tangential_derivative(const std::vector<double>& f,
                                                 const GeometrySnapshot& g) {
    const int n = (int)f.size();
    auto df = spectral(n).derivative(f);
    std::vector<double> out(n);
    for (int j = 0; j < n; ++j) out[j] = g.metric_inv[j] * df[j];
    return out;
}

inline std::vector<double> tangential_derivative(const std::vector<double>& f,
                                                 const Curve& curve) {
    const auto deriv = curve.derivative();
    std::vector<double> speed((size_t)curve.size());
    for (int j = 0; j < curve.size(); ++j) speed[j] = norm(deriv[j]);
    detail::check_metric(speed);
    auto df = spectral(curve.size()).derivative(f);
    std::vector<double> out(curve.size());
    for (int j = 0; j < curve.size(); ++j) out[j] = df[j] / speed[j];
    return out;
}

/// Sum of sup norms of grad_T^i f for i = 0..k (k in {0,1,2}).
inline double winf_norm(const std::vector<double>& f, const Curve& curve, int k) {
    if (k < 0 || k > 2) throw Error("winf_norm: k must be 0, 1 or 2");
    auto sup = [](const std::vector<double>& v) {
        double m = 0.0;
        for (double x : v) m = std::max(m, std::abs(x));
        return m;
    };
    const auto g = geometry(curve);
    double total = sup(f);
    std::vector<double> cur = f;
    for (int i = 1; i <= k; ++i) {
        cur = tangential_derivative(cur, g);
        total += sup(cur);
    }
    return total;
}

// ---------------------------------------------------------------------------
// Arc length.

/// Cumulative arc length A(x) = integral of |eta'| from 0 to x, evaluable at
/// arbitrary labels. Spectrally accurate for analytic curves.
struct ArcLength {
    double mean_speed = 0.0;
    std::vector<std::complex<double>> anti; // periodic part of the antiderivative
    double anti0 = 0.0;

    explicit ArcLength(const Curve& curve) {
        const auto deriv = curve.derivative();
        std::vector<double> speed(curve.size());
        for (int j = 0; j < curve.size(); ++j) speed[j] = norm(deriv[j]);
        auto c = spectral(curve.size()).coefficients(speed);
        mean_speed = c[0].real();
        anti = antiderivative_coefficients(c);
        anti0 = trig_eval(anti, 0.0);
    }

    double cumulative(double x) const { return mean_speed * x + trig_eval(anti, x) - anti0; }
    double total_per_period() const { return mean_speed * two_pi; }
};

/// Shorter arc length between labels a and b.
inline double arc_distance(const Curve& curve, double a, double b) {
    ArcLength arc(curve);
    double d = std::abs(arc.cumulative(b) - arc.cumulative(a));
    if (curve.closed()) {
        const double total = arc.total_per_period();
        d = std::fmod(d, total);
        d = std::min(d, total - d);
    }
    return d;
}

// ---------------------------------------------------------------------------
// Chord-arc and proximity.

namespace detail {

/// Node-pair arc gap table driver: calls fn(i, j, euclid, arc) for all i < j.
template <class F>
inline void for_node_pairs(const Curve& curve, F&& fn) {
    const int n = curve.size();
    ArcLength arc(curve);
    std::vector<double> cum(n);
    for (int j = 0; j < n; ++j) cum[j] = arc.cumulative(curve.grid.label(j));
    const double total = arc.total_per_period();
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            double d = cum[j] - cum[i];
            if (curve.closed()) d = std::min(d, total - d);
            fn(i, j, norm(curve.positions[i] - curve.positions[j]), d);
        }
    }
}

} // namespace detail

/// min |eta(a) - eta(b)| / d_Gamma(a, b) over node pairs; pairs closer than
/// 3 grid spacings of arc are excluded (the ratio tends to 1 there).
inline double chord_arc(const Curve& curve) {
    ArcLength arc(curve);
    const double spacing = arc.total_per_period() / curve.size();
    double best = std::numeric_limits<double>::infinity();
    detail::for_node_pairs(curve, [&](int, int, double euclid, double d) {
        if (d < 3.0 * spacing) return;
        best = std::min(best, euclid / d);
    });
    return best;
}

/// All node pairs with Euclidean gap below the threshold and arc gap above
/// 5 grid spacings. A pair only counts as a splash candidate when its chord
/// is also well below its arc (ratio < 1/2), so near-flat stretches never
/// report their own neighbors however large the threshold. An empty report
/// means no splash candidate.
inline ContactReport detect_self_intersection(const Curve& curve, double gap_threshold) {
    if (gap_threshold <= 0.0) throw Error("detect_self_intersection: threshold must be > 0");
    ArcLength arc(curve);
    const double spacing = arc.total_per_period() / curve.size();
    ContactReport report;
    double best = std::numeric_limits<double>::infinity();
    detail::for_node_pairs(curve, [&](int i, int j, double euclid, double d) {
        if (d >= 3.0 * spacing) best = std::min(best, euclid / d);
        if (d > 5.0 * spacing && euclid < gap_threshold && euclid < 0.5 * d)
            report.pairs.push_back({curve.grid.label(i), curve.grid.label(j), euclid, d});
    });
    report.chord_arc_min = best;
    return report;
}

// ---------------------------------------------------------------------------
// Tangent Lipschitz bound.

struct TangentLipschitzResult {
    double max_ratio = 0.0;
    double bound = 0.0; // sup|H| on the 8x-refined interpolant
    bool pass = false;
};

inline TangentLipschitzResult tangent_lipschitz_check(const Curve& curve) {
    const auto g = geometry(curve);
    const int n = curve.size();

    TangentLipschitzResult r;
    detail::for_node_pairs(curve, [&](int i, int j, double, double d) {
        if (d <= 0.0) return;
        r.max_ratio = std::max(r.max_ratio, norm(g.tangent[i] - g.tangent[j]) / d);
    });

    auto ch = spectral(n).coefficients(g.curvature);
    const int fine = 8 * n;
    for (int j = 0; j < fine; ++j)
        r.bound = std::max(r.bound, std::abs(trig_eval(ch, two_pi * j / fine)));
    r.pass = r.max_ratio <= r.bound * (1.0 + 1e-6) + 1e-15;
    return r;
}

// ---------------------------------------------------------------------------
// Phase queries.

/// Signed area of a closed curve (positive for CCW traversal).
inline double signed_area(const Curve& curve) {
    double a = 0.0;
    const int n = curve.size();
    for (int j = 0; j < n; ++j)
        a += cross(curve.positions[j], curve.positions[(j + 1) % n]);
    return 0.5 * a;
}

enum class Phase { Plus, Minus };

/// Phase membership queries against a 4x spectrally refined polyline of the
/// curve. The minus phase is where the normal points: above open sheets,
/// inside CCW closed curves, outside CW ones.
class PhaseOracle {
  public:
    explicit PhaseOracle(const Curve& curve)
        : period_(curve.period_x), closed_(curve.closed()) {
        CurveInterpolant interp(curve);
        const int m = 4 * curve.size();
        pts_.resize(m + 1);
        for (int j = 0; j < m; ++j) pts_[j] = interp.position(two_pi * j / m);
        // close the polyline exactly so vertex-on-ray cases stay consistent
        pts_[m] = pts_[0] + Vec2{period_, 0.0};
        minus_inside_ = closed_ && signed_area(curve) > 0.0;
    }

    Phase operator()(Vec2 p) const {
        const bool odd = upward_ray_parity_odd(p);
        if (closed_) return (odd == minus_inside_) ? Phase::Minus : Phase::Plus;
        // open sheet: odd parity of the upward ray means the point is below
        return odd ? Phase::Plus : Phase::Minus;
    }

  private:
    bool upward_ray_parity_odd(Vec2 p) const {
        int crossings = 0;
        for (size_t j = 1; j < pts_.size(); ++j) {
            const Vec2& prev = pts_[j - 1];
            const Vec2& cur = pts_[j];
            double ax = prev.x, bx = cur.x;
            if (period_ > 0.0) {
                // shift the segment so its span covers p.x modulo the period
                const double mid = 0.5 * (ax + bx);
                const double shift = std::round((p.x - mid) / period_) * period_;
                ax += shift;
                bx += shift;
            }
            if ((ax <= p.x) != (bx <= p.x)) {
                const double t = (p.x - ax) / (bx - ax);
                const double ycross = prev.y + t * (cur.y - prev.y);
                if (ycross > p.y) ++crossings;
            }
        }
        return crossings % 2 == 1;
    }

    std::vector<Vec2> pts_;
    double period_;
    bool closed_;
    bool minus_inside_;
};

inline Phase point_phase(const Curve& curve, Vec2 p) { return PhaseOracle(curve)(p); }

} // namespace vsheet
