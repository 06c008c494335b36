#pragma once

// Lagrangian reference grid and periodic plane curves sampled on it.
// Open curves satisfy eta(x + 2*pi) = eta(x) + (Lx, 0) with Lx > 0; closed
// curves have Lx = 0. The columnar text format is
//   # vortex-sheet curve N=<n> Lx=<period>
//   x_j  eta1_j  eta2_j
// with all floats at full round-trip precision.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "vsheet/errors.hpp"
#include "vsheet/spectral.hpp"
#include "vsheet/vec2.hpp"

namespace vsheet {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Fixed periodic label set x_j = 2*pi*j/N. N even and >= 16 so spectral
/// differentiation is available.
struct ReferenceGrid {
    int n_points = 0;

    explicit ReferenceGrid(int n = 0) : n_points(n) {
        if (n != 0 && (n < 16 || n % 2 != 0))
            throw Error("ReferenceGrid: N must be even and >= 16");
    }

    double spacing() const { return two_pi / n_points; }
    double label(int j) const { return two_pi * double(j) / n_points; }

    std::vector<double> labels() const {
        std::vector<double> x(n_points);
        for (int j = 0; j < n_points; ++j) x[j] = label(j);
        return x;
    }
};

struct Curve {
    ReferenceGrid grid;
    std::vector<Vec2> positions;
    double period_x = two_pi; // Lx; 0 for closed curves

    int size() const { return grid.n_points; }
    bool closed() const { return period_x == 0.0; }

    void validate() const {
        if ((int)positions.size() != grid.n_points)
            throw Error("Curve: position count does not match grid");
        if (period_x < 0.0) throw Error("Curve: Lx must be >= 0");
        for (const auto& p : positions)
            if (!std::isfinite(p.x) || !std::isfinite(p.y))
                throw Error("Curve: non-finite position");
    }

    /// Positions with the linear ramp (Lx * x / 2pi, 0) removed; these are
    /// 2*pi-periodic samples suitable for the FFT.
    void periodic_part(std::vector<double>& p1, std::vector<double>& p2) const {
        const int n = size();
        p1.resize(n);
        p2.resize(n);
        const double slope = period_x / two_pi;
        for (int j = 0; j < n; ++j) {
            p1[j] = positions[j].x - slope * grid.label(j);
            p2[j] = positions[j].y;
        }
    }

    /// Spectral eta'(x_j).
    std::vector<Vec2> derivative() const {
        std::vector<double> p1, p2;
        periodic_part(p1, p2);
        const auto& sp = spectral(size());
        auto d1 = sp.derivative(p1);
        auto d2 = sp.derivative(p2);
        const double slope = period_x / two_pi;
        std::vector<Vec2> d(size());
        for (int j = 0; j < size(); ++j) d[j] = {d1[j] + slope, d2[j]};
        return d;
    }
};

// ---------------------------------------------------------------------------
// Trigonometric interpolant of a curve, for evaluation off the grid.

struct CurveInterpolant {
    std::vector<std::complex<double>> c1, c2; // periodic parts
    double slope = 0.0;                       // Lx / 2pi

    explicit CurveInterpolant(const Curve& curve) {
        std::vector<double> p1, p2;
        curve.periodic_part(p1, p2);
        const auto& sp = spectral(curve.size());
        c1 = sp.coefficients(p1);
        c2 = sp.coefficients(p2);
        slope = curve.period_x / two_pi;
    }

    Vec2 position(double x) const {
        return {trig_eval(c1, x) + slope * x, trig_eval(c2, x)};
    }
    Vec2 derivative(double x) const {
        return {trig_eval_derivative(c1, x) + slope, trig_eval_derivative(c2, x)};
    }
};

// ---------------------------------------------------------------------------
// Serialization.

inline void write_curve(std::ostream& os, const Curve& c,
                        const std::vector<double>* strength = nullptr) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "# vortex-sheet curve N=%d Lx=%.17g\n",
                  c.size(), c.period_x);
    os << buf;
    for (int j = 0; j < c.size(); ++j) {
        if (strength)
            std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g %.17g\n", c.grid.label(j),
                          c.positions[j].x, c.positions[j].y, (*strength)[j]);
        else
            std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g\n", c.grid.label(j),
                          c.positions[j].x, c.positions[j].y);
        os << buf;
    }
}

inline void write_curve_file(const std::string& path, const Curve& c,
                             const std::vector<double>* strength = nullptr) {
    std::ofstream os(path);
    if (!os) throw Error("cannot open for writing: " + path);
    write_curve(os, c, strength);
}

/// Reads the columnar curve format. A fourth column, when present, is
/// returned through `strength`.
inline Curve read_curve(std::istream& is, std::vector<double>* strength = nullptr) {
    std::string header;
    if (!std::getline(is, header)) throw ParseError("curve file: empty");
    int n = 0;
    double lx = 0.0;
    if (std::sscanf(header.c_str(), "# vortex-sheet curve N=%d Lx=%lf", &n, &lx) != 2)
        throw ParseError("curve file: bad header: " + header);
    Curve c;
    c.grid = ReferenceGrid(n);
    c.period_x = lx;
    c.positions.resize(n);
    if (strength) strength->assign(n, 0.0);
    std::string line;
    for (int j = 0; j < n; ++j) {
        if (!std::getline(is, line)) throw ParseError("curve file: truncated");
        std::istringstream ls(line);
        double x, e1, e2;
        if (!(ls >> x >> e1 >> e2)) throw ParseError("curve file: bad row: " + line);
        double s;
        if (strength && (ls >> s)) (*strength)[j] = s;
        c.positions[j] = {e1, e2};
    }
    c.validate();
    return c;
}

inline Curve read_curve_file(const std::string& path, std::vector<double>* strength = nullptr) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open: " + path);
    return read_curve(is, strength);
}

// ---------------------------------------------------------------------------
// Factories.

inline Curve make_flat_sheet(int n, double height = 0.0) {
    Curve c;
    c.grid = ReferenceGrid(n);
    c.period_x = two_pi;
    c.positions.resize(n);
    for (int j = 0; j < n; ++j) c.positions[j] = {c.grid.label(j), height};
    return c;
}

struct GraphMode {
    int wavenumber = 1;
    double cos_amp = 0.0;
    double sin_amp = 0.0;
};

/// Graph sheet eta = (x, sum_k a_k cos(kx) + b_k sin(kx)).
inline Curve make_graph_sheet(int n, const std::vector<GraphMode>& modes) {
    Curve c = make_flat_sheet(n);
    for (int j = 0; j < n; ++j) {
        const double x = c.grid.label(j);
        double y = 0.0;
        for (const auto& m : modes)
            y += m.cos_amp * std::cos(m.wavenumber * x) + m.sin_amp * std::sin(m.wavenumber * x);
        c.positions[j].y = y;
    }
    return c;
}

enum class Orientation { CCW, CW };

/// Closed circle. CCW puts the normal n = G eta'^perp on the inside (the
/// minus phase is then the interior); CW puts it outside.
inline Curve make_circle(int n, double radius, Vec2 center = {0.0, 0.0},
                         Orientation o = Orientation::CCW) {
    Curve c;
    c.grid = ReferenceGrid(n);
    c.period_x = 0.0;
    c.positions.resize(n);
    const double sgn = (o == Orientation::CCW) ? 1.0 : -1.0;
    for (int j = 0; j < n; ++j) {
        const double x = sgn * c.grid.label(j);
        c.positions[j] = {center.x + radius * std::cos(x), center.y + radius * std::sin(x)};
    }
    return c;
}

/// Closed band-limited dumbbell: two lobes joined by a horizontal neck whose
/// walls pass through (0, +-gap/2), so the minimal wall separation is exactly
/// `neck_gap`. Three harmonics, hence fully resolved at any admissible N.
/// Traversed CCW: the minus phase is the interior, so the segment across the
/// neck lies in Omega^-. Labels 0 and pi sit at the two neck centers.
inline Curve make_dumbbell(int n, double neck_gap, double scale = 1.0,
                           Vec2 center = {0.0, 0.0}) {
    if (neck_gap <= 0.0 || neck_gap >= 1.0)
        throw Error("make_dumbbell: neck_gap must be in (0, 1)");
    Curve c;
    c.grid = ReferenceGrid(n);
    c.period_x = 0.0;
    c.positions.resize(n);
    const double half_width = 1.2; // lobe half-span
    const double bulge = 0.9;      // wall rise away from the neck
    for (int j = 0; j < n; ++j) {
        const double th = c.grid.label(j);
        const double s = std::sin(th);
        const double x = -half_width * s;
        const double y = std::cos(th) * (neck_gap / 2.0 + bulge * s * s);
        c.positions[j] = {center.x + scale * x, center.y + scale * y};
    }
    return c;
}

} // namespace vsheet
