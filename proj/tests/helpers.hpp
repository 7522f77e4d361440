#pragma once

// Shared fixtures and independent oracles for the test suite.  Everything
// here is deliberately self-contained: the oracles must not share code with
// the implementation paths they check.

#include <cmath>
#include <functional>
#include <vector>

#include "windtube/tracing.hpp"
#include "windtube/vec.hpp"

namespace wt_test {

constexpr double kPi = 3.14159265358979323846;

// Build a FieldLine directly from an analytic reference curve
// t in [0,1] -> ((x1,x2)(t), z(t)), bypassing tracing and embedding.  The
// physical samples are placed at the reference positions (identity tube).
inline windtube::FieldLine make_ref_line(const std::function<windtube::Vec2(double)>& xy,
                                         const std::function<double(double)>& z,
                                         const std::function<double(double)>& dzdt, int n) {
    windtube::FieldLine line;
    line.samples.resize(n + 1);
    for (int i = 0; i <= n; ++i) {
        double t = static_cast<double>(i) / n;
        auto& s = line.samples[i];
        windtube::Vec2 p = xy(t);
        s.y = windtube::Vec3{p.x, p.y, z(t)};
        s.z = z(t);
        s.ref = p;
        s.has_ref = true;
        s.s = t;  // parameter stands in for arclength
        double dt = 1e-6;
        windtube::Vec2 p2 = xy(std::min(1.0, t + dt));
        windtube::Vec2 p1 = xy(std::max(0.0, t - dt));
        windtube::Vec3 tan{(p2.x - p1.x) / (2 * dt), (p2.y - p1.y) / (2 * dt), dzdt(t)};
        double nn = windtube::norm(tan);
        s.tangent = nn > 0 ? windtube::normalized(tan) : windtube::Vec3{0, 0, 1};
        s.dzds = dzdt(t);
    }
    line.start = line.samples.front().y;
    windtube::split_monotone(line);
    return line;
}

// Independent pairwise-winding oracle: integrate dTheta/dz with the explicit
// derivative quotient by composite Simpson on each monotone section pair,
// using the analytic curves directly (not the FieldLine machinery).
struct AnalyticCurve {
    std::function<windtube::Vec2(double)> xy;  // of z
};

inline double winding_oracle_monotone(const AnalyticCurve& a, const AnalyticCurve& b, double zlo,
                                      double zhi, int n) {
    if (n % 2) ++n;
    auto f = [&](double z) {
        double h = 1e-6;
        windtube::Vec2 d = a.xy(z) - b.xy(z);
        windtube::Vec2 dp = a.xy(std::min(zhi, z + h)) - b.xy(std::min(zhi, z + h));
        windtube::Vec2 dm = a.xy(std::max(zlo, z - h)) - b.xy(std::max(zlo, z - h));
        double span = std::min(zhi, z + h) - std::max(zlo, z - h);
        windtube::Vec2 dd{(dp.x - dm.x) / span, (dp.y - dm.y) / span};
        return (d.x * dd.y - d.y * dd.x) / (d.x * d.x + d.y * d.y);
    };
    double h = (zhi - zlo) / n;
    double acc = f(zlo) + f(zhi);
    for (int i = 1; i < n; ++i) acc += f(zlo + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0 / (2.0 * kPi);
}

// Composite Simpson for scalar integrands.
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
    if (n % 2) ++n;
    double h = (b - a) / n;
    double acc = f(a) + f(b);
    for (int i = 1; i < n; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
    return acc * h / 3.0;
}

// Closed-form field line winding of an axisymmetric differential twist:
// every line at radius rho rotates by the total angle Omega(rho); a pair
// winds by the outer line's rotation over 2*pi, so
//   L_v(r) = Omega(r) r^2 / 2 + int_r^1 Omega(rho) rho d(rho).
inline double lv_axisymmetric(const std::function<double(double)>& Omega, double r) {
    double tail = simpson([&](double rho) { return Omega(rho) * rho; }, r, 1.0, 4000);
    return 0.5 * Omega(r) * r * r + tail;
}

}  // namespace wt_test
