#include "windtube/tracing.hpp"

#include <cmath>

#include "windtube/error.hpp"
#include "windtube/parallel.hpp"

namespace windtube {

namespace {

constexpr double kPi = 3.14159265358979323846;

double wrap_pi(double a) {
    while (a > kPi) a -= 2.0 * kPi;
    while (a <= -kPi) a += 2.0 * kPi;
    return a;
}

// Dormand-Prince 5(4) coefficients.
constexpr double A21 = 1.0 / 5;
constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561,
                 A54 = -212.0 / 729;
constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247, A64 = 49.0 / 176,
                 A65 = -5103.0 / 18656;
constexpr double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192, B5 = -2187.0 / 6784,
                 B6 = 11.0 / 84;
constexpr double E1 = 35.0 / 384 - 5179.0 / 57600, E3 = 500.0 / 1113 - 7571.0 / 16695,
                 E4 = 125.0 / 192 - 393.0 / 640, E5 = -2187.0 / 6784 + 92097.0 / 339200,
                 E6 = 11.0 / 84 - 187.0 / 2100, E7 = -1.0 / 40;

struct TraceCore {
    const BraidedField& field;
    const Foliation& fol;
    const TraceOptions& opts;
    int direction;  // +1 follows v, -1 follows -v

    Vec3 rhs(const Vec3& y) const {
        Vec3 v = field.eval(y);
        double n = norm(v);
        if (!(n > 0.0) || !std::isfinite(n))
            fail_numerical("trace", "field vanished along the trace");
        return (direction / n) * v;
    }

    // One embedded RK step from y with size h; k1 = rhs(y) is supplied and
    // the first-same-as-last stage rhs(ynew) is returned through k_end.
    Vec3 step(const Vec3& y, const Vec3& k1, double h, double& err, Vec3& k_end) const {
        Vec3 k2 = rhs(y + h * (A21 * k1));
        Vec3 k3 = rhs(y + h * (A31 * k1 + A32 * k2));
        Vec3 k4 = rhs(y + h * (A41 * k1 + A42 * k2 + A43 * k3));
        Vec3 k5 = rhs(y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4));
        Vec3 k6 = rhs(y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5));
        Vec3 ynew = y + h * (B1 * k1 + B3 * k3 + B4 * k4 + B5 * k5 + B6 * k6);
        k_end = rhs(ynew);
        Vec3 e = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k_end);
        double sc = opts.tol * (1.0 + norm(y));
        err = norm(e) / sc;
        return ynew;
    }
};

// Refine the landing: shrink the final RK step from y so that phi at the
// re-integrated endpoint equals `level` (Newton on the step size).  The
// landing therefore lies on the integrated curve to trace accuracy, not on
// the chord of the last step.
Vec3 refine_landing(const TraceCore& core, const Foliation& fol, const Vec3& y, const Vec3& k1,
                    double h_cross, double z_at_y, double z_past, double level) {
    double hl = h_cross;
    if (z_past != z_at_y) hl = h_cross * (level - z_at_y) / (z_past - z_at_y);
    hl = std::clamp(hl, 0.0, h_cross);
    Vec3 best = y;
    double best_err = std::abs(z_at_y - level);
    for (int it = 0; it < 12; ++it) {
        double err_est;
        Vec3 kend;
        Vec3 yl = hl > 0.0 ? core.step(y, k1, hl, err_est, kend) : y;
        auto [zl, gl] = fol.value_and_grad(yl);
        if (std::abs(zl - level) < best_err) {
            best = yl;
            best_err = std::abs(zl - level);
        }
        if (std::abs(zl - level) <= 1e-13) return yl;
        double dzdh = hl > 0.0 ? dot(kend, gl) : dot(k1, gl);
        if (std::abs(dzdh) < 1e-14) break;
        hl = std::clamp(hl - (zl - level) / dzdh, 0.0, h_cross);
    }
    return best;
}

struct TraceResult {
    Vec3 landing;
    double landing_z;
};

// Shared integrator for full recorded traces and endpoint-only traces.
TraceResult integrate(const BraidedField& field, const Vec3& start, const Foliation& fol,
                      double level, int direction, const TraceOptions& opts, bool record,
                      bool require_monotone, FieldLine* out) {
    TraceCore core{field, fol, opts, direction};

    Vec3 y = start;
    auto [z, g] = fol.value_and_grad(y);
    Vec3 t0 = core.rhs(y);
    double s = 0.0;

    double prev_angle = 0.0;
    bool have_angle = false;
    auto ref_angle = [&](const Vec3& p, double& r_out) -> double {
        ReferencePoint x = opts.domain->unembed(p);
        r_out = std::sqrt(x.x1 * x.x1 + x.x2 * x.x2);
        return std::atan2(x.x2, x.x1);
    };
    if (opts.domain) {
        double r;
        prev_angle = ref_angle(y, r);
        have_angle = r > 1e-3;
    }

    if (record) {
        out->samples.push_back(LineSample{y, z, dot(t0, g), t0, s, Vec2{}, false});
    }

    double extreme = z;  // running extreme of z in the travel direction
    Vec3 f_cur = t0;     // rhs at y (first-same-as-last reuse)
    double h = 1e-3;
    int steps = 0;
    int rejects_in_row = 0;
    std::string last_failure;
    constexpr double kLevelSkin = 0.01;  // tolerated overshoot past the stop level
    while (true) {
        if (++steps > opts.max_steps)
            fail_numerical("trace", "step limit exceeded (stagnant or invalid field)");
        if (h < 1e-14)
            fail_numerical("trace", "step size underflow at (" + std::to_string(y.x) + ", " +
                                        std::to_string(y.y) + ", " + std::to_string(y.z) +
                                        "), z=" + std::to_string(z) +
                                        (last_failure.empty() ? "" : "; last: " + last_failure));
        if (rejects_in_row > 200)
            fail_numerical("trace", last_failure.empty() ? "step control failed to settle"
                                                         : last_failure);

        // Keep the step from shooting past the stop level (and off the mesh):
        // the remaining z distance bounds the usable arclength.
        double dzds_here = dot(f_cur, g);
        double remaining = direction * (level - z);
        if (std::abs(dzds_here) > 1e-3) {
            double h_cap = (remaining + kLevelSkin) / std::abs(dzds_here);
            if (h > h_cap) h = h_cap;
        }

        double err = 0.0;
        Vec3 ynew, f_new;
        try {
            ynew = core.step(y, f_cur, h, err, f_new);
        } catch (const Error& e) {
            // A stage fell outside the evaluable region; shrink and retry.
            last_failure = e.what();
            h *= 0.25;
            ++rejects_in_row;
            continue;
        }
        if (err > 1.0) {
            h *= std::max(0.2, 0.9 * std::pow(err, -0.2));
            ++rejects_in_row;
            continue;
        }

        double znew;
        Vec3 gnew;
        try {
            auto zg = fol.value_and_grad(ynew);
            znew = zg.first;
            gnew = zg.second;
        } catch (const Error& e) {
            last_failure = e.what();
            h *= 0.25;
            ++rejects_in_row;
            continue;
        }
        if (direction * (znew - level) > kLevelSkin) {
            h *= 0.5;
            ++rejects_in_row;
            continue;
        }
        double dz = std::abs(znew - z);
        if (dz > opts.dz_cap) {
            h *= std::max(0.1, 0.8 * opts.dz_cap / dz);
            ++rejects_in_row;
            continue;
        }
        bool clamped = false;
        double new_angle = prev_angle;
        bool new_have_angle = have_angle;
        if (opts.domain) {
            double r;
            double ang = ref_angle(ynew, r);
            if (r > 1.0 + opts.side_overshoot)
                fail_numerical("trace", "field line exited through the side boundary (ref r=" +
                                            std::to_string(r) + ", allowance " +
                                            std::to_string(opts.side_overshoot) + ")");
            if (r > 1.0 + opts.side_skin) {
                ReferencePoint x = opts.domain->unembed(ynew);
                x.x1 /= r;
                x.x2 /= r;
                ynew = opts.domain->embed(x);
                clamped = true;
            }
            new_have_angle = r > 1e-3;
            if (have_angle && new_have_angle) {
                double dang = std::abs(wrap_pi(ang - prev_angle));
                if (dang > opts.dangle_cap) {
                    h *= std::max(0.1, 0.8 * opts.dangle_cap / dang);
                    ++rejects_in_row;
                    continue;
                }
            }
            new_angle = ang;
        }
        rejects_in_row = 0;

        if (clamped) {
            auto zg = fol.value_and_grad(ynew);
            znew = zg.first;
            gnew = zg.second;
            f_new = core.rhs(ynew);
        }

        // Crossing of the stop level ends the trace with a refined landing.
        if (direction * (znew - level) >= 0.0) {
            Vec3 land = refine_landing(core, fol, y, f_cur, h, z, znew, level);
            auto [zl, gl] = fol.value_and_grad(land);
            if (std::abs(zl - level) <= 1e-9) zl = level;
            if (record) {
                Vec3 tl = core.rhs(land);
                out->samples.push_back(
                    LineSample{land, zl, dot(tl, gl), tl, s + norm(land - y), Vec2{}, false});
            }
            return TraceResult{land, zl};
        }

        if (require_monotone) {
            if (direction > 0)
                extreme = std::max(extreme, znew);
            else
                extreme = std::min(extreme, znew);
            if (direction * (extreme - znew) > 1e-6)
                fail_numerical("trace", "field line is not monotone in the foliation coordinate");
        }

        s += h;
        y = ynew;
        z = znew;
        g = gnew;
        f_cur = f_new;
        prev_angle = new_angle;
        have_angle = new_have_angle;
        if (record)
            out->samples.push_back(LineSample{y, z, dot(f_cur, g), f_cur, s, Vec2{}, false});
        h *= std::min(5.0, std::max(0.2, 0.9 * std::pow(std::max(err, 1e-10), -0.2)));
    }
}

}  // namespace

Foliation mesh_foliation(const ScalarFieldP1& phi, std::shared_ptr<const TetLocator> locator) {
    Foliation f;
    const ScalarFieldP1* p = &phi;
    f.value = [p, locator](const Vec3& y) {
        auto hit = locator->locate(y, 0.25);
        if (hit.tet < 0) fail_numerical("foliation", "point outside mesh");
        return p->eval(hit);
    };
    f.value_and_grad = [p, locator](const Vec3& y) {
        auto hit = locator->locate(y, 0.25);
        if (hit.tet < 0) fail_numerical("foliation", "point outside mesh");
        auto g = shape_gradients(*p->mesh, hit.tet);
        const auto& T = p->mesh->tets[hit.tet];
        Vec3 grad{};
        for (int a = 0; a < 4; ++a) grad += p->values[T[a]] * g[a];
        return std::make_pair(p->eval(hit), grad);
    };
    return f;
}

Foliation analytic_foliation(std::function<double(const Vec3&)> value,
                             std::function<Vec3(const Vec3&)> grad) {
    Foliation f;
    f.value = value;
    f.value_and_grad = [value, grad](const Vec3& y) {
        return std::make_pair(value(y), grad(y));
    };
    return f;
}

FieldLine trace_field_line(const BraidedField& field, const Vec3& start, const Foliation& fol,
                           const TraceOptions& opts) {
    double z0 = fol.value(start);
    if (std::abs(z0) > 1e-8) fail_config("trace", "start point is not on S0");

    FieldLine line;
    line.start = start;
    line.arc_tolerance = opts.tol;
    integrate(field, start, fol, 1.0, +1, opts, true, false, &line);
    if (std::abs(line.samples.front().z) <= 1e-9) line.samples.front().z = 0.0;
    return line;
}

Vec3 trace_to_level(const BraidedField& field, const Vec3& start, const Foliation& fol,
                    double level, int direction, const TraceOptions& opts) {
    double z0 = fol.value(start);
    if (direction * (z0 - level) >= 0.0) return start;  // already there
    auto res = integrate(field, start, fol, level, direction, opts, false, false, nullptr);
    return res.landing;
}

namespace {

// Cubic Hermite pieces on t in [0,1].
double hermite(double z0, double m0, double z1, double m1, double t) {
    double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * z0 + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * z1 +
           (t3 - t2) * m1;
}

Vec3 hermite3(const Vec3& p0, const Vec3& m0, const Vec3& p1, const Vec3& m1, double t) {
    double t2 = t * t, t3 = t2 * t;
    return (2 * t3 - 3 * t2 + 1) * p0 + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * p1 +
           (t3 - t2) * m1;
}

}  // namespace

void split_monotone(FieldLine& line) {
    auto& S = line.samples;
    line.sections.clear();
    if (S.size() < 2) {
        line.sections.push_back(LineSection{0, S.empty() ? 0 : S.size() - 1, 0,
                                            S.empty() ? 0.0 : S.front().z,
                                            S.empty() ? 0.0 : S.front().z});
        return;
    }

    auto interval_sign = [&](std::size_t i) -> int {
        double dz = S[i + 1].z - S[i].z;
        if (std::abs(S[i].dzds) < 1e-10 && std::abs(S[i + 1].dzds) < 1e-10 &&
            std::abs(dz) < 1e-12)
            return 0;
        if (dz > 0.0) return 1;
        if (dz < 0.0) return -1;
        return 0;
    };

    // Insert refined turning samples at sign flips.  The turning location is
    // the root of the Hermite z'(t) in the interval adjacent to the flip.
    for (std::size_t i = 0; i + 1 < S.size();) {
        if (i + 2 >= S.size()) break;
        int sa = interval_sign(i), sb = interval_sign(i + 1);
        if (sa == 0 || sb == 0 || sa == sb) {
            ++i;
            continue;
        }
        bool inserted = false;
        for (std::size_t j : {i, i + 1}) {
            double ds = S[j + 1].s - S[j].s;
            double m0 = S[j].dzds * ds, m1 = S[j + 1].dzds * ds;
            double z0 = S[j].z, z1 = S[j + 1].z;
            // z'(t) = a t^2 + b t + c
            double a = 6 * (z0 - z1) + 3 * m0 + 3 * m1;
            double b = -6 * (z0 - z1) - 4 * m0 - 2 * m1;
            double c = m0;
            double roots[2];
            int nroots = 0;
            if (std::abs(a) < 1e-300) {
                if (std::abs(b) > 0.0) roots[nroots++] = -c / b;
            } else {
                double disc = b * b - 4 * a * c;
                if (disc >= 0.0) {
                    double sq = std::sqrt(disc);
                    roots[nroots++] = (-b - sq) / (2 * a);
                    roots[nroots++] = (-b + sq) / (2 * a);
                }
            }
            for (int rix = 0; rix < nroots && !inserted; ++rix) {
                double t = roots[rix];
                if (t <= 1e-9 || t >= 1.0 - 1e-9) continue;
                // Require an actual sign change of z' across the root.
                double zp_lo = c + t * 0.5 * (b + a * t * 0.5);
                double zp_hi = a * (0.5 + 0.5 * t) * (0.5 + 0.5 * t) + b * (0.5 + 0.5 * t) + c;
                if ((zp_lo > 0) == (zp_hi > 0)) continue;
                LineSample turn;
                turn.y = hermite3(S[j].y, ds * S[j].tangent, S[j + 1].y, ds * S[j + 1].tangent, t);
                turn.z = hermite(z0, m0, z1, m1, t);
                turn.dzds = 0.0;
                Vec3 tan = (1 - t) * S[j].tangent + t * S[j + 1].tangent;
                turn.tangent = norm(tan) > 0 ? normalized(tan) : S[j].tangent;
                turn.s = S[j].s + t * ds;
                S.insert(S.begin() + j + 1, turn);
                inserted = true;
            }
            if (inserted) break;
        }
        i += inserted ? 2 : 1;
    }

    // Group maximal runs of equal interval sign into sections.
    std::vector<int> signs(S.size() - 1);
    for (std::size_t i = 0; i + 1 < S.size(); ++i) signs[i] = interval_sign(i);
    std::size_t begin = 0;
    for (std::size_t i = 1; i <= signs.size(); ++i) {
        if (i == signs.size() || signs[i] != signs[begin]) {
            LineSection sec;
            sec.begin = begin;
            sec.end = i;  // sample index range [begin, i]
            sec.sigma = signs[begin];
            sec.z_lo = std::min(S[begin].z, S[i].z);
            sec.z_hi = std::max(S[begin].z, S[i].z);
            line.sections.push_back(sec);
            begin = i;
        }
    }
}

DiscreteMapping field_line_mapping(const BraidedField& field, const Foliation& fol,
                                   const std::vector<Vec3>& starts,
                                   const std::vector<Vec2>& grid, double level,
                                   const std::function<Vec2(const Vec3&)>& ref_of,
                                   const TraceOptions& opts, int threads) {
    if (starts.size() != grid.size())
        fail_config("field_line_mapping", "grid and start-point counts differ");
    DiscreteMapping map;
    map.grid = grid;
    map.level = level;
    map.images.resize(starts.size());
    std::vector<std::string> errors(starts.size());
    parallel_for(starts.size(), threads, [&](std::size_t i) {
        try {
            FieldLine probe;
            auto res = integrate(field, starts[i], fol, level, +1, opts, false, true, &probe);
            map.images[i] = ref_of(res.landing);
        } catch (const Error& e) {
            errors[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < errors.size(); ++i)
        if (!errors[i].empty())
            fail_numerical("field_line_mapping",
                           "start point " + std::to_string(i) + ": " + errors[i]);
    return map;
}

}  // namespace windtube
