#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "windtube/error.hpp"
#include "windtube/helicity.hpp"
#include "windtube/run.hpp"

using namespace windtube;
using wt_test::kPi;

namespace {

// In-place pipeline + twist traces shared by several cases.
struct TwistSetup {
    Pipeline pipe;
    BraidedField twist;
    QuadratureGrid grid;
    GridLines gl;

    TwistSetup(double k, int n_r, double res = 0.15)
        : pipe(build_pipeline(DomainSpec::straight(1.0, 1.0), res, 1e-10,
                              EmbeddingMap::Mode::Exact, 1)),
          twist(make_field(FieldSpec::uniform_twist(k), pipe.domain)),
          grid(QuadratureGrid::polar(n_r)),
          gl(trace_grid_lines(pipe, twist, grid, pipe.trace_options(1e-8), 1)) {}
};

}  // namespace

TEST_CASE("solenoidal check: twist passes at machine precision, sheared flow fails") {
    auto d = build_domain(DomainSpec::straight(1.0, 1.0));
    Mesh m = generate_mesh(d, 0.15);
    BraidedField twist = make_field(FieldSpec::uniform_twist(2 * kPi), d);
    auto rep = check_solenoidal(twist, m);
    CHECK(rep.pass);
    CHECK(rep.rms < 1e-10);

    BraidedField diverging;
    diverging.describe = "diverging";
    diverging.eval = [](const Vec3& y) { return Vec3{y.x, 0.0, 1.0}; };
    auto rep2 = check_solenoidal(diverging, m);
    CHECK_FALSE(rep2.pass);
}

TEST_CASE("solenoidal check: solved harmonic field passes where it is smooth") {
    // On the straight cylinder the recovered gradient is exactly uniform.
    Pipeline pipe =
        build_pipeline(DomainSpec::straight(1.0, 1.0), 0.12, 1e-10, EmbeddingMap::Mode::Exact, 1);
    BraidedField ufield =
        make_field(FieldSpec::harmonic_u(), pipe.domain, pipe.u.get(), pipe.mesh.get());
    auto rep = check_solenoidal(ufield, *pipe.mesh);
    CHECK(rep.pass);
    CHECK(rep.rms < 1e-8);
    // On domains with cap-rim corner singularities the P1-recovered field has
    // O(1) local divergence near the rim; the report stays informative.
    Pipeline exp_pipe =
        build_pipeline(DomainSpec::expanding(1.0, 2.0), 0.12, 1e-10, EmbeddingMap::Mode::Exact, 1);
    BraidedField uexp = make_field(FieldSpec::harmonic_u(), exp_pipe.domain, exp_pipe.u.get(),
                                   exp_pipe.mesh.get());
    auto rep2 = check_solenoidal(uexp, *exp_pipe.mesh);
    CHECK(rep2.rms < 1.0);
}

TEST_CASE("field line helicity of the unit twist equals k/2 nodewise") {
    const double k = 2 * kPi;
    TwistSetup s(k, 8);
    std::vector<double> j0bz;
    auto ab = field_line_helicity(s.pipe, s.twist, s.gl, 1e-3, &j0bz, 1);
    for (double v : ab.values) CHECK(std::abs(v - k / 2) < 0.02 * k / 2);
    for (double w : j0bz) CHECK(std::abs(w - 1.0) < 5e-3);

    double H = total_helicity(ab, j0bz);
    CHECK(std::abs(H - kPi * kPi) < 0.03 * kPi * kPi);
}

TEST_CASE("helicity refuses non-solenoidal fields") {
    TwistSetup s(kPi, 4);
    BraidedField diverging;
    diverging.describe = "diverging";
    diverging.eval = [](const Vec3& y) { return Vec3{y.x, y.y, 1.0}; };
    std::vector<double> j0bz;
    CHECK_THROWS_AS(field_line_helicity(s.pipe, diverging, s.gl, 1e-3, &j0bz, 1), Error);
}

TEST_CASE("u field has vanishing field line helicity and total helicity") {
    Pipeline pipe =
        build_pipeline(DomainSpec::straight(1.0, 1.0), 0.15, 1e-10, EmbeddingMap::Mode::Exact, 1);
    BraidedField ufield =
        make_field(FieldSpec::harmonic_u(), pipe.domain, pipe.u.get(), pipe.mesh.get());
    QuadratureGrid grid = QuadratureGrid::polar(6);
    auto gl = trace_grid_lines(pipe, ufield, grid, pipe.trace_options(1e-8), 1);
    std::vector<double> j0bz;
    auto ab = field_line_helicity(pipe, ufield, gl, 1e-2, &j0bz, 1);
    for (double v : ab.values) CHECK(std::abs(v) < 1e-4);
    CHECK(std::abs(total_helicity(ab, j0bz)) < 1e-4);
}

TEST_CASE("A_b coincides bitwise with the weighted winding of J0 bz") {
    const double k = 1.1;
    TwistSetup s(k, 5);
    std::vector<double> j0bz;
    auto ab = field_line_helicity(s.pipe, s.twist, s.gl, 1e-3, &j0bz, 1);
    auto wv = weighted_winding(s.gl, j0bz, 1);
    REQUIRE(ab.values.size() == wv.values.size());
    for (std::size_t i = 0; i < ab.values.size(); ++i) CHECK(ab.values[i] == wv.values[i]);
}

TEST_CASE("doubling b doubles A_b exactly and leaves L_v untouched") {
    const double k = 1.5;
    TwistSetup s(k, 6);
    BraidedField twice = scaled_field(s.twist, [](const Vec3&) { return 2.0; }, "2b");
    auto gl2 = trace_grid_lines(s.pipe, twice, s.grid, s.pipe.trace_options(1e-8), 1);

    std::vector<double> j0bz1, j0bz2;
    auto ab1 = field_line_helicity(s.pipe, s.twist, s.gl, 1e-3, &j0bz1, 1);
    auto ab2 = field_line_helicity(s.pipe, twice, gl2, 1e-3, &j0bz2, 1);
    auto lv1 = field_line_winding(s.gl, 1);
    auto lv2 = field_line_winding(gl2, 1);
    for (std::size_t i = 0; i < ab1.values.size(); ++i) {
        CHECK(std::abs(ab2.values[i] - 2.0 * ab1.values[i]) <=
              1e-6 * std::abs(2.0 * ab1.values[i]));
        CHECK(lv1.values[i] == lv2.values[i]);
    }
}

TEST_CASE("mirrored twist flips the sign of H exactly") {
    TwistSetup sp(1.3, 5);
    TwistSetup sm(-1.3, 5);
    std::vector<double> j0p, j0m;
    auto abp = field_line_helicity(sp.pipe, sp.twist, sp.gl, 1e-3, &j0p, 1);
    auto abm = field_line_helicity(sm.pipe, sm.twist, sm.gl, 1e-3, &j0m, 1);
    double Hp = total_helicity(abp, j0p);
    double Hm = total_helicity(abm, j0m);
    CHECK(std::abs(Hp + Hm) < 1e-12 * std::abs(Hp));
}

TEST_CASE("total helicity matches a direct double quadrature of pairwise windings") {
    const double k = 2 * kPi;
    TwistSetup s(k, 5);
    std::vector<double> j0bz;
    auto ab = field_line_helicity(s.pipe, s.twist, s.gl, 1e-3, &j0bz, 1);
    double H = total_helicity(ab, j0bz);

    // independent: H = sum_i sum_j w_i w_j (J0 bz)_i (J0 bz)_j L_ij with the
    // same diagonal exclusion, L_ij from the analytic rotation oracle
    double H_direct = 0.0;
    for (std::size_t i = 0; i < s.grid.nodes.size(); ++i) {
        for (std::size_t j = 0; j < s.grid.nodes.size(); ++j) {
            if (i == j) continue;
            Vec2 a = s.grid.nodes[i], b = s.grid.nodes[j];
            wt_test::AnalyticCurve ca, cb;
            ca.xy = [=](double z) {
                double t = std::atan2(a.y, a.x) + k * z, r = norm(a);
                return Vec2{r * std::cos(t), r * std::sin(t)};
            };
            cb.xy = [=](double z) {
                double t = std::atan2(b.y, b.x) + k * z, r = norm(b);
                return Vec2{r * std::cos(t), r * std::sin(t)};
            };
            double L = wt_test::winding_oracle_monotone(ca, cb, 0.0, 1.0, 600);
            H_direct += s.grid.weights[i] * s.grid.weights[j] * j0bz[i] * j0bz[j] * L;
        }
    }
    CHECK(std::abs(H - H_direct) < 1e-3 * std::abs(H_direct));
}

TEST_CASE("winding gauge of a uniform field is the rotational gauge") {
    auto d = build_domain(DomainSpec::straight(1.0, 1.0));
    BraidedField uniform;
    uniform.describe = "uniform";
    uniform.eval = [](const Vec3&) { return Vec3{0, 0, 1}; };
    for (Vec2 x : {Vec2{0.0, 0.0}, Vec2{0.3, 0.2}, Vec2{-0.5, 0.4}}) {
        Vec3 a = winding_gauge_potential(uniform, 1.0, Vec3{x.x, x.y, 0.5}, 128);
        CHECK(std::abs(a.x - (-0.5 * x.y)) < 1e-3);
        CHECK(std::abs(a.y - 0.5 * x.x) < 1e-3);
        CHECK(std::abs(a.z) < 1e-3);
    }
    CHECK_THROWS_AS(winding_gauge_potential(uniform, 1.0, Vec3{1.2, 0, 0.5}, 64), Error);
}

TEST_CASE("line integral of the winding gauge reproduces A_b") {
    // n_r = 10 keeps the self-exclusion deficit of A_b well under the 1%
    // comparison tolerance
    const double k = 2 * kPi;
    TwistSetup s(k, 10, 0.12);
    std::vector<double> j0bz;
    auto ab = field_line_helicity(s.pipe, s.twist, s.gl, 1e-3, &j0bz, 1);

    for (std::size_t i : {std::size_t(3), std::size_t(20), std::size_t(40)}) {
        const FieldLine& line = s.gl.lines[i];
        double integral = 0.0;
        for (std::size_t j = 1; j < line.samples.size(); ++j) {
            Vec3 mid = 0.5 * (line.samples[j].y + line.samples[j - 1].y);
            Vec3 a = winding_gauge_potential(s.twist, 1.0, mid, 96);
            integral += dot(a, line.samples[j].y - line.samples[j - 1].y);
        }
        CHECK(std::abs(integral - ab.values[i]) < 0.01 * std::abs(ab.values[i]));
    }
}

TEST_CASE("numerical curl of the winding gauge recovers b") {
    const double k = 2 * kPi;
    auto d = build_domain(DomainSpec::straight(1.0, 1.0));
    BraidedField twist = make_field(FieldSpec::uniform_twist(k), d);
    const double h = 0.01;
    for (Vec3 p : {Vec3{0.2, 0.1, 0.5}, Vec3{-0.3, 0.35, 0.3}}) {
        auto a = [&](const Vec3& q) { return winding_gauge_potential(twist, 1.0, q, 192); };
        Vec3 ax_p = a(p + Vec3{h, 0, 0}), ax_m = a(p - Vec3{h, 0, 0});
        Vec3 ay_p = a(p + Vec3{0, h, 0}), ay_m = a(p - Vec3{0, h, 0});
        Vec3 az_p = a(p + Vec3{0, 0, h}), az_m = a(p - Vec3{0, 0, h});
        Vec3 curl{(ay_p.z - ay_m.z - (az_p.y - az_m.y)) / (2 * h),
                  (az_p.x - az_m.x - (ax_p.z - ax_m.z)) / (2 * h),
                  (ax_p.y - ax_m.y - (ay_p.x - ay_m.x)) / (2 * h)};
        Vec3 b = twist.eval(p);
        CHECK(norm(curl - b) < 5e-3 * norm(b));
    }
}
