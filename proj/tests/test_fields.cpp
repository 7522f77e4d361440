#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "windtube/error.hpp"
#include "windtube/fields.hpp"
#include "windtube/io.hpp"
#include "windtube/run.hpp"

using namespace windtube;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

TEST_CASE("uniform twist evaluates to the closed form on the unit cylinder") {
    auto d = build_domain(DomainSpec::straight(1.0, 1.0));
    BraidedField f = make_field(FieldSpec::uniform_twist(2 * kPi), d);
    Vec3 v = f.eval(Vec3{0.5, 0.0, 0.3});
    CHECK(v.x == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(v.y == doctest::Approx(kPi).epsilon(1e-12));
    CHECK(v.z == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("harmonic-u spec passes through the solved field") {
    Pipeline pipe =
        build_pipeline(DomainSpec::straight(1.0, 1.0), 0.15, 1e-10, EmbeddingMap::Mode::Exact, 1);
    BraidedField f = make_field(FieldSpec::harmonic_u(), pipe.domain, pipe.u.get(),
                                pipe.mesh.get());
    for (std::size_t v = 0; v < pipe.mesh->vertices.size(); v += 97) {
        Vec3 got = f.eval(pipe.mesh->vertices[v]);
        CHECK(norm(got - pipe.u->vectors[v]) < 1e-9);
    }
}

TEST_CASE("perturbed field agrees with its base on both end caps") {
    auto d = build_domain(DomainSpec::straight(1.0, 1.0));
    FieldSpec spec = FieldSpec::perturbed(FieldSpec::uniform_twist(kPi), 0.4);
    BraidedField f = make_field(spec, d);
    BraidedField base = make_field(FieldSpec::uniform_twist(kPi), d);
    for (double th : {0.1, 2.0, 4.4}) {
        Vec3 p0{0.6 * std::cos(th), 0.6 * std::sin(th), 0.0};
        Vec3 p1{0.6 * std::cos(th), 0.6 * std::sin(th), 1.0};
        CHECK(norm(f.eval(p0) - base.eval(p0)) == 0.0);
        CHECK(norm(f.eval(p1) - base.eval(p1)) == 0.0);
    }
    Vec3 mid{0.6, 0.0, 0.25};
    CHECK(norm(f.eval(mid) - base.eval(mid)) > 1e-3);
}

TEST_CASE("twist generators stay tangent on curved domains") {
    auto d = build_domain(DomainSpec::expanding(1.0, 2.0));
    CHECK_NOTHROW(make_field(FieldSpec::uniform_twist(2 * kPi), d));
    auto c = build_domain(DomainSpec::curved(1.0, kPi / 2, 0.2));
    CHECK_NOTHROW(make_field(FieldSpec::uniform_twist(kPi), c));
}

TEST_CASE("validate_braided flags the documented violations") {
    auto d = build_domain(DomainSpec::straight(1.0, 1.0));
    Mesh m = generate_mesh(d, 0.15);

    BraidedField twist = make_field(FieldSpec::uniform_twist(kPi), d);
    CHECK(validate_braided(twist, m, d).pass);

    BraidedField down;
    down.describe = "downward";
    down.eval = [](const Vec3&) { return Vec3{0, 0, -1}; };
    auto rep = validate_braided(down, m, d);
    CHECK_FALSE(rep.pass);
    REQUIRE_FALSE(rep.violations.empty());
    CHECK(rep.violations.front().what.find("S0") != std::string::npos);

    BraidedField radial;
    radial.describe = "radial";
    radial.eval = [](const Vec3& y) { return Vec3{y.x, y.y, 1.0}; };
    auto rep2 = validate_braided(radial, m, d);
    CHECK_FALSE(rep2.pass);
    bool side_violation = false;
    for (const auto& v : rep2.violations)
        side_violation |= v.what.find("side") != std::string::npos;
    CHECK(side_violation);
}

TEST_CASE("make_field rejects a sampled field that violates the cap condition") {
    auto d = build_domain(DomainSpec::straight(1.0, 1.0));
    Mesh m = generate_mesh(d, 0.2);
    std::string path = "downward_field.csv";
    {
        std::ofstream out(path);
        for (std::size_t v = 0; v < m.vertices.size(); ++v) out << v << ",0,0,-1\n";
    }
    CHECK_THROWS_AS(make_field(FieldSpec::mesh_sampled(path), d, nullptr, &m), Error);
    std::remove(path.c_str());
}

TEST_CASE("mesh-sampled fields round-trip through CSV") {
    Pipeline pipe =
        build_pipeline(DomainSpec::straight(1.0, 1.0), 0.2, 1e-10, EmbeddingMap::Mode::Exact, 1);
    const Mesh& m = *pipe.mesh;
    std::string path = "mesh_sampled_test.csv";
    {
        std::ofstream out(path);
        for (std::size_t v = 0; v < m.vertices.size(); ++v) {
            Vec3 w = pipe.u->vectors[v];
            out << v << ',' << format_double(w.x) << ',' << format_double(w.y) << ','
                << format_double(w.z) << '\n';
        }
    }
    BraidedField f = make_field(FieldSpec::mesh_sampled(path), pipe.domain, nullptr, &m);
    Vec3 probe{0.3, 0.1, 0.42};
    CHECK(norm(f.eval(probe) - Vec3{0, 0, 1}) < 1e-9);

    {
        std::ofstream out(path);
        out << "0,1,2\n";  // malformed row
    }
    CHECK_THROWS_AS(load_field_csv(m, path), Error);
    {
        std::ofstream out(path);
        out << "0,0,0,1\n";  // missing the rest of the vertices
    }
    CHECK_THROWS_AS(load_field_csv(m, path), Error);
    std::remove(path.c_str());
}

TEST_CASE("positive rescaling leaves the direction field unchanged") {
    auto d = build_domain(DomainSpec::straight(1.0, 1.0));
    BraidedField f = make_field(FieldSpec::uniform_twist(kPi), d);
    BraidedField g = scaled_field(f, [](const Vec3& y) { return 1.0 + 0.5 * std::sin(kPi * y.z); },
                                  "scaled");
    Mesh m = generate_mesh(d, 0.2);
    CHECK(validate_braided(g, m, d).pass);
    Vec3 p{0.4, 0.2, 0.6};
    Vec3 a = normalized(f.eval(p)), b = normalized(g.eval(p));
    CHECK(norm(a - b) < 1e-15);
}
