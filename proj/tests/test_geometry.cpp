#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <map>
#include <random>

#include "windtube/error.hpp"
#include "windtube/geometry.hpp"
#include "windtube/mesh.hpp"

using namespace windtube;

namespace {
constexpr double kPi = 3.14159265358979323846;

Mat3 fd_jacobian(const TubularDomain& d, const ReferencePoint& x) {
    const double h = 1e-6;
    auto col = [&](int k) {
        ReferencePoint xp = x, xm = x;
        (k == 0 ? xp.x1 : k == 1 ? xp.x2 : xp.z) += h;
        (k == 0 ? xm.x1 : k == 1 ? xm.x2 : xm.z) -= h;
        Vec3 d1 = d.embed(xp) - d.embed(xm);
        return (1.0 / (2 * h)) * d1;
    };
    return Mat3::from_columns(col(0), col(1), col(2));
}

double jac_reldiff(const TubularDomain& d, const ReferencePoint& x) {
    Mat3 a = d.jacobian(x), b = fd_jacobian(d, x);
    double num = 0.0, den = 0.0;
    for (int i = 0; i < 9; ++i) {
        num = std::max(num, std::abs(a.m[i] - b.m[i]));
        den = std::max(den, std::abs(a.m[i]));
    }
    return num / den;
}
}  // namespace

TEST_CASE("straight cylinder embedding is the identity on C") {
    auto d = build_domain(DomainSpec::straight(1.0, 1.0));
    ReferencePoint x{0.3, -0.4, 0.7};
    Vec3 y = d.embed(x);
    CHECK(y.x == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(y.y == doctest::Approx(-0.4).epsilon(1e-15));
    CHECK(y.z == doctest::Approx(0.7).epsilon(1e-15));
    ReferencePoint back = d.unembed(y);
    CHECK(back.x1 == doctest::Approx(x.x1));
    CHECK(back.z == doctest::Approx(x.z));
}

TEST_CASE("expanding tube maps the rim of S1 to radius 2") {
    auto d = build_domain(DomainSpec::expanding(1.0, 2.0));
    Vec3 y = d.embed(ReferencePoint{1.0, 0.0, 1.0});
    CHECK(std::hypot(y.x, y.y) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("curved tube jacobian is positive at 1000 random probes") {
    auto d = build_domain(DomainSpec::curved(1.0, kPi / 2, 0.2));
    std::mt19937 rng(7u);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        double r = std::sqrt(unit(rng)) * 0.999;
        double th = 2 * kPi * unit(rng);
        ReferencePoint x{r * std::cos(th), r * std::sin(th), unit(rng)};
        CHECK(det(d.jacobian(x)) > 0.0);
    }
}

TEST_CASE("analytic jacobians match finite differences to 1e-6") {
    std::vector<DomainSpec> specs = {DomainSpec::straight(1.0, 1.0),
                                     DomainSpec::expanding(1.0, 2.0),
                                     DomainSpec::curved(1.0, kPi / 2, 0.2)};
    for (const auto& spec : specs) {
        auto d = build_domain(spec);
        for (double r : {0.0, 0.5, 0.9}) {
            for (double z : {0.1, 0.5, 0.9}) {
                ReferencePoint x{r * 0.6, r * 0.8, z};
                CHECK(jac_reldiff(d, x) < 1e-6);
            }
        }
    }
}

TEST_CASE("curved tube round-trips its own embedding") {
    auto d = build_domain(DomainSpec::curved(1.0, kPi / 2, 0.2));
    ReferencePoint x{0.4, -0.3, 0.65};
    ReferencePoint back = d.unembed(d.embed(x));
    CHECK(back.x1 == doctest::Approx(x.x1).epsilon(1e-12));
    CHECK(back.x2 == doctest::Approx(x.x2).epsilon(1e-12));
    CHECK(back.z == doctest::Approx(x.z).epsilon(1e-12));
}

TEST_CASE("bad descriptors are rejected") {
    CHECK_THROWS_AS(build_domain(DomainSpec::straight(-1.0, 1.0)), Error);
    CHECK_THROWS_AS(build_domain(DomainSpec::expanding(0.0, 2.0)), Error);
    CHECK_THROWS_AS(build_domain(DomainSpec::curved(0.1, kPi / 2, 0.2)), Error);
    // full-turn bend closes the tube onto itself
    CHECK_THROWS_AS(build_domain(DomainSpec::curved(1.0, 2 * kPi, 0.2)), Error);
}

TEST_CASE("straight cylinder mesh volume approximates pi") {
    auto d = build_domain(DomainSpec::straight(1.0, 1.0));
    Mesh m = generate_mesh(d, 0.1);
    CHECK(m.total_volume() == doctest::Approx(kPi).epsilon(0.02));
    for (std::size_t t = 0; t < m.tets.size(); ++t) CHECK(m.tet_volume(int(t)) > 0.0);
}

TEST_CASE("boundary tags partition the boundary") {
    auto d = build_domain(DomainSpec::expanding(1.0, 2.0));
    Mesh m = generate_mesh(d, 0.15);
    double total = 0.0;
    for (const auto& f : m.boundary_faces) total += norm(m.face_area_normal(f));
    double tagged = m.boundary_area(BoundaryTag::S0) + m.boundary_area(BoundaryTag::S1) +
                    m.boundary_area(BoundaryTag::Sside);
    CHECK(total == doctest::Approx(tagged).epsilon(1e-13));

    // closed surface: every edge of the boundary triangulation is shared by
    // exactly two boundary faces
    std::map<std::pair<int, int>, int> edges;
    for (const auto& f : m.boundary_faces)
        for (int k = 0; k < 3; ++k) {
            int a = f.v[k], b = f.v[(k + 1) % 3];
            edges[{std::min(a, b), std::max(a, b)}]++;
        }
    for (const auto& [e, cnt] : edges) CHECK(cnt == 2);
}

TEST_CASE("expanding tube S1 cap area approximates 4 pi") {
    auto d = build_domain(DomainSpec::expanding(1.0, 2.0));
    Mesh m = generate_mesh(d, 0.1);
    CHECK(m.boundary_area(BoundaryTag::S1) == doctest::Approx(4 * kPi).epsilon(0.03));
}

TEST_CASE("mesh volume converges at second order") {
    // straight cylinder: exact pi * r^2 * h
    {
        auto d = build_domain(DomainSpec::straight(1.0, 1.0));
        double e1 = std::abs(generate_mesh(d, 0.2).total_volume() - kPi);
        double e2 = std::abs(generate_mesh(d, 0.1).total_volume() - kPi);
        CHECK(e1 / e2 >= 3.4);  // order >= ~1.8 measured on one halving
    }
    // expanding tube: int pi r(z)^2 dz = pi * 7/3
    {
        auto d = build_domain(DomainSpec::expanding(1.0, 2.0));
        double exact = kPi * 7.0 / 3.0;
        double e1 = std::abs(generate_mesh(d, 0.2).total_volume() - exact);
        double e2 = std::abs(generate_mesh(d, 0.1).total_volume() - exact);
        CHECK(e1 / e2 >= 3.4);
    }
}

TEST_CASE("tagged boundary vertices lie on the image of the reference boundary") {
    auto d = build_domain(DomainSpec::curved(1.0, kPi / 2, 0.2));
    Mesh m = generate_mesh(d, 0.1);
    for (const auto& f : m.boundary_faces) {
        for (int v : f.v) {
            const ReferencePoint& x = m.ref_vertices[v];
            double r2 = x.x1 * x.x1 + x.x2 * x.x2;
            bool on_cap = std::abs(x.z) <= kGeomEps || std::abs(x.z - 1.0) <= kGeomEps;
            bool on_side = std::abs(r2 - 1.0) <= 2 * kGeomEps;
            switch (f.tag) {
                case BoundaryTag::S0: CHECK(std::abs(x.z) <= kGeomEps); break;
                case BoundaryTag::S1: CHECK(std::abs(x.z - 1.0) <= kGeomEps); break;
                case BoundaryTag::Sside: CHECK(on_side); break;
            }
            CHECK((on_cap || on_side));
        }
    }
}

TEST_CASE("mesh generation is deterministic") {
    auto d = build_domain(DomainSpec::expanding(1.0, 2.0));
    Mesh a = generate_mesh(d, 0.15);
    Mesh b = generate_mesh(d, 0.15);
    REQUIRE(a.vertices.size() == b.vertices.size());
    CHECK(std::memcmp(a.vertices.data(), b.vertices.data(), a.vertices.size() * sizeof(Vec3)) ==
          0);
    REQUIRE(a.tets.size() == b.tets.size());
    CHECK(std::memcmp(a.tets.data(), b.tets.data(), a.tets.size() * sizeof(a.tets[0])) == 0);
}

TEST_CASE("mesh is conforming: interior faces shared by exactly two tets") {
    auto d = build_domain(DomainSpec::straight(1.0, 1.0));
    Mesh m = generate_mesh(d, 0.2);
    std::map<std::array<int, 3>, int> faces;
    for (const auto& t : m.tets)
        for (int k = 0; k < 4; ++k) {
            std::array<int, 3> f = {t[(k + 1) % 4], t[(k + 2) % 4], t[(k + 3) % 4]};
            std::sort(f.begin(), f.end());
            faces[f]++;
        }
    std::size_t boundary = 0;
    for (const auto& [f, cnt] : faces) {
        CHECK((cnt == 1 || cnt == 2));
        if (cnt == 1) ++boundary;
    }
    CHECK(boundary == m.boundary_faces.size());
}

TEST_CASE("too-coarse resolution is rejected") {
    auto d = build_domain(DomainSpec::curved(1.0, kPi / 2, 0.2));
    CHECK_THROWS_AS(generate_mesh(d, 0.2), Error);
    CHECK_THROWS_AS(generate_mesh(d, -0.1), Error);
}

TEST_CASE("locator finds interior points and rejects far-outside ones") {
    auto d = build_domain(DomainSpec::straight(1.0, 1.0));
    Mesh m = generate_mesh(d, 0.15);
    TetLocator loc(m);
    auto hit = loc.locate(Vec3{0.2, -0.3, 0.55});
    REQUIRE(hit.tet >= 0);
    double s = hit.bary[0] + hit.bary[1] + hit.bary[2] + hit.bary[3];
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(loc.locate(Vec3{5.0, 5.0, 5.0}).tet == -1);
}
