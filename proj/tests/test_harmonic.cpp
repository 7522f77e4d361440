#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "windtube/embedding.hpp"
#include "windtube/error.hpp"
#include "windtube/harmonic.hpp"
#include "windtube/run.hpp"

using namespace windtube;

namespace {
constexpr double kPi = 3.14159265358979323846;

// Constructed in place so the internal mesh pointers stay valid.
struct Solved {
    TubularDomain domain;
    Mesh mesh;
    ScalarFieldP1 phi;
    VectorFieldNodal u;

    Solved(const DomainSpec& spec, double res) {
        domain = build_domain(spec);
        mesh = generate_mesh(domain, res);
        phi = solve_phi(mesh);
        u = gradient_field(phi);
    }
    Solved(const Solved&) = delete;
};
}  // namespace

TEST_CASE("straight cylinder: phi equals z and u equals zhat") {
    Solved s(DomainSpec::straight(1.0, 1.0), 0.1);
    for (std::size_t v = 0; v < s.mesh.vertices.size(); ++v)
        CHECK(std::abs(s.phi.values[v] - s.mesh.vertices[v].z) < 1e-8);
    for (const Vec3& w : s.u.vectors) CHECK(norm(w - Vec3{0, 0, 1}) < 1e-6);
}

TEST_CASE("expanding tube: discrete flux balance and positive axial flow") {
    Solved s(DomainSpec::expanding(1.0, 2.0), 0.12);
    auto [f0, f1] = axial_fluxes(s.phi);
    CHECK(std::abs(f0 - f1) <= 1e-6 * std::abs(f1));

    std::vector<bool> on_boundary(s.mesh.vertices.size(), false);
    for (const auto& f : s.mesh.boundary_faces)
        for (int v : f.v) on_boundary[v] = true;
    for (std::size_t v = 0; v < s.mesh.vertices.size(); ++v)
        if (!on_boundary[v]) CHECK(s.u.vectors[v].z > 0.0);
}

TEST_CASE("curved tube: discrete maximum principle") {
    Solved s(DomainSpec::curved(1.0, kPi / 2, 0.2), 0.1);
    for (double v : s.phi.values) {
        CHECK(v >= -1e-8);
        CHECK(v <= 1.0 + 1e-8);
    }
}

TEST_CASE("interpolated u is curl-free to discretization accuracy") {
    // curl of the P1-interpolated recovered gradient, integrated per element
    auto run = [](double res) {
        Solved s(DomainSpec::expanding(1.0, 2.0), res);
        double worst = 0.0;
        for (std::size_t t = 0; t < s.mesh.tets.size(); ++t) {
            auto g = shape_gradients(s.mesh, int(t));
            const auto& T = s.mesh.tets[t];
            Vec3 curl{};
            for (int a = 0; a < 4; ++a) curl += cross(g[a], s.u.vectors[T[a]]);
            worst = std::max(worst, norm(curl) * s.mesh.tet_volume(int(t)));
        }
        return worst;
    };
    double c1 = run(0.2), c2 = run(0.1);
    CHECK(c2 < 0.1 * 0.1);  // well inside the O(resolution) scale
    CHECK(c2 < 0.5 * c1);   // shrinks under refinement
}

TEST_CASE("null audit: uniform field, expanding tube, and a zeroed fixture") {
    Solved s(DomainSpec::straight(1.0, 1.0), 0.15);
    auto rep = check_nonnull(s.u);
    CHECK(rep.pass);
    CHECK(rep.min_over_median == doctest::Approx(1.0).epsilon(1e-9));

    Solved e(DomainSpec::expanding(1.0, 2.0), 0.15);
    auto rep2 = check_nonnull(e.u);
    CHECK(rep2.pass);
    CHECK(rep2.min_over_median > 1e-3);

    // artificially zero one interior vertex
    std::vector<bool> on_boundary(e.mesh.vertices.size(), false);
    for (const auto& f : e.mesh.boundary_faces)
        for (int v : f.v) on_boundary[v] = true;
    VectorFieldNodal broken = e.u;
    for (std::size_t v = 0; v < broken.vectors.size(); ++v)
        if (!on_boundary[v]) {
            broken.vectors[v] = Vec3{};
            break;
        }
    auto rep3 = check_nonnull(broken);
    CHECK_FALSE(rep3.pass);
}

TEST_CASE("missing boundary tag is rejected") {
    auto d = build_domain(DomainSpec::straight(1.0, 1.0));
    Mesh m = generate_mesh(d, 0.2);
    for (auto& f : m.boundary_faces)
        if (f.tag == BoundaryTag::S1) f.tag = BoundaryTag::Sside;
    CHECK_THROWS_AS(solve_phi(m), Error);
}

TEST_CASE("flat disc surface coordinates reproduce the ambient coordinates") {
    auto d = build_domain(DomainSpec::straight(1.0, 1.0));
    Mesh m = generate_mesh(d, 0.1);
    auto sc = solve_surface_coords(m);
    for (int v : sc.cap_vertices()) {
        Vec2 xy = sc.xy_of_vertex(v);
        CHECK(std::abs(xy.x - m.vertices[v].x) < 1e-8);
        CHECK(std::abs(xy.y - m.vertices[v].y) < 1e-8);
    }
}

TEST_CASE("re-originating the rim rotates the coordinates rigidly") {
    auto d = build_domain(DomainSpec::straight(1.0, 1.0));
    Mesh m = generate_mesh(d, 0.15);
    auto sc0 = solve_surface_coords(m, 0.0);
    auto scq = solve_surface_coords(m, sc0.perimeter() / 4.0);
    // theta(s) loses a quarter turn, so coordinates rotate by -pi/2
    for (int v : sc0.cap_vertices()) {
        Vec2 a = sc0.xy_of_vertex(v);
        Vec2 b = scq.xy_of_vertex(v);
        CHECK(std::abs(b.x - a.y) < 1e-8);
        CHECK(std::abs(b.y + a.x) < 1e-8);
    }
}

TEST_CASE("curved cap coordinates respect the disc bound") {
    auto d = build_domain(DomainSpec::expanding(1.0, 2.0));
    Mesh m = generate_mesh(d, 0.15);
    auto sc = solve_surface_coords(m, 0.0, BoundaryTag::S1);
    for (int v : sc.cap_vertices()) {
        Vec2 xy = sc.xy_of_vertex(v);
        CHECK(xy.x * xy.x + xy.y * xy.y <= 1.0 + 1e-8);
    }
}

TEST_CASE("surface coordinate map is injective at the discrete level") {
    auto d = build_domain(DomainSpec::expanding(1.0, 2.0));
    Mesh m = generate_mesh(d, 0.2);
    auto sc = solve_surface_coords(m);
    const auto& verts = sc.cap_vertices();
    for (std::size_t i = 0; i < verts.size(); ++i) {
        for (std::size_t j = i + 1; j < verts.size(); ++j) {
            double surf_dist = norm(m.vertices[verts[i]] - m.vertices[verts[j]]);
            if (surf_dist <= m.resolution) continue;
            Vec2 di = sc.xy_of_vertex(verts[i]) - sc.xy_of_vertex(verts[j]);
            CHECK(norm(di) > 1e-10);
        }
    }
}

TEST_CASE("solved phi minimizes the Dirichlet energy over cap-fixed perturbations") {
    Solved s(DomainSpec::expanding(1.0, 2.0), 0.18);
    std::vector<bool> cap(s.mesh.vertices.size(), false);
    for (const auto& f : s.mesh.boundary_faces)
        if (f.tag != BoundaryTag::Sside)
            for (int v : f.v) cap[v] = true;
    double e0 = dirichlet_energy(s.mesh, s.phi.values);
    std::mt19937 rng(99u);
    std::uniform_real_distribution<double> amp(-0.05, 0.05);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<double> perturbed = s.phi.values;
        for (std::size_t v = 0; v < perturbed.size(); ++v)
            if (!cap[v]) perturbed[v] += amp(rng);
        CHECK(dirichlet_energy(s.mesh, perturbed) >= e0);
    }
}

TEST_CASE("phi increases strictly along u field lines") {
    Pipeline pipe = build_pipeline(DomainSpec::expanding(1.0, 2.0), 0.15, 1e-10,
                                   EmbeddingMap::Mode::Exact, 1);
    BraidedField ufield =
        make_field(FieldSpec::harmonic_u(), pipe.domain, pipe.u.get(), pipe.mesh.get());
    TraceOptions opts = pipe.trace_options(1e-8);
    std::mt19937 rng(5u);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        double r = 0.95 * std::sqrt(unit(rng));
        double th = 2 * kPi * unit(rng);
        Vec2 x{r * std::cos(th), r * std::sin(th)};
        Vec3 seed = pipe.embedding->seed_from_disc(x);
        FieldLine line = trace_field_line(ufield, seed, pipe.embedding->foliation(), opts);
        for (std::size_t i = 1; i < line.samples.size(); ++i)
            CHECK(line.samples[i].z > line.samples[i - 1].z);
    }
}
