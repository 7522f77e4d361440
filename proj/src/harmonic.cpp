#include "windtube/harmonic.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <map>

#include "windtube/error.hpp"

namespace windtube {

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

struct PcgOutcome {
    int iterations = 0;
    double rel_residual = 0.0;
    bool converged = false;
};

// Conjugate gradients with diagonal (Jacobi) preconditioning.
PcgOutcome pcg(const SpMat& A, const Eigen::VectorXd& b, Eigen::VectorXd& x, double rel_tol,
               int max_iter) {
    PcgOutcome out;
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        x.setZero();
        out.converged = true;
        return out;
    }
    Eigen::VectorXd dinv = A.diagonal();
    for (int i = 0; i < dinv.size(); ++i) dinv[i] = dinv[i] > 0.0 ? 1.0 / dinv[i] : 1.0;

    x.setZero();
    Eigen::VectorXd r = b;
    Eigen::VectorXd z = dinv.cwiseProduct(r);
    Eigen::VectorXd p = z;
    double rz = r.dot(z);
    for (int it = 0; it < max_iter; ++it) {
        Eigen::VectorXd Ap = A * p;
        double alpha = rz / p.dot(Ap);
        x += alpha * p;
        r -= alpha * Ap;
        out.iterations = it + 1;
        out.rel_residual = r.norm() / bnorm;
        if (out.rel_residual <= rel_tol) {
            out.converged = true;
            return out;
        }
        z = dinv.cwiseProduct(r);
        double rz_next = r.dot(z);
        p = z + (rz_next / rz) * p;
        rz = rz_next;
    }
    return out;
}

void assemble_stiffness(const Mesh& mesh, std::vector<Triplet>& trips) {
    trips.reserve(mesh.tets.size() * 16);
    for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
        auto g = shape_gradients(mesh, static_cast<int>(t));
        double vol = mesh.tet_volume(static_cast<int>(t));
        const auto& T = mesh.tets[t];
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
                trips.emplace_back(T[a], T[b], vol * dot(g[a], g[b]));
    }
}

std::vector<int> boundary_vertex_tags(const Mesh& mesh) {
    // -1 interior, else bitmask: 1 = S0, 2 = S1, 4 = side
    std::vector<int> mark(mesh.vertices.size(), 0);
    for (const auto& f : mesh.boundary_faces) {
        int bit = f.tag == BoundaryTag::S0 ? 1 : (f.tag == BoundaryTag::S1 ? 2 : 4);
        for (int v : f.v) mark[v] |= bit;
    }
    return mark;
}

}  // namespace

std::array<Vec3, 4> shape_gradients(const Mesh& mesh, int tet) {
    const auto& T = mesh.tets[tet];
    Vec3 e1 = mesh.vertices[T[1]] - mesh.vertices[T[0]];
    Vec3 e2 = mesh.vertices[T[2]] - mesh.vertices[T[0]];
    Vec3 e3 = mesh.vertices[T[3]] - mesh.vertices[T[0]];
    double six_vol = dot(cross(e1, e2), e3);
    // grad(lambda_i) for i=1..3 are rows of the inverse edge matrix.
    Vec3 g1 = cross(e2, e3); g1 *= 1.0 / six_vol;
    Vec3 g2 = cross(e3, e1); g2 *= 1.0 / six_vol;
    Vec3 g3 = cross(e1, e2); g3 *= 1.0 / six_vol;
    Vec3 g0 = -(g1 + g2 + g3);
    return {g0, g1, g2, g3};
}

ScalarFieldP1 solve_phi(const Mesh& mesh, double rel_tol, int max_iter, SolveStats* stats) {
    auto mark = boundary_vertex_tags(mesh);
    bool has0 = false, has1 = false, hasS = false;
    for (const auto& f : mesh.boundary_faces) {
        has0 |= f.tag == BoundaryTag::S0;
        has1 |= f.tag == BoundaryTag::S1;
        hasS |= f.tag == BoundaryTag::Sside;
    }
    if (!has0 || !has1 || !hasS)
        fail_validation("solve_phi", "mesh is missing a boundary tag");

    const int n = static_cast<int>(mesh.vertices.size());
    std::vector<double> dirichlet(n, -1.0);  // <0 means free
    for (int v = 0; v < n; ++v) {
        if (mark[v] & 1) dirichlet[v] = 0.0;       // S0 wins on the rim
        else if (mark[v] & 2) dirichlet[v] = 1.0;
    }

    std::vector<int> free_id(n, -1);
    int nfree = 0;
    for (int v = 0; v < n; ++v)
        if (dirichlet[v] < 0.0) free_id[v] = nfree++;

    std::vector<Triplet> trips;
    assemble_stiffness(mesh, trips);

    std::vector<Triplet> ff;
    ff.reserve(trips.size());
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nfree);
    for (const auto& tr : trips) {
        int r = tr.row(), c = tr.col();
        if (free_id[r] < 0) continue;
        if (free_id[c] >= 0)
            ff.emplace_back(free_id[r], free_id[c], tr.value());
        else
            rhs[free_id[r]] -= tr.value() * dirichlet[c];
    }
    SpMat K(nfree, nfree);
    K.setFromTriplets(ff.begin(), ff.end());

    Eigen::VectorXd x(nfree);
    auto out = pcg(K, rhs, x, rel_tol, max_iter);
    if (!out.converged)
        fail_numerical("solve_phi", "conjugate gradients failed to reach tolerance (residual " +
                                        std::to_string(out.rel_residual) + ")");
    if (stats) *stats = SolveStats{out.iterations, out.rel_residual};

    ScalarFieldP1 phi;
    phi.mesh = &mesh;
    phi.values.resize(n);
    for (int v = 0; v < n; ++v)
        phi.values[v] = dirichlet[v] >= 0.0 ? dirichlet[v] : x[free_id[v]];
    return phi;
}

VectorFieldNodal gradient_field(const ScalarFieldP1& phi) {
    const Mesh& mesh = *phi.mesh;
    VectorFieldNodal u;
    u.mesh = &mesh;
    u.vectors.assign(mesh.vertices.size(), Vec3{});
    std::vector<double> wsum(mesh.vertices.size(), 0.0);
    for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
        auto g = shape_gradients(mesh, static_cast<int>(t));
        const auto& T = mesh.tets[t];
        Vec3 grad{};
        for (int a = 0; a < 4; ++a) grad += phi.values[T[a]] * g[a];
        double vol = mesh.tet_volume(static_cast<int>(t));
        for (int a = 0; a < 4; ++a) {
            u.vectors[T[a]] += vol * grad;
            wsum[T[a]] += vol;
        }
    }
    for (std::size_t v = 0; v < u.vectors.size(); ++v) u.vectors[v] *= 1.0 / wsum[v];

    // Constraint-consistent recovery at the side wall: the continuum field
    // satisfies n.u = 0 there exactly, while one-sided averaging leaves an
    // O(h) normal bias that would push traced lines through the wall.
    // Project side-node vectors onto the tangent plane of the smooth wall.
    if (!mesh.vertex_side_normal.empty()) {
        for (std::size_t v = 0; v < u.vectors.size(); ++v) {
            const Vec3& n = mesh.vertex_side_normal[v];
            if (norm2(n) == 0.0) continue;
            u.vectors[v] -= dot(u.vectors[v], n) * n;
        }
    }
    return u;
}

std::pair<double, double> axial_fluxes(const ScalarFieldP1& phi) {
    const Mesh& mesh = *phi.mesh;
    std::vector<double> residual(mesh.vertices.size(), 0.0);
    for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
        auto g = shape_gradients(mesh, static_cast<int>(t));
        double vol = mesh.tet_volume(static_cast<int>(t));
        const auto& T = mesh.tets[t];
        for (int a = 0; a < 4; ++a) {
            double acc = 0.0;
            for (int b = 0; b < 4; ++b) acc += dot(g[a], g[b]) * phi.values[T[b]];
            residual[T[a]] += vol * acc;
        }
    }
    auto mark = boundary_vertex_tags(mesh);
    double f0 = 0.0, f1 = 0.0;
    for (std::size_t v = 0; v < residual.size(); ++v) {
        if (mark[v] & 1) f0 -= residual[v];  // inward flux through S0
        else if (mark[v] & 2) f1 += residual[v];
    }
    return {f0, f1};
}

double dirichlet_energy(const Mesh& mesh, const std::vector<double>& values) {
    double e = 0.0;
    for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
        auto g = shape_gradients(mesh, static_cast<int>(t));
        const auto& T = mesh.tets[t];
        Vec3 grad{};
        for (int a = 0; a < 4; ++a) grad += values[T[a]] * g[a];
        e += mesh.tet_volume(static_cast<int>(t)) * norm2(grad);
    }
    return e;
}

NullAuditReport check_nonnull(const VectorFieldNodal& u, double floor) {
    const Mesh& mesh = *u.mesh;
    std::vector<bool> on_boundary(mesh.vertices.size(), false);
    for (const auto& f : mesh.boundary_faces)
        for (int v : f.v) on_boundary[v] = true;

    std::vector<double> norms;
    norms.reserve(mesh.vertices.size());
    NullAuditReport rep;
    rep.floor = floor;
    rep.min_norm = 1e300;
    for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
        if (on_boundary[v]) continue;
        double nn = norm(u.vectors[v]);
        norms.push_back(nn);
        if (nn < rep.min_norm) {
            rep.min_norm = nn;
            rep.argmin_vertex = static_cast<int>(v);
        }
    }
    if (norms.empty()) {
        rep.pass = false;
        return rep;
    }
    std::nth_element(norms.begin(), norms.begin() + norms.size() / 2, norms.end());
    rep.median_norm = norms[norms.size() / 2];
    rep.min_over_median = rep.median_norm > 0.0 ? rep.min_norm / rep.median_norm : 0.0;
    rep.pass = rep.min_over_median >= floor;
    return rep;
}

// ---------------------------------------------------------------------------
// Surface coordinates
// ---------------------------------------------------------------------------

void SurfaceCoords::Locator2D::build(std::vector<Tri2D> t) {
    tris = std::move(t);
    lo = hi = tris.at(0).p[0];
    double area_sum = 0.0;
    for (const auto& tr : tris) {
        for (const Vec2& p : tr.p) {
            lo.x = std::min(lo.x, p.x); lo.y = std::min(lo.y, p.y);
            hi.x = std::max(hi.x, p.x); hi.y = std::max(hi.y, p.y);
        }
        area_sum += 0.5 * std::abs(cross(tr.p[1] - tr.p[0], tr.p[2] - tr.p[0]));
    }
    Vec2 span = hi - lo;
    double pad = 1e-9 * std::max({span.x, span.y, 1.0});
    lo -= Vec2{pad, pad};
    hi += Vec2{pad, pad};
    span = hi - lo;
    double cell = std::max(2.0 * std::sqrt(area_sum / tris.size()), 1e-12);
    nx = std::max(1, static_cast<int>(span.x / cell));
    ny = std::max(1, static_cast<int>(span.y / cell));
    bins.assign(static_cast<std::size_t>(nx) * ny, {});
    for (std::size_t i = 0; i < tris.size(); ++i) {
        Vec2 tlo = tris[i].p[0], thi = tris[i].p[0];
        for (const Vec2& p : tris[i].p) {
            tlo.x = std::min(tlo.x, p.x); tlo.y = std::min(tlo.y, p.y);
            thi.x = std::max(thi.x, p.x); thi.y = std::max(thi.y, p.y);
        }
        int ix0 = std::clamp(static_cast<int>((tlo.x - lo.x) / span.x * nx), 0, nx - 1);
        int ix1 = std::clamp(static_cast<int>((thi.x - lo.x) / span.x * nx), 0, nx - 1);
        int iy0 = std::clamp(static_cast<int>((tlo.y - lo.y) / span.y * ny), 0, ny - 1);
        int iy1 = std::clamp(static_cast<int>((thi.y - lo.y) / span.y * ny), 0, ny - 1);
        for (int iy = iy0; iy <= iy1; ++iy)
            for (int ix = ix0; ix <= ix1; ++ix)
                bins[static_cast<std::size_t>(iy) * nx + ix].push_back(static_cast<int>(i));
    }
}

std::array<double, 3> SurfaceCoords::Locator2D::locate(const Vec2& q, int& tri,
                                                       double slack) const {
    Vec2 span = hi - lo;
    int ix = std::clamp(static_cast<int>((q.x - lo.x) / span.x * nx), 0, nx - 1);
    int iy = std::clamp(static_cast<int>((q.y - lo.y) / span.y * ny), 0, ny - 1);
    tri = -1;
    double best_min = -1e300;
    std::array<double, 3> best{};
    auto consider = [&](int t) {
        const Tri2D& T = tris[t];
        double den = cross(T.p[1] - T.p[0], T.p[2] - T.p[0]);
        double b1 = cross(q - T.p[0], T.p[2] - T.p[0]) / den;
        double b2 = cross(T.p[1] - T.p[0], q - T.p[0]) / den;
        double b0 = 1.0 - b1 - b2;
        double mn = std::min({b0, b1, b2});
        if (mn > best_min) {
            best_min = mn;
            best = {b0, b1, b2};
            tri = t;
        }
    };
    for (int dy = 0; dy <= 2 && best_min < -1e-13; ++dy) {
        for (int dx = 0; dx <= 2 && best_min < -1e-13; ++dx) {
            int jx = ix + (dx == 0 ? 0 : (dx == 1 ? -1 : 1));
            int jy = iy + (dy == 0 ? 0 : (dy == 1 ? -1 : 1));
            if (jx < 0 || jx >= nx || jy < 0 || jy >= ny) continue;
            for (int t : bins[static_cast<std::size_t>(jy) * nx + jx]) consider(t);
        }
    }
    if (best_min < -slack) tri = -1;
    return best;
}

Vec2 SurfaceCoords::xy_of_vertex(int global_vertex) const {
    int slot = vertex_slot_[global_vertex];
    return xy_[slot];
}

Vec2 SurfaceCoords::eval(const Vec3& point) const {
    Vec3 d = point - plane_origin_;
    Vec2 q{dot(d, plane_e1_), dot(d, plane_e2_)};
    int tri = -1;
    auto b = cap_locator_.locate(q, tri, 0.15);
    if (tri < 0) fail_numerical("surface_coords", "point is not on the cap");
    const auto& T = triangles_[tri];
    return b[0] * xy_of_vertex(T[0]) + b[1] * xy_of_vertex(T[1]) + b[2] * xy_of_vertex(T[2]);
}

SurfaceCoords::CapPoint SurfaceCoords::from_disc(const Vec2& x) const {
    int tri = -1;
    auto b = disc_locator_.locate(x, tri, 0.05);
    if (tri < 0) fail_numerical("surface_coords", "disc point lies outside the mapped cap");
    const auto& T = triangles_[tri];
    CapPoint cp;
    cp.position = b[0] * mesh_->vertices[T[0]] + b[1] * mesh_->vertices[T[1]] +
                  b[2] * mesh_->vertices[T[2]];
    cp.triangle = tri;
    cp.jacobian = tri_jacobian_[tri];
    return cp;
}

SurfaceCoords solve_surface_coords(const Mesh& mesh, double origin_arc, BoundaryTag tag,
                                   double rel_tol) {
    SurfaceCoords sc;
    sc.mesh_ = &mesh;
    sc.tag_ = tag;

    // Cap triangles, rewound so their normals point into the domain; the
    // induced rim orientation then makes the disc map orientation-preserving.
    for (const auto& f : mesh.boundary_faces)
        if (f.tag == tag) sc.triangles_.push_back({f.v[0], f.v[2], f.v[1]});
    if (sc.triangles_.empty()) fail_validation("solve_surface_coords", "cap has no faces");

    sc.vertex_slot_.assign(mesh.vertices.size(), -1);
    for (const auto& t : sc.triangles_)
        for (int v : t)
            if (sc.vertex_slot_[v] < 0) {
                sc.vertex_slot_[v] = 0;
                sc.cap_vertices_.push_back(v);
            }
    std::sort(sc.cap_vertices_.begin(), sc.cap_vertices_.end());
    for (std::size_t i = 0; i < sc.cap_vertices_.size(); ++i)
        sc.vertex_slot_[sc.cap_vertices_[i]] = static_cast<int>(i);

    // Rim loop: directed edges of inward-wound triangles used exactly once.
    std::map<std::pair<int, int>, int> edge_use;
    for (const auto& t : sc.triangles_) {
        for (int k = 0; k < 3; ++k) {
            int a = t[k], b = t[(k + 1) % 3];
            edge_use[{a, b}]++;
        }
    }
    std::map<int, int> next_on_rim;
    for (const auto& [e, cnt] : edge_use) {
        (void)cnt;
        if (edge_use.find({e.second, e.first}) == edge_use.end())
            next_on_rim[e.first] = e.second;
    }
    if (next_on_rim.empty()) fail_validation("solve_surface_coords", "cap has no boundary");
    int start = next_on_rim.begin()->first;  // smallest rim vertex index
    int cur = start;
    do {
        sc.rim_.push_back(cur);
        auto it = next_on_rim.find(cur);
        if (it == next_on_rim.end())
            fail_validation("solve_surface_coords", "cap boundary is not a closed loop");
        cur = it->second;
    } while (cur != start && sc.rim_.size() <= next_on_rim.size());
    if (cur != start || sc.rim_.size() != next_on_rim.size())
        fail_validation("solve_surface_coords", "cap boundary is not a single loop");

    // Discrete arclength along the rim.
    const std::size_t nr = sc.rim_.size();
    std::vector<double> arc(nr, 0.0);
    for (std::size_t k = 1; k < nr; ++k)
        arc[k] = arc[k - 1] + norm(mesh.vertices[sc.rim_[k]] - mesh.vertices[sc.rim_[k - 1]]);
    sc.perimeter_ = arc[nr - 1] + norm(mesh.vertices[sc.rim_[0]] - mesh.vertices[sc.rim_[nr - 1]]);
    if (origin_arc < 0.0 || origin_arc >= sc.perimeter_)
        fail_config("solve_surface_coords", "origin_arc outside [0, perimeter)");

    // Two cotangent-Laplace solves with Dirichlet rim data.
    const int n = static_cast<int>(sc.cap_vertices_.size());
    std::vector<char> is_rim(n, 0);
    std::vector<double> g1(n, 0.0), g2(n, 0.0);
    constexpr double kTwoPi = 2.0 * 3.14159265358979323846;
    for (std::size_t k = 0; k < nr; ++k) {
        int slot = sc.vertex_slot_[sc.rim_[k]];
        is_rim[slot] = 1;
        double s = arc[k] - origin_arc;
        if (s < 0.0) s += sc.perimeter_;
        double theta = kTwoPi * s / sc.perimeter_;
        g1[slot] = std::cos(theta);
        g2[slot] = std::sin(theta);
    }

    std::vector<int> free_id(n, -1);
    int nfree = 0;
    for (int i = 0; i < n; ++i)
        if (!is_rim[i]) free_id[i] = nfree++;

    std::vector<Triplet> ff;
    Eigen::VectorXd rhs1 = Eigen::VectorXd::Zero(nfree), rhs2 = Eigen::VectorXd::Zero(nfree);
    for (const auto& t : sc.triangles_) {
        const Vec3& p0 = mesh.vertices[t[0]];
        const Vec3& p1 = mesh.vertices[t[1]];
        const Vec3& p2 = mesh.vertices[t[2]];
        // Edge opposite each vertex; K_ab = (e_a . e_b) / (4A) is the
        // intrinsic cotangent stiffness of the embedded triangle.
        Vec3 e0 = p2 - p1, e1 = p0 - p2, e2 = p1 - p0;
        double area = 0.5 * norm(cross(e1, e2));
        std::array<Vec3, 3> e{e0, e1, e2};
        for (int a = 0; a < 3; ++a) {
            int ra = sc.vertex_slot_[t[a]];
            if (is_rim[ra]) continue;
            for (int b = 0; b < 3; ++b) {
                int rb = sc.vertex_slot_[t[b]];
                double kab = dot(e[a], e[b]) / (4.0 * area);
                if (is_rim[rb]) {
                    rhs1[free_id[ra]] -= kab * g1[rb];
                    rhs2[free_id[ra]] -= kab * g2[rb];
                } else {
                    ff.emplace_back(free_id[ra], free_id[rb], kab);
                }
            }
        }
    }
    SpMat K(nfree, nfree);
    K.setFromTriplets(ff.begin(), ff.end());
    Eigen::VectorXd x1(nfree), x2(nfree);
    auto o1 = pcg(K, rhs1, x1, rel_tol, 100000);
    auto o2 = pcg(K, rhs2, x2, rel_tol, 100000);
    if (!o1.converged || !o2.converged)
        fail_numerical("solve_surface_coords", "surface solve failed to converge");

    sc.xy_.resize(n);
    for (int i = 0; i < n; ++i) {
        if (is_rim[i])
            sc.xy_[i] = Vec2{g1[i], g2[i]};
        else
            sc.xy_[i] = Vec2{x1[free_id[i]], x2[free_id[i]]};
    }

    // Orientation audit: every inward-wound triangle must map to a
    // positively oriented disc triangle (flips signal under-resolution).
    sc.tri_jacobian_.resize(sc.triangles_.size());
    sc.tri_inward_normal_.resize(sc.triangles_.size());
    for (std::size_t i = 0; i < sc.triangles_.size(); ++i) {
        const auto& t = sc.triangles_[i];
        Vec2 a = sc.xy_[sc.vertex_slot_[t[0]]];
        Vec2 b = sc.xy_[sc.vertex_slot_[t[1]]];
        Vec2 c = sc.xy_[sc.vertex_slot_[t[2]]];
        double mapped = 0.5 * cross(b - a, c - a);
        Vec3 nrm = cross(mesh.vertices[t[1]] - mesh.vertices[t[0]],
                         mesh.vertices[t[2]] - mesh.vertices[t[0]]);
        double source = 0.5 * norm(nrm);
        if (mapped <= 0.0)
            fail_numerical("solve_surface_coords",
                           "coordinate map flipped a triangle; refine the mesh");
        sc.tri_jacobian_[i] = mapped / source;
        sc.tri_inward_normal_[i] = normalized(nrm);
    }

    // Cap-plane projection basis for 3-D point lookups.
    Vec3 centroid{};
    for (int v : sc.cap_vertices_) centroid += mesh.vertices[v];
    centroid *= 1.0 / n;
    Vec3 nsum{};
    for (const Vec3& tn : sc.tri_inward_normal_) nsum += tn;
    Vec3 nhat = normalized(nsum);
    Vec3 seed = mesh.vertices[sc.rim_[0]] - centroid;
    Vec3 e1p = normalized(seed - dot(seed, nhat) * nhat);
    Vec3 e2p = cross(nhat, e1p);
    sc.plane_origin_ = centroid;
    sc.plane_e1_ = e1p;
    sc.plane_e2_ = e2p;

    std::vector<SurfaceCoords::Tri2D> cap2d(sc.triangles_.size());
    std::vector<SurfaceCoords::Tri2D> disc2d(sc.triangles_.size());
    for (std::size_t i = 0; i < sc.triangles_.size(); ++i) {
        for (int k = 0; k < 3; ++k) {
            Vec3 d = mesh.vertices[sc.triangles_[i][k]] - centroid;
            cap2d[i].p[k] = Vec2{dot(d, e1p), dot(d, e2p)};
            disc2d[i].p[k] = sc.xy_[sc.vertex_slot_[sc.triangles_[i][k]]];
        }
    }
    sc.cap_locator_.build(std::move(cap2d));
    sc.disc_locator_.build(std::move(disc2d));
    return sc;
}

}  // namespace windtube
