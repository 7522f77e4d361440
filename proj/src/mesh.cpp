#include "windtube/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include "windtube/error.hpp"
#include "windtube/io.hpp"

namespace windtube {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct DiscMesh {
    std::vector<Vec2> vertices;               // reference disc coordinates
    std::vector<std::array<int, 3>> tris;     // CCW
    std::vector<int> rim;                     // rim loop, CCW, starts at angle 0
};

// Elliptical square-to-disc map; sends the square boundary onto the circle.
Vec2 square_to_disc(double u, double v) {
    return Vec2{u * std::sqrt(1.0 - 0.5 * v * v), v * std::sqrt(1.0 - 0.5 * u * u)};
}

double wrap_pi(double a) {
    while (a > kPi) a -= 2.0 * kPi;
    while (a <= -kPi) a += 2.0 * kPi;
    return a;
}

// Structured disc triangulation: an elliptically mapped square core patch
// (avoids the polar r=0 singularity) surrounded by annular rings.  Ring
// angles blend from the core-boundary angles to uniform spacing at the rim,
// so rim vertices are exactly equally spaced on the unit circle.
DiscMesh build_disc(double h_ref) {
    const double r_core = 0.4;
    const int m = std::max(1, static_cast<int>(std::lround(kPi / (4.0 * h_ref))));
    const int n_ring = std::max(1, static_cast<int>(std::lround((1.0 - r_core) / h_ref)));
    const int side = 2 * m + 1;        // core grid is side x side vertices
    const int n_bnd = 8 * m;           // vertices per ring

    DiscMesh disc;
    disc.vertices.reserve(side * side + n_ring * n_bnd);

    // Core vertices, grid order.
    auto core_id = [side](int i, int j) { return j * side + i; };
    for (int j = 0; j < side; ++j) {
        for (int i = 0; i < side; ++i) {
            double u = static_cast<double>(i) / m - 1.0;
            double v = static_cast<double>(j) / m - 1.0;
            disc.vertices.push_back(r_core * square_to_disc(u, v));
        }
    }

    // Core boundary loop, CCW from (u,v)=(1,0) which maps to angle 0.
    std::vector<int> core_bnd;
    core_bnd.reserve(n_bnd);
    for (int j = m; j < 2 * m; ++j) core_bnd.push_back(core_id(2 * m, j));
    for (int i = 2 * m; i > 0; --i) core_bnd.push_back(core_id(i, 2 * m));
    for (int j = 2 * m; j > 0; --j) core_bnd.push_back(core_id(0, j));
    for (int i = 0; i < 2 * m; ++i) core_bnd.push_back(core_id(i, 0));
    for (int j = 0; j < m; ++j) core_bnd.push_back(core_id(2 * m, j));

    std::vector<double> core_angle(n_bnd);
    for (int k = 0; k < n_bnd; ++k) {
        const Vec2& p = disc.vertices[core_bnd[k]];
        core_angle[k] = std::atan2(p.y, p.x);
    }

    // Ring vertices.  ring_id(i, k): ring i in 1..n_ring, sector k.
    std::vector<std::vector<int>> ring_ids(n_ring + 1);
    ring_ids[0] = core_bnd;
    for (int i = 1; i <= n_ring; ++i) {
        double r = r_core + (1.0 - r_core) * i / n_ring;
        double w = static_cast<double>(i) / n_ring;
        ring_ids[i].resize(n_bnd);
        for (int k = 0; k < n_bnd; ++k) {
            double uniform = 2.0 * kPi * k / n_bnd;
            double ang = core_angle[k] + w * wrap_pi(uniform - core_angle[k]);
            ring_ids[i][k] = static_cast<int>(disc.vertices.size());
            disc.vertices.push_back(Vec2{r * std::cos(ang), r * std::sin(ang)});
        }
    }
    disc.rim = ring_ids[n_ring];

    // Core triangles: union-jack split for symmetry.
    for (int j = 0; j < 2 * m; ++j) {
        for (int i = 0; i < 2 * m; ++i) {
            int a = core_id(i, j), b = core_id(i + 1, j);
            int c = core_id(i + 1, j + 1), d = core_id(i, j + 1);
            if ((i + j) % 2 == 0) {
                disc.tris.push_back({a, b, c});
                disc.tris.push_back({a, c, d});
            } else {
                disc.tris.push_back({a, b, d});
                disc.tris.push_back({b, c, d});
            }
        }
    }
    // Annulus triangles.
    for (int i = 0; i < n_ring; ++i) {
        for (int k = 0; k < n_bnd; ++k) {
            int k1 = (k + 1) % n_bnd;
            int a = ring_ids[i][k], b = ring_ids[i][k1];
            int c = ring_ids[i + 1][k1], d = ring_ids[i + 1][k];
            if (k % 2 == 0) {
                disc.tris.push_back({a, b, c});
                disc.tris.push_back({a, c, d});
            } else {
                disc.tris.push_back({a, b, d});
                disc.tris.push_back({b, c, d});
            }
        }
    }

    // All triangles CCW.
    for (auto& t : disc.tris) {
        Vec2 e1 = disc.vertices[t[1]] - disc.vertices[t[0]];
        Vec2 e2 = disc.vertices[t[2]] - disc.vertices[t[0]];
        if (cross(e1, e2) <= 0.0) std::swap(t[1], t[2]);
    }
    return disc;
}

// Decompose the prism over base triangle (a,b,c) with vertical offset N into
// three tets.  Quad-face diagonals pass through the lowest-indexed vertex of
// each face, which makes the decomposition conforming across prisms.
void split_prism(int a, int b, int c, int N, std::vector<std::array<int, 4>>& out) {
    // Rotate so `a` is the smallest base index.
    if (b < a && b <= c) { int t = a; a = b; b = c; c = t; }
    else if (c < a && c <= b) { int t = c; c = b; b = a; a = t; }
    if (b < c) {
        out.push_back({a, b, c, c + N});
        out.push_back({a, b, c + N, b + N});
        out.push_back({a, b + N, c + N, a + N});
    } else {
        out.push_back({a, b, c, b + N});
        out.push_back({a, c, c + N, b + N});
        out.push_back({a, b + N, c + N, a + N});
    }
}

std::array<int, 3> sorted3(std::array<int, 3> f) {
    std::sort(f.begin(), f.end());
    return f;
}

}  // namespace

double Mesh::tet_volume(int t) const {
    const auto& T = tets[t];
    Vec3 e1 = vertices[T[1]] - vertices[T[0]];
    Vec3 e2 = vertices[T[2]] - vertices[T[0]];
    Vec3 e3 = vertices[T[3]] - vertices[T[0]];
    return dot(cross(e1, e2), e3) / 6.0;
}

double Mesh::total_volume() const {
    double v = 0.0;
    for (std::size_t t = 0; t < tets.size(); ++t) v += tet_volume(static_cast<int>(t));
    return v;
}

Vec3 Mesh::face_centroid(const BoundaryFace& f) const {
    return (1.0 / 3.0) * (vertices[f.v[0]] + vertices[f.v[1]] + vertices[f.v[2]]);
}

Vec3 Mesh::face_area_normal(const BoundaryFace& f) const {
    Vec3 e1 = vertices[f.v[1]] - vertices[f.v[0]];
    Vec3 e2 = vertices[f.v[2]] - vertices[f.v[0]];
    return 0.5 * cross(e1, e2);
}

double Mesh::boundary_area(BoundaryTag tag) const {
    double a = 0.0;
    for (const auto& f : boundary_faces)
        if (f.tag == tag) a += norm(face_area_normal(f));
    return a;
}

const std::vector<std::array<int, 4>>& Mesh::neighbors() const {
    if (!neighbors_.empty()) return neighbors_;
    neighbors_.assign(tets.size(), {-1, -1, -1, -1});
    std::map<std::array<int, 3>, std::pair<int, int>> open;  // face -> (tet, slot)
    for (std::size_t t = 0; t < tets.size(); ++t) {
        const auto& T = tets[t];
        for (int k = 0; k < 4; ++k) {
            std::array<int, 3> f = sorted3({T[(k + 1) % 4], T[(k + 2) % 4], T[(k + 3) % 4]});
            auto it = open.find(f);
            if (it == open.end()) {
                open.emplace(f, std::make_pair(static_cast<int>(t), k));
            } else {
                neighbors_[t][k] = it->second.first;
                neighbors_[it->second.first][it->second.second] = static_cast<int>(t);
                open.erase(it);
            }
        }
    }
    return neighbors_;
}

Mesh generate_mesh(const TubularDomain& domain, double resolution) {
    if (resolution <= 0.0) fail_config("generate_mesh", "resolution must be positive");
    if (2.0 * domain.min_radius < 4.0 * resolution)
        fail_config("generate_mesh",
                    "resolution too coarse: fewer than 4 cells span the tube diameter");

    const double h_ref = resolution / domain.max_radius;
    DiscMesh disc = build_disc(h_ref);
    const int n_z = std::max(1, static_cast<int>(std::lround(domain.axial_span / resolution)));
    const int N = static_cast<int>(disc.vertices.size());

    Mesh mesh;
    mesh.resolution = resolution;
    mesh.layers = n_z;
    mesh.disc_vertex_count = N;
    mesh.vertices.reserve(static_cast<std::size_t>(N) * (n_z + 1));
    mesh.ref_vertices.reserve(mesh.vertices.capacity());

    mesh.vertex_side_normal.reserve(mesh.vertices.capacity());
    for (int l = 0; l <= n_z; ++l) {
        double z = static_cast<double>(l) / n_z;
        for (const Vec2& p : disc.vertices) {
            ReferencePoint x{p.x, p.y, z};
            mesh.ref_vertices.push_back(x);
            mesh.vertices.push_back(domain.embed(x));
            if (p.x * p.x + p.y * p.y >= 1.0 - 1e-12) {
                Mat3 J = domain.jacobian(x);
                Vec3 n = normalized(cross(J * Vec3{-x.x2, x.x1, 0.0}, J * Vec3{0.0, 0.0, 1.0}));
                mesh.vertex_side_normal.push_back(n);
            } else {
                mesh.vertex_side_normal.push_back(Vec3{});
            }
        }
    }

    mesh.tets.reserve(static_cast<std::size_t>(disc.tris.size()) * 3 * n_z);
    for (int l = 0; l < n_z; ++l) {
        int base = l * N;
        for (const auto& t : disc.tris)
            split_prism(t[0] + base, t[1] + base, t[2] + base, N, mesh.tets);
    }

    for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
        if (mesh.tet_volume(static_cast<int>(t)) <= 0.0)
            fail_numerical("generate_mesh",
                           "mapped tet has non-positive volume; domain too distorted "
                           "for the requested resolution");
    }

    // Boundary faces: those owned by exactly one tet, wound outward.
    std::map<std::array<int, 3>, std::pair<int, int>> once;
    for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
        const auto& T = mesh.tets[t];
        for (int k = 0; k < 4; ++k) {
            std::array<int, 3> f = sorted3({T[(k + 1) % 4], T[(k + 2) % 4], T[(k + 3) % 4]});
            auto it = once.find(f);
            if (it == once.end())
                once.emplace(f, std::make_pair(static_cast<int>(t), k));
            else
                once.erase(it);
        }
    }
    auto layer_of = [N](int v) { return v / N; };
    for (const auto& [key, owner] : once) {
        const auto& T = mesh.tets[owner.first];
        int opp = T[owner.second];
        std::array<int, 3> f = {T[(owner.second + 1) % 4], T[(owner.second + 2) % 4],
                                T[(owner.second + 3) % 4]};
        Vec3 n = cross(mesh.vertices[f[1]] - mesh.vertices[f[0]],
                       mesh.vertices[f[2]] - mesh.vertices[f[0]]);
        Vec3 to_face = mesh.vertices[f[0]] - mesh.vertices[opp];
        if (dot(n, to_face) < 0.0) std::swap(f[1], f[2]);

        BoundaryTag tag = BoundaryTag::Sside;
        if (layer_of(f[0]) == 0 && layer_of(f[1]) == 0 && layer_of(f[2]) == 0)
            tag = BoundaryTag::S0;
        else if (layer_of(f[0]) == n_z && layer_of(f[1]) == n_z && layer_of(f[2]) == n_z)
            tag = BoundaryTag::S1;
        mesh.boundary_faces.push_back(BoundaryFace{f, tag});
    }
    return mesh;
}

TetLocator::TetLocator(const Mesh& mesh) : mesh_(mesh), neighbors_of_(mesh.neighbors()) {
    lo_ = hi_ = mesh.vertices.at(0);
    for (const Vec3& v : mesh.vertices) {
        lo_.x = std::min(lo_.x, v.x); lo_.y = std::min(lo_.y, v.y); lo_.z = std::min(lo_.z, v.z);
        hi_.x = std::max(hi_.x, v.x); hi_.y = std::max(hi_.y, v.y); hi_.z = std::max(hi_.z, v.z);
    }
    // Pad so queries marginally outside the hull still land in a bin.
    Vec3 span = hi_ - lo_;
    double pad = 1e-6 * std::max({span.x, span.y, span.z, 1.0});
    lo_ -= Vec3{pad, pad, pad};
    hi_ += Vec3{pad, pad, pad};
    span = hi_ - lo_;

    double avg_edge = std::cbrt(6.0 * mesh.total_volume() / mesh.tets.size());
    bin_size_ = std::max(2.0 * avg_edge, 1e-12);
    nx_ = std::max(1, static_cast<int>(span.x / bin_size_));
    ny_ = std::max(1, static_cast<int>(span.y / bin_size_));
    nz_ = std::max(1, static_cast<int>(span.z / bin_size_));
    bins_.resize(static_cast<std::size_t>(nx_) * ny_ * nz_);

    inv_.resize(mesh.tets.size());
    for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
        const auto& T = mesh.tets[t];
        Vec3 e1 = mesh.vertices[T[1]] - mesh.vertices[T[0]];
        Vec3 e2 = mesh.vertices[T[2]] - mesh.vertices[T[0]];
        Vec3 e3 = mesh.vertices[T[3]] - mesh.vertices[T[0]];
        Mat3 A = Mat3::from_columns(e1, e2, e3);
        double d = det(A);
        Mat3& inv = inv_[t];
        inv(0, 0) = (A(1, 1) * A(2, 2) - A(1, 2) * A(2, 1)) / d;
        inv(0, 1) = (A(0, 2) * A(2, 1) - A(0, 1) * A(2, 2)) / d;
        inv(0, 2) = (A(0, 1) * A(1, 2) - A(0, 2) * A(1, 1)) / d;
        inv(1, 0) = (A(1, 2) * A(2, 0) - A(1, 0) * A(2, 2)) / d;
        inv(1, 1) = (A(0, 0) * A(2, 2) - A(0, 2) * A(2, 0)) / d;
        inv(1, 2) = (A(0, 2) * A(1, 0) - A(0, 0) * A(1, 2)) / d;
        inv(2, 0) = (A(1, 0) * A(2, 1) - A(1, 1) * A(2, 0)) / d;
        inv(2, 1) = (A(0, 1) * A(2, 0) - A(0, 0) * A(2, 1)) / d;
        inv(2, 2) = (A(0, 0) * A(1, 1) - A(0, 1) * A(1, 0)) / d;

        Vec3 tlo = mesh.vertices[T[0]], thi = mesh.vertices[T[0]];
        for (int k = 1; k < 4; ++k) {
            const Vec3& v = mesh.vertices[T[k]];
            tlo.x = std::min(tlo.x, v.x); tlo.y = std::min(tlo.y, v.y); tlo.z = std::min(tlo.z, v.z);
            thi.x = std::max(thi.x, v.x); thi.y = std::max(thi.y, v.y); thi.z = std::max(thi.z, v.z);
        }
        int ix0 = std::clamp(static_cast<int>((tlo.x - lo_.x) / span.x * nx_), 0, nx_ - 1);
        int ix1 = std::clamp(static_cast<int>((thi.x - lo_.x) / span.x * nx_), 0, nx_ - 1);
        int iy0 = std::clamp(static_cast<int>((tlo.y - lo_.y) / span.y * ny_), 0, ny_ - 1);
        int iy1 = std::clamp(static_cast<int>((thi.y - lo_.y) / span.y * ny_), 0, ny_ - 1);
        int iz0 = std::clamp(static_cast<int>((tlo.z - lo_.z) / span.z * nz_), 0, nz_ - 1);
        int iz1 = std::clamp(static_cast<int>((thi.z - lo_.z) / span.z * nz_), 0, nz_ - 1);
        for (int iz = iz0; iz <= iz1; ++iz)
            for (int iy = iy0; iy <= iy1; ++iy)
                for (int ix = ix0; ix <= ix1; ++ix)
                    bins_[bin_index(ix, iy, iz)].push_back(static_cast<int>(t));
    }
}

TetLocator::Hit TetLocator::locate(const Vec3& p, double slack) const {
    Hit best;
    double best_min = -1e300;
    auto consider = [&](int t) {
        Vec3 d = p - mesh_.vertices[mesh_.tets[t][0]];
        Vec3 b = inv_[t] * d;
        double b0 = 1.0 - b.x - b.y - b.z;
        double mn = std::min({b0, b.x, b.y, b.z});
        if (mn > best_min) {
            best_min = mn;
            best.tet = t;
            best.bary = {b0, b.x, b.y, b.z};
        }
        return mn;
    };

    // Queries cluster along traces, so start from this thread's last hit and
    // walk across the face with the most negative barycentric coordinate.
    static thread_local const TetLocator* tl_owner = nullptr;
    static thread_local int tl_hint = -1;
    if (tl_owner == this && tl_hint >= 0 && tl_hint < static_cast<int>(mesh_.tets.size())) {
        int t = tl_hint;
        for (int hop = 0; hop < 64; ++hop) {
            Vec3 d = p - mesh_.vertices[mesh_.tets[t][0]];
            Vec3 b = inv_[t] * d;
            std::array<double, 4> bary{1.0 - b.x - b.y - b.z, b.x, b.y, b.z};
            int worst = 0;
            for (int k = 1; k < 4; ++k)
                if (bary[k] < bary[worst]) worst = k;
            if (bary[worst] >= -1e-13) {
                tl_hint = t;
                return Hit{t, bary};
            }
            int next = neighbors_of_[t][worst];
            if (next < 0) break;
            t = next;
        }
    }

    Vec3 span = hi_ - lo_;
    int ix = std::clamp(static_cast<int>((p.x - lo_.x) / span.x * nx_), 0, nx_ - 1);
    int iy = std::clamp(static_cast<int>((p.y - lo_.y) / span.y * ny_), 0, ny_ - 1);
    int iz = std::clamp(static_cast<int>((p.z - lo_.z) / span.z * nz_), 0, nz_ - 1);
    for (int t : bins_[bin_index(ix, iy, iz)]) {
        consider(t);
        if (best_min >= -1e-13) {
            tl_owner = this;
            tl_hint = best.tet;
            return best;
        }
    }
    // Widen to the 27-bin neighbourhood for points straddling bin borders.
    for (int dz = -1; dz <= 1; ++dz)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (dx == 0 && dy == 0 && dz == 0) continue;
                int jx = ix + dx, jy = iy + dy, jz = iz + dz;
                if (jx < 0 || jx >= nx_ || jy < 0 || jy >= ny_ || jz < 0 || jz >= nz_) continue;
                for (int t : bins_[bin_index(jx, jy, jz)]) {
                    consider(t);
                    if (best_min >= -1e-13) {
                        tl_owner = this;
                        tl_hint = best.tet;
                        return best;
                    }
                }
            }
    if (best_min >= -slack) {
        tl_owner = this;
        tl_hint = best.tet;
        return best;
    }
    return Hit{};
}

void write_vtk(const Mesh& mesh, const std::string& path,
               const std::vector<std::pair<std::string, const std::vector<double>*>>& point_data) {
    std::ofstream out(path);
    if (!out) fail_config("write_vtk", "cannot open " + path);
    out << "# vtk DataFile Version 2.0\n";
    out << "windtube mesh\n";
    out << "ASCII\n";
    out << "DATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << mesh.vertices.size() << " double\n";
    for (const Vec3& v : mesh.vertices)
        out << format_double(v.x) << ' ' << format_double(v.y) << ' ' << format_double(v.z) << '\n';
    out << "CELLS " << mesh.tets.size() << ' ' << 5 * mesh.tets.size() << '\n';
    for (const auto& t : mesh.tets)
        out << "4 " << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << t[3] << '\n';
    out << "CELL_TYPES " << mesh.tets.size() << '\n';
    for (std::size_t i = 0; i < mesh.tets.size(); ++i) out << "10\n";
    if (!point_data.empty()) {
        out << "POINT_DATA " << mesh.vertices.size() << '\n';
        for (const auto& [name, values] : point_data) {
            out << "SCALARS " << name << " double 1\n";
            out << "LOOKUP_TABLE default\n";
            for (double v : *values) out << format_double(v) << '\n';
        }
    }
}

void write_vtk_surface(const Mesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail_config("write_vtk_surface", "cannot open " + path);
    out << "# vtk DataFile Version 2.0\n";
    out << "windtube boundary\n";
    out << "ASCII\n";
    out << "DATASET UNSTRUCTURED_GRID\n";
    out << "POINTS " << mesh.vertices.size() << " double\n";
    for (const Vec3& v : mesh.vertices)
        out << format_double(v.x) << ' ' << format_double(v.y) << ' ' << format_double(v.z) << '\n';
    out << "CELLS " << mesh.boundary_faces.size() << ' ' << 4 * mesh.boundary_faces.size() << '\n';
    for (const auto& f : mesh.boundary_faces)
        out << "3 " << f.v[0] << ' ' << f.v[1] << ' ' << f.v[2] << '\n';
    out << "CELL_TYPES " << mesh.boundary_faces.size() << '\n';
    for (std::size_t i = 0; i < mesh.boundary_faces.size(); ++i) out << "5\n";
    out << "CELL_DATA " << mesh.boundary_faces.size() << '\n';
    out << "SCALARS boundary_tag int 1\n";
    out << "LOOKUP_TABLE default\n";
    for (const auto& f : mesh.boundary_faces) out << static_cast<int>(f.tag) << '\n';
}

}  // namespace windtube
