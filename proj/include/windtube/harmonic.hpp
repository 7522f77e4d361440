#pragma once

#include <array>
#include <vector>

#include "windtube/mesh.hpp"

namespace windtube {

/// Piecewise-linear scalar field, one value per mesh vertex.
struct ScalarFieldP1 {
    const Mesh* mesh = nullptr;
    std::vector<double> values;

    double eval(const TetLocator::Hit& hit) const {
        const auto& T = mesh->tets[hit.tet];
        return hit.bary[0] * values[T[0]] + hit.bary[1] * values[T[1]] +
               hit.bary[2] * values[T[2]] + hit.bary[3] * values[T[3]];
    }
};

/// Nodal vector field obtained by volume-weighted averaging of per-element
/// constant gradients; evaluable anywhere by barycentric interpolation.
struct VectorFieldNodal {
    const Mesh* mesh = nullptr;
    std::vector<Vec3> vectors;

    Vec3 eval(const TetLocator::Hit& hit) const {
        const auto& T = mesh->tets[hit.tet];
        return hit.bary[0] * vectors[T[0]] + hit.bary[1] * vectors[T[1]] +
               hit.bary[2] * vectors[T[2]] + hit.bary[3] * vectors[T[3]];
    }
};

/// Gradients of the four barycentric shape functions on a tet.
std::array<Vec3, 4> shape_gradients(const Mesh& mesh, int tet);

struct SolveStats {
    int iterations = 0;
    double rel_residual = 0.0;
};

/// Galerkin P1 solution of the Laplace equation with phi = 0 on S0, 1 on S1
/// and a natural condition on the side, solved by diagonally preconditioned
/// conjugate gradients to the requested relative residual.
ScalarFieldP1 solve_phi(const Mesh& mesh, double rel_tol = 1e-12, int max_iter = 200000,
                        SolveStats* stats = nullptr);

VectorFieldNodal gradient_field(const ScalarFieldP1& phi);

/// Axial flux through S0 and S1 via the variationally consistent boundary
/// residual; the two agree to solver tolerance by discrete conservation.
std::pair<double, double> axial_fluxes(const ScalarFieldP1& phi);

double dirichlet_energy(const Mesh& mesh, const std::vector<double>& values);

struct NullAuditReport {
    double min_norm = 0.0;
    double median_norm = 0.0;
    double min_over_median = 0.0;
    int argmin_vertex = -1;
    double floor = 1e-3;
    bool pass = false;
};

/// Numerical audit that the solved field has no interior null points:
/// reports min |u| / median |u| over interior vertices.
NullAuditReport check_nonnull(const VectorFieldNodal& u, double floor = 1e-3);

/// Harmonic coordinates on an end cap: two surface-Laplace solves with
/// circle-valued Dirichlet data theta(s) = 2*pi*s/L along the rim.
class SurfaceCoords {
public:
    BoundaryTag tag() const { return tag_; }
    const std::vector<int>& cap_vertices() const { return cap_vertices_; }
    const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
    const std::vector<int>& rim() const { return rim_; }
    double perimeter() const { return perimeter_; }

    Vec2 xy_of_vertex(int global_vertex) const;

    /// Interpolate (x1,x2) at a point lying on (or within slack of) the cap.
    Vec2 eval(const Vec3& point) const;

    struct CapPoint {
        Vec3 position;
        int triangle = -1;     // index into triangles()
        double jacobian = 0.0; // d(disc area)/d(cap area) of that triangle
    };
    /// Invert the coordinate map: disc point -> cap point.
    CapPoint from_disc(const Vec2& x) const;

    /// Area ratio mapped/source per cap triangle (the discrete Jacobian of
    /// the restricted inverse embedding).
    double triangle_jacobian(int tri) const { return tri_jacobian_[tri]; }
    Vec3 inward_normal(int tri) const { return tri_inward_normal_[tri]; }

private:
    friend SurfaceCoords solve_surface_coords(const Mesh&, double, BoundaryTag, double);

    struct Tri2D {
        std::array<Vec2, 3> p;
    };
    struct Locator2D {
        Vec2 lo, hi;
        int nx = 1, ny = 1;
        std::vector<std::vector<int>> bins;
        std::vector<Tri2D> tris;
        void build(std::vector<Tri2D> t);
        // returns triangle index and barycentric coords; tri = -1 if miss
        std::array<double, 3> locate(const Vec2& q, int& tri, double slack) const;
    };

    const Mesh* mesh_ = nullptr;
    BoundaryTag tag_ = BoundaryTag::S0;
    std::vector<int> cap_vertices_;
    std::vector<int> vertex_slot_;  // global vertex -> slot in cap_vertices_ (-1 elsewhere)
    std::vector<Vec2> xy_;
    std::vector<std::array<int, 3>> triangles_;  // inward-wound
    std::vector<double> tri_jacobian_;
    std::vector<Vec3> tri_inward_normal_;
    std::vector<int> rim_;
    double perimeter_ = 0.0;

    // cap-plane projection for point location
    Vec3 plane_origin_, plane_e1_, plane_e2_;
    Locator2D cap_locator_;   // triangles in cap-plane coordinates
    Locator2D disc_locator_;  // triangles in mapped (x1,x2) coordinates
};

/// origin_arc is the rim arclength at which theta = 0; the rim traversal is
/// oriented so that the coordinate map preserves orientation.
SurfaceCoords solve_surface_coords(const Mesh& mesh, double origin_arc = 0.0,
                                   BoundaryTag tag = BoundaryTag::S0, double rel_tol = 1e-12);

}  // namespace windtube
