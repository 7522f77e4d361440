#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "windtube/geometry.hpp"
#include "windtube/vec.hpp"

namespace windtube {

enum class BoundaryTag : std::uint8_t { S0 = 0, S1 = 1, Sside = 2 };

struct BoundaryFace {
    std::array<int, 3> v;  // wound so the normal points out of the domain
    BoundaryTag tag;
};

/// Conforming tetrahedral mesh of a tubular domain, produced by mapping a
/// structured reference-cylinder mesh through the domain embedding.
struct Mesh {
    std::vector<DomainPoint> vertices;
    std::vector<std::array<int, 4>> tets;
    std::vector<BoundaryFace> boundary_faces;
    double resolution = 0.0;

    // Structured provenance, used by the cap solves and by tests.
    std::vector<ReferencePoint> ref_vertices;  // reference preimage of each vertex
    // Smooth outward side normal at side-wall vertices (zero elsewhere).
    std::vector<Vec3> vertex_side_normal;
    int layers = 0;                            // number of axial cells
    int disc_vertex_count = 0;                 // vertices per cross-section layer

    double tet_volume(int t) const;
    double total_volume() const;
    Vec3 face_centroid(const BoundaryFace& f) const;
    /// Area-weighted outward normal has norm = area.
    Vec3 face_area_normal(const BoundaryFace& f) const;
    double boundary_area(BoundaryTag tag) const;

    /// Tet adjacency across shared faces (-1 on the boundary); entry k of
    /// tet t is the neighbour opposite vertex k.
    const std::vector<std::array<int, 4>>& neighbors() const;

private:
    mutable std::vector<std::array<int, 4>> neighbors_;
};

/// Uniform-bin point locator with barycentric evaluation.
class TetLocator {
public:
    explicit TetLocator(const Mesh& mesh);

    struct Hit {
        int tet = -1;
        std::array<double, 4> bary{};
    };

    /// Find the tet containing p.  Points within `slack` (in barycentric
    /// units) outside the hull are assigned to the best-matching tet.
    /// Returns tet = -1 when nothing qualifies.
    Hit locate(const Vec3& p, double slack = 1e-6) const;

private:
    const Mesh& mesh_;
    const std::vector<std::array<int, 4>>& neighbors_of_;
    Vec3 lo_, hi_;
    double bin_size_ = 1.0;
    int nx_ = 1, ny_ = 1, nz_ = 1;
    std::vector<std::vector<int>> bins_;
    // Per-tet barycentric transform: bary_{1..3} = inv * (p - v0).
    std::vector<Mat3> inv_;

    int bin_index(int ix, int iy, int iz) const { return (iz * ny_ + iy) * nx_ + ix; }
};

/// Map a structured reference-cylinder mesh through the domain embedding.
/// `resolution` is the target physical edge length.
Mesh generate_mesh(const TubularDomain& domain, double resolution);

/// Legacy-ASCII VTK export: volume file with optional point-data arrays, and
/// a companion surface file carrying the "boundary_tag" cell array.
void write_vtk(const Mesh& mesh, const std::string& path,
               const std::vector<std::pair<std::string, const std::vector<double>*>>& point_data);
void write_vtk_surface(const Mesh& mesh, const std::string& path);

}  // namespace windtube
