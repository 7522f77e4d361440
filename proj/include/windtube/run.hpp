#pragma once

#include <memory>
#include <ostream>
#include <vector>

#include "windtube/config.hpp"
#include "windtube/embedding.hpp"
#include "windtube/fields.hpp"
#include "windtube/harmonic.hpp"
#include "windtube/helicity.hpp"
#include "windtube/mesh.hpp"
#include "windtube/tracing.hpp"
#include "windtube/winding.hpp"

namespace windtube {

/// Everything derived from a (domain, resolution) pair: mesh, harmonic
/// solve, surface coordinates and the inverse embedding.  Heap members keep
/// internal references stable across moves.
struct Pipeline {
    TubularDomain domain;
    std::unique_ptr<Mesh> mesh;
    std::shared_ptr<TetLocator> locator;
    std::unique_ptr<ScalarFieldP1> phi;
    std::unique_ptr<VectorFieldNodal> u;
    std::unique_ptr<SurfaceCoords> s0;
    std::unique_ptr<EmbeddingMap> embedding;
    NullAuditReport null_audit;
    SolveStats solve_stats;

    TraceOptions trace_options(double tol) const {
        TraceOptions o;
        o.tol = tol;
        o.domain = &domain;
        return o;
    }
};

Pipeline build_pipeline(const DomainSpec& spec, double resolution, double solver_tol,
                        EmbeddingMap::Mode mode = EmbeddingMap::Mode::Exact, int threads = 1);

/// Field lines seeded at the grid nodes: traced, split into monotone
/// sections and mapped to reference coordinates.
struct GridLines {
    QuadratureGrid grid;
    std::vector<Vec3> seeds;
    std::vector<SurfaceCoords::CapPoint> seed_info;
    std::vector<FieldLine> lines;
};

GridLines trace_grid_lines(const Pipeline& pipe, const BraidedField& field,
                           const QuadratureGrid& grid, const TraceOptions& opts, int threads = 1);

/// L_v on the grid (probes default to the grid itself).
WindingDistribution field_line_winding(const GridLines& gl, int threads = 1);

/// W_v with an arbitrary node weight function evaluated at the grid nodes.
WindingDistribution weighted_winding(const GridLines& gl, const std::vector<double>& w,
                                     int threads = 1);

/// A_b = weighted winding with w = J0 * b_z; requires the field to pass the
/// solenoidal check.  Also returns the per-node flux weights for H.
WindingDistribution field_line_helicity(const Pipeline& pipe, const BraidedField& b,
                                        const GridLines& gl, double solenoidal_tol,
                                        std::vector<double>* j0_bz_out, int threads = 1);

/// The z=1 field line mapping on the grid nodes.
DiscreteMapping grid_mapping(const Pipeline& pipe, const BraidedField& field,
                             const GridLines& gl, double level, const TraceOptions& opts,
                             int threads = 1);

/// CLI entry point: executes a parsed config, writes artifacts, returns the
/// process exit code (0 ok, 2 config, 3 numerical, 4 validation).
int run(const RunConfig& cfg, std::ostream& out);

/// Built-in oracle suite (appendix quadrature, twist closed forms, zero
/// winding of u, gradient identity); prints one line per check.
bool run_verify(std::ostream& out, int threads);

}  // namespace windtube
