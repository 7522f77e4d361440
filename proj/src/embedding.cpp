#include "windtube/embedding.hpp"

#include <cmath>

#include "windtube/error.hpp"
#include "windtube/parallel.hpp"

namespace windtube {

namespace {



}  // namespace

EmbeddingMap::EmbeddingMap(const TubularDomain& domain, const Mesh& mesh,
                           const ScalarFieldP1& phi, const VectorFieldNodal& u,
                           const SurfaceCoords& s0, std::shared_ptr<const TetLocator> locator,
                           Mode mode, int threads)
    : domain_(domain),
      mesh_(&mesh),
      phi_(&phi),
      s0_(&s0),
      locator_(std::move(locator)),
      mode_(mode),
      fol_(mesh_foliation(phi, locator_)),
      u_field_(wrap_nodal_field(domain, u, locator_)) {
    backtrace_opts_.tol = 1e-9;
    backtrace_opts_.dz_cap = 1e30;     // endpoint-only traces need no output density
    backtrace_opts_.dangle_cap = 1e30;
    backtrace_opts_.max_steps = 200000;
    // Wall-hugging u lines drift outside by the interpolant's normal error;
    // keep the skin and escape thresholds identical to the forward tracer so
    // backtraces retrace forward trajectories exactly.

    if (mode_ == Mode::Bulk) {
        vertex_ref_.resize(mesh.vertices.size());
        std::vector<std::string> errors(mesh.vertices.size());
        parallel_for(mesh.vertices.size(), threads, [&](std::size_t v) {
            try {
                vertex_ref_[v] = foot_coords_exact(mesh.vertices[v]);
            } catch (const Error& e) {
                errors[v] = e.what();
            }
        });
        for (std::size_t v = 0; v < errors.size(); ++v)
            if (!errors[v].empty())
                fail_numerical("embedding",
                               "vertex " + std::to_string(v) + " precompute: " + errors[v]);
    }
}

Vec2 EmbeddingMap::foot_coords_exact(const Vec3& y) const {
    double z = fol_.value(y);
    Vec3 foot = y;
    if (z > 1e-12) {
        TraceOptions opts = backtrace_opts_;
        opts.domain = &domain_;
        foot = trace_to_level(u_field_, y, fol_, 0.0, -1, opts);
        // the landing refinement bypasses the side projection; renormalize
        ReferencePoint x = domain_.unembed(foot);
        double r = std::sqrt(x.x1 * x.x1 + x.x2 * x.x2);
        if (r > 1.0) {
            x.x1 /= r;
            x.x2 /= r;
            foot = domain_.embed(x);
        }
    }
    return s0_->eval(foot);
}

Vec2 EmbeddingMap::bulk_coords(const Vec3& y) const {
    auto hit = locator_->locate(y, 0.25);
    if (hit.tet < 0) fail_numerical("embedding", "point outside mesh");
    const auto& T = mesh_->tets[hit.tet];
    Vec2 acc{};
    for (int a = 0; a < 4; ++a) acc += hit.bary[a] * vertex_ref_[T[a]];
    return acc;
}

ReferencePoint EmbeddingMap::to_reference(const Vec3& y) const {
    double z = fol_.value(y);
    Vec2 xy = mode_ == Mode::Bulk ? bulk_coords(y) : foot_coords_exact(y);
    return ReferencePoint{xy.x, xy.y, z};
}

void EmbeddingMap::map_curve(FieldLine& line) const {
    for (std::size_t i = 0; i < line.samples.size(); ++i) {
        auto& smp = line.samples[i];
        try {
            smp.ref = mode_ == Mode::Bulk ? bulk_coords(smp.y) : foot_coords_exact(smp.y);
            smp.has_ref = true;
        } catch (const Error& e) {
            fail_numerical("map_curve",
                           "sample " + std::to_string(i) + " failed to map: " + e.what());
        }
    }
}

}  // namespace windtube
