#pragma once

#include <memory>
#include <vector>

#include "windtube/fields.hpp"
#include "windtube/harmonic.hpp"
#include "windtube/tracing.hpp"

namespace windtube {

/// The minimally distorted inverse embedding F^-1: M -> C.  The z coordinate
/// is the harmonic potential; the transverse coordinates are the harmonic
/// surface coordinates of the u-field-line foot point on S0.
class EmbeddingMap {
public:
    enum class Mode {
        Exact,  // backward-trace u for every query
        Bulk,   // precompute reference coordinates at mesh vertices, interpolate
    };

    EmbeddingMap(const TubularDomain& domain, const Mesh& mesh, const ScalarFieldP1& phi,
                 const VectorFieldNodal& u, const SurfaceCoords& s0,
                 std::shared_ptr<const TetLocator> locator, Mode mode = Mode::Exact,
                 int threads = 1);

    ReferencePoint to_reference(const Vec3& y) const;

    /// Transverse coordinates only (exact backtrace regardless of mode).
    Vec2 foot_coords_exact(const Vec3& y) const;

    /// Fill per-sample reference coordinates of a traced curve.
    void map_curve(FieldLine& line) const;

    /// Physical seed point on S0 whose reference coordinates are x.
    Vec3 seed_from_disc(const Vec2& x) const { return s0_->from_disc(x).position; }

    const SurfaceCoords& surface() const { return *s0_; }
    const Foliation& foliation() const { return fol_; }
    const BraidedField& u_field() const { return u_field_; }
    Mode mode() const { return mode_; }

private:
    TubularDomain domain_;
    const Mesh* mesh_;
    const ScalarFieldP1* phi_;
    const SurfaceCoords* s0_;
    std::shared_ptr<const TetLocator> locator_;
    Mode mode_;
    Foliation fol_;
    BraidedField u_field_;
    TraceOptions backtrace_opts_;
    std::vector<Vec2> vertex_ref_;  // bulk-mode cache, one entry per mesh vertex

    Vec2 bulk_coords(const Vec3& y) const;
};

}  // namespace windtube
