#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "windtube/fields.hpp"
#include "windtube/geometry.hpp"
#include "windtube/harmonic.hpp"

namespace windtube {

/// The foliation coordinate: the harmonic potential (or an analytic stand-in
/// in tests), with its gradient for recording dz/ds along traces.
struct Foliation {
    std::function<double(const Vec3&)> value;
    std::function<std::pair<double, Vec3>(const Vec3&)> value_and_grad;
};

Foliation mesh_foliation(const ScalarFieldP1& phi, std::shared_ptr<const TetLocator> locator);
Foliation analytic_foliation(std::function<double(const Vec3&)> value,
                             std::function<Vec3(const Vec3&)> grad);

struct TraceOptions {
    double tol = 1e-8;          // integration tolerance (arclength-adaptive)
    int max_steps = 500000;
    double dz_cap = 0.01;       // max foliation change per recorded sample
    double dangle_cap = 0.1;    // max in-plane reference angle change per sample
    // Side-boundary handling.  Tangency makes the boundary invariant, but a
    // P1-interpolated field drifts at discretization scale, so a small skin
    // outside the reference radius is traversed untouched (the interpolant
    // extrapolates smoothly and backtraces retrace the same trajectory);
    // overshoot past the skin is projected back onto the side, and anything
    // beyond side_overshoot is treated as an escape.
    double side_skin = 0.01;
    double side_overshoot = 0.05;
    const TubularDomain* domain = nullptr;  // enables side projection + angle cap
};

struct LineSample {
    Vec3 y;        // position in M
    double z;      // foliation value
    double dzds;   // tangent . grad(phi)
    Vec3 tangent;  // unit direction of travel
    double s;      // cumulative arclength
    Vec2 ref;      // reference-disc coordinates, filled by the embedding map
    bool has_ref = false;
};

struct LineSection {
    std::size_t begin = 0;  // inclusive sample range
    std::size_t end = 0;
    int sigma = 0;          // +1 rising, -1 falling, 0 level
    double z_lo = 0.0;
    double z_hi = 0.0;
};

struct FieldLine {
    std::vector<LineSample> samples;
    Vec3 start;
    std::vector<LineSection> sections;
    double arc_tolerance = 0.0;

    double landing_z() const { return samples.back().z; }
};

/// Integrate the direction field v/|v| from a point on S0 until the
/// foliation coordinate reaches 1, with a root-refined landing on S1.
FieldLine trace_field_line(const BraidedField& field, const Vec3& start, const Foliation& fol,
                           const TraceOptions& opts = {});

/// Endpoint-only trace to a foliation level; direction = +1 follows v,
/// -1 follows -v.  Used for embedding foot points and level mappings.
Vec3 trace_to_level(const BraidedField& field, const Vec3& start, const Foliation& fol,
                    double level, int direction, const TraceOptions& opts = {});

/// Populate sections: locate turning points of z by Hermite refinement of
/// the sampled curve, insert them as samples, and assign sigma indicators.
void split_monotone(FieldLine& line);

struct DiscreteMapping {
    std::vector<Vec2> grid;    // reference start points on D0
    std::vector<Vec2> images;  // reference positions where phi first reaches `level`
    double level = 1.0;
};

/// Follow each start point's field line to the given foliation level and
/// return the reference coordinates of the crossing points.  Non-monotone
/// lines are rejected.  `starts` are physical seeds; `ref_of` maps a
/// physical point to reference coordinates (the embedding map).
DiscreteMapping field_line_mapping(const BraidedField& field, const Foliation& fol,
                                   const std::vector<Vec3>& starts,
                                   const std::vector<Vec2>& grid, double level,
                                   const std::function<Vec2(const Vec3&)>& ref_of,
                                   const TraceOptions& opts = {}, int threads = 1);

}  // namespace windtube
