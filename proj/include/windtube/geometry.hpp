#pragma once

#include <functional>
#include <string>

#include "windtube/vec.hpp"

namespace windtube {

/// Absolute tolerance for geometric membership checks.
inline constexpr double kGeomEps = 1e-12;

/// Point in the reference cylinder C: unit disc cross-section, z in [0,1].
struct ReferencePoint {
    double x1 = 0.0;
    double x2 = 0.0;
    double z = 0.0;

    bool valid() const {
        return x1 * x1 + x2 * x2 <= 1.0 + kGeomEps && z >= -kGeomEps && z <= 1.0 + kGeomEps;
    }
};

/// Physical point y in the tubular domain M.
using DomainPoint = Vec3;

enum class DomainKind { StraightCylinder, ExpandingTube, CurvedTube };

/// Analytic descriptor for the built-in domain families.
struct DomainSpec {
    DomainKind kind = DomainKind::StraightCylinder;

    // straight-cylinder
    double radius = 1.0;
    double length = 1.0;

    // expanding-tube: r(z) = radius0 + (radius1 - radius0) * z over z in [0,1]
    double radius0 = 1.0;
    double radius1 = 2.0;

    // curved-tube: planar circular-arc centerline in the x-z plane
    double bend_radius = 1.0;
    double bend_angle = 1.5707963267948966;  // quarter circle
    double tube_radius = 0.2;

    static DomainSpec straight(double radius = 1.0, double length = 1.0);
    static DomainSpec expanding(double r0 = 1.0, double r1 = 2.0);
    static DomainSpec curved(double bend_radius = 1.0, double bend_angle = 1.5707963267948966,
                             double tube_radius = 0.2);

    std::string name() const;
};

/// An embedding of the reference cylinder.  `embed` and `jacobian` are pure
/// and safe to call concurrently; `unembed` is the analytic inverse of the
/// geometry map (not the harmonic embedding map, which is built downstream).
struct TubularDomain {
    DomainSpec spec;
    std::function<DomainPoint(const ReferencePoint&)> embed;
    std::function<Mat3(const ReferencePoint&)> jacobian;
    std::function<ReferencePoint(const DomainPoint&)> unembed;

    double max_radius = 1.0;   // max physical cross-section radius over z
    double min_radius = 1.0;   // min physical cross-section radius over z
    double axial_span = 1.0;   // physical centerline length
};

/// Build a domain from a descriptor.  Rejects non-positive radii,
/// self-intersecting centerlines and descriptors whose jacobian degenerates
/// at any probe point.
TubularDomain build_domain(const DomainSpec& spec);

}  // namespace windtube
