#include "windtube/geometry.hpp"

#include <cmath>
#include <vector>

#include "windtube/error.hpp"

namespace windtube {

DomainSpec DomainSpec::straight(double radius, double length) {
    DomainSpec s;
    s.kind = DomainKind::StraightCylinder;
    s.radius = radius;
    s.length = length;
    return s;
}

DomainSpec DomainSpec::expanding(double r0, double r1) {
    DomainSpec s;
    s.kind = DomainKind::ExpandingTube;
    s.radius0 = r0;
    s.radius1 = r1;
    return s;
}

DomainSpec DomainSpec::curved(double bend_radius, double bend_angle, double tube_radius) {
    DomainSpec s;
    s.kind = DomainKind::CurvedTube;
    s.bend_radius = bend_radius;
    s.bend_angle = bend_angle;
    s.tube_radius = tube_radius;
    return s;
}

std::string DomainSpec::name() const {
    switch (kind) {
        case DomainKind::StraightCylinder: return "straight-cylinder";
        case DomainKind::ExpandingTube: return "expanding-tube";
        case DomainKind::CurvedTube: return "curved-tube";
    }
    return "unknown";
}

namespace {

TubularDomain make_straight(const DomainSpec& spec) {
    if (spec.radius <= 0.0) fail_config("build_domain", "straight-cylinder radius must be positive");
    if (spec.length <= 0.0) fail_config("build_domain", "straight-cylinder length must be positive");
    const double R = spec.radius;
    const double L = spec.length;
    TubularDomain d;
    d.spec = spec;
    d.embed = [R, L](const ReferencePoint& x) { return Vec3{R * x.x1, R * x.x2, L * x.z}; };
    d.jacobian = [R, L](const ReferencePoint&) {
        return Mat3::from_columns(Vec3{R, 0, 0}, Vec3{0, R, 0}, Vec3{0, 0, L});
    };
    d.unembed = [R, L](const Vec3& y) { return ReferencePoint{y.x / R, y.y / R, y.z / L}; };
    d.max_radius = R;
    d.min_radius = R;
    d.axial_span = L;
    return d;
}

TubularDomain make_expanding(const DomainSpec& spec) {
    const double r0 = spec.radius0;
    const double r1 = spec.radius1;
    if (r0 <= 0.0 || r1 <= 0.0) fail_config("build_domain", "expanding-tube radii must be positive");
    const double dr = r1 - r0;
    TubularDomain d;
    d.spec = spec;
    d.embed = [r0, dr](const ReferencePoint& x) {
        double r = r0 + dr * x.z;
        return Vec3{r * x.x1, r * x.x2, x.z};
    };
    d.jacobian = [r0, dr](const ReferencePoint& x) {
        double r = r0 + dr * x.z;
        return Mat3::from_columns(Vec3{r, 0, 0}, Vec3{0, r, 0}, Vec3{dr * x.x1, dr * x.x2, 1.0});
    };
    d.unembed = [r0, dr](const Vec3& y) {
        double r = r0 + dr * y.z;
        return ReferencePoint{y.x / r, y.y / r, y.z};
    };
    d.max_radius = std::max(r0, r1);
    d.min_radius = std::min(r0, r1);
    d.axial_span = 1.0;
    return d;
}

// Circular-arc centerline in the x-z plane:
//   c(z) = Rb * (1 - cos(beta z), 0, sin(beta z)),
// with constant frame binormal b = (0,1,0) and inward normal
//   n(z) = (cos(beta z), 0, -sin(beta z)).
TubularDomain make_curved(const DomainSpec& spec) {
    const double Rb = spec.bend_radius;
    const double beta = spec.bend_angle;
    const double a = spec.tube_radius;
    if (a <= 0.0) fail_config("build_domain", "curved-tube tube_radius must be positive");
    if (Rb <= 0.0) fail_config("build_domain", "curved-tube bend_radius must be positive");
    if (beta <= 0.0 || beta > 2.0 * 3.14159265358979323846)
        fail_config("build_domain", "curved-tube bend_angle must lie in (0, 2*pi]");
    if (a >= Rb)
        fail_config("build_domain", "curved-tube tube_radius must be smaller than bend_radius");

    // Self-intersection guard: centerline samples whose arclength separation
    // exceeds 4*a must stay at least 2*a apart.
    {
        const int n = 128;
        std::vector<Vec3> c(n + 1);
        for (int i = 0; i <= n; ++i) {
            double z = static_cast<double>(i) / n;
            c[i] = Vec3{Rb * (1.0 - std::cos(beta * z)), 0.0, Rb * std::sin(beta * z)};
        }
        const double ds = Rb * beta / n;
        for (int i = 0; i <= n; ++i) {
            for (int j = i + 1; j <= n; ++j) {
                if ((j - i) * ds <= 4.0 * a) continue;
                if (norm(c[j] - c[i]) < 2.0 * a)
                    fail_config("build_domain", "curved-tube centerline self-intersects");
            }
        }
    }

    TubularDomain d;
    d.spec = spec;
    d.embed = [Rb, beta, a](const ReferencePoint& x) {
        double cz = std::cos(beta * x.z), sz = std::sin(beta * x.z);
        Vec3 c{Rb * (1.0 - cz), 0.0, Rb * sz};
        Vec3 n{cz, 0.0, -sz};
        Vec3 b{0.0, 1.0, 0.0};
        return c + a * (x.x1 * n + x.x2 * b);
    };
    d.jacobian = [Rb, beta, a](const ReferencePoint& x) {
        double cz = std::cos(beta * x.z), sz = std::sin(beta * x.z);
        Vec3 n{cz, 0.0, -sz};
        Vec3 b{0.0, 1.0, 0.0};
        Vec3 cprime{Rb * beta * sz, 0.0, Rb * beta * cz};
        Vec3 nprime{-beta * sz, 0.0, -beta * cz};
        return Mat3::from_columns(a * n, a * b, cprime + a * x.x1 * nprime);
    };
    d.unembed = [Rb, beta, a](const Vec3& y) {
        // The arc angle of y about the bend axis (the line x = Rb, z = 0).
        // Near-zero negatives are kept (points just below S0); only wrap when
        // the bend actually extends past half a turn.
        double ang = std::atan2(y.z, Rb - y.x);
        if (beta > 3.14159265358979323846 && ang < -1e-9) ang += 2.0 * 3.14159265358979323846;
        double z = ang / beta;
        double cz = std::cos(beta * z), sz = std::sin(beta * z);
        Vec3 c{Rb * (1.0 - cz), 0.0, Rb * sz};
        Vec3 n{cz, 0.0, -sz};
        Vec3 off = y - c;
        return ReferencePoint{dot(off, n) / a, off.y / a, z};
    };
    d.max_radius = a;
    d.min_radius = a;
    d.axial_span = Rb * beta;
    return d;
}

}  // namespace

TubularDomain build_domain(const DomainSpec& spec) {
    TubularDomain d;
    switch (spec.kind) {
        case DomainKind::StraightCylinder: d = make_straight(spec); break;
        case DomainKind::ExpandingTube: d = make_expanding(spec); break;
        case DomainKind::CurvedTube: d = make_curved(spec); break;
    }

    // Orientation / degeneracy probe on a fixed lattice.
    for (int iz = 0; iz <= 8; ++iz) {
        for (int ir = 0; ir <= 4; ++ir) {
            for (int it = 0; it < 8; ++it) {
                double r = ir / 4.0 * 0.999;
                double t = it * 0.25 * 3.14159265358979323846;
                ReferencePoint x{r * std::cos(t), r * std::sin(t), iz / 8.0};
                if (det(d.jacobian(x)) <= 0.0)
                    fail_numerical("build_domain", "degenerate jacobian at probe point (" +
                                                       spec.name() + ")");
            }
        }
    }
    return d;
}

}  // namespace windtube
