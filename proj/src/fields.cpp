#include "windtube/fields.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include "windtube/error.hpp"

namespace windtube {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Smooth unit-mass window on [z0, z1]: (2/w) sin^2(pi (z-z0)/w).
double window(double z, double z0, double z1) {
    if (z <= z0 || z >= z1) return 0.0;
    double w = z1 - z0;
    double s = std::sin(kPi * (z - z0) / w);
    return 2.0 / w * s * s;
}

double radial_profile(double r, double delta, double r0 = 0.0) {
    if (delta <= 0.0) return 1.0;
    double q = (r - r0) / delta;
    return std::exp(-q * q);
}

// Angular velocity (per unit reference z) of the in-plane swirl encoded by a
// spec, as a function of reference position.
double swirl_rate(const FieldSpec& spec, double r, double z) {
    switch (spec.kind) {
        case FieldKind::UniformTwist:
            return spec.k;
        case FieldKind::BraidComposite: {
            double w = 0.0;
            for (const auto& reg : spec.regions)
                w += reg.k * window(z, reg.z0, reg.z1) * radial_profile(r, reg.delta, reg.r0);
            return w;
        }
        default:
            return 0.0;
    }
}

BraidedField make_twist_like(const FieldSpec& spec, const TubularDomain& domain) {
    TubularDomain dom = domain;
    FieldSpec sp = spec;
    BraidedField f;
    f.describe = spec.name();
    f.eval = [dom, sp](const Vec3& y) {
        ReferencePoint x = dom.unembed(y);
        double r = std::sqrt(x.x1 * x.x1 + x.x2 * x.x2);
        double w = swirl_rate(sp, r, x.z);
        Vec3 vref{-w * x.x2, w * x.x1, 1.0};
        return dom.jacobian(x) * vref;
    };
    return f;
}

BraidedField make_perturbed(const FieldSpec& spec, const TubularDomain& domain,
                            const VectorFieldNodal* u, const Mesh* mesh) {
    if (!spec.base) fail_config("make_field", "perturbed spec has no base field");
    BraidedField base = make_field(*spec.base, domain, u, mesh);
    TubularDomain dom = domain;
    const double amp = spec.perturb_amplitude;
    const double delta = spec.perturb_delta;
    BraidedField f;
    f.describe = spec.name();
    f.eval = [dom, base, amp, delta](const Vec3& y) {
        ReferencePoint x = dom.unembed(y);
        if (x.z <= 0.0 || x.z >= 1.0) return base.eval(y);
        double r = std::sqrt(x.x1 * x.x1 + x.x2 * x.x2);
        // d/dz of amp*sin^2(pi z): integrates to zero over [0,1] and vanishes
        // at both ends, so the swirl is an end-vanishing deformation.
        double w = amp * kPi * std::sin(2.0 * kPi * x.z) * radial_profile(r, delta);
        Vec3 vref{-w * x.x2, w * x.x1, 0.0};
        return base.eval(y) + dom.jacobian(x) * vref;
    };
    return f;
}



// Pointwise probing of the braidedness conditions; only analytic generators
// can meet the strict side tolerance (interpolated fields are handled by
// validate_mesh_backed below).
void validate_at_geometry_probes(const BraidedField& f, const TubularDomain& dom) {
    auto check = [&](const ReferencePoint& x, int kind) {
        Vec3 y = dom.embed(x);
        Vec3 v = f.eval(y);
        double vn = norm(v);
        auto where = [&] {
            return "(" + std::to_string(y.x) + ", " + std::to_string(y.y) + ", " +
                   std::to_string(y.z) + ")";
        };
        if (!(vn > 0.0) || !std::isfinite(vn))
            fail_validation("make_field", "field vanishes or is non-finite at probe " + where());
        Mat3 J = dom.jacobian(x);
        if (kind == 0) {  // side: v . n = 0
            Vec3 t_theta = J * Vec3{-x.x2, x.x1, 0.0};
            Vec3 t_z = J * Vec3{0.0, 0.0, 1.0};
            Vec3 n = normalized(cross(t_theta, t_z));
            if (std::abs(dot(v, n)) > 1e-8 * vn)
                fail_validation("make_field", "field not tangent to side boundary at " + where());
        } else {  // caps: v . zhat > 0, zhat oriented toward increasing z
            Vec3 t1 = J * Vec3{1.0, 0.0, 0.0};
            Vec3 t2 = J * Vec3{0.0, 1.0, 0.0};
            Vec3 n = cross(t1, t2);
            if (dot(n, J * Vec3{0.0, 0.0, 1.0}) < 0.0) n = -n;
            if (dot(v, n) <= 0.0)
                fail_validation("make_field", "field does not cross the end cap at " + where());
        }
    };
    for (int iz = 0; iz <= 24; ++iz)
        for (int it = 0; it < 40; ++it) {
            double th = 2.0 * kPi * it / 40.0;
            check(ReferencePoint{std::cos(th), std::sin(th), iz / 24.0}, 0);
        }
    for (int cap = 0; cap <= 1; ++cap)
        for (int ir = 0; ir <= 6; ++ir)
            for (int it = 0; it < 16; ++it) {
                double r = ir / 6.0 * 0.999;
                double th = 2.0 * kPi * (it + 0.3) / 16.0;
                check(ReferencePoint{r * std::cos(th), r * std::sin(th), double(cap)}, 1);
            }
}

// Interpolated fields satisfy side tangency only weakly (the recovered
// gradient leans at slanted walls), so the hard gate here checks
// nonvanishing and the cap conditions; side violations of sampled fields
// surface either in the report-only validate_braided or as a tracer
// side-exit error, which is the contract for validation escapes.
void validate_mesh_backed(const BraidedField& f, const Mesh& mesh) {
    for (const auto& bf : mesh.boundary_faces) {
        Vec3 c = mesh.face_centroid(bf);
        Vec3 v = f.eval(c);
        double vn = norm(v);
        if (!(vn > 0.0) || !std::isfinite(vn))
            fail_validation("make_field", "sampled field vanishes on the boundary");
        Vec3 ndA = mesh.face_area_normal(bf);
        switch (bf.tag) {
            case BoundaryTag::Sside:
                break;
            case BoundaryTag::S0:
                if (dot(v, ndA) >= 0.0)
                    fail_validation("make_field", "sampled field does not enter through S0");
                break;
            case BoundaryTag::S1:
                if (dot(v, ndA) <= 0.0)
                    fail_validation("make_field", "sampled field does not exit through S1");
                break;
        }
    }
    std::size_t stride = std::max<std::size_t>(1, mesh.tets.size() / 997);
    for (std::size_t t = 0; t < mesh.tets.size(); t += stride) {
        const auto& T = mesh.tets[t];
        Vec3 c = 0.25 * (mesh.vertices[T[0]] + mesh.vertices[T[1]] + mesh.vertices[T[2]] +
                         mesh.vertices[T[3]]);
        double vn = norm(f.eval(c));
        if (!(vn > 0.0) || !std::isfinite(vn))
            fail_validation("make_field", "sampled field vanishes in the interior");
    }
}

bool analytic_spec(const FieldSpec& spec) {
    switch (spec.kind) {
        case FieldKind::HarmonicU:
        case FieldKind::MeshSampled:
            return false;
        case FieldKind::Perturbed:
            return spec.base && analytic_spec(*spec.base);
        default:
            return true;
    }
}

}  // namespace

FieldSpec FieldSpec::harmonic_u() {
    FieldSpec s;
    s.kind = FieldKind::HarmonicU;
    return s;
}

FieldSpec FieldSpec::uniform_twist(double k) {
    FieldSpec s;
    s.kind = FieldKind::UniformTwist;
    s.k = k;
    return s;
}

FieldSpec FieldSpec::composite(std::vector<TwistRegion> regions) {
    FieldSpec s;
    s.kind = FieldKind::BraidComposite;
    s.regions = std::move(regions);
    return s;
}

FieldSpec FieldSpec::perturbed(FieldSpec base, double amplitude, double delta) {
    FieldSpec s;
    s.kind = FieldKind::Perturbed;
    s.base = std::make_shared<FieldSpec>(std::move(base));
    s.perturb_amplitude = amplitude;
    s.perturb_delta = delta;
    return s;
}

FieldSpec FieldSpec::mesh_sampled(std::string csv_path) {
    FieldSpec s;
    s.kind = FieldKind::MeshSampled;
    s.field_csv = std::move(csv_path);
    return s;
}

std::string FieldSpec::name() const {
    switch (kind) {
        case FieldKind::HarmonicU: return "harmonic-u";
        case FieldKind::UniformTwist: return "uniform-twist(k=" + std::to_string(k) + ")";
        case FieldKind::BraidComposite:
            return "braid-composite(" + std::to_string(regions.size()) + " regions)";
        case FieldKind::Perturbed:
            return "perturbed(" + (base ? base->name() : std::string("?")) + ")";
        case FieldKind::MeshSampled: return "mesh-sampled(" + field_csv + ")";
    }
    return "unknown";
}

BraidedField wrap_nodal_field(const TubularDomain& domain, const VectorFieldNodal& values,
                              std::shared_ptr<const TetLocator> locator) {
    BraidedField f;
    f.describe = "nodal-field";
    VectorFieldNodal field = values;
    TubularDomain dom = domain;
    f.eval = [field, locator, dom](const Vec3& y) {
        // Queries on or outside the side wall are evaluated at their wall
        // projection with the spurious normal component removed: the side
        // condition v.n = 0 holds exactly for the continuum field, and
        // enforcing it on the interpolant makes wall-touching trajectories
        // slide along the boundary instead of weaving across it (which would
        // break the forward/backward trace consistency the embedding needs).
        Vec3 q = y;
        ReferencePoint x = dom.unembed(y);
        double r2 = x.x1 * x.x1 + x.x2 * x.x2;
        bool on_wall = r2 >= 1.0;
        if (on_wall) {
            double r = std::sqrt(r2);
            x.x1 /= r;
            x.x2 /= r;
            q = dom.embed(x);
        }
        auto hit = locator->locate(q, 0.25);
        if (hit.tet < 0)
            fail_numerical("field-eval", "point outside mesh: (" + std::to_string(q.x) + ", " +
                                             std::to_string(q.y) + ", " + std::to_string(q.z) +
                                             ")");
        Vec3 v = field.eval(hit);
        if (on_wall) {
            Mat3 J = dom.jacobian(x);
            Vec3 n = normalized(cross(J * Vec3{-x.x2, x.x1, 0.0}, J * Vec3{0.0, 0.0, 1.0}));
            v -= dot(v, n) * n;
        }
        return v;
    };
    return f;
}

BraidedField make_field(const FieldSpec& spec, const TubularDomain& domain,
                        const VectorFieldNodal* u, const Mesh* mesh) {
    BraidedField f;
    switch (spec.kind) {
        case FieldKind::HarmonicU: {
            if (!u || !u->mesh) fail_config("make_field", "harmonic-u spec requires the solved u");
            f = wrap_nodal_field(domain, *u, std::make_shared<TetLocator>(*u->mesh));
            f.describe = spec.name();
            break;
        }
        case FieldKind::UniformTwist:
        case FieldKind::BraidComposite:
            f = make_twist_like(spec, domain);
            break;
        case FieldKind::Perturbed:
            f = make_perturbed(spec, domain, u, mesh);
            break;
        case FieldKind::MeshSampled: {
            if (!mesh) fail_config("make_field", "mesh-sampled spec requires a mesh");
            f = wrap_nodal_field(domain, load_field_csv(*mesh, spec.field_csv),
                                 std::make_shared<TetLocator>(*mesh));
            f.describe = spec.name();
            break;
        }
    }
    if (analytic_spec(spec)) {
        validate_at_geometry_probes(f, domain);
    } else {
        const Mesh* m = mesh ? mesh : (u ? u->mesh : nullptr);
        if (!m) fail_config("make_field", "mesh-backed spec requires a mesh");
        validate_mesh_backed(f, *m);
    }
    return f;
}

BraidedField scaled_field(const BraidedField& v, std::function<double(const Vec3&)> lambda,
                          const std::string& label) {
    BraidedField f;
    f.describe = label;
    auto base = v.eval;
    f.eval = [base, lambda](const Vec3& y) { return lambda(y) * base(y); };
    return f;
}

ValidationReport validate_braided(const BraidedField& field, const Mesh& mesh,
                                  const TubularDomain& domain) {
    ValidationReport rep;
    auto note = [&](const Vec3& p, const std::string& what) {
        rep.pass = false;
        if (rep.violations.size() < 32) rep.violations.push_back({p, what});
    };
    // Boundary conditions are stated for the smooth surfaces, so normals come
    // from the domain geometry at each face centroid, not from the facets.
    for (const auto& bf : mesh.boundary_faces) {
        Vec3 c = mesh.face_centroid(bf);
        Vec3 v = field.eval(c);
        double vn = norm(v);
        ++rep.checked;
        if (!(vn > 0.0) || !std::isfinite(vn)) {
            note(c, "field vanishes on boundary face");
            continue;
        }
        ReferencePoint x = domain.unembed(c);
        Mat3 J = domain.jacobian(x);
        switch (bf.tag) {
            case BoundaryTag::Sside: {
                Vec3 t_theta = J * Vec3{-x.x2, x.x1, 0.0};
                Vec3 t_z = J * Vec3{0.0, 0.0, 1.0};
                Vec3 n = normalized(cross(t_theta, t_z));
                if (std::abs(dot(v, n)) > 1e-8 * vn) note(c, "normal component on side boundary");
                break;
            }
            case BoundaryTag::S0:
            case BoundaryTag::S1: {
                Vec3 n = cross(J * Vec3{1, 0, 0}, J * Vec3{0, 1, 0});
                if (dot(n, J * Vec3{0, 0, 1}) < 0.0) n = -n;  // toward increasing z
                if (dot(v, n) <= 0.0)
                    note(c, bf.tag == BoundaryTag::S0 ? "field does not enter through S0"
                                                      : "field does not exit through S1");
                break;
            }
        }
    }
    // Interior nonvanishing at ~10^3 deterministic samples.
    std::mt19937 rng(20181123u);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::size_t stride = std::max<std::size_t>(1, mesh.tets.size() / 1000);
    for (std::size_t t = 0; t < mesh.tets.size(); t += stride) {
        double b0 = unit(rng), b1 = unit(rng), b2 = unit(rng), b3 = unit(rng);
        double s = b0 + b1 + b2 + b3;
        const auto& T = mesh.tets[t];
        Vec3 p = (b0 / s) * mesh.vertices[T[0]] + (b1 / s) * mesh.vertices[T[1]] +
                 (b2 / s) * mesh.vertices[T[2]] + (b3 / s) * mesh.vertices[T[3]];
        double vn = norm(field.eval(p));
        ++rep.checked;
        if (!(vn > 0.0) || !std::isfinite(vn)) note(p, "field vanishes in the interior");
    }
    return rep;
}

VectorFieldNodal load_field_csv(const Mesh& mesh, const std::string& path) {
    std::ifstream in(path);
    if (!in) fail_config("load_field_csv", "cannot open " + path);
    VectorFieldNodal f;
    f.mesh = &mesh;
    f.vectors.assign(mesh.vertices.size(), Vec3{});
    std::vector<bool> seen(mesh.vertices.size(), false);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ss(line);
        long idx;
        double v1, v2, v3;
        if (!(ss >> idx >> v1 >> v2 >> v3)) fail_config("load_field_csv", "malformed row: " + line);
        if (idx < 0 || idx >= static_cast<long>(mesh.vertices.size()))
            fail_config("load_field_csv", "vertex index out of range: " + std::to_string(idx));
        f.vectors[idx] = Vec3{v1, v2, v3};
        seen[idx] = true;
    }
    for (std::size_t v = 0; v < seen.size(); ++v)
        if (!seen[v]) fail_config("load_field_csv", "missing vector for vertex " + std::to_string(v));
    return f;
}

}  // namespace windtube
