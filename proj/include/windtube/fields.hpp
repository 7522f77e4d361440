#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "windtube/geometry.hpp"
#include "windtube/harmonic.hpp"
#include "windtube/mesh.hpp"

namespace windtube {

enum class FieldKind { HarmonicU, UniformTwist, BraidComposite, Perturbed, MeshSampled };

/// One localized twist: total rotation k applied over the axial window
/// [z0, z1] with a smooth envelope, optionally confined radially by a
/// Gaussian profile exp(-((r - r0)/delta)^2) (delta = 0 means rigid
/// rotation).
struct TwistRegion {
    double k = 0.0;
    double z0 = 0.0;
    double z1 = 1.0;
    double delta = 0.0;
    double r0 = 0.0;
};

struct FieldSpec {
    FieldKind kind = FieldKind::UniformTwist;
    double k = 6.283185307179586;       // uniform twist: total rotation over z in [0,1]
    std::vector<TwistRegion> regions;   // braid-composite
    std::shared_ptr<FieldSpec> base;    // perturbed
    double perturb_amplitude = 0.0;     // peak swirl angle of the end-vanishing deformation
    double perturb_delta = 0.0;         // radial profile of the perturbation (0 = rigid)
    std::string field_csv;              // mesh-sampled input

    static FieldSpec harmonic_u();
    static FieldSpec uniform_twist(double k);
    static FieldSpec composite(std::vector<TwistRegion> regions);
    static FieldSpec perturbed(FieldSpec base, double amplitude, double delta = 0.0);
    static FieldSpec mesh_sampled(std::string csv_path);

    std::string name() const;
};

/// Evaluable braided vector field on M.  Evaluation is pure and reentrant.
struct BraidedField {
    std::string describe;
    std::function<Vec3(const Vec3&)> eval;
};

/// Build a field from a descriptor.  Twist-type generators are defined in
/// reference coordinates and pushed forward through the domain jacobian, so
/// side tangency holds by construction.  The result is validated at ~10^3
/// boundary probe points; the first violation aborts with its location.
///
/// `u` is required for harmonic-u and perturbed-of-harmonic-u specs;
/// `mesh` is required for mesh-sampled specs.
BraidedField make_field(const FieldSpec& spec, const TubularDomain& domain,
                        const VectorFieldNodal* u = nullptr, const Mesh* mesh = nullptr);

/// Wrap a nodal field for off-mesh evaluation: barycentric interpolation
/// with wall-projected queries and the exact side condition enforced at the
/// wall.  Used for the solved u and for mesh-sampled inputs.
BraidedField wrap_nodal_field(const TubularDomain& domain, const VectorFieldNodal& values,
                              std::shared_ptr<const TetLocator> locator);

/// Positive-rescaling wrapper: lambda(y) * v. Field lines are unchanged.
BraidedField scaled_field(const BraidedField& v, std::function<double(const Vec3&)> lambda,
                          const std::string& label);

struct ValidationReport {
    bool pass = true;
    int checked = 0;
    struct Violation {
        Vec3 point;
        std::string what;
    };
    std::vector<Violation> violations;
};

/// Check the braidedness conditions at mesh probe points: v.n = 0 on
/// side-face centroids (within 1e-8 |v|, against the smooth side normal),
/// v.z > 0 on cap-face centroids, and |v| > 0 there and at 10^3 interior
/// samples.  Report-only.
ValidationReport validate_braided(const BraidedField& field, const Mesh& mesh,
                                  const TubularDomain& domain);

/// Per-vertex vectors from a CSV of rows "vertex_index,v1,v2,v3".
VectorFieldNodal load_field_csv(const Mesh& mesh, const std::string& path);

}  // namespace windtube
