#pragma once

#include "windtube/fields.hpp"
#include "windtube/mesh.hpp"
#include "windtube/winding.hpp"

namespace windtube {

struct DivergenceReport {
    double rms = 0.0;  // element divergences relative to mean|b|/resolution
    double max = 0.0;
    double tol = 1e-3;
    bool pass = false;
};

/// Per-element divergence by the divergence theorem with midpoint face
/// quadrature.  Report-only.
DivergenceReport check_solenoidal(const BraidedField& b, const Mesh& mesh, double tol = 1e-3);

/// Total helicity: the flux-weighted disc integral of the A_b distribution,
///   H = sum_nodes weight * J0 * b_z * A_b.
double total_helicity(const WindingDistribution& Ab, const std::vector<double>& j0_bz);

/// Winding-gauge vector potential on a straight cylinder of the given
/// radius: the cross-plane integral
///   a(x) = (1/2pi) int_{D_z} b(xt) x (x - xt, 0) / |x - xt|^2 d^2 xt,
/// integrated on a polar sub-grid centred at the evaluation point so the
/// integrable singularity is resolved exactly.
Vec3 winding_gauge_potential(const BraidedField& b, double disc_radius, const Vec3& point,
                             int quad_n = 128);

}  // namespace windtube
