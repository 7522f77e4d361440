#pragma once

#include <functional>
#include <vector>

#include "windtube/tracing.hpp"
#include "windtube/vec.hpp"

namespace windtube {

/// Quadrature grid on the lower reference disc D0.  Positive area weights
/// sum to pi; no node touches the boundary circle.
struct QuadratureGrid {
    int n_r = 24;
    int n_theta = 0;  // 0 = angular count scaled with radius; >0 = structured tensor grid
    std::vector<Vec2> nodes;
    std::vector<double> weights;
    std::vector<int> ring_of;    // ring index per node
    std::vector<int> sector_of;  // sector index per node (structured mode)

    bool structured() const { return n_theta > 0; }
    double ring_spacing() const { return 1.0 / n_r; }

    /// Polar grid of n_r rings; n_theta = 0 scales the angular count with
    /// radius for uniform area resolution, n_theta > 0 builds the structured
    /// tensor grid needed by r-theta finite differences.
    static QuadratureGrid polar(int n_r, int n_theta = 0);
};

/// The angle Theta between two reference curves at a shared level:
/// full-quadrant arctangent in (-pi, pi].
double angle(const Vec2& g, const Vec2& g_other);

/// Pairwise winding number of two mapped field lines with populated
/// sections: the sigma-signed sum over section pairs of net angle change
/// across shared z ranges, with branch cuts recovered by adaptive bisection
/// of any angle increment exceeding pi/2.
double pairwise_winding(const FieldLine& a, const FieldLine& b);

struct WindingDistribution {
    enum class Kind { Lv, Wv, Ab };
    QuadratureGrid grid;
    std::vector<double> values;
    Kind kind = Kind::Lv;
};

/// Quadrature of pairwise winding against all node lines:
///   values[p] = sum_n weight_n * node_factor_n * L(probe_p, node_n),
/// skipping nodes whose reference start is within 1e-9 of the probe's.
/// `node_factor` realizes the weight function w (1 for plain L_v).
/// Probes default to the node lines themselves.  Accumulation order is fixed
/// and each probe row is independent, so results are identical for every
/// thread count.
WindingDistribution accumulate_winding(const std::vector<FieldLine>& node_lines,
                                       const QuadratureGrid& grid,
                                       const std::vector<double>* node_factor = nullptr,
                                       const std::vector<FieldLine>* probe_lines = nullptr,
                                       WindingDistribution::Kind kind = WindingDistribution::Kind::Lv,
                                       int threads = 1);

/// Several weightings of the same pair set in a single O(N^2) sweep; entry k
/// of `factors` may be null for w = 1.
std::vector<WindingDistribution> accumulate_winding_multi(
    const std::vector<FieldLine>& node_lines, const QuadratureGrid& grid,
    const std::vector<const std::vector<double>*>& factors,
    const std::vector<WindingDistribution::Kind>& kinds,
    const std::vector<FieldLine>* probe_lines = nullptr, int threads = 1);

struct GradientIdentityReport {
    double max_residual = 0.0;
    double rms_residual = 0.0;
    int stencil_points = 0;
};

/// Finite-difference check of d_perp(L_v) = f*alpha - alpha on a structured
/// polar grid, with alpha = (r^2/2) d(theta) and f the z=1 field line
/// mapping on the same grid.
GradientIdentityReport gradient_identity_residual(const WindingDistribution& dist,
                                                  const DiscreteMapping& mapping);

/// Quadrature oracle for the disc integrals of the angle-form derivatives:
/// returns the orthonormal polar components of (1/2pi) * int_D0 d_perp Theta,
/// whose exact values are (0, r/2).  The integrable singularity at the base
/// point is handled in shifted polar coordinates.
std::pair<double, double> appendix_b_oracle(double r, double theta, int quad_n = 256);

}  // namespace windtube
