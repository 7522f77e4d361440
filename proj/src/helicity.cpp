#include "windtube/helicity.hpp"

#include <cmath>

#include "windtube/error.hpp"

namespace windtube {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

DivergenceReport check_solenoidal(const BraidedField& b, const Mesh& mesh, double tol) {
    DivergenceReport rep;
    rep.tol = tol;
    double ss = 0.0;
    double mean_b = 0.0;
    std::size_t nsamples = 0;
    std::vector<double> divs(mesh.tets.size());
    for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
        const auto& T = mesh.tets[t];
        double flux = 0.0;
        for (int k = 0; k < 4; ++k) {
            int a = T[(k + 1) % 4], b2 = T[(k + 2) % 4], c = T[(k + 3) % 4];
            Vec3 pa = mesh.vertices[a], pb = mesh.vertices[b2], pc = mesh.vertices[c];
            Vec3 n = 0.5 * cross(pb - pa, pc - pa);  // area-weighted normal
            Vec3 centroid = (1.0 / 3.0) * (pa + pb + pc);
            if (dot(n, centroid - mesh.vertices[T[k]]) < 0.0) n = -n;  // outward
            Vec3 v = b.eval(centroid);
            flux += dot(v, n);
            mean_b += norm(v);
            ++nsamples;
        }
        divs[t] = flux / mesh.tet_volume(static_cast<int>(t));
    }
    mean_b /= static_cast<double>(nsamples);
    double scale = mean_b / mesh.resolution;
    for (std::size_t t = 0; t < divs.size(); ++t) {
        double d = divs[t] / scale;
        ss += d * d;
        rep.max = std::max(rep.max, std::abs(d));
    }
    rep.rms = std::sqrt(ss / static_cast<double>(divs.size()));
    rep.pass = rep.rms <= tol;
    return rep;
}

double total_helicity(const WindingDistribution& Ab, const std::vector<double>& j0_bz) {
    if (j0_bz.size() != Ab.values.size() || Ab.values.size() != Ab.grid.weights.size())
        fail_config("total_helicity", "grid mismatch between A_b and flux weights");
    double H = 0.0;
    for (std::size_t i = 0; i < Ab.values.size(); ++i)
        H += Ab.grid.weights[i] * j0_bz[i] * Ab.values[i];
    return H;
}

Vec3 winding_gauge_potential(const BraidedField& b, double disc_radius, const Vec3& point,
                             int quad_n) {
    const double R = disc_radius;
    const double rr = point.x * point.x + point.y * point.y;
    if (rr >= R * R)
        fail_config("winding_gauge_potential", "evaluation point lies outside the disc");
    const int nphi = std::max(16, quad_n);
    const int nrho = std::max(8, quad_n / 4);
    Vec3 acc{};
    for (int j = 0; j < nphi; ++j) {
        double phi = 2.0 * kPi * (j + 0.5) / nphi;
        double e1 = std::cos(phi), e2 = std::sin(phi);
        double proj = point.x * e1 + point.y * e2;
        double rho_max = -proj + std::sqrt(std::max(0.0, R * R - rr + proj * proj));
        double drho = rho_max / nrho;
        for (int k = 0; k < nrho; ++k) {
            double rho = (k + 0.5) * drho;
            Vec3 xt{point.x + rho * e1, point.y + rho * e2, point.z};
            Vec3 bv = b.eval(xt);
            Vec3 d{point.x - xt.x, point.y - xt.y, 0.0};
            double den = d.x * d.x + d.y * d.y;
            double w = rho * drho * (2.0 * kPi / nphi);
            acc += (w / den) * cross(bv, d);
        }
    }
    return (1.0 / (2.0 * kPi)) * acc;
}

}  // namespace windtube
