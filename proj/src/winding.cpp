#include "windtube/winding.hpp"

#include <cmath>

#include "windtube/error.hpp"
#include "windtube/parallel.hpp"

namespace windtube {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSingular2 = 1e-20;  // squared curve-separation floor (1e-10 distance)

// One monotone section of a mapped curve, with z ascending.
struct SectionCurve {
    int sigma = 0;
    std::vector<double> z;
    std::vector<Vec2> p;
};

struct PreparedCurve {
    Vec2 start;
    std::vector<SectionCurve> sections;
};

PreparedCurve prepare(const FieldLine& line) {
    PreparedCurve pc;
    if (line.samples.empty()) fail_config("winding", "empty field line");
    if (!line.samples.front().has_ref)
        fail_config("winding", "field line has no reference coordinates; map it first");
    pc.start = line.samples.front().ref;
    for (const auto& sec : line.sections) {
        if (sec.sigma == 0) continue;  // sigma = 0 sections contribute nothing
        SectionCurve sc;
        sc.sigma = sec.sigma;
        std::size_t n = sec.end - sec.begin + 1;
        sc.z.reserve(n);
        sc.p.reserve(n);
        if (sec.sigma > 0) {
            for (std::size_t i = sec.begin; i <= sec.end; ++i) {
                sc.z.push_back(line.samples[i].z);
                sc.p.push_back(line.samples[i].ref);
            }
        } else {
            for (std::size_t i = sec.end + 1; i-- > sec.begin;) {
                sc.z.push_back(line.samples[i].z);
                sc.p.push_back(line.samples[i].ref);
            }
        }
        // Drop strictly non-increasing breakpoints (roundoff duplicates).
        std::size_t w = 1;
        for (std::size_t i = 1; i < sc.z.size(); ++i) {
            if (sc.z[i] > sc.z[w - 1]) {
                sc.z[w] = sc.z[i];
                sc.p[w] = sc.p[i];
                ++w;
            }
        }
        sc.z.resize(w);
        sc.p.resize(w);
        if (w >= 2) pc.sections.push_back(std::move(sc));
    }
    return pc;
}

// Net rotation of the difference vector from da to db, assumed to move
// linearly; increments above pi/2 are bisected so branch cuts are counted
// exactly.
double rotation_increment(const Vec2& da, const Vec2& db, int depth) {
    if (norm2(da) < kSingular2 || norm2(db) < kSingular2)
        fail_numerical("pairwise_winding",
                       "curves pass within 1e-10 of each other (singular pair)");
    double inc = std::atan2(cross(da, db), dot(da, db));
    if (std::abs(inc) <= 0.5 * kPi) return inc;
    if (depth >= 48)
        fail_numerical("pairwise_winding", "angle refinement failed; curves nearly intersect");
    Vec2 dm = 0.5 * (da + db);
    return rotation_increment(da, dm, depth + 1) + rotation_increment(dm, db, depth + 1);
}

// Accumulated angle change of (a - b) over the shared z range of two
// ascending sections.
double section_pair_angle(const SectionCurve& a, const SectionCurve& b) {
    double zlo = std::max(a.z.front(), b.z.front());
    double zhi = std::min(a.z.back(), b.z.back());
    if (!(zhi > zlo)) return 0.0;  // empty or zero-length overlap

    auto interp = [](const SectionCurve& c, std::size_t seg, double z) {
        double z0 = c.z[seg - 1], z1 = c.z[seg];
        double t = (z - z0) / (z1 - z0);
        return c.p[seg - 1] + t * (c.p[seg] - c.p[seg - 1]);
    };
    // First segment index whose upper breakpoint exceeds zlo.
    std::size_t ia = std::upper_bound(a.z.begin(), a.z.end(), zlo) - a.z.begin();
    std::size_t ib = std::upper_bound(b.z.begin(), b.z.end(), zlo) - b.z.begin();
    ia = std::min(std::max<std::size_t>(ia, 1), a.z.size() - 1);
    ib = std::min(std::max<std::size_t>(ib, 1), b.z.size() - 1);

    double z = zlo;
    Vec2 d = interp(a, ia, z) - interp(b, ib, z);
    double acc = 0.0;
    while (z < zhi) {
        double zn = std::min({a.z[ia], b.z[ib], zhi});
        Vec2 dn = interp(a, ia, zn) - interp(b, ib, zn);
        acc += rotation_increment(d, dn, 0);
        if (zn >= zhi) break;
        if (a.z[ia] <= zn && ia + 1 < a.z.size()) ++ia;
        if (b.z[ib] <= zn && ib + 1 < b.z.size()) ++ib;
        z = zn;
        d = dn;
    }
    return acc;
}

double pairwise_prepared(const PreparedCurve& a, const PreparedCurve& b) {
    double total = 0.0;
    for (const auto& sa : a.sections)
        for (const auto& sb : b.sections)
            total += sa.sigma * sb.sigma * section_pair_angle(sa, sb);
    return total / (2.0 * kPi);
}

}  // namespace

QuadratureGrid QuadratureGrid::polar(int n_r, int n_theta) {
    if (n_r < 1) fail_config("quadrature_grid", "n_r must be at least 1");
    QuadratureGrid g;
    g.n_r = n_r;
    g.n_theta = n_theta;
    const double dr = 1.0 / n_r;
    for (int i = 0; i < n_r; ++i) {
        double r = (i + 0.5) * dr;
        double annulus = kPi * (((i + 1.0) * dr) * ((i + 1.0) * dr) - (i * dr) * (i * dr));
        int m = n_theta > 0 ? n_theta
                            : std::max(8, static_cast<int>(std::lround(2.0 * kPi * (i + 0.5))));
        for (int j = 0; j < m; ++j) {
            double th = 2.0 * kPi * (j + 0.5) / m;
            g.nodes.push_back(Vec2{r * std::cos(th), r * std::sin(th)});
            g.weights.push_back(annulus / m);
            g.ring_of.push_back(i);
            g.sector_of.push_back(j);
        }
    }
    return g;
}

double angle(const Vec2& g, const Vec2& g_other) {
    Vec2 d = g - g_other;
    if (norm2(d) < kSingular2)
        fail_numerical("angle", "coincident curve points (singular pair)");
    return std::atan2(d.y, d.x);
}

double pairwise_winding(const FieldLine& a, const FieldLine& b) {
    return pairwise_prepared(prepare(a), prepare(b));
}

std::vector<WindingDistribution> accumulate_winding_multi(
    const std::vector<FieldLine>& node_lines, const QuadratureGrid& grid,
    const std::vector<const std::vector<double>*>& factors,
    const std::vector<WindingDistribution::Kind>& kinds,
    const std::vector<FieldLine>* probe_lines, int threads) {
    if (node_lines.size() != grid.nodes.size())
        fail_config("accumulate_winding", "node line count does not match the grid");
    if (factors.empty() || factors.size() != kinds.size())
        fail_config("accumulate_winding", "factor and kind counts differ");
    for (const auto* f : factors)
        if (f && f->size() != node_lines.size())
            fail_config("accumulate_winding", "node factor count does not match the grid");

    std::vector<PreparedCurve> nodes(node_lines.size());
    for (std::size_t i = 0; i < node_lines.size(); ++i) nodes[i] = prepare(node_lines[i]);

    const std::vector<FieldLine>& probes = probe_lines ? *probe_lines : node_lines;
    std::vector<PreparedCurve> probe_prep;
    const std::vector<PreparedCurve>* probp = &nodes;
    if (probe_lines) {
        probe_prep.resize(probes.size());
        for (std::size_t i = 0; i < probes.size(); ++i) probe_prep[i] = prepare(probes[i]);
        probp = &probe_prep;
    }

    const std::size_t nf = factors.size();
    std::vector<WindingDistribution> dists(nf);
    for (std::size_t k = 0; k < nf; ++k) {
        dists[k].grid = grid;
        dists[k].kind = kinds[k];
        dists[k].values.assign(probp->size(), 0.0);
    }

    std::vector<std::string> errors(probp->size());
    parallel_for(probp->size(), threads, [&](std::size_t p) {
        try {
            const PreparedCurve& pc = (*probp)[p];
            std::vector<double> acc(nf, 0.0);
            for (std::size_t n = 0; n < nodes.size(); ++n) {
                Vec2 sep = pc.start - nodes[n].start;
                if (norm2(sep) < 1e-18) continue;  // self-pair exclusion (1e-9)
                double L = pairwise_prepared(pc, nodes[n]);
                double wL = grid.weights[n] * L;
                for (std::size_t k = 0; k < nf; ++k)
                    acc[k] += wL * (factors[k] ? (*factors[k])[n] : 1.0);
            }
            for (std::size_t k = 0; k < nf; ++k) dists[k].values[p] = acc[k];
        } catch (const Error& e) {
            errors[p] = e.what();
        }
    });
    for (std::size_t p = 0; p < errors.size(); ++p)
        if (!errors[p].empty())
            fail_numerical("accumulate_winding", "probe " + std::to_string(p) + ": " + errors[p]);
    return dists;
}

WindingDistribution accumulate_winding(const std::vector<FieldLine>& node_lines,
                                       const QuadratureGrid& grid,
                                       const std::vector<double>* node_factor,
                                       const std::vector<FieldLine>* probe_lines,
                                       WindingDistribution::Kind kind, int threads) {
    auto dists =
        accumulate_winding_multi(node_lines, grid, {node_factor}, {kind}, probe_lines, threads);
    return std::move(dists.front());
}

GradientIdentityReport gradient_identity_residual(const WindingDistribution& dist,
                                                  const DiscreteMapping& mapping) {
    const QuadratureGrid& g = dist.grid;
    if (!g.structured())
        fail_config("gradient_identity", "distribution must live on a structured polar grid");
    if (mapping.grid.size() != g.nodes.size())
        fail_config("gradient_identity", "mapping grid does not match the distribution grid");
    for (std::size_t i = 0; i < g.nodes.size(); ++i)
        if (norm2(mapping.grid[i] - g.nodes[i]) > 1e-20)
            fail_config("gradient_identity", "mapping grid does not match the distribution grid");

    const int nr = g.n_r, nt = g.n_theta;
    const double dr = g.ring_spacing();
    const double dth = 2.0 * kPi / nt;
    auto at = [&](int i, int j) { return i * nt + ((j % nt) + nt) % nt; };

    auto wrap = [](double a) {
        while (a > kPi) a -= 2.0 * kPi;
        while (a <= -kPi) a += 2.0 * kPi;
        return a;
    };
    auto f_r = [&](int idx) { return norm(mapping.images[idx]); };
    auto f_th = [&](int idx) {
        const Vec2& p = mapping.images[idx];
        return std::atan2(p.y, p.x);
    };

    GradientIdentityReport rep;
    double ss = 0.0;
    for (int i = 1; i + 1 < nr; ++i) {
        double r = (i + 0.5) * dr;
        for (int j = 0; j < nt; ++j) {
            double dLv_dr = (dist.values[at(i + 1, j)] - dist.values[at(i - 1, j)]) / (2 * dr);
            double dLv_dth = (dist.values[at(i, j + 1)] - dist.values[at(i, j - 1)]) / (2 * dth);
            double fr = f_r(at(i, j));
            double dfth_dr = wrap(f_th(at(i + 1, j)) - f_th(at(i - 1, j))) / (2 * dr);
            double dfth_dth = wrap(f_th(at(i, j + 1)) - f_th(at(i, j - 1))) / (2 * dth);
            double res_r = dLv_dr - 0.5 * fr * fr * dfth_dr;
            double res_th = dLv_dth - (0.5 * fr * fr * dfth_dth - 0.5 * r * r);
            for (double v : {res_r, res_th}) {
                rep.max_residual = std::max(rep.max_residual, std::abs(v));
                ss += v * v;
            }
            ++rep.stencil_points;
        }
    }
    if (rep.stencil_points > 0) rep.rms_residual = std::sqrt(ss / (2.0 * rep.stencil_points));
    return rep;
}

std::pair<double, double> appendix_b_oracle(double r, double theta, int quad_n) {
    if (r < 0.0 || r >= 1.0) fail_config("appendix_b_oracle", "base radius must lie in [0, 1)");
    const int nphi = std::max(16, quad_n);
    const int nrho = std::max(4, quad_n / 8);
    const double x01 = r * std::cos(theta), x02 = r * std::sin(theta);
    double Ir = 0.0, Ith = 0.0;
    for (int j = 0; j < nphi; ++j) {
        double phi = 2.0 * kPi * (j + 0.5) / nphi;
        double e1 = std::cos(phi), e2 = std::sin(phi);
        double proj = x01 * e1 + x02 * e2;
        double rho_max = -proj + std::sqrt(std::max(0.0, 1.0 - r * r + proj * proj));
        double drho = rho_max / nrho;
        for (int k = 0; k < nrho; ++k) {
            double rho = (k + 0.5) * drho;
            double d1 = -rho * e1, d2 = -rho * e2;  // x0 - x
            double den = d1 * d1 + d2 * d2;
            double w = rho * drho * (2.0 * kPi / nphi);
            Ir += w * (d1 * std::sin(theta) - d2 * std::cos(theta)) / den;
            // orthonormal theta component: (1/r) dTheta/dtheta, the 1/r
            // cancels analytically so r = 0 is regular
            Ith += w * (d1 * std::cos(theta) + d2 * std::sin(theta)) / den;
        }
    }
    return {Ir / (2.0 * kPi), Ith / (2.0 * kPi)};
}

}  // namespace windtube
