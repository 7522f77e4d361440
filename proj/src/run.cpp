#include "windtube/run.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "windtube/error.hpp"
#include "windtube/io.hpp"
#include "windtube/parallel.hpp"

namespace windtube {

namespace fs = std::filesystem;

namespace {
constexpr double kPi = 3.14159265358979323846;
}

Pipeline build_pipeline(const DomainSpec& spec, double resolution, double solver_tol,
                        EmbeddingMap::Mode mode, int threads) {
    Pipeline p;
    p.domain = build_domain(spec);
    p.mesh = std::make_unique<Mesh>(generate_mesh(p.domain, resolution));
    p.locator = std::make_shared<TetLocator>(*p.mesh);
    p.phi = std::make_unique<ScalarFieldP1>(
        solve_phi(*p.mesh, std::min(solver_tol, 1e-10), 200000, &p.solve_stats));
    p.u = std::make_unique<VectorFieldNodal>(gradient_field(*p.phi));
    p.null_audit = check_nonnull(*p.u);
    p.s0 = std::make_unique<SurfaceCoords>(solve_surface_coords(*p.mesh));
    p.embedding = std::make_unique<EmbeddingMap>(p.domain, *p.mesh, *p.phi, *p.u, *p.s0,
                                                 p.locator, mode, threads);
    return p;
}

GridLines trace_grid_lines(const Pipeline& pipe, const BraidedField& field,
                           const QuadratureGrid& grid, const TraceOptions& opts, int threads) {
    GridLines gl;
    gl.grid = grid;
    gl.seeds.resize(grid.nodes.size());
    gl.seed_info.resize(grid.nodes.size());
    gl.lines.resize(grid.nodes.size());
    for (std::size_t i = 0; i < grid.nodes.size(); ++i) {
        gl.seed_info[i] = pipe.embedding->surface().from_disc(grid.nodes[i]);
        gl.seeds[i] = gl.seed_info[i].position;
    }
    std::vector<std::string> errors(grid.nodes.size());
    parallel_for(grid.nodes.size(), threads, [&](std::size_t i) {
        try {
            FieldLine line =
                trace_field_line(field, gl.seeds[i], pipe.embedding->foliation(), opts);
            split_monotone(line);
            pipe.embedding->map_curve(line);
            gl.lines[i] = std::move(line);
        } catch (const Error& e) {
            errors[i] = e.what();
        }
    });
    for (std::size_t i = 0; i < errors.size(); ++i)
        if (!errors[i].empty())
            fail_numerical("trace_grid", "grid node " + std::to_string(i) + ": " + errors[i]);
    return gl;
}

WindingDistribution field_line_winding(const GridLines& gl, int threads) {
    return accumulate_winding(gl.lines, gl.grid, nullptr, nullptr, WindingDistribution::Kind::Lv,
                              threads);
}

WindingDistribution weighted_winding(const GridLines& gl, const std::vector<double>& w,
                                     int threads) {
    return accumulate_winding(gl.lines, gl.grid, &w, nullptr, WindingDistribution::Kind::Wv,
                              threads);
}

WindingDistribution field_line_helicity(const Pipeline& pipe, const BraidedField& b,
                                        const GridLines& gl, double solenoidal_tol,
                                        std::vector<double>* j0_bz_out, int threads) {
    auto div = check_solenoidal(b, *pipe.mesh, solenoidal_tol);
    if (!div.pass)
        fail_validation("field_line_helicity",
                        "field is not solenoidal (rms divergence " + std::to_string(div.rms) +
                            " exceeds " + std::to_string(div.tol) + ")");
    std::vector<double> j0_bz(gl.grid.nodes.size());
    for (std::size_t i = 0; i < gl.grid.nodes.size(); ++i) {
        const auto& info = gl.seed_info[i];
        Vec3 n = pipe.s0->inward_normal(info.triangle);
        j0_bz[i] = info.jacobian * dot(b.eval(info.position), n);
    }
    auto dist = accumulate_winding(gl.lines, gl.grid, &j0_bz, nullptr,
                                   WindingDistribution::Kind::Ab, threads);
    if (j0_bz_out) *j0_bz_out = std::move(j0_bz);
    return dist;
}

DiscreteMapping grid_mapping(const Pipeline& pipe, const BraidedField& field, const GridLines& gl,
                             double level, const TraceOptions& opts, int threads) {
    const EmbeddingMap* em = pipe.embedding.get();
    auto ref_of = [em](const Vec3& y) {
        ReferencePoint x = em->to_reference(y);
        return Vec2{x.x1, x.x2};
    };
    return field_line_mapping(field, em->foliation(), gl.seeds, gl.grid.nodes, level, ref_of,
                              opts, threads);
}

// ---------------------------------------------------------------------------
// Artifact writing
// ---------------------------------------------------------------------------

namespace {

std::string distribution_csv(const WindingDistribution& dist) {
    std::string out = "x1,x2,r,theta,weight,value\n";
    for (std::size_t i = 0; i < dist.values.size(); ++i) {
        const Vec2& p = dist.grid.nodes[i];
        out += format_double(p.x);
        out += ',';
        out += format_double(p.y);
        out += ',';
        out += format_double(std::sqrt(p.x * p.x + p.y * p.y));
        out += ',';
        out += format_double(std::atan2(p.y, p.x));
        out += ',';
        out += format_double(dist.grid.weights[i]);
        out += ',';
        out += format_double(dist.values[i]);
        out += '\n';
    }
    return out;
}

std::string fieldlines_csv(const std::vector<FieldLine>& lines, bool with_ref) {
    std::string out = with_ref ? "line_id,sample_index,y1,y2,y3,z,x1,x2,zref\n"
                               : "line_id,sample_index,y1,y2,y3,z\n";
    for (std::size_t l = 0; l < lines.size(); ++l) {
        for (std::size_t s = 0; s < lines[l].samples.size(); ++s) {
            const auto& smp = lines[l].samples[s];
            out += std::to_string(l);
            out += ',';
            out += std::to_string(s);
            out += ',';
            out += format_double(smp.y.x);
            out += ',';
            out += format_double(smp.y.y);
            out += ',';
            out += format_double(smp.y.z);
            out += ',';
            out += format_double(smp.z);
            if (with_ref) {
                out += ',';
                out += format_double(smp.ref.x);
                out += ',';
                out += format_double(smp.ref.y);
                out += ',';
                out += format_double(smp.z);
            }
            out += '\n';
        }
    }
    return out;
}

class ArtifactSet {
public:
    explicit ArtifactSet(const std::string& dir) : dir_(dir) { fs::create_directories(dir_); }

    std::string write(const std::string& name, const std::string& bytes) {
        fs::path p = dir_ / name;
        std::ofstream out(p, std::ios::binary);
        if (!out) fail_config("output", "cannot write " + p.string());
        out << bytes;
        out.close();
        written_.push_back(p);
        std::ostringstream h;
        h << std::hex << std::setw(16) << std::setfill('0') << fnv1a(bytes);
        return h.str();
    }

    fs::path path(const std::string& name) const { return dir_ / name; }
    void track(const std::string& name) { written_.push_back(dir_ / name); }

    void remove_all() {
        for (const auto& p : written_) {
            std::error_code ec;
            fs::remove(p, ec);
        }
    }

private:
    fs::path dir_;
    std::vector<fs::path> written_;
};

nlohmann::json sidecar_base(const RunConfig& cfg) {
    nlohmann::json j;
    j["config"] = nlohmann::json::parse(effective_config_json(cfg));
    return j;
}

void write_sidecar(ArtifactSet& art, const std::string& name, const nlohmann::json& j) {
    art.write(name, j.dump(2) + "\n");
}

int exit_code_for(ErrorKind k) {
    switch (k) {
        case ErrorKind::Config: return 2;
        case ErrorKind::Numerical: return 3;
        case ErrorKind::Validation: return 4;
    }
    return 3;
}

GridLines traced_run(const RunConfig& cfg, Pipeline& pipe, BraidedField& field) {
    field = make_field(cfg.field, pipe.domain, pipe.u.get(), pipe.mesh.get());
    QuadratureGrid grid = QuadratureGrid::polar(cfg.n_r, cfg.n_theta);
    TraceOptions opts = pipe.trace_options(cfg.tol.trace);
    return trace_grid_lines(pipe, field, grid, opts, cfg.threads);
}

}  // namespace

bool run_verify(std::ostream& out, int threads) {
    bool all = true;
    auto line = [&](const std::string& name, bool pass, const std::string& detail) {
        out << (pass ? "[PASS] " : "[FAIL] ") << name << " (" << detail << ")\n";
        all = all && pass;
    };

    {  // disc-integral quadrature oracle vs closed form (0, r/2)
        double worst = 0.0;
        for (double r : {0.0, 0.3, 0.5, 0.9}) {
            for (double th : {0.0, kPi / 3.0}) {
                auto [ir, ith] = appendix_b_oracle(r, th, 256);
                worst = std::max({worst, std::abs(ir), std::abs(ith - 0.5 * r)});
            }
        }
        line("angle-form disc integrals = (0, r/2)", worst <= 1e-3,
             "max deviation " + format_double(worst));
    }

    Pipeline pipe = build_pipeline(DomainSpec::straight(1.0, 1.0), 0.15, 1e-10,
                                   EmbeddingMap::Mode::Exact, threads);
    {  // twist closed forms
        BraidedField twist = make_field(FieldSpec::uniform_twist(2 * kPi), pipe.domain);
        QuadratureGrid grid = QuadratureGrid::polar(8);
        auto gl = trace_grid_lines(pipe, twist, grid, pipe.trace_options(1e-8), threads);
        double worst_pair = 0.0;
        for (std::size_t i = 0; i < gl.lines.size(); i += 37)
            for (std::size_t j = i + 1; j < gl.lines.size(); j += 53)
                worst_pair = std::max(worst_pair,
                                      std::abs(pairwise_winding(gl.lines[i], gl.lines[j]) - 1.0));
        line("uniform-twist pairwise winding = k/2pi", worst_pair <= 1e-5,
             "max |L-1| = " + format_double(worst_pair));

        auto lv = field_line_winding(gl, threads);
        double worst_lv = 0.0;
        for (double v : lv.values) worst_lv = std::max(worst_lv, std::abs(v - kPi));
        line("uniform-twist L_v = pi", worst_lv <= 0.02 * kPi,
             "max |L_v - pi| = " + format_double(worst_lv));
    }
    {  // zero winding of the least distorted field
        FieldSpec uspec = FieldSpec::harmonic_u();
        BraidedField ufield = make_field(uspec, pipe.domain, pipe.u.get(), pipe.mesh.get());
        QuadratureGrid grid = QuadratureGrid::polar(8);
        auto gl = trace_grid_lines(pipe, ufield, grid, pipe.trace_options(1e-8), threads);
        auto lv = field_line_winding(gl, threads);
        double worst = 0.0;
        for (double v : lv.values) worst = std::max(worst, std::abs(v));
        line("harmonic field has zero winding", worst <= 1e-3,
             "max |L_v| = " + format_double(worst));
    }
    {  // gradient identity: strict on u, quadrature-hole scale on the twist
        QuadratureGrid grid = QuadratureGrid::polar(12, 24);
        TraceOptions opts = pipe.trace_options(1e-8);

        FieldSpec uspec = FieldSpec::harmonic_u();
        BraidedField ufield = make_field(uspec, pipe.domain, pipe.u.get(), pipe.mesh.get());
        auto glu = trace_grid_lines(pipe, ufield, grid, opts, threads);
        auto lvu = field_line_winding(glu, threads);
        auto mapu = grid_mapping(pipe, ufield, glu, 1.0, opts, threads);
        auto repu = gradient_identity_residual(lvu, mapu);
        line("gradient identity residual (least distorted field)", repu.max_residual <= 1e-3,
             "max residual " + format_double(repu.max_residual));

        // For a rigid twist both sides vanish up to the radial slope of the
        // excluded self-pair weight, 2*pi*dr/n_theta.
        BraidedField twist = make_field(FieldSpec::uniform_twist(2 * kPi), pipe.domain);
        auto gl = trace_grid_lines(pipe, twist, grid, opts, threads);
        auto lv = field_line_winding(gl, threads);
        auto mapping = grid_mapping(pipe, twist, gl, 1.0, opts, threads);
        auto rep = gradient_identity_residual(lv, mapping);
        double hole_slope = 2.0 * kPi * grid.ring_spacing() / grid.n_theta;
        line("gradient identity residual (rigid twist)", rep.max_residual <= 1.5 * hole_slope,
             "max residual " + format_double(rep.max_residual) + " vs exclusion slope " +
                 format_double(hole_slope));
    }
    return all;
}

int run(const RunConfig& cfg, std::ostream& out) {
    std::unique_ptr<ArtifactSet> art;
    try {
        cfg.validate();
        int threads = resolve_threads(cfg.threads);

        if (cfg.command == "verify") {
            bool ok = run_verify(out, threads);
            return ok ? 0 : 4;
        }

        art = std::make_unique<ArtifactSet>(cfg.out_dir);
        EmbeddingMap::Mode mode =
            cfg.exact_embedding ? EmbeddingMap::Mode::Exact : EmbeddingMap::Mode::Bulk;
        Pipeline pipe = build_pipeline(cfg.domain, cfg.resolution, cfg.tol.solver, mode, threads);

        nlohmann::json side = sidecar_base(cfg);
        side["solve"] = {{"cg_iterations", pipe.solve_stats.iterations},
                         {"cg_relative_residual", pipe.solve_stats.rel_residual},
                         {"null_audit_min_over_median", pipe.null_audit.min_over_median},
                         {"null_audit_pass", pipe.null_audit.pass}};

        if (cfg.command == "solve") {
            std::vector<double> umag(pipe.u->vectors.size());
            for (std::size_t i = 0; i < umag.size(); ++i) umag[i] = norm(pipe.u->vectors[i]);
            art->track("mesh.vtk");
            write_vtk(*pipe.mesh, art->path("mesh.vtk").string(),
                      {{"phi", &pipe.phi->values}, {"u_mag", &umag}});
            art->track("mesh_surface.vtk");
            write_vtk_surface(*pipe.mesh, art->path("mesh_surface.vtk").string());
            auto [f0, f1] = axial_fluxes(*pipe.phi);
            side["results"] = {{"flux_S0", f0},
                               {"flux_S1", f1},
                               {"mesh_vertices", pipe.mesh->vertices.size()},
                               {"mesh_tets", pipe.mesh->tets.size()}};
            write_sidecar(*art, "solve.json", side);
            out << "solve: wrote mesh.vtk, mesh_surface.vtk\n";
            return 0;
        }

        BraidedField field;
        GridLines gl = traced_run(cfg, pipe, field);

        if (cfg.command == "trace") {
            std::string csv = fieldlines_csv(gl.lines, true);
            side["checksums"] = {{"fieldlines.csv", art->write("fieldlines.csv", csv)}};
            side["results"] = {{"lines", gl.lines.size()}};
            write_sidecar(*art, "trace.json", side);
            out << "trace: wrote fieldlines.csv (" << gl.lines.size() << " lines)\n";
            return 0;
        }
        if (cfg.command == "wind") {
            auto lv = field_line_winding(gl, threads);
            std::string csv = distribution_csv(lv);
            side["checksums"] = {{"lv.csv", art->write("lv.csv", csv)}};
            double mn = 1e300, mx = -1e300;
            for (double v : lv.values) {
                mn = std::min(mn, v);
                mx = std::max(mx, v);
            }
            side["results"] = {{"kind", "Lv"}, {"min", mn}, {"max", mx},
                               {"nodes", lv.values.size()}};
            write_sidecar(*art, "wind.json", side);
            out << "wind: wrote lv.csv (" << lv.values.size() << " nodes)\n";
            return 0;
        }
        if (cfg.command == "helicity") {
            std::vector<double> j0_bz;
            auto ab = field_line_helicity(pipe, field, gl, cfg.tol.solenoidal, &j0_bz, threads);
            double H = total_helicity(ab, j0_bz);
            std::string csv = distribution_csv(ab);
            side["checksums"] = {{"ab.csv", art->write("ab.csv", csv)}};
            side["results"] = {{"kind", "Ab"}, {"total_helicity", H},
                               {"nodes", ab.values.size()}};
            write_sidecar(*art, "helicity.json", side);
            out << "helicity: wrote ab.csv, H = " << format_double(H) << "\n";
            return 0;
        }
        fail_config("run", "unhandled command " + cfg.command);
    } catch (const Error& e) {
        if (art) art->remove_all();
        nlohmann::json err;
        err["error"] = {{"stage", e.stage()},
                        {"kind", e.kind() == ErrorKind::Config
                                     ? "config"
                                     : (e.kind() == ErrorKind::Numerical ? "numerical"
                                                                         : "validation")},
                        {"message", e.what()}};
        out << err.dump(2) << "\n";
        return exit_code_for(e.kind());
    } catch (const std::exception& e) {
        if (art) art->remove_all();
        nlohmann::json err;
        err["error"] = {{"stage", "internal"}, {"kind", "numerical"}, {"message", e.what()}};
        out << err.dump(2) << "\n";
        return 3;
    }
}

}  // namespace windtube
