#include "windtube/config.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "windtube/error.hpp"

namespace windtube {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

double to_double(const std::string& s, const std::string& key) {
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        fail_config("config", "cannot parse number for '" + key + "': " + s);
    }
}

int to_int(const std::string& s, const std::string& key) {
    try {
        std::size_t pos = 0;
        int v = std::stoi(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        fail_config("config", "cannot parse integer for '" + key + "': " + s);
    }
}

// "k=3.1, z0=0, z1=0.5, delta=0.35" -> TwistRegion
TwistRegion parse_region(const std::string& text) {
    TwistRegion reg;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto eq = item.find('=');
        if (eq == std::string::npos) fail_config("config", "bad region entry: " + item);
        std::string key = trim(item.substr(0, eq));
        std::string val = trim(item.substr(eq + 1));
        if (key == "k") reg.k = to_double(val, key);
        else if (key == "z0") reg.z0 = to_double(val, key);
        else if (key == "z1") reg.z1 = to_double(val, key);
        else if (key == "delta") reg.delta = to_double(val, key);
        else if (key == "r0") reg.r0 = to_double(val, key);
        else fail_config("config", "unknown region key: " + key);
    }
    if (reg.z1 <= reg.z0) fail_config("config", "region needs z1 > z0");
    return reg;
}

DomainSpec parse_domain(const std::map<std::string, std::string>& kv,
                        const std::vector<std::string>&) {
    DomainSpec d;
    auto get = [&](const char* k) -> const std::string* {
        auto it = kv.find(k);
        return it == kv.end() ? nullptr : &it->second;
    };
    std::string kind = get("kind") ? *get("kind") : "straight-cylinder";
    if (kind == "straight-cylinder") {
        d = DomainSpec::straight(get("radius") ? to_double(*get("radius"), "radius") : 1.0,
                                 get("length") ? to_double(*get("length"), "length") : 1.0);
    } else if (kind == "expanding-tube") {
        d = DomainSpec::expanding(get("radius0") ? to_double(*get("radius0"), "radius0") : 1.0,
                                  get("radius1") ? to_double(*get("radius1"), "radius1") : 2.0);
    } else if (kind == "curved-tube") {
        d = DomainSpec::curved(
            get("bend_radius") ? to_double(*get("bend_radius"), "bend_radius") : 1.0,
            get("bend_angle") ? to_double(*get("bend_angle"), "bend_angle") : 1.5707963267948966,
            get("tube_radius") ? to_double(*get("tube_radius"), "tube_radius") : 0.2);
    } else {
        fail_config("config", "unknown domain kind: " + kind);
    }
    return d;
}

FieldSpec parse_field(const std::map<std::string, std::string>& kv,
                      const std::vector<std::string>& regions) {
    auto get = [&](const char* k) -> const std::string* {
        auto it = kv.find(k);
        return it == kv.end() ? nullptr : &it->second;
    };
    std::string kind = get("kind") ? *get("kind") : "uniform-twist";
    if (kind == "harmonic-u") return FieldSpec::harmonic_u();
    if (kind == "uniform-twist")
        return FieldSpec::uniform_twist(get("k") ? to_double(*get("k"), "k") : 6.283185307179586);
    if (kind == "braid-composite") {
        std::vector<TwistRegion> regs;
        for (const auto& r : regions) regs.push_back(parse_region(r));
        if (regs.empty()) fail_config("config", "braid-composite needs at least one region");
        return FieldSpec::composite(std::move(regs));
    }
    if (kind == "perturbed") {
        std::string base_kind = get("base") ? *get("base") : "uniform-twist";
        FieldSpec base;
        if (base_kind == "uniform-twist")
            base = FieldSpec::uniform_twist(get("k") ? to_double(*get("k"), "k")
                                                     : 6.283185307179586);
        else if (base_kind == "harmonic-u")
            base = FieldSpec::harmonic_u();
        else
            fail_config("config", "perturbed base must be uniform-twist or harmonic-u");
        return FieldSpec::perturbed(base,
                                    get("amplitude") ? to_double(*get("amplitude"), "amplitude")
                                                     : 0.2,
                                    get("delta") ? to_double(*get("delta"), "delta") : 0.0);
    }
    if (kind == "mesh-sampled") {
        if (!get("csv")) fail_config("config", "mesh-sampled field needs csv = <path>");
        return FieldSpec::mesh_sampled(*get("csv"));
    }
    fail_config("config", "unknown field kind: " + kind);
}

}  // namespace

void RunConfig::validate() const {
    if (command != "solve" && command != "trace" && command != "wind" && command != "helicity" &&
        command != "verify")
        fail_config("config", "unknown command: " + command);
    if (resolution <= 0.0) fail_config("config", "mesh resolution must be positive");
    if (n_r < 1) fail_config("config", "grid n_r must be at least 1");
    if (n_theta < 0) fail_config("config", "grid n_theta must be non-negative");
    if (tol.trace <= 0.0 || tol.solver <= 0.0 || tol.solenoidal <= 0.0)
        fail_config("config", "tolerances must be positive");
    if (out_dir.empty()) fail_config("config", "output directory must be set");
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail_config("config", "cannot open config file: " + path);

    std::map<std::string, std::map<std::string, std::string>> sections;
    std::map<std::string, std::vector<std::string>> repeated;  // section -> region list
    std::string line, section = "run";
    while (std::getline(in, line)) {
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        auto eq = line.find('=');
        if (eq == std::string::npos) fail_config("config", "expected key = value: " + line);
        std::string key = trim(line.substr(0, eq));
        std::string val = trim(line.substr(eq + 1));
        if (key == "region")
            repeated[section].push_back(val);
        else
            sections[section][key] = val;
    }

    RunConfig cfg;
    auto& run = sections["run"];
    if (run.count("command")) cfg.command = run["command"];
    if (run.count("threads")) cfg.threads = to_int(run["threads"], "threads");
    if (run.count("embedding")) {
        if (run["embedding"] == "exact") cfg.exact_embedding = true;
        else if (run["embedding"] == "bulk") cfg.exact_embedding = false;
        else fail_config("config", "embedding must be 'exact' or 'bulk'");
    }

    cfg.domain = parse_domain(sections["domain"], {});
    cfg.field = parse_field(sections["field"], repeated["field"]);

    auto& meshkv = sections["mesh"];
    if (meshkv.count("resolution")) cfg.resolution = to_double(meshkv["resolution"], "resolution");

    auto& grid = sections["grid"];
    if (grid.count("n_r")) cfg.n_r = to_int(grid["n_r"], "n_r");
    if (grid.count("n_theta")) cfg.n_theta = to_int(grid["n_theta"], "n_theta");

    auto& tolkv = sections["tolerances"];
    if (tolkv.count("trace")) cfg.tol.trace = to_double(tolkv["trace"], "trace");
    if (tolkv.count("solver")) cfg.tol.solver = to_double(tolkv["solver"], "solver");
    if (tolkv.count("solenoidal"))
        cfg.tol.solenoidal = to_double(tolkv["solenoidal"], "solenoidal");

    auto& outkv = sections["output"];
    if (outkv.count("directory")) cfg.out_dir = outkv["directory"];

    cfg.validate();
    return cfg;
}

std::string effective_config_json(const RunConfig& cfg) {
    nlohmann::json j;
    j["command"] = cfg.command;
    nlohmann::json dom;
    dom["kind"] = cfg.domain.name();
    switch (cfg.domain.kind) {
        case DomainKind::StraightCylinder:
            dom["radius"] = cfg.domain.radius;
            dom["length"] = cfg.domain.length;
            break;
        case DomainKind::ExpandingTube:
            dom["radius0"] = cfg.domain.radius0;
            dom["radius1"] = cfg.domain.radius1;
            break;
        case DomainKind::CurvedTube:
            dom["bend_radius"] = cfg.domain.bend_radius;
            dom["bend_angle"] = cfg.domain.bend_angle;
            dom["tube_radius"] = cfg.domain.tube_radius;
            break;
    }
    j["domain"] = dom;

    std::function<nlohmann::json(const FieldSpec&)> field_json = [&](const FieldSpec& f) {
        nlohmann::json fj;
        switch (f.kind) {
            case FieldKind::HarmonicU: fj["kind"] = "harmonic-u"; break;
            case FieldKind::UniformTwist:
                fj["kind"] = "uniform-twist";
                fj["k"] = f.k;
                break;
            case FieldKind::BraidComposite: {
                fj["kind"] = "braid-composite";
                nlohmann::json regs = nlohmann::json::array();
                for (const auto& r : f.regions)
                    regs.push_back({{"k", r.k},
                                    {"z0", r.z0},
                                    {"z1", r.z1},
                                    {"delta", r.delta},
                                    {"r0", r.r0}});
                fj["regions"] = regs;
                break;
            }
            case FieldKind::Perturbed:
                fj["kind"] = "perturbed";
                fj["amplitude"] = f.perturb_amplitude;
                fj["delta"] = f.perturb_delta;
                if (f.base) fj["base"] = field_json(*f.base);
                break;
            case FieldKind::MeshSampled:
                fj["kind"] = "mesh-sampled";
                fj["csv"] = f.field_csv;
                break;
        }
        return fj;
    };
    j["field"] = field_json(cfg.field);
    j["mesh"] = {{"resolution", cfg.resolution}};
    j["grid"] = {{"n_r", cfg.n_r}, {"n_theta", cfg.n_theta}};
    j["tolerances"] = {{"trace", cfg.tol.trace},
                       {"solver", cfg.tol.solver},
                       {"solenoidal", cfg.tol.solenoidal}};
    j["output"] = {{"directory", cfg.out_dir}};
    j["threads"] = cfg.threads;
    j["embedding"] = cfg.exact_embedding ? "exact" : "bulk";
    return j.dump(2);
}

}  // namespace windtube
