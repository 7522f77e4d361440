#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "windtube/config.hpp"
#include "windtube/error.hpp"
#include "windtube/run.hpp"

int main(int argc, char** argv) {
    CLI::App app{"windtube: field-line winding of braided vector fields on tubular domains"};

    std::string config_path;
    std::string command;
    std::string out_dir;
    int threads = -1;
    double tol_trace = -1.0;
    int grid_nr = -1;

    app.add_option("--config", config_path, "config file (see README for the schema)");
    app.add_option("--command", command, "solve | trace | wind | helicity | verify");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--threads", threads, "worker count (default: machine parallelism)");
    app.add_option("--tol-trace", tol_trace, "field line integration tolerance");
    app.add_option("--grid-nr", grid_nr, "quadrature rings on D0");

    CLI11_PARSE(app, argc, argv);

    windtube::RunConfig cfg;
    try {
        if (!config_path.empty()) cfg = windtube::parse_config_file(config_path);
        if (!command.empty()) cfg.command = command;
        if (!out_dir.empty()) cfg.out_dir = out_dir;
        if (threads >= 0) cfg.threads = threads;
        if (tol_trace > 0.0) cfg.tol.trace = tol_trace;
        if (grid_nr > 0) cfg.n_r = grid_nr;
        cfg.validate();
    } catch (const windtube::Error& e) {
        std::cout << "{\"error\": {\"stage\": \"config\", \"kind\": \"config\", \"message\": \""
                  << e.what() << "\"}}" << std::endl;
        return 2;
    }

    return windtube::run(cfg, std::cout);
}
