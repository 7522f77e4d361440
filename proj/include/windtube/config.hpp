#pragma once

#include <string>

#include "windtube/fields.hpp"
#include "windtube/geometry.hpp"

namespace windtube {

struct Tolerances {
    double trace = 1e-8;
    double solver = 1e-10;
    double solenoidal = 1e-3;
};

struct RunConfig {
    std::string command = "wind";  // solve | trace | wind | helicity | verify
    DomainSpec domain;
    FieldSpec field;
    double resolution = 0.1;
    int n_r = 24;
    int n_theta = 0;
    Tolerances tol;
    std::string out_dir = "out";
    int threads = 0;                 // 0 = machine parallelism / WINDTUBE_THREADS
    bool exact_embedding = false;    // CLI default is the bulk vertex cache

    void validate() const;
};

/// Parse the structured key/value config file (INI-style sections).  The
/// exact schema is documented in the README.
RunConfig parse_config_file(const std::string& path);

/// Serialized effective configuration (all defaults resolved) for the JSON
/// sidecar; returns a JSON object string.
std::string effective_config_json(const RunConfig& cfg);

}  // namespace windtube
