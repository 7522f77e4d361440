#pragma once

#include <stdexcept>
#include <string>

namespace windtube {

/// Error categories, mapped to CLI exit codes by the front end.
enum class ErrorKind {
    Config,      // bad descriptors, unreadable input
    Numerical,   // solver non-convergence, tracer stagnation, degenerate geometry
    Validation,  // a field or mesh failed its stated admissibility checks
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& stage, const std::string& what)
        : std::runtime_error(stage + ": " + what), kind_(kind), stage_(stage) {}

    ErrorKind kind() const { return kind_; }
    const std::string& stage() const { return stage_; }

private:
    ErrorKind kind_;
    std::string stage_;
};

[[noreturn]] inline void fail_config(const std::string& stage, const std::string& msg) {
    throw Error(ErrorKind::Config, stage, msg);
}
[[noreturn]] inline void fail_numerical(const std::string& stage, const std::string& msg) {
    throw Error(ErrorKind::Numerical, stage, msg);
}
[[noreturn]] inline void fail_validation(const std::string& stage, const std::string& msg) {
    throw Error(ErrorKind::Validation, stage, msg);
}

}  // namespace windtube
