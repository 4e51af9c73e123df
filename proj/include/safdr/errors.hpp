#pragma once

#include <stdexcept>
#include <string>

namespace safdr {

/// Stable process exit codes, one per error category.
enum class ExitCode : int {
    ok = 0,
    internal = 1,
    usage = 2,
    validation = 3,
    io = 4,
    numerical = 5,
};

class Error : public std::runtime_error {
public:
    Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
    ExitCode code() const { return code_; }

private:
    ExitCode code_;
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ExitCode::io, what) {}
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(ExitCode::validation, what) {}
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(ExitCode::numerical, what) {}
};

}  // namespace safdr
