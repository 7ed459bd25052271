#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mgsim {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A physical or numeric parameter is outside its domain.
class InvalidParameter : public Error {
public:
    using Error::Error;
};

class SingularMatrix : public Error {
public:
    using Error::Error;
};

/// A line with zero total impedance cannot be stamped into the admittance matrix.
class SingularBranch : public Error {
public:
    using Error::Error;
};

/// Raised by a power-flow solver that cannot continue (singular Jacobian, Y_ii = 0).
class SolverError : public Error {
public:
    using Error::Error;
};

/// Malformed CSV or other file content. The message cites the row.
class FormatError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// The solver failed at a given simulation step; the run is aborted.
class NonConvergence : public Error {
public:
    NonConvergence(std::size_t step, const std::string& what)
        : Error("step " + std::to_string(step) + ": " + what), step_(step) {}

    [[nodiscard]] std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

}  // namespace mgsim
