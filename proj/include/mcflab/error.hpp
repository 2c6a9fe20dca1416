#pragma once

#include <stdexcept>
#include <string>

namespace mcflab {

// Every failure raised by the library derives from Error. The kind drives the
// CLI exit code: validation/io map to 2, numerical to 3.
class Error : public std::runtime_error {
public:
    enum class Kind { Validation, Domain, Boundary, Numerical, Io };

    Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

struct ValidationError : Error {
    explicit ValidationError(const std::string& what) : Error(Kind::Validation, what) {}
};

/// Query point outside the sampled cube. overshoot = sup-norm distance past the face.
struct DomainError : Error {
    DomainError(const std::string& what, double overshoot)
        : Error(Kind::Domain, what), overshoot(overshoot) {}
    double overshoot;
};

/// Stencil would leave the grid. axis is the first offending axis.
struct BoundaryError : Error {
    BoundaryError(const std::string& what, int axis) : Error(Kind::Boundary, what), axis(axis) {}
    int axis;
};

struct NumericalError : Error {
    explicit NumericalError(const std::string& what) : Error(Kind::Numerical, what) {}
};

struct IoError : Error {
    explicit IoError(const std::string& what) : Error(Kind::Io, what) {}
};

} // namespace mcflab
