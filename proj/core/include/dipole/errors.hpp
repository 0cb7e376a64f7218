#pragma once

#include <stdexcept>
#include <string>

namespace dipole {

// Bad input: invalid grids, out-of-domain arguments, malformed configs.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A computation ran but its own consistency check failed.
class NumericalError : public std::runtime_error {
public:
    NumericalError(const std::string& what, double measured)
        : std::runtime_error(what), measured_(measured) {}

    double measured() const noexcept { return measured_; }

private:
    double measured_;
};

}  // namespace dipole
