#pragma once

#include <stdexcept>
#include <string>

namespace netinf {

/// Invalid argument, size mismatch or malformed input document.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Integration produced a non-finite state.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, std::size_t step)
        : std::runtime_error(what), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

/// Regressor matrix is rank deficient.
class SingularityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The perturbed node itself shows no response to its pulse.
class DegeneratePulseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace netinf
