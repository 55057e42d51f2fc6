#pragma once

#include <stdexcept>
#include <string>

namespace qtoc {

// Invalid user input: parameters, states, words, configuration.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A numerical procedure failed to converge or hit an internal limit.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// The free dynamics has no isolated fixed point (gamma_plus == 0).
class NoFixedPointError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Singular feedback with |phi| > 1.
class InadmissibleSingularError : public std::domain_error {
public:
    InadmissibleSingularError(double phi, const std::string& what)
        : std::domain_error(what), phi_(phi) {}
    double phi() const noexcept { return phi_; }

private:
    double phi_;
};

// The clock form is undefined (state inside the guard band around C_A).
class ClockFormSingularError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// A minimum-time query that has no finite answer.
class InfeasibleQueryError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace qtoc
