#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace cosym {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
public:
    explicit Error(std::string message) : std::runtime_error(std::move(message)) {}
};

/// Malformed expression source. Carries the byte offset of the offending
/// token and the set of tokens that would have been accepted there.
class SyntaxError : public Error {
public:
    SyntaxError(std::size_t offset, std::string found, std::vector<std::string> expected);

    std::size_t offset() const { return offset_; }
    const std::string& found() const { return found_; }
    const std::vector<std::string>& expected() const { return expected_; }

private:
    std::size_t offset_;
    std::string found_;
    std::vector<std::string> expected_;
};

/// An identifier that is not in the declared vocabulary.
class UnknownVariable : public Error {
public:
    UnknownVariable(std::string name, std::size_t offset);

    const std::string& name() const { return name_; }
    std::size_t offset() const { return offset_; }

private:
    std::string name_;
    std::size_t offset_;
};

/// Evaluation left the domain of an operation (log of a non-positive value,
/// division by zero, zero raised to a negative power, ...). Carries the
/// printed form of the offending subexpression.
class DomainError : public Error {
public:
    DomainError(const std::string& what_failed, std::string subexpression);

    const std::string& subexpression() const { return subexpression_; }

private:
    std::string subexpression_;
};

/// Chart blocks required by a system class are missing or inconsistent.
class LayoutMismatch : public Error {
public:
    using Error::Error;
};

/// The flat operator is numerically singular: the volume condition
/// omega^n ^ eta_1 ^ ... ^ eta_p vanishes (or nearly so) at the state.
class DegenerateStructure : public Error {
public:
    explicit DegenerateStructure(double condition);

    double condition() const { return condition_; }

private:
    double condition_;
};

/// A required dH/dS (per entropy slot) is zero at the state, so the
/// explicit evolution equations cannot divide by the temperature.
class TemperatureDegenerate : public Error {
public:
    TemperatureDegenerate(std::size_t entropy_slot, std::string coordinate);

    std::size_t entropy_slot() const { return slot_; }
    const std::string& coordinate() const { return coordinate_; }

private:
    std::size_t slot_;
    std::string coordinate_;
};

/// The velocity Hessian of the Lagrangian is too ill-conditioned for the
/// fiber derivative to be invertible at the queried point.
class SingularLegendre : public Error {
public:
    explicit SingularLegendre(double condition);

    double condition() const { return condition_; }

private:
    double condition_;
};

/// Newton iteration for the inverse fiber derivative failed; carries the
/// last iterate for inspection.
class NewtonDivergence : public Error {
public:
    NewtonDivergence(std::string message, std::vector<double> last_iterate);

    const std::vector<double>& last_iterate() const { return last_iterate_; }

private:
    std::vector<double> last_iterate_;
};

/// Adaptive step size underflowed.
class StepFailure : public Error {
public:
    using Error::Error;
};

/// Integration produced a non-finite state component.
class NonFiniteState : public Error {
public:
    using Error::Error;
};

/// Scenario file could not be read or parsed at all (structural failures
/// before validation proper).
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace cosym
