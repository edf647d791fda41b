#pragma once

#include <stdexcept>
#include <string>

namespace lstmctl {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shape disagreement between a field and the model dimensions.
class DimensionError : public Error {
public:
    DimensionError(std::string field, const std::string& detail)
        : Error("dimension mismatch in '" + field + "': " + detail), field_(std::move(field)) {}

    [[nodiscard]] const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

// Raised when a stability certificate required by an operation does not hold.
class CertificationError : public Error {
public:
    using Error::Error;
};

// The requested steady-state output is outside what the input box can reach.
class InfeasibleReference : public Error {
public:
    InfeasibleReference(double requested, double lo, double hi)
        : Error("reference infeasible: requested " + std::to_string(requested) + ", achievable [" +
                std::to_string(lo) + ", " + std::to_string(hi) + "]"),
          requested_(requested), lo_(lo), hi_(hi) {}

    [[nodiscard]] double requested() const noexcept { return requested_; }
    [[nodiscard]] double achievable_lo() const noexcept { return lo_; }
    [[nodiscard]] double achievable_hi() const noexcept { return hi_; }

private:
    double requested_;
    double lo_;
    double hi_;
};

class PlantError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace lstmctl
