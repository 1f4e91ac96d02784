#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace divcong {

// Precondition violations on user-supplied values (bad residues, k = 0, ...).
class InvalidArgument : public std::invalid_argument {
public:
    InvalidArgument(std::string field, const std::string& reason)
        : std::invalid_argument(field + ": " + reason), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

// A query falls outside the range covered by an evaluator or sieve.
class RangeError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

class BudgetExceeded : public std::runtime_error {
public:
    BudgetExceeded(std::uint64_t requested, std::uint64_t allowed)
        : std::runtime_error("memory budget exceeded: requested " + std::to_string(requested) +
                             " bytes, allowed " + std::to_string(allowed) + " bytes"),
          requested_(requested), allowed_(allowed) {}

    std::uint64_t requested() const noexcept { return requested_; }
    std::uint64_t allowed() const noexcept { return allowed_; }

private:
    std::uint64_t requested_;
    std::uint64_t allowed_;
};

class ToleranceNotMet : public std::runtime_error {
public:
    ToleranceNotMet(double achieved, double requested)
        : std::runtime_error("quadrature tolerance not met: achieved error estimate " +
                             std::to_string(achieved) + ", requested " + std::to_string(requested)),
          achieved_(achieved), requested_(requested) {}

    double achieved() const noexcept { return achieved_; }
    double requested() const noexcept { return requested_; }

private:
    double achieved_;
    double requested_;
};

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace divcong
