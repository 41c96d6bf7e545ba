#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace hinfpde {

/// Evaluation requested at a point where the map is singular (pole hit,
/// singular resolvent, degenerate exponential basis).
class DomainError : public std::domain_error {
public:
    DomainError(const std::string& what, std::complex<double> s)
        : std::domain_error(what), s_(s) {}
    std::complex<double> where() const noexcept { return s_; }

private:
    std::complex<double> s_;
};

/// Invalid user configuration (grids, bounds, config files).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical routine failed (eigensolver, singular banded system, ...).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// det(I+GK) vanished at a sample, or I+GK is singular there.
class MarginalStabilityError : public std::runtime_error {
public:
    MarginalStabilityError(const std::string& what, double omega)
        : std::runtime_error(what), omega_(omega) {}
    double omega() const noexcept { return omega_; }

private:
    double omega_;
};

/// Phase increment between neighbouring samples exceeded the guard.
class UndersamplingError : public std::runtime_error {
public:
    UndersamplingError(const std::string& what, double lo, double hi)
        : std::runtime_error(what), lo_(lo), hi_(hi) {}
    double lo() const noexcept { return lo_; }
    double hi() const noexcept { return hi_; }

private:
    double lo_;
    double hi_;
};

}  // namespace hinfpde
