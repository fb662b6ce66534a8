#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fdr {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad user input: unknown generator name, malformed config, invalid grid.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// An integrand evaluated to a non-finite value at a support point.
class IntegrandDomainError : public Error {
public:
    IntegrandDomainError(std::string msg, std::size_t point_index)
        : Error(std::move(msg)), point_index(point_index) {}
    std::size_t point_index;
};

/// Vector lengths of a risk field and a measure's support disagree.
class AlignmentError : public Error {
public:
    using Error::Error;
};

/// The empirical risk is constant on the support; the solution is Q itself.
class DegenerateInstanceError : public Error {
public:
    using Error::Error;
};

/// A candidate beta puts some support point outside the domain of the
/// inverse derivative (or outside the conjugate domain, for the dual).
/// `side` records which way beta must move to restore feasibility:
/// -1 means beta is too small, +1 means beta is too large.
class InfeasibleBetaError : public Error {
public:
    InfeasibleBetaError(std::string msg, int side, std::size_t point_index,
                        double argument)
        : Error(std::move(msg)), side(side), point_index(point_index),
          argument(argument) {}
    int side;
    std::size_t point_index;
    double argument;
};

/// No normalizing beta exists for this regularization factor.
class InfeasibleLambdaError : public Error {
public:
    using Error::Error;
};

/// The bisection iteration budget ran out before meeting the tolerance.
class NoConvergenceError : public Error {
public:
    NoConvergenceError(std::string msg, double bracket_lo, double bracket_hi)
        : Error(std::move(msg)), bracket_lo(bracket_lo), bracket_hi(bracket_hi) {}
    double bracket_lo;
    double bracket_hi;
};

/// The Legendre-Fenchel transform is +infinity at the requested point.
class UnboundedConjugateError : public Error {
public:
    using Error::Error;
};

/// A generator broke its own contract (e.g. nonpositive second derivative).
class GeneratorContractError : public Error {
public:
    using Error::Error;
};

} // namespace fdr
