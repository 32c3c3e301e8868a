#pragma once

#include <stdexcept>
#include <string>

namespace negfeed {

/// Base for all recoverable library failures. Precondition violations throw
/// std::invalid_argument instead.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Two distributions (or a distribution and a mask) do not share a lattice.
class SpecMismatch : public Error {
public:
    using Error::Error;
};

/// Path sampling ran into a phase slice with no reachable mass.
class DeadEnd : public Error {
public:
    using Error::Error;
};

class EmptySelection : public Error {
public:
    using Error::Error;
};

/// Demonstration noise is too large to produce a collision-free path.
class NoiseTooLarge : public Error {
public:
    using Error::Error;
};

/// Negative-weight clamping removed every mixture component.
class AllMassNegative : public Error {
public:
    using Error::Error;
};

class MalformedTable : public Error {
public:
    using Error::Error;
};

/// Parse failure in one of the on-disk formats.
class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace negfeed
