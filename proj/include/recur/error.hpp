#pragma once

#include <stdexcept>
#include <string>

namespace recur {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller supplied data or parameters violating a precondition.
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// All pairwise distances on one side are identical, so the Gaussian
/// weight has zero spread and the weighted statistics are undefined.
class DegenerateWeight : public Error {
public:
    using Error::Error;
};

/// A numerical consistency check failed inside the library.
class InternalError : public Error {
public:
    using Error::Error;
};

}  // namespace recur
