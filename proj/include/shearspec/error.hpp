#pragma once

#include <stdexcept>
#include <string>

namespace shearspec {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// bad input: out-of-range y, wrong profile kind, invalid grid, ...
class DomainError : public Error {
public:
    using Error::Error;
};

// U(y) - U(y_i) vanishes away from y_i, or y_i is not an inflection point
class SingularPotentialError : public Error {
public:
    using Error::Error;
};

class BoundError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    using Error::Error;
};

// an instability was required but none exists (e.g. certificate of a stable shear)
class NotUnstableError : public Error {
public:
    using Error::Error;
};

inline void require(bool ok, const std::string& what) {
    if (!ok) throw DomainError(what);
}

}  // namespace shearspec
