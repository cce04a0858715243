#pragma once

#include <stdexcept>
#include <string>

namespace gelx {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// origin of the moment vectors lies outside their convex hull
class HullError : public Error {
public:
    using Error::Error;
};

class NonConvergenceError : public Error {
public:
    using Error::Error;
};

class SingularJacobianError : public NonConvergenceError {
public:
    using NonConvergenceError::NonConvergenceError;
};

// exponent cap, EL log domain, non-finite input
class DomainError : public Error {
public:
    using Error::Error;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class IllConditionedError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class StudyError : public Error {
public:
    using Error::Error;
};

}  // namespace gelx
