#pragma once

#include <stdexcept>
#include <string>

namespace cglp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A constructor or operation received parameters outside its domain.
class InvalidParameter : public Error {
public:
    using Error::Error;
};

/// Evaluation hit a singularity (pole on the evaluation frequency, singular
/// sensitivity, reset describing function undefined) or a simulation diverged.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Not enough samples for the requested estimator.
class InsufficientData : public Error {
public:
    using Error::Error;
};

/// Experiment configuration failed schema validation.
class ValidationError : public Error {
public:
    using Error::Error;
};

}  // namespace cglp
