#pragma once

#include <stdexcept>
#include <string>

namespace sobext {

// Base class for all library failures. Callers that only need a message catch this.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Point outside a chart or an operation's domain of definition.
class DomainError : public Error {
public:
    using Error::Error;
};

class InvalidSurfaceError : public Error {
public:
    using Error::Error;
};

class InvalidDomainError : public Error {
public:
    using Error::Error;
};

class IntegrationError : public Error {
public:
    using Error::Error;
};

// Comparison function vanished (or went negative) inside the requested range.
class ComparisonBreakdownError : public Error {
public:
    using Error::Error;
};

class DegenerateTubeError : public Error {
public:
    using Error::Error;
};

class OutOfTubeError : public Error {
public:
    using Error::Error;
};

class FocalPointError : public Error {
public:
    using Error::Error;
};

class RegularityError : public Error {
public:
    using Error::Error;
};

// Two foot points tie; the tube is not a valid Fermi chart there.
class AmbiguityError : public RegularityError {
public:
    using RegularityError::RegularityError;
};

class ParameterError : public Error {
public:
    using Error::Error;
};

class AssemblyError : public Error {
public:
    using Error::Error;
};

class EvaluationError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace sobext
