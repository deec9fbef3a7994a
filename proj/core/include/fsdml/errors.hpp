#pragma once

#include <stdexcept>
#include <string>

namespace fsdml {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Inconsistent network, optimizer, or run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Tensor or parameter shape disagreement.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Invalid argument value (label out of range, empty input, ...).
class InputError : public Error {
public:
    using Error::Error;
};

/// Dataset content violates a precondition (missing class, mixed dims, ...).
class DatasetError : public Error {
public:
    using Error::Error;
};

/// Non-finite loss or gradient during optimization.
class TrainingError : public Error {
public:
    using Error::Error;
};

/// Malformed dataset or checkpoint file.
class ParseError : public Error {
public:
    using Error::Error;
};

class UnsupportedVersionError : public ParseError {
public:
    using ParseError::ParseError;
};

} // namespace fsdml
