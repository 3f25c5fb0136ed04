#pragma once

#include <stdexcept>
#include <string>

namespace rosae {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller violated an operation precondition (bad sizes, ranges, modes).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Input data contains non-finite or otherwise unusable values.
class InvalidData : public Error {
public:
    using Error::Error;
};

/// A numerical routine could not complete (singular or indefinite system).
class NumericFailure : public Error {
public:
    using Error::Error;
};

/// An input file does not conform to its documented schema.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// A topic was not found in the hierarchy.
class MissingTopic : public Error {
public:
    using Error::Error;
};

/// Not enough eligible rows to satisfy a contamination request.
class CapacityError : public Error {
public:
    using Error::Error;
};

/// A metric is undefined for the given labels (e.g. single-class input).
class UndefinedMetric : public Error {
public:
    using Error::Error;
};

/// Filesystem level failure (missing file, unreadable path).
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace rosae
