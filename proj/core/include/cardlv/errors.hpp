#pragma once

#include <stdexcept>
#include <string>

namespace cardlv {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Mismatched or impossible grid/vector dimensions.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Invalid caller-supplied data (empty lists, length mismatches, bad values).
class InputError : public Error {
public:
    using Error::Error;
};

/// Mask or region without the required foreground/background structure.
class DegenerateError : public Error {
public:
    using Error::Error;
};

/// A level-set field with no zero crossing.
class NoContourError : public Error {
public:
    using Error::Error;
};

/// Optimization diverged (NaN/inf cost) or could not proceed.
class TrainingError : public Error {
public:
    using Error::Error;
};

/// Non-finite values produced where finite ones are required.
class NumericError : public Error {
public:
    using Error::Error;
};

/// File or directory could not be read/parsed; message names the path.
class LoadError : public Error {
public:
    using Error::Error;
};

/// Shape network produced an empty mask at inference time.
class ShapeInferenceError : public Error {
public:
    using Error::Error;
};

/// Metric undefined for the given inputs (e.g. Dice of two empty masks).
class MetricError : public Error {
public:
    using Error::Error;
};

} // namespace cardlv
