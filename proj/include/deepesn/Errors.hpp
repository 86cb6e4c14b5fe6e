#pragma once

#include <stdexcept>
#include <string>

namespace deepesn {

/// Base for every error raised by the library. The CLI maps the concrete
/// kind onto an exit status.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shapes or layer wiring do not fit together.
class StructuralError : public Error {
public:
    using Error::Error;
};

/// Input data is unusable (non-finite values, empty sequences).
class DataError : public Error {
public:
    using Error::Error;
};

/// A parameter or configuration value is out of its allowed range.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A computation diverged or a quantity is undefined for the given data.
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace deepesn
