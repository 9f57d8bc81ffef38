#pragma once

#include <stdexcept>
#include <string>

namespace possur {

/// Base class for every error raised by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed input: configuration, dataset files, region syntax.
struct ConfigError : Error {
    using Error::Error;
};

/// A linear-algebra or sampling step could not be carried out.
struct NumericalError : Error {
    using Error::Error;
};

}  // namespace possur
