#ifndef QUALENS_ERROR_HPP
#define QUALENS_ERROR_HPP

#include <stdexcept>
#include <string>

namespace qualens {

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text (JSON, CSV).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Input is well formed but violates a documented invariant or precondition.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// File could not be opened, read or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// Should not happen on validated inputs.
class InternalError : public Error {
public:
    using Error::Error;
};

} // namespace qualens

#endif
