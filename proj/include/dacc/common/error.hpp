#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dacc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed canonical encoding (truncated buffer, bad tag, trailing bytes).
class DecodeError : public Error {
public:
    using Error::Error;
};

/// Caller supplied an argument outside the documented domain.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

} // namespace dacc
