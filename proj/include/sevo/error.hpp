#pragma once

#include <stdexcept>
#include <string>

namespace sevo {

// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Shapes or list lengths that do not line up.
class ShapeError : public Error {
public:
    using Error::Error;
};

// Invalid arguments (out-of-range opacity, empty dataset, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

// Malformed or truncated on-disk data. The message names the offending path.
class FormatError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// SEVO-DET/1 framing violations.
class ProtocolError : public Error {
public:
    using Error::Error;
};

// Detector endpoint did not answer in time or has exited.
class UnavailableError : public Error {
public:
    using Error::Error;
};

// The experiment harness ran but its baseline fell outside the calibration window.
class CalibrationError : public Error {
public:
    using Error::Error;
};

} // namespace sevo
