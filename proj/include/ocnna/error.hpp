#ifndef OCNNA_ERROR_HPP
#define OCNNA_ERROR_HPP

#include <stdexcept>
#include <string>

namespace ocnna {

// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Incompatible tensor/layer dimensions. Messages name the offending axes.
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& msg) : Error(msg) {}
};

// Invalid parameter values (percentile out of range, zero epochs, ...).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Filesystem-level failures (cannot open / read / write).
class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

// Malformed .ocnn/.ocnd content. Subclasses distinguish the failure modes
// so callers and tests can tell them apart.
class FormatError : public Error {
public:
    explicit FormatError(const std::string& msg) : Error(msg) {}
};

class BadMagicError : public FormatError {
public:
    explicit BadMagicError(const std::string& msg) : FormatError(msg) {}
};

class BadVersionError : public FormatError {
public:
    explicit BadVersionError(const std::string& msg) : FormatError(msg) {}
};

class TruncatedError : public FormatError {
public:
    explicit TruncatedError(const std::string& msg) : FormatError(msg) {}
};

class ManifestError : public FormatError {
public:
    explicit ManifestError(const std::string& msg) : FormatError(msg) {}
};

// Non-finite values, diverging optimization, and similar numeric trouble.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

} // namespace ocnna

#endif
