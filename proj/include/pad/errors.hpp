#pragma once

#include <stdexcept>
#include <string>

namespace pad {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Unreadable, unwritable, or malformed files.
class IoError : public Error {
public:
    using Error::Error;
};

class UnsupportedFormat : public IoError {
public:
    using IoError::IoError;
};

/// JPEG/PNG encode or decode failure.
class CodecError : public Error {
public:
    using Error::Error;
};

/// The MI tile grid has fewer than two tiles.
class DegenerateGrid : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

class EmptyWindow : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

/// Raised by region providers. `kind()` names the provider ("directory", "sidecar").
class ProviderError : public Error {
public:
    ProviderError(std::string kind, const std::string& what)
        : Error(kind + " provider: " + what), kind_(std::move(kind)) {}

    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

/// The sidecar answered, but not according to the wire contract.
class ProtocolViolation : public ProviderError {
public:
    explicit ProtocolViolation(const std::string& what) : ProviderError("sidecar", "protocol violation: " + what) {}
};

}  // namespace pad
