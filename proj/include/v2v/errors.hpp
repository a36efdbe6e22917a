#pragma once

#include <stdexcept>
#include <string>

namespace v2v {

// Bad argument / precondition violation.
class ParameterError : public std::invalid_argument {
public:
    explicit ParameterError(const std::string& what) : std::invalid_argument(what) {}
};

// Input is valid but outside what this build is configured to handle
// (e.g. QR enumeration above the bound, root explosion).
class CapabilityError : public std::runtime_error {
public:
    explicit CapabilityError(const std::string& what) : std::runtime_error(what) {}
};

// Protocol-level failure (bad state transition, aborted choreography).
class ProtocolError : public std::runtime_error {
public:
    explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace v2v
