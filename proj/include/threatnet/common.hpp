#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace threatnet {

inline constexpr const char* kVersion = "0.1.0";

/// File could not be opened or read.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Operation requires a non-empty graph (nodes and/or total edge weight).
class EmptyGraphError : public std::runtime_error {
public:
    explicit EmptyGraphError(const std::string& what) : std::runtime_error(what) {}
};

/// Requested size is infeasible for in-memory processing.
class CapacityError : public std::runtime_error {
public:
    explicit CapacityError(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid or inconsistent configuration.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace threatnet
