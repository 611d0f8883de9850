#pragma once

#include <stdexcept>
#include <string>

namespace rotwin {

// Bad configuration or malformed input (CLI exit code 2).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Rotation count or similar resource limit exceeded (CLI exit code 2).
class ResourceError : public ConfigError {
public:
    explicit ResourceError(const std::string& msg) : ConfigError(msg) {}
};

// Data is valid but an analysis cannot proceed, e.g. degenerate counts
// or undersized strata (CLI exit code 1).
class AnalysisError : public std::runtime_error {
public:
    explicit AnalysisError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem failure while reading or writing results (CLI exit code 1).
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace rotwin
