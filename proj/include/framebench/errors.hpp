#pragma once

#include <stdexcept>
#include <string>

namespace framebench {

// Base class for all framebench errors. Subcommands map these to exit code 1.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Input table is structurally wrong (missing columns, undetectable delimiter).
class SchemaError : public Error {
public:
    explicit SchemaError(const std::string& msg) : Error(msg) {}
};

// Rows are well-formed but their content violates a contract (bad label code,
// duplicate identity, unlabeled example where labels are required).
class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& msg) : Error(msg) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& msg) : Error(msg) {}
};

class CheckpointError : public Error {
public:
    explicit CheckpointError(const std::string& msg) : Error(msg) {}
};

class TrainError : public Error {
public:
    explicit TrainError(const std::string& msg) : Error(msg) {}
};

}  // namespace framebench
