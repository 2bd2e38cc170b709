#pragma once

#include <stdexcept>
#include <string>

namespace stepgan {

// Exception families map onto the CLI exit codes (1 usage/config, 2 data, 3 numeric).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 1; }
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed input files, bad shapes, corrupt checkpoints.
class DataError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

class ShapeError : public DataError {
public:
    using DataError::DataError;
};

class NumericError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 3; }
};

// API misuse: backward without forward, stepping a closed gate, and so on.
class StateError : public Error {
public:
    using Error::Error;
};

}  // namespace stepgan
