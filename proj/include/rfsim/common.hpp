#pragma once

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace rfsim {

using Complex = std::complex<double>;
using CVec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;
using RMat = Eigen::MatrixXd;

// Thrown when an operation receives arguments that violate its contract.
struct InvalidInput : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Thrown by serialization code; carries the byte offset where decoding failed.
struct FormatError : std::runtime_error {
    FormatError(const std::string& what, std::uint64_t offset)
        : std::runtime_error(what + " (byte offset " + std::to_string(offset) + ")"),
          byte_offset(offset) {}
    std::uint64_t byte_offset;
};

// Thrown when a data source has zero variance and cannot be standardized.
struct DegenerateData : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when optimization diverges; names the epoch where it happened.
struct TrainingFailure : std::runtime_error {
    TrainingFailure(const std::string& what, int epoch)
        : std::runtime_error(what + " (epoch " + std::to_string(epoch) + ")"), epoch(epoch) {}
    int epoch;
};

// Thrown on experiment-config schema violations; message names the offending key.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr double kPi = 3.14159265358979323846;

}  // namespace rfsim
