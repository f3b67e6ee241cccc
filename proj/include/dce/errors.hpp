#pragma once

#include <stdexcept>
#include <string>

namespace dce {

/// Lower credible band never exceeds zero: no detectable contrast uptake.
/// Flags the voxel; batch processing continues.
class NoEnhancementError : public std::runtime_error {
public:
    explicit NoEnhancementError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Posterior median gradient at t* is not positive, so the onset
/// extrapolation is undefined.
class DegenerateGradientError : public std::runtime_error {
public:
    explicit DegenerateGradientError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Unrecoverable numerical failure (e.g. indefinite posterior precision
/// after ridge jitter). Carries enough context to reproduce.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

/// File or format problem at the I/O boundary.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace dce
