#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace rdvla {

#ifdef RDVLA_SCALAR32
using real_t = float;
#else
using real_t = double;
#endif

// Shape/dimension violations detected before any data is touched.
struct ShapeError : std::invalid_argument {
    explicit ShapeError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Bad parameter or cross-field configuration (eps <= 0, D % heads != 0, ...).
struct ConfigError : std::invalid_argument {
    explicit ConfigError(const std::string& msg) : std::invalid_argument(msg) {}
};

// API misuse (backward on a non-scalar, backward without a recorded graph).
struct UsageError : std::logic_error {
    explicit UsageError(const std::string& msg) : std::logic_error(msg) {}
};

// Iteration/depth budget exceeded.
struct BudgetError : std::runtime_error {
    explicit BudgetError(const std::string& msg) : std::runtime_error(msg) {}
};

// Threshold calibration could not reach the requested target.
struct CalibrationError : std::runtime_error {
    explicit CalibrationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Corrupt or version-incompatible on-disk artifact.
struct IntegrityError : IoError {
    explicit IntegrityError(const std::string& msg) : IoError(msg) {}
};

// Training hit a non-finite loss; message names the step.
struct TrainingDiverged : std::runtime_error {
    explicit TrainingDiverged(const std::string& msg) : std::runtime_error(msg) {}
};

inline std::string shape_str(std::size_t rows, std::size_t cols) {
    return "[" + std::to_string(rows) + "x" + std::to_string(cols) + "]";
}

inline bool is_finite(real_t v) { return std::isfinite(static_cast<double>(v)); }

}  // namespace rdvla
