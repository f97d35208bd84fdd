#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>

namespace bm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Number of output tokens '0'..'999'.
inline constexpr int kTokens = 1000;

// File missing, unreadable, or malformed. CLI exit code 3.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FormatError : IoError {
    using IoError::IoError;
};

// Non-finite or singular intermediate. CLI exit code 4.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Worker count from BMA_THREADS (default: hardware concurrency, at least 1).
std::size_t thread_count();

// Runs fn(i) for i in [0, n). Each index must only touch its own output slot,
// which keeps results independent of the thread count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

// Shortest decimal that round-trips a double; used for CSV output.
std::string fmt(double v);

}  // namespace bm
