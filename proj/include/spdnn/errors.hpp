#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace spdnn {

/// Contract violation in an argument (bad dimension, invalid parameter, malformed input).
struct invalid_argument_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Failure at run time (non-finite value, io error, exhausted backtracking).
struct runtime_failure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Training objective exceeded the divergence guard.  Carries the trajectory
/// observed up to the failing epoch.
struct divergence_error : runtime_failure {
    std::vector<double> trajectory;
    divergence_error(const std::string& msg, std::vector<double> traj)
        : runtime_failure(msg), trajectory(std::move(traj)) {}
};

} // namespace spdnn
