// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "ihs/autograd.hpp"

namespace ihs {

struct FlaggedCoordinate {
    std::string parameter;
    Eigen::Index index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    double relative_error = 0.0;
};

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::string worst_parameter;
    Eigen::Index worst_index = 0;
    std::size_t coordinates = 0;
    /// Coordinates whose relative error exceeds the caller's flag threshold.
    std::vector<FlaggedCoordinate> flagged;
};

/// Compares analytic gradients against central differences coordinate-wise.
/// `loss` must evaluate the objective deterministically from the current
/// parameter values and, when asked, fill every Parameter::grad (zeroed by
/// the caller beforehand). Relative error is |a - n| / max(1e-12, |a| + |n|).
GradCheckResult grad_check(std::span<Parameter* const> params,
                           const std::function<double(bool with_grads)>& loss, double eps,
                           double flag_threshold = std::numeric_limits<double>::infinity());

}  // namespace ihs
