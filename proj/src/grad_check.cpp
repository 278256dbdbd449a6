// SPDX-License-Identifier: Apache-2.0
#include "ihs/grad_check.hpp"

#include <cmath>

namespace ihs {

GradCheckResult grad_check(std::span<Parameter* const> params, const std::function<double(bool)>& loss,
                           double eps, double flag_threshold) {
    for (auto* p : params) p->zero_grad();
    loss(true);
    std::vector<Matrix> analytic;
    analytic.reserve(params.size());
    for (auto* p : params) analytic.push_back(p->grad);

    GradCheckResult result;
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = *params[i];
        for (Eigen::Index k = 0; k < p.value.size(); ++k) {
            double& x = p.value.data()[k];
            const double saved = x;
            x = saved + eps;
            const double up = loss(false);
            x = saved - eps;
            const double down = loss(false);
            x = saved;
            const double numeric = (up - down) / (2.0 * eps);
            const double a = analytic[i].data()[k];
            const double err = std::abs(a - numeric) / std::max(1e-12, std::abs(a) + std::abs(numeric));
            ++result.coordinates;
            if (err > flag_threshold) result.flagged.push_back({p.name, k, a, numeric, err});
            if (err > result.max_relative_error) {
                result.max_relative_error = err;
                result.worst_parameter = p.name;
                result.worst_index = k;
            }
        }
    }
    return result;
}

}  // namespace ihs
