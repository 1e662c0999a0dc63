#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "errors.hpp"

namespace spdnn {

/**
 * Scalar activation with its derivative and a Lipschitz constant.
 *
 * The estimator classes require the activation to be Lipschitz and to fix
 * some segment of [0,1] pointwise (sigma(z) = z on that segment).  ReLU
 * fixes all of [0,1]; check_fixed_segment verifies the property numerically
 * for any candidate.
 */
struct Activation {
    std::string id;
    std::function<double(double)> fn;
    std::function<double(double)> deriv;
    double lipschitz = 1.0;
};

/// ReLU; derivative at 0 is taken as 0.
inline Activation relu_activation() {
    return {"relu",
            [](double z) { return z > 0.0 ? z : 0.0; },
            [](double z) { return z > 0.0 ? 1.0 : 0.0; },
            1.0};
}

inline Activation identity_activation() {
    return {"identity", [](double z) { return z; }, [](double) { return 1.0; }, 1.0};
}

inline Activation sigmoid_activation() {
    return {"sigmoid",
            [](double z) { return 1.0 / (1.0 + std::exp(-z)); },
            [](double z) {
                double s = 1.0 / (1.0 + std::exp(-z));
                return s * (1.0 - s);
            },
            0.25};
}

inline Activation tanh_activation() {
    return {"tanh",
            [](double z) { return std::tanh(z); },
            [](double z) {
                double t = std::tanh(z);
                return 1.0 - t * t;
            },
            1.0};
}

/// Looks up a built-in activation by id; throws on unknown ids.
inline Activation activation_by_id(const std::string& id) {
    if (id == "relu") return relu_activation();
    if (id == "identity") return identity_activation();
    if (id == "sigmoid") return sigmoid_activation();
    if (id == "tanh") return tanh_activation();
    throw invalid_argument_error("unknown activation id: " + id);
}

/**
 * Checks |sigma(z) - z| <= 1e-12 on an evenly spaced grid over [a,b].
 * Requires 0 <= a < b <= 1 and grid_size >= 2.
 */
inline bool check_fixed_segment(const Activation& act, double a, double b,
                                std::size_t grid_size = 256) {
    if (!(0.0 <= a && a < b && b <= 1.0))
        throw invalid_argument_error("check_fixed_segment: need 0 <= a < b <= 1");
    if (grid_size < 2)
        throw invalid_argument_error("check_fixed_segment: grid_size must be >= 2");
    for (std::size_t i = 0; i < grid_size; ++i) {
        double z = a + (b - a) * static_cast<double>(i) / static_cast<double>(grid_size - 1);
        if (std::fabs(act.fn(z) - z) > 1e-12) return false;
    }
    return true;
}

} // namespace spdnn
