#pragma once

#include <cmath>
#include <string>

#include "fgd/errors.hpp"
#include "fgd/tensor.hpp"

namespace fgd {

enum class ActivationKind {
    Linear,
    LeakyRelu,
    Swish,
    Mish,
    HardSwish,
};

inline const char* activation_name(ActivationKind kind) {
    switch (kind) {
        case ActivationKind::Linear: return "linear";
        case ActivationKind::LeakyRelu: return "leaky";
        case ActivationKind::Swish: return "swish";
        case ActivationKind::Mish: return "mish";
        case ActivationKind::HardSwish: return "hswish";
    }
    return "?";
}

inline ActivationKind parse_activation(const std::string& name) {
    if (name == "linear") return ActivationKind::Linear;
    if (name == "leaky") return ActivationKind::LeakyRelu;
    if (name == "swish") return ActivationKind::Swish;
    if (name == "mish") return ActivationKind::Mish;
    if (name == "hswish") return ActivationKind::HardSwish;
    throw ValueError("unknown activation '" + name + "'");
}

namespace detail {

/** Numerically stable logistic sigmoid. */
inline double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/** Numerically stable softplus ln(1 + e^x) = max(x, 0) + log1p(e^-|x|). */
inline double softplus(double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
}

}  // namespace detail

/**
 * @brief Evaluate an activation at a scalar point.
 *
 * LeakyRelu uses negative slope leaky_slope (default 0.1). HardSwish is
 * x * clamp(x + 3, 0, 6) / 6, the piecewise-linear stand-in for Swish.
 * Non-finite input is rejected.
 */
inline double activate(ActivationKind kind, double x, double leaky_slope = 0.1) {
    if (!std::isfinite(x)) {
        throw ValueError("activate: non-finite input");
    }
    switch (kind) {
        case ActivationKind::Linear:
            return x;
        case ActivationKind::LeakyRelu:
            return x >= 0.0 ? x : leaky_slope * x;
        case ActivationKind::Swish:
            return x * detail::sigmoid(x);
        case ActivationKind::Mish:
            return x * std::tanh(detail::softplus(x));
        case ActivationKind::HardSwish: {
            const double g = std::min(std::max(x + 3.0, 0.0), 6.0);
            return x * g / 6.0;
        }
    }
    throw ValueError("activate: unknown activation kind");
}

/**
 * @brief Analytic derivative of activate. Kink points return the right-hand limit:
 * LeakyRelu'(0) = 1, HardSwish'(-3) = -0.5, HardSwish'(3) = 1.
 */
inline double activate_grad(ActivationKind kind, double x, double leaky_slope = 0.1) {
    switch (kind) {
        case ActivationKind::Linear:
            return 1.0;
        case ActivationKind::LeakyRelu:
            return x >= 0.0 ? 1.0 : leaky_slope;
        case ActivationKind::Swish: {
            const double s = detail::sigmoid(x);
            return s + x * s * (1.0 - s);
        }
        case ActivationKind::Mish: {
            const double t = std::tanh(detail::softplus(x));
            return t + x * (1.0 - t * t) * detail::sigmoid(x);
        }
        case ActivationKind::HardSwish:
            if (x < -3.0) return 0.0;
            if (x < 3.0) return (2.0 * x + 3.0) / 6.0;
            return 1.0;
    }
    throw ValueError("activate_grad: unknown activation kind");
}

/** @brief Apply an activation element-wise to a tensor. */
inline Tensor activate(ActivationKind kind, const Tensor& in, double leaky_slope = 0.1) {
    Tensor out(in.h, in.w, in.c);
    for (std::size_t i = 0; i < in.data.size(); ++i) {
        out.data[i] = static_cast<float>(activate(kind, in.data[i], leaky_slope));
    }
    return out;
}

}  // namespace fgd
