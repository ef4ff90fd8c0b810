#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "fgd/errors.hpp"

namespace fgd {

/**
 * @brief Dense rank-3 feature map, laid out H x W x C row-major.
 *
 * Element (y, x, ch) lives at data[(y * w + x) * c + ch]. Values are
 * 32-bit floats; ops may accumulate in double internally but always
 * round back to float on store.
 */
struct Tensor {
    std::size_t h = 0;
    std::size_t w = 0;
    std::size_t c = 0;
    std::vector<float> data;

    Tensor() = default;

    Tensor(std::size_t h_, std::size_t w_, std::size_t c_, float fill = 0.0f)
        : h(h_), w(w_), c(c_), data(h_ * w_ * c_, fill) {}

    float& at(std::size_t y, std::size_t x, std::size_t ch) {
        return data[(y * w + x) * c + ch];
    }

    float at(std::size_t y, std::size_t x, std::size_t ch) const {
        return data[(y * w + x) * c + ch];
    }

    std::size_t size() const { return data.size(); }

    bool same_shape(const Tensor& other) const {
        return h == other.h && w == other.w && c == other.c;
    }

    std::string shape_str() const {
        return std::to_string(h) + "x" + std::to_string(w) + "x" + std::to_string(c);
    }
};

/**
 * @brief Convolution kernel, laid out K x K x Cin x Cout.
 *
 * Element (kh, kw, ci, co) lives at data[((kh * k + kw) * in_c + ci) * out_c + co].
 */
struct ConvKernel {
    std::size_t k = 0;
    std::size_t in_c = 0;
    std::size_t out_c = 0;
    std::vector<float> data;

    ConvKernel() = default;

    ConvKernel(std::size_t k_, std::size_t in_c_, std::size_t out_c_, float fill = 0.0f)
        : k(k_), in_c(in_c_), out_c(out_c_), data(k_ * k_ * in_c_ * out_c_, fill) {}

    float& at(std::size_t kh, std::size_t kw, std::size_t ci, std::size_t co) {
        return data[((kh * k + kw) * in_c + ci) * out_c + co];
    }

    float at(std::size_t kh, std::size_t kw, std::size_t ci, std::size_t co) const {
        return data[((kh * k + kw) * in_c + ci) * out_c + co];
    }

    std::size_t size() const { return data.size(); }
};

/**
 * @brief Per-channel batch normalization parameters.
 *
 * All four arrays share one length (the channel count). Variances must be
 * non-negative and eps strictly positive so the denominator never hits zero.
 */
struct BatchNormParams {
    std::vector<float> gamma;
    std::vector<float> beta;
    std::vector<float> mean;
    std::vector<float> var;
    float eps = 1e-5f;

    BatchNormParams() = default;

    /** Identity-ish defaults: gamma 1, beta 0, mean 0, var 1. */
    explicit BatchNormParams(std::size_t channels)
        : gamma(channels, 1.0f),
          beta(channels, 0.0f),
          mean(channels, 0.0f),
          var(channels, 1.0f) {}

    std::size_t channels() const { return gamma.size(); }

    void validate() const {
        if (beta.size() != gamma.size() || mean.size() != gamma.size() ||
            var.size() != gamma.size()) {
            throw ShapeError("batchnorm: parameter arrays disagree on channel count (gamma " +
                             std::to_string(gamma.size()) + ", beta " +
                             std::to_string(beta.size()) + ", mean " +
                             std::to_string(mean.size()) + ", var " +
                             std::to_string(var.size()) + ")");
        }
        if (!(eps > 0.0f)) {
            throw ValueError("batchnorm: eps must be positive, got " + std::to_string(eps));
        }
        for (float v : var) {
            if (v < 0.0f) {
                throw ValueError("batchnorm: negative variance " + std::to_string(v));
            }
        }
    }
};

/**
 * @brief 2-D convolution with zero padding and no bias term.
 *
 * Kernel size must be odd and the padded extent must cover the kernel.
 * Output is floor((H + 2*pad - K) / stride) + 1 square-law as usual.
 * Accumulation runs in double, stores round to float.
 */
inline Tensor conv2d(const Tensor& in, const ConvKernel& kernel, std::size_t stride,
                     std::size_t pad) {
    if (stride == 0) {
        throw ValueError("conv2d: stride must be positive");
    }
    if (kernel.k == 0 || kernel.k % 2 == 0) {
        throw ValueError("conv2d: kernel size must be odd, got " + std::to_string(kernel.k));
    }
    if (in.c != kernel.in_c) {
        throw ShapeError("conv2d: input channels (" + std::to_string(in.c) +
                         ") do not match kernel input channels (" +
                         std::to_string(kernel.in_c) + ")");
    }
    if (in.h + 2 * pad < kernel.k || in.w + 2 * pad < kernel.k) {
        throw ShapeError("conv2d: kernel " + std::to_string(kernel.k) +
                         " exceeds padded input " + std::to_string(in.h + 2 * pad) + "x" +
                         std::to_string(in.w + 2 * pad));
    }

    const std::size_t out_h = (in.h + 2 * pad - kernel.k) / stride + 1;
    const std::size_t out_w = (in.w + 2 * pad - kernel.k) / stride + 1;
    Tensor out(out_h, out_w, kernel.out_c);
    std::vector<double> acc(kernel.out_c);

    for (std::size_t oy = 0; oy < out_h; ++oy) {
        for (std::size_t ox = 0; ox < out_w; ++ox) {
            std::fill(acc.begin(), acc.end(), 0.0);
            for (std::size_t kh = 0; kh < kernel.k; ++kh) {
                const std::ptrdiff_t iy =
                    static_cast<std::ptrdiff_t>(oy * stride + kh) -
                    static_cast<std::ptrdiff_t>(pad);
                if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in.h)) continue;
                for (std::size_t kw = 0; kw < kernel.k; ++kw) {
                    const std::ptrdiff_t ix =
                        static_cast<std::ptrdiff_t>(ox * stride + kw) -
                        static_cast<std::ptrdiff_t>(pad);
                    if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in.w)) continue;
                    for (std::size_t ci = 0; ci < in.c; ++ci) {
                        const double v = in.at(static_cast<std::size_t>(iy),
                                               static_cast<std::size_t>(ix), ci);
                        const std::size_t base =
                            ((kh * kernel.k + kw) * kernel.in_c + ci) * kernel.out_c;
                        for (std::size_t co = 0; co < kernel.out_c; ++co) {
                            acc[co] += v * kernel.data[base + co];
                        }
                    }
                }
            }
            for (std::size_t co = 0; co < kernel.out_c; ++co) {
                out.at(oy, ox, co) = static_cast<float>(acc[co]);
            }
        }
    }
    return out;
}

/**
 * @brief 2-D max pooling. Padding cells count as -infinity, so they never win.
 *
 * Even kernel sizes are allowed (unlike conv2d); the kernel must still fit
 * inside the padded extent. A window with no in-bounds cell yields -infinity.
 */
inline Tensor maxpool2d(const Tensor& in, std::size_t kernel, std::size_t stride,
                        std::size_t pad) {
    if (stride == 0) {
        throw ValueError("maxpool2d: stride must be positive");
    }
    if (kernel == 0) {
        throw ValueError("maxpool2d: kernel size must be positive");
    }
    if (in.h + 2 * pad < kernel || in.w + 2 * pad < kernel) {
        throw ShapeError("maxpool2d: kernel " + std::to_string(kernel) +
                         " exceeds padded input " + std::to_string(in.h + 2 * pad) + "x" +
                         std::to_string(in.w + 2 * pad));
    }

    const std::size_t out_h = (in.h + 2 * pad - kernel) / stride + 1;
    const std::size_t out_w = (in.w + 2 * pad - kernel) / stride + 1;
    Tensor out(out_h, out_w, in.c);

    for (std::size_t oy = 0; oy < out_h; ++oy) {
        for (std::size_t ox = 0; ox < out_w; ++ox) {
            for (std::size_t ch = 0; ch < in.c; ++ch) {
                float best = -std::numeric_limits<float>::infinity();
                for (std::size_t kh = 0; kh < kernel; ++kh) {
                    const std::ptrdiff_t iy =
                        static_cast<std::ptrdiff_t>(oy * stride + kh) -
                        static_cast<std::ptrdiff_t>(pad);
                    if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in.h)) continue;
                    for (std::size_t kw = 0; kw < kernel; ++kw) {
                        const std::ptrdiff_t ix =
                            static_cast<std::ptrdiff_t>(ox * stride + kw) -
                            static_cast<std::ptrdiff_t>(pad);
                        if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in.w)) continue;
                        best = std::max(best, in.at(static_cast<std::size_t>(iy),
                                                    static_cast<std::size_t>(ix), ch));
                    }
                }
                out.at(oy, ox, ch) = best;
            }
        }
    }
    return out;
}

/** @brief Nearest-neighbor 2x upsample: H x W x C to 2H x 2W x C. */
inline Tensor upsample2x(const Tensor& in) {
    Tensor out(in.h * 2, in.w * 2, in.c);
    for (std::size_t y = 0; y < out.h; ++y) {
        for (std::size_t x = 0; x < out.w; ++x) {
            for (std::size_t ch = 0; ch < in.c; ++ch) {
                out.at(y, x, ch) = in.at(y / 2, x / 2, ch);
            }
        }
    }
    return out;
}

/** @brief Concatenate along channels. Spatial dims must agree; a's channels come first. */
inline Tensor concat_channels(const Tensor& a, const Tensor& b) {
    if (a.h != b.h || a.w != b.w) {
        throw ShapeError("concat_channels: spatial dims disagree (" + a.shape_str() +
                         " vs " + b.shape_str() + ")");
    }
    Tensor out(a.h, a.w, a.c + b.c);
    for (std::size_t y = 0; y < a.h; ++y) {
        for (std::size_t x = 0; x < a.w; ++x) {
            for (std::size_t ch = 0; ch < a.c; ++ch) {
                out.at(y, x, ch) = a.at(y, x, ch);
            }
            for (std::size_t ch = 0; ch < b.c; ++ch) {
                out.at(y, x, a.c + ch) = b.at(y, x, ch);
            }
        }
    }
    return out;
}

/** @brief Elementwise sum of two equally shaped tensors. */
inline Tensor add(const Tensor& a, const Tensor& b) {
    if (!a.same_shape(b)) {
        throw ShapeError("add: shapes disagree (" + a.shape_str() + " vs " +
                         b.shape_str() + ")");
    }
    Tensor out(a.h, a.w, a.c);
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        out.data[i] = a.data[i] + b.data[i];
    }
    return out;
}

/** @brief Copy out a contiguous channel range [from, from + count). */
inline Tensor slice_channels(const Tensor& in, std::size_t from, std::size_t count) {
    if (from + count > in.c) {
        throw ShapeError("slice_channels: range [" + std::to_string(from) + ", " +
                         std::to_string(from + count) + ") exceeds channel count " +
                         std::to_string(in.c));
    }
    Tensor out(in.h, in.w, count);
    for (std::size_t y = 0; y < in.h; ++y) {
        for (std::size_t x = 0; x < in.w; ++x) {
            for (std::size_t ch = 0; ch < count; ++ch) {
                out.at(y, x, ch) = in.at(y, x, from + ch);
            }
        }
    }
    return out;
}

/** @brief Per-channel batch normalization: gamma * (x - mean) / sqrt(var + eps) + beta. */
inline Tensor batchnorm_apply(const Tensor& in, const BatchNormParams& p) {
    p.validate();
    if (p.channels() != in.c) {
        throw ShapeError("batchnorm_apply: parameter channels (" +
                         std::to_string(p.channels()) + ") do not match input channels (" +
                         std::to_string(in.c) + ")");
    }

    std::vector<double> scale(in.c), shift(in.c);
    for (std::size_t ch = 0; ch < in.c; ++ch) {
        const double denom = std::sqrt(static_cast<double>(p.var[ch]) + p.eps);
        scale[ch] = p.gamma[ch] / denom;
        shift[ch] = p.beta[ch] - scale[ch] * p.mean[ch];
    }

    Tensor out(in.h, in.w, in.c);
    for (std::size_t y = 0; y < in.h; ++y) {
        for (std::size_t x = 0; x < in.w; ++x) {
            for (std::size_t ch = 0; ch < in.c; ++ch) {
                out.at(y, x, ch) =
                    static_cast<float>(scale[ch] * in.at(y, x, ch) + shift[ch]);
            }
        }
    }
    return out;
}

}  // namespace fgd
