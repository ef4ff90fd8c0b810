#pragma once

#include <array>
#include <map>
#include <string>

#include "fgd/activations.hpp"
#include "fgd/errors.hpp"
#include "fgd/network.hpp"
#include "fgd/tensor.hpp"
#include "fgd/weights.hpp"

namespace fgd {

/**
 * @brief Run a network on one input tensor and return the three head outputs
 * in spec.outputs order (finest scale first).
 *
 * Execution walks the lowered primitives in their fixed topological order, so
 * repeated runs with the same inputs are bit-identical. Input shape and the
 * weight store are validated up front.
 */
inline std::array<Tensor, 3> forward(const NetworkSpec& spec, const WeightStore& weights,
                                     const Tensor& input) {
    const LoweredShapes lowered = lower_with_shapes(spec);
    validate_weights(spec, weights);
    if (input.h != spec.input.h || input.w != spec.input.w || input.c != spec.input.c) {
        throw ShapeError("forward: input is " + input.shape_str() + ", network expects " +
                         spec.input.str());
    }

    std::map<std::string, Tensor> values;
    for (const PrimNode& p : lowered.graph.prims) {
        switch (p.kind) {
            case PrimKind::Input:
                values[p.id] = input;
                break;
            case PrimKind::Conv: {
                const ConvWeights& w = weights.at(p.id);
                Tensor t = conv2d(values.at(p.inputs[0]), w.kernel, p.stride, p.pad);
                if (w.has_bn) t = batchnorm_apply(t, w.bn);
                if (p.act != ActivationKind::Linear) t = activate(p.act, t);
                values[p.id] = std::move(t);
                break;
            }
            case PrimKind::MaxPool:
                values[p.id] = maxpool2d(values.at(p.inputs[0]), p.k, p.stride, p.pad);
                break;
            case PrimKind::Upsample:
                values[p.id] = upsample2x(values.at(p.inputs[0]));
                break;
            case PrimKind::Concat:
                values[p.id] =
                    concat_channels(values.at(p.inputs[0]), values.at(p.inputs[1]));
                break;
            case PrimKind::Add:
                values[p.id] = add(values.at(p.inputs[0]), values.at(p.inputs[1]));
                break;
        }
    }

    std::array<Tensor, 3> out;
    for (std::size_t i = 0; i < 3; ++i) {
        out[i] = values.at(lowered.graph.terminal.at(spec.outputs[i]));
    }
    return out;
}

}  // namespace fgd
