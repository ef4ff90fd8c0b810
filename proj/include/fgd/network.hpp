#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "fgd/activations.hpp"
#include "fgd/errors.hpp"

namespace fgd {

struct Shape {
    std::size_t h = 0;
    std::size_t w = 0;
    std::size_t c = 0;

    bool operator==(const Shape& o) const { return h == o.h && w == o.w && c == o.c; }

    std::string str() const {
        return std::to_string(h) + "x" + std::to_string(w) + "x" + std::to_string(c);
    }
};

/** Conv + batchnorm + activation, the basic building block. Same padding (k/2). */
struct ConvBlockSpec {
    std::size_t out_c = 0;
    std::size_t k = 3;
    std::size_t stride = 1;
    ActivationKind act = ActivationKind::HardSwish;
};

enum class CspVariant {
    Csp,   // classic cross-stage block: residual trunk, 1x1 trunk tail
    Csp1,  // residual trunk, 3x3 trunk tail
    Csp2,  // conv-pair trunk without identity additions, 3x3 trunk tail
};

/**
 * @brief Cross-stage partial block. The input forks into a trunk
 * (1x1 entry, n units, tail conv) and a 1x1 shortcut edge, each at half the
 * configured output width; the halves concatenate and a 1x1 conv fuses them.
 *
 * Csp and Csp1 trunk units are residual pairs (1x1 then 3x3, identity added);
 * Csp2 units drop the identity addition.
 */
struct CspBlockSpec {
    CspVariant variant = CspVariant::Csp;
    std::size_t n = 1;
    std::size_t out_c = 0;
};

/**
 * @brief Densely connected block: each of num_layers 3x3 convs produces
 * `growth` channels from the concatenation of the block input and every
 * earlier layer output. Output width is input + num_layers * growth.
 */
struct DenseBlockSpec {
    std::size_t num_layers = 0;
    std::size_t growth = 0;
};

/**
 * @brief Spatial pyramid pooling: stride-1 same-padded max pools at each
 * kernel size, concatenated after the identity path. Output width is
 * (kernels + 1) times the input width.
 */
struct SppSpec {
    std::vector<std::size_t> kernels{5, 9, 13};
};

struct Upsample2xSpec {};

struct ConcatSpec {};

/** Detection head: a linear 1x1 conv to num_anchors * (5 + num_classes) channels. */
struct HeadSpec {
    std::size_t num_anchors = 3;
    std::size_t num_classes = 0;
};

struct InputSpec {};

using LayerSpec = std::variant<InputSpec, ConvBlockSpec, CspBlockSpec, DenseBlockSpec,
                               SppSpec, Upsample2xSpec, ConcatSpec, HeadSpec>;

/** One declared graph node: a layer plus the ids it consumes. */
struct Node {
    std::string id;
    LayerSpec layer;
    std::vector<std::string> inputs;
};

/**
 * @brief A whole detection network: nodes in topological order (the input
 * node first) plus exactly three output ids, finest scale first.
 */
struct NetworkSpec {
    Shape input;
    std::vector<Node> nodes;
    std::vector<std::string> outputs;
};

// ---------------------------------------------------------------------------
// Lowered form: composite blocks expand to primitive ops for execution,
// parameter counting, and weight addressing.
// ---------------------------------------------------------------------------

enum class PrimKind { Input, Conv, MaxPool, Upsample, Concat, Add };

struct PrimNode {
    std::string id;
    std::string owner;  // declared node this primitive belongs to
    PrimKind kind = PrimKind::Input;
    std::vector<std::string> inputs;
    // Conv / MaxPool geometry. For Conv, out_c / act / has_bn also apply.
    std::size_t k = 0;
    std::size_t stride = 1;
    std::size_t pad = 0;
    std::size_t out_c = 0;
    ActivationKind act = ActivationKind::Linear;
    bool has_bn = false;
};

struct LoweredGraph {
    std::vector<PrimNode> prims;
    std::map<std::string, std::string> terminal;  // declared id -> prim id
};

namespace detail {

inline void validate_spec(const NetworkSpec& spec) {
    if (spec.nodes.empty()) {
        throw ValueError("network: empty node list");
    }
    if (spec.input.h == 0 || spec.input.w == 0 || spec.input.c == 0) {
        throw ShapeError("network: input shape has a zero axis (" + spec.input.str() + ")");
    }
    if (!std::holds_alternative<InputSpec>(spec.nodes.front().layer)) {
        throw ValueError("network: first node must be the input node");
    }
    std::map<std::string, std::size_t> seen;
    for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
        const Node& node = spec.nodes[i];
        if (node.id.empty()) {
            throw ValueError("network: node " + std::to_string(i) + " has an empty id");
        }
        if (seen.count(node.id)) {
            throw ValueError("network: duplicate node id '" + node.id + "'");
        }
        if (std::holds_alternative<InputSpec>(node.layer)) {
            if (i != 0) {
                throw ValueError("network: extra input node '" + node.id + "'");
            }
            if (!node.inputs.empty()) {
                throw ValueError("network: input node cannot consume other nodes");
            }
        } else {
            const bool is_concat = std::holds_alternative<ConcatSpec>(node.layer);
            if (is_concat ? node.inputs.size() < 2 : node.inputs.size() != 1) {
                throw ValueError("network: node '" + node.id + "' has " +
                                 std::to_string(node.inputs.size()) + " inputs, expected " +
                                 (is_concat ? "at least 2" : "exactly 1"));
            }
            for (const std::string& in : node.inputs) {
                if (!seen.count(in)) {
                    throw ValueError("network: node '" + node.id +
                                     "' consumes '" + in +
                                     "' which is not declared earlier");
                }
            }
        }
        if (const auto* conv = std::get_if<ConvBlockSpec>(&node.layer)) {
            if (conv->out_c == 0 || conv->k == 0 || conv->k % 2 == 0 || conv->stride == 0) {
                throw ValueError("network: conv node '" + node.id +
                                 "' needs odd kernel, positive stride and channels");
            }
        } else if (const auto* csp = std::get_if<CspBlockSpec>(&node.layer)) {
            if (csp->n == 0 || csp->out_c == 0) {
                throw ValueError("network: csp node '" + node.id +
                                 "' needs positive unit count and channels");
            }
        } else if (const auto* dense = std::get_if<DenseBlockSpec>(&node.layer)) {
            if (dense->num_layers == 0 || dense->growth == 0) {
                throw ValueError("network: dense node '" + node.id +
                                 "' needs positive layer count and growth");
            }
        } else if (const auto* spp = std::get_if<SppSpec>(&node.layer)) {
            if (spp->kernels.empty()) {
                throw ValueError("network: spp node '" + node.id + "' has no kernels");
            }
            for (std::size_t k : spp->kernels) {
                if (k == 0 || k % 2 == 0) {
                    throw ValueError("network: spp node '" + node.id +
                                     "' kernels must be odd, got " + std::to_string(k));
                }
            }
        } else if (const auto* head = std::get_if<HeadSpec>(&node.layer)) {
            if (head->num_anchors == 0 || head->num_classes == 0) {
                throw ValueError("network: head node '" + node.id +
                                 "' needs positive anchor and class counts");
            }
        }
        seen.emplace(node.id, i);
    }
    if (spec.outputs.size() != 3) {
        throw ValueError("network: expected exactly 3 output ids, got " +
                         std::to_string(spec.outputs.size()));
    }
    for (const std::string& out : spec.outputs) {
        if (!seen.count(out)) {
            throw ValueError("network: output id '" + out + "' is not a node");
        }
    }
}

/** Emits the primitives of one declared node during lowering. */
class Lowerer {
public:
    explicit Lowerer(LoweredGraph& graph) : graph_(graph) {}

    std::string input_node(const std::string& id) {
        PrimNode p;
        p.id = id;
        p.owner = id;
        p.kind = PrimKind::Input;
        graph_.prims.push_back(std::move(p));
        return id;
    }

    std::string conv(const std::string& id, const std::string& owner,
                     const std::string& in, std::size_t out_c, std::size_t k,
                     std::size_t stride, ActivationKind act, bool has_bn) {
        PrimNode p;
        p.id = id;
        p.owner = owner;
        p.kind = PrimKind::Conv;
        p.inputs = {in};
        p.k = k;
        p.stride = stride;
        p.pad = k / 2;
        p.out_c = out_c;
        p.act = act;
        p.has_bn = has_bn;
        graph_.prims.push_back(std::move(p));
        return id;
    }

    std::string maxpool(const std::string& id, const std::string& owner,
                        const std::string& in, std::size_t k) {
        PrimNode p;
        p.id = id;
        p.owner = owner;
        p.kind = PrimKind::MaxPool;
        p.inputs = {in};
        p.k = k;
        p.stride = 1;
        p.pad = k / 2;
        graph_.prims.push_back(std::move(p));
        return id;
    }

    std::string simple(const std::string& id, const std::string& owner, PrimKind kind,
                       std::vector<std::string> inputs) {
        PrimNode p;
        p.id = id;
        p.owner = owner;
        p.kind = kind;
        p.inputs = std::move(inputs);
        graph_.prims.push_back(std::move(p));
        return id;
    }

private:
    LoweredGraph& graph_;
};

}  // namespace detail

/**
 * @brief Expand composite blocks into primitive conv / pool / concat / add ops.
 *
 * Primitive ids are hierarchical ("c4.trunk.u0.a"); graph.terminal maps each
 * declared id to the primitive that carries its output. Lowering is
 * deterministic, so primitive ids are stable weight-file keys.
 */
inline LoweredGraph lower(const NetworkSpec& spec) {
    detail::validate_spec(spec);
    LoweredGraph graph;
    detail::Lowerer emit(graph);

    for (const Node& node : spec.nodes) {
        const std::string& id = node.id;
        if (std::holds_alternative<InputSpec>(node.layer)) {
            graph.terminal[id] = emit.input_node(id);
            continue;
        }
        std::vector<std::string> in;
        in.reserve(node.inputs.size());
        for (const std::string& d : node.inputs) in.push_back(graph.terminal.at(d));

        if (const auto* conv = std::get_if<ConvBlockSpec>(&node.layer)) {
            graph.terminal[id] =
                emit.conv(id, id, in[0], conv->out_c, conv->k, conv->stride, conv->act, true);
        } else if (const auto* head = std::get_if<HeadSpec>(&node.layer)) {
            const std::size_t depth = head->num_anchors * (5 + head->num_classes);
            graph.terminal[id] =
                emit.conv(id, id, in[0], depth, 1, 1, ActivationKind::Linear, false);
        } else if (std::holds_alternative<Upsample2xSpec>(node.layer)) {
            graph.terminal[id] = emit.simple(id, id, PrimKind::Upsample, {in[0]});
        } else if (std::holds_alternative<ConcatSpec>(node.layer)) {
            std::string acc = in[0];
            for (std::size_t i = 1; i < in.size(); ++i) {
                const std::string cid =
                    (i + 1 == in.size()) ? id : id + ".cat" + std::to_string(i);
                acc = emit.simple(cid, id, PrimKind::Concat, {acc, in[i]});
            }
            graph.terminal[id] = acc;
        } else if (const auto* spp = std::get_if<SppSpec>(&node.layer)) {
            std::vector<std::string> parts{in[0]};
            for (std::size_t k : spp->kernels) {
                parts.push_back(emit.maxpool(id + ".pool" + std::to_string(k), id, in[0], k));
            }
            std::string acc = parts[0];
            for (std::size_t i = 1; i < parts.size(); ++i) {
                const std::string cid =
                    (i + 1 == parts.size()) ? id : id + ".cat" + std::to_string(i);
                acc = emit.simple(cid, id, PrimKind::Concat, {acc, parts[i]});
            }
            graph.terminal[id] = acc;
        } else if (const auto* dense = std::get_if<DenseBlockSpec>(&node.layer)) {
            std::string running = in[0];
            for (std::size_t l = 0; l < dense->num_layers; ++l) {
                const std::string conv_id = id + ".l" + std::to_string(l);
                emit.conv(conv_id, id, running, dense->growth, 3, 1,
                          ActivationKind::HardSwish, true);
                const std::string cat_id =
                    (l + 1 == dense->num_layers) ? id : id + ".cat" + std::to_string(l);
                running = emit.simple(cat_id, id, PrimKind::Concat, {running, conv_id});
            }
            graph.terminal[id] = running;
        } else if (const auto* csp = std::get_if<CspBlockSpec>(&node.layer)) {
            const std::size_t half = std::max<std::size_t>(1, csp->out_c / 2);
            const ActivationKind act = ActivationKind::HardSwish;
            std::string cur =
                emit.conv(id + ".trunk_in", id, in[0], half, 1, 1, act, true);
            for (std::size_t u = 0; u < csp->n; ++u) {
                const std::string base = id + ".u" + std::to_string(u);
                const std::string a = emit.conv(base + ".a", id, cur, half, 1, 1, act, true);
                const std::string b = emit.conv(base + ".b", id, a, half, 3, 1, act, true);
                if (csp->variant == CspVariant::Csp2) {
                    cur = b;
                } else {
                    cur = emit.simple(base + ".add", id, PrimKind::Add, {cur, b});
                }
            }
            const std::size_t tail_k = (csp->variant == CspVariant::Csp) ? 1 : 3;
            cur = emit.conv(id + ".trunk_out", id, cur, half, tail_k, 1, act, true);
            const std::string edge =
                emit.conv(id + ".edge", id, in[0], half, 1, 1, act, true);
            const std::string cat =
                emit.simple(id + ".cat", id, PrimKind::Concat, {cur, edge});
            graph.terminal[id] =
                emit.conv(id, id, cat, csp->out_c, 1, 1, act, true);
        }
    }
    return graph;
}

struct NodeReport {
    std::string id;
    Shape shape;
    std::uint64_t params = 0;
};

struct ShapeReport {
    Shape input;
    std::vector<NodeReport> nodes;  // declared order
    std::uint64_t total_params = 0;

    const NodeReport* find(const std::string& id) const {
        for (const auto& n : nodes) {
            if (n.id == id) return &n;
        }
        return nullptr;
    }
};

namespace detail {

inline std::uint64_t conv_params(const PrimNode& p, std::size_t in_c) {
    std::uint64_t n = static_cast<std::uint64_t>(p.k) * p.k * in_c * p.out_c;
    if (p.has_bn) n += 2ull * p.out_c;
    return n;
}

inline Shape prim_out_shape(const PrimNode& p, const std::vector<Shape>& ins,
                            const Shape& net_input) {
    switch (p.kind) {
        case PrimKind::Input:
            return net_input;
        case PrimKind::Conv:
        case PrimKind::MaxPool: {
            const Shape& in = ins[0];
            if (in.h + 2 * p.pad < p.k || in.w + 2 * p.pad < p.k) {
                throw ShapeError("node '" + p.id + "': kernel " + std::to_string(p.k) +
                                 " exceeds padded input " + in.str());
            }
            Shape out;
            out.h = (in.h + 2 * p.pad - p.k) / p.stride + 1;
            out.w = (in.w + 2 * p.pad - p.k) / p.stride + 1;
            out.c = (p.kind == PrimKind::Conv) ? p.out_c : in.c;
            return out;
        }
        case PrimKind::Upsample:
            return Shape{ins[0].h * 2, ins[0].w * 2, ins[0].c};
        case PrimKind::Concat: {
            if (ins[0].h != ins[1].h || ins[0].w != ins[1].w) {
                throw ShapeError("node '" + p.id + "': concat inputs disagree spatially (" +
                                 ins[0].str() + " vs " + ins[1].str() + ")");
            }
            return Shape{ins[0].h, ins[0].w, ins[0].c + ins[1].c};
        }
        case PrimKind::Add: {
            if (!(ins[0] == ins[1])) {
                throw ShapeError("node '" + p.id + "': add inputs disagree (" +
                                 ins[0].str() + " vs " + ins[1].str() + ")");
            }
            return ins[0];
        }
    }
    throw ValueError("node '" + p.id + "': unknown primitive kind");
}

}  // namespace detail

/** Lowered graph together with the inferred shape of every primitive. */
struct LoweredShapes {
    LoweredGraph graph;
    std::map<std::string, Shape> shapes;  // keyed by primitive id
};

/** @brief Lower the graph and run shape inference over the primitives. */
inline LoweredShapes lower_with_shapes(const NetworkSpec& spec) {
    LoweredShapes out;
    out.graph = lower(spec);
    for (const PrimNode& p : out.graph.prims) {
        std::vector<Shape> ins;
        ins.reserve(p.inputs.size());
        for (const std::string& in : p.inputs) ins.push_back(out.shapes.at(in));
        out.shapes[p.id] = detail::prim_out_shape(p, ins, spec.input);
    }
    return out;
}

/**
 * @brief Validate the graph and compute every node's output shape and
 * trainable parameter count. Composite blocks report the sum of their
 * constituent convs (each conv contributes K*K*Cin*Cout, plus 2*Cout
 * for its batchnorm scale and shift when present).
 */
inline ShapeReport infer_shapes(const NetworkSpec& spec) {
    const LoweredShapes lowered = lower_with_shapes(spec);
    const LoweredGraph& graph = lowered.graph;
    const std::map<std::string, Shape>& shapes = lowered.shapes;

    std::map<std::string, std::uint64_t> owner_params;
    for (const PrimNode& p : graph.prims) {
        if (p.kind == PrimKind::Conv) {
            owner_params[p.owner] += detail::conv_params(p, shapes.at(p.inputs[0]).c);
        }
    }

    ShapeReport report;
    report.input = spec.input;
    for (const Node& node : spec.nodes) {
        NodeReport nr;
        nr.id = node.id;
        nr.shape = shapes.at(graph.terminal.at(node.id));
        auto it = owner_params.find(node.id);
        nr.params = (it == owner_params.end()) ? 0 : it->second;
        report.total_params += nr.params;
        report.nodes.push_back(std::move(nr));
    }
    return report;
}

/** @brief Total trainable parameter count of the network. */
inline std::uint64_t count_params(const NetworkSpec& spec) {
    return infer_shapes(spec).total_params;
}

namespace detail {

inline std::size_t scale_channels(std::size_t base, double width_mult) {
    const long long scaled = std::llround(static_cast<double>(base) * width_mult);
    return static_cast<std::size_t>(std::max(1ll, scaled));
}

inline void require_input_size(std::size_t input_size) {
    if (input_size < 64 || input_size % 32 != 0) {
        throw ValueError("network: input size must be a multiple of 32 and at least 64, got " +
                         std::to_string(input_size));
    }
}

/** Small helper for assembling builder node lists. */
class GraphAssembler {
public:
    explicit GraphAssembler(NetworkSpec& spec) : spec_(spec) {}

    std::string conv(const std::string& id, const std::string& in, std::size_t out_c,
                     std::size_t k, std::size_t stride, ActivationKind act) {
        spec_.nodes.push_back({id, ConvBlockSpec{out_c, k, stride, act}, {in}});
        return id;
    }

    std::string csp(const std::string& id, const std::string& in, CspVariant variant,
                    std::size_t n, std::size_t out_c) {
        spec_.nodes.push_back({id, CspBlockSpec{variant, n, out_c}, {in}});
        return id;
    }

    std::string dense(const std::string& id, const std::string& in, std::size_t layers,
                      std::size_t growth) {
        spec_.nodes.push_back({id, DenseBlockSpec{layers, growth}, {in}});
        return id;
    }

    std::string spp(const std::string& id, const std::string& in) {
        spec_.nodes.push_back({id, SppSpec{}, {in}});
        return id;
    }

    std::string upsample(const std::string& id, const std::string& in) {
        spec_.nodes.push_back({id, Upsample2xSpec{}, {in}});
        return id;
    }

    std::string concat(const std::string& id, const std::string& a, const std::string& b) {
        spec_.nodes.push_back({id, ConcatSpec{}, {a, b}});
        return id;
    }

    std::string head(const std::string& id, const std::string& in, std::size_t anchors,
                     std::size_t classes) {
        spec_.nodes.push_back({id, HeadSpec{anchors, classes}, {in}});
        return id;
    }

private:
    NetworkSpec& spec_;
};

}  // namespace detail

/**
 * @brief Build the improved detector: a CSPDarknet53-style backbone whose two
 * deepest stages swap their residual stacks for dense blocks feeding Csp1
 * blocks, SPP over the deepest features, and a path-aggregation neck whose
 * fusion stacks are Csp2 blocks. Three linear heads emit
 * num_anchors * (5 + num_classes) channels at strides 8, 16 and 32.
 *
 * width_mult scales every channel count (minimum 1) for desk-scale runs;
 * head depths are architectural and never scale.
 */
inline NetworkSpec build_improved_yolov4(std::size_t num_classes, std::size_t input_size,
                                         double width_mult = 1.0) {
    if (num_classes == 0) {
        throw ValueError("network: num_classes must be positive");
    }
    detail::require_input_size(input_size);
    if (!(width_mult > 0.0)) {
        throw ValueError("network: width_mult must be positive");
    }

    NetworkSpec spec;
    spec.input = Shape{input_size, input_size, 3};
    spec.nodes.push_back({"input", InputSpec{}, {}});
    detail::GraphAssembler g(spec);
    const auto ch = [width_mult](std::size_t base) {
        return detail::scale_channels(base, width_mult);
    };
    const ActivationKind act = ActivationKind::HardSwish;
    const std::size_t anchors = 3;

    // Backbone. Stages at /16 and /32 use dense blocks in place of the
    // original residual stacks, then a Csp1 block.
    std::string x = g.conv("stem", "input", ch(32), 3, 1, act);
    x = g.conv("d1", x, ch(64), 3, 2, act);
    x = g.csp("c1", x, CspVariant::Csp, 1, ch(64));
    x = g.conv("d2", x, ch(128), 3, 2, act);
    x = g.csp("c2", x, CspVariant::Csp, 2, ch(128));
    x = g.conv("d3", x, ch(256), 3, 2, act);
    const std::string p3 = g.csp("c3", x, CspVariant::Csp, 8, ch(256));
    x = g.conv("d4", p3, ch(256), 3, 2, act);
    x = g.dense("dense4", x, 4, ch(64));
    const std::string p4 = g.csp("c4", x, CspVariant::Csp1, 4, ch(512));
    x = g.conv("d5", p4, ch(512), 3, 2, act);
    x = g.dense("dense5", x, 4, ch(128));
    x = g.csp("c5", x, CspVariant::Csp1, 2, ch(1024));

    // SPP sandwiched between two conv triples.
    x = g.conv("pre5a", x, ch(512), 1, 1, act);
    x = g.conv("pre5b", x, ch(1024), 3, 1, act);
    x = g.conv("pre5c", x, ch(512), 1, 1, act);
    x = g.spp("spp", x);
    x = g.conv("post5a", x, ch(512), 1, 1, act);
    x = g.conv("post5b", x, ch(1024), 3, 1, act);
    const std::string n5 = g.conv("post5c", x, ch(512), 1, 1, act);

    // Top-down path.
    const std::string lat4 = g.conv("lat4", p4, ch(256), 1, 1, act);
    const std::string up5 = g.conv("up5", n5, ch(256), 1, 1, act);
    const std::string up5x = g.upsample("up5x", up5);
    const std::string cat4 = g.concat("cat4", lat4, up5x);
    const std::string m4 = g.csp("f4", cat4, CspVariant::Csp2, 2, ch(256));

    const std::string lat3 = g.conv("lat3", p3, ch(128), 1, 1, act);
    const std::string up4 = g.conv("up4", m4, ch(128), 1, 1, act);
    const std::string up4x = g.upsample("up4x", up4);
    const std::string cat3 = g.concat("cat3", lat3, up4x);
    const std::string m3 = g.csp("f3", cat3, CspVariant::Csp2, 2, ch(128));

    // Bottom-up path plus heads, finest scale first.
    const std::string h3pre = g.conv("h3pre", m3, ch(256), 3, 1, act);
    const std::string head8 = g.head("head_s8", h3pre, anchors, num_classes);

    const std::string dn3 = g.conv("dn3", m3, ch(256), 3, 2, act);
    const std::string cat4d = g.concat("cat4d", dn3, m4);
    const std::string m4d = g.csp("f4d", cat4d, CspVariant::Csp2, 2, ch(256));
    const std::string h4pre = g.conv("h4pre", m4d, ch(512), 3, 1, act);
    const std::string head16 = g.head("head_s16", h4pre, anchors, num_classes);

    const std::string dn4 = g.conv("dn4", m4d, ch(512), 3, 2, act);
    const std::string cat5d = g.concat("cat5d", dn4, n5);
    const std::string m5d = g.csp("f5d", cat5d, CspVariant::Csp2, 2, ch(512));
    const std::string h5pre = g.conv("h5pre", m5d, ch(1024), 3, 1, act);
    const std::string head32 = g.head("head_s32", h5pre, anchors, num_classes);

    spec.outputs = {head8, head16, head32};
    return spec;
}

/**
 * @brief Build the reference detector the improvement is measured against:
 * the classic CSPDarknet53 backbone (residual stacks of 1, 2, 8, 8, 4 units),
 * SPP, and a path-aggregation neck using five-conv fusion stacks. Same head
 * arrangement as the improved build.
 */
inline NetworkSpec build_reference_yolov4(std::size_t num_classes, std::size_t input_size,
                                          double width_mult = 1.0) {
    if (num_classes == 0) {
        throw ValueError("network: num_classes must be positive");
    }
    detail::require_input_size(input_size);
    if (!(width_mult > 0.0)) {
        throw ValueError("network: width_mult must be positive");
    }

    NetworkSpec spec;
    spec.input = Shape{input_size, input_size, 3};
    spec.nodes.push_back({"input", InputSpec{}, {}});
    detail::GraphAssembler g(spec);
    const auto ch = [width_mult](std::size_t base) {
        return detail::scale_channels(base, width_mult);
    };
    const ActivationKind backbone_act = ActivationKind::Mish;
    const ActivationKind neck_act = ActivationKind::LeakyRelu;
    const std::size_t anchors = 3;

    std::string x = g.conv("stem", "input", ch(32), 3, 1, backbone_act);
    x = g.conv("d1", x, ch(64), 3, 2, backbone_act);
    x = g.csp("c1", x, CspVariant::Csp, 1, ch(64));
    x = g.conv("d2", x, ch(128), 3, 2, backbone_act);
    x = g.csp("c2", x, CspVariant::Csp, 2, ch(128));
    x = g.conv("d3", x, ch(256), 3, 2, backbone_act);
    const std::string p3 = g.csp("c3", x, CspVariant::Csp, 8, ch(256));
    x = g.conv("d4", p3, ch(512), 3, 2, backbone_act);
    const std::string p4 = g.csp("c4", x, CspVariant::Csp, 8, ch(512));
    x = g.conv("d5", p4, ch(1024), 3, 2, backbone_act);
    x = g.csp("c5", x, CspVariant::Csp, 4, ch(1024));

    x = g.conv("pre5a", x, ch(512), 1, 1, neck_act);
    x = g.conv("pre5b", x, ch(1024), 3, 1, neck_act);
    x = g.conv("pre5c", x, ch(512), 1, 1, neck_act);
    x = g.spp("spp", x);
    x = g.conv("post5a", x, ch(512), 1, 1, neck_act);
    x = g.conv("post5b", x, ch(1024), 3, 1, neck_act);
    const std::string n5 = g.conv("post5c", x, ch(512), 1, 1, neck_act);

    const auto conv5 = [&](const std::string& base, const std::string& in,
                           std::size_t narrow, std::size_t wide) {
        std::string y = g.conv(base + "a", in, narrow, 1, 1, neck_act);
        y = g.conv(base + "b", y, wide, 3, 1, neck_act);
        y = g.conv(base + "c", y, narrow, 1, 1, neck_act);
        y = g.conv(base + "d", y, wide, 3, 1, neck_act);
        return g.conv(base + "e", y, narrow, 1, 1, neck_act);
    };

    const std::string lat4 = g.conv("lat4", p4, ch(256), 1, 1, neck_act);
    const std::string up5 = g.conv("up5", n5, ch(256), 1, 1, neck_act);
    const std::string up5x = g.upsample("up5x", up5);
    const std::string cat4 = g.concat("cat4", lat4, up5x);
    const std::string m4 = conv5("f4", cat4, ch(256), ch(512));

    const std::string lat3 = g.conv("lat3", p3, ch(128), 1, 1, neck_act);
    const std::string up4 = g.conv("up4", m4, ch(128), 1, 1, neck_act);
    const std::string up4x = g.upsample("up4x", up4);
    const std::string cat3 = g.concat("cat3", lat3, up4x);
    const std::string m3 = conv5("f3", cat3, ch(128), ch(256));

    const std::string h3pre = g.conv("h3pre", m3, ch(256), 3, 1, neck_act);
    const std::string head8 = g.head("head_s8", h3pre, anchors, num_classes);

    const std::string dn3 = g.conv("dn3", m3, ch(256), 3, 2, neck_act);
    const std::string cat4d = g.concat("cat4d", dn3, m4);
    const std::string m4d = conv5("f4d", cat4d, ch(256), ch(512));
    const std::string h4pre = g.conv("h4pre", m4d, ch(512), 3, 1, neck_act);
    const std::string head16 = g.head("head_s16", h4pre, anchors, num_classes);

    const std::string dn4 = g.conv("dn4", m4d, ch(512), 3, 2, neck_act);
    const std::string cat5d = g.concat("cat5d", dn4, n5);
    const std::string m5d = conv5("f5d", cat5d, ch(512), ch(1024));
    const std::string h5pre = g.conv("h5pre", m5d, ch(1024), 3, 1, neck_act);
    const std::string head32 = g.head("head_s32", h5pre, anchors, num_classes);

    spec.outputs = {head8, head16, head32};
    return spec;
}

}  // namespace fgd
