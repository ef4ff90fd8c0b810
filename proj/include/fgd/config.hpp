#pragma once

#include <cstddef>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "fgd/dataio.hpp"
#include "fgd/errors.hpp"
#include "fgd/network.hpp"
#include "fgd/postprocess.hpp"

namespace fgd {

/**
 * @brief One run configuration: network size and class count, anchor boxes,
 * augmentation ops, and an optional custom node list. The text format is an
 * INI-style file with [net], [anchors], [augment] and [nodes] sections; every
 * field has a default, so the empty string parses to the stock setup.
 */
struct RunConfig {
    std::size_t input_size = 416;
    std::size_t classes = 4;
    double width_mult = 1.0;
    AnchorSet anchors = default_anchors();
    std::vector<AugmentOp> augment_ops = default_augment_ops();
    std::optional<NetworkSpec> custom_nodes;
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

inline std::vector<std::string> split_list(const std::string& s, char delim) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream stream(s);
    while (std::getline(stream, item, delim)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

inline std::size_t config_size(const std::string& value, const std::string& what) {
    try {
        std::size_t idx = 0;
        const long v = std::stol(value, &idx);
        if (idx != value.size() || v <= 0) throw std::invalid_argument(value);
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw ConfigError("config: " + what + " must be a positive integer, got '" +
                          value + "'");
    }
}

inline double config_double(const std::string& value, const std::string& what) {
    try {
        std::size_t idx = 0;
        const double v = std::stod(value, &idx);
        if (idx != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: " + what + " must be a number, got '" + value + "'");
    }
}

/** Parse "10x13, 16x30, 33x23" into (w, h) pairs. */
inline std::vector<std::pair<double, double>> parse_anchor_list(const std::string& value,
                                                                const std::string& key) {
    std::vector<std::pair<double, double>> out;
    for (const std::string& token : split_list(value, ',')) {
        const auto sep = token.find('x');
        if (sep == std::string::npos) {
            throw ConfigError("config: anchor '" + token + "' in " + key +
                              " is not WxH");
        }
        const double w = config_double(trim(token.substr(0, sep)), key + " anchor width");
        const double h = config_double(trim(token.substr(sep + 1)), key + " anchor height");
        if (!(w > 0.0) || !(h > 0.0)) {
            throw ConfigError("config: anchor '" + token + "' in " + key +
                              " must be positive");
        }
        out.emplace_back(w, h);
    }
    if (out.empty()) {
        throw ConfigError("config: " + key + " lists no anchors");
    }
    return out;
}

/** Parse one augmentation spec: "rotate90:2", "mirror", "blur:1.0", ... */
inline AugmentOp parse_augment_spec(const std::string& spec) {
    const std::vector<std::string> parts = split_list(spec, ':');
    if (parts.empty()) {
        throw ConfigError("config: empty augmentation spec");
    }
    const std::string& name = parts[0];
    const auto want_args = [&](std::size_t n) {
        if (parts.size() != n + 1) {
            throw ConfigError("config: augmentation '" + name + "' takes " +
                              std::to_string(n) + " argument(s), got '" + spec + "'");
        }
    };
    try {
        if (name == "rotate90") {
            want_args(1);
            return AugmentOp::rotate90(
                static_cast<int>(config_size(parts[1], "rotate90 turns")));
        }
        if (name == "mirror") {
            want_args(0);
            return AugmentOp::mirror();
        }
        if (name == "brightness") {
            want_args(1);
            return AugmentOp::brightness(config_double(parts[1], "brightness factor"));
        }
        if (name == "color_balance") {
            want_args(3);
            return AugmentOp::color_balance(config_double(parts[1], "red gain"),
                                            config_double(parts[2], "green gain"),
                                            config_double(parts[3], "blue gain"));
        }
        if (name == "blur") {
            want_args(1);
            return AugmentOp::blur(config_double(parts[1], "blur sigma"));
        }
    } catch (const ValueError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    throw ConfigError("config: unknown augmentation '" + name + "'");
}

inline std::string augment_spec_string(const AugmentOp& op) {
    std::ostringstream out;
    switch (op.kind) {
        case AugmentOp::Kind::Rotate90:
            out << "rotate90:" << op.quarter_turns;
            break;
        case AugmentOp::Kind::Mirror:
            out << "mirror";
            break;
        case AugmentOp::Kind::Brightness:
            out << "brightness:" << op.factor;
            break;
        case AugmentOp::Kind::ColorBalance:
            out << "color_balance:" << op.gain_r << ":" << op.gain_g << ":" << op.gain_b;
            break;
        case AugmentOp::Kind::Blur:
            out << "blur:" << op.sigma;
            break;
    }
    return out.str();
}

/** Parse "name(k=v, k=v)" into the name and its key/value arguments. */
struct NodeExpr {
    std::string kind;
    std::vector<std::pair<std::string, std::string>> args;

    std::optional<std::string> arg(const std::string& key) const {
        for (const auto& [k, v] : args) {
            if (k == key) return v;
        }
        return std::nullopt;
    }
};

inline NodeExpr parse_node_expr(const std::string& text, const std::string& node_id) {
    const auto open = text.find('(');
    const auto close = text.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close < open ||
        trim(text.substr(close + 1)) != "") {
        throw ConfigError("config: node '" + node_id + "' is not of the form kind(...), got '" +
                          text + "'");
    }
    NodeExpr expr;
    expr.kind = trim(text.substr(0, open));
    for (const std::string& item : split_list(text.substr(open + 1, close - open - 1), ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: node '" + node_id + "' argument '" + item +
                              "' is not key=value");
        }
        expr.args.emplace_back(trim(item.substr(0, eq)), trim(item.substr(eq + 1)));
    }
    return expr;
}

inline LayerSpec layer_from_expr(const NodeExpr& expr, const std::string& node_id,
                                 Shape& input_shape) {
    const auto used = [&](std::initializer_list<const char*> allowed) {
        for (const auto& [k, v] : expr.args) {
            bool ok = false;
            for (const char* a : allowed) {
                if (k == a) ok = true;
            }
            if (!ok) {
                throw ConfigError("config: node '" + node_id + "' has unknown argument '" +
                                  k + "'");
            }
        }
    };
    const std::string ctx = "node '" + node_id + "'";
    if (expr.kind == "input") {
        used({"shape"});
        const auto shape = expr.arg("shape");
        if (!shape) {
            throw ConfigError("config: " + ctx + " needs shape=HxWxC");
        }
        const std::vector<std::string> dims = split_list(*shape, 'x');
        if (dims.size() != 3) {
            throw ConfigError("config: " + ctx + " shape must be HxWxC, got '" + *shape +
                              "'");
        }
        input_shape.h = config_size(dims[0], ctx + " height");
        input_shape.w = config_size(dims[1], ctx + " width");
        input_shape.c = config_size(dims[2], ctx + " channels");
        return InputSpec{};
    }
    if (expr.kind == "conv") {
        used({"c", "k", "s", "act"});
        ConvBlockSpec conv;
        const auto c = expr.arg("c");
        if (!c) throw ConfigError("config: " + ctx + " needs c=<channels>");
        conv.out_c = config_size(*c, ctx + " channels");
        if (const auto k = expr.arg("k")) conv.k = config_size(*k, ctx + " kernel");
        if (const auto s = expr.arg("s")) conv.stride = config_size(*s, ctx + " stride");
        if (const auto act = expr.arg("act")) {
            try {
                conv.act = parse_activation(*act);
            } catch (const ValueError& e) {
                throw ConfigError(std::string("config: ") + ctx + ": " + e.what());
            }
        }
        return conv;
    }
    if (expr.kind == "csp") {
        used({"variant", "n", "c"});
        CspBlockSpec csp;
        const auto variant = expr.arg("variant");
        if (variant) {
            if (*variant == "csp") {
                csp.variant = CspVariant::Csp;
            } else if (*variant == "csp1") {
                csp.variant = CspVariant::Csp1;
            } else if (*variant == "csp2") {
                csp.variant = CspVariant::Csp2;
            } else {
                throw ConfigError("config: " + ctx + " has unknown variant '" + *variant +
                                  "'");
            }
        }
        const auto n = expr.arg("n");
        const auto c = expr.arg("c");
        if (!n || !c) throw ConfigError("config: " + ctx + " needs n=<units> and c=<channels>");
        csp.n = config_size(*n, ctx + " unit count");
        csp.out_c = config_size(*c, ctx + " channels");
        return csp;
    }
    if (expr.kind == "dense") {
        used({"layers", "growth"});
        DenseBlockSpec dense;
        const auto layers = expr.arg("layers");
        const auto growth = expr.arg("growth");
        if (!layers || !growth) {
            throw ConfigError("config: " + ctx + " needs layers=<n> and growth=<g>");
        }
        dense.num_layers = config_size(*layers, ctx + " layer count");
        dense.growth = config_size(*growth, ctx + " growth");
        return dense;
    }
    if (expr.kind == "spp") {
        used({"k"});
        SppSpec spp;
        if (const auto k = expr.arg("k")) {
            spp.kernels.clear();
            for (const std::string& item : split_list(*k, ':')) {
                spp.kernels.push_back(config_size(item, ctx + " kernel"));
            }
        }
        return spp;
    }
    if (expr.kind == "upsample") {
        used({});
        return Upsample2xSpec{};
    }
    if (expr.kind == "concat") {
        used({});
        return ConcatSpec{};
    }
    if (expr.kind == "head") {
        used({"anchors", "classes"});
        HeadSpec head;
        if (const auto anchors = expr.arg("anchors")) {
            head.num_anchors = config_size(*anchors, ctx + " anchor count");
        }
        const auto classes = expr.arg("classes");
        if (!classes) throw ConfigError("config: " + ctx + " needs classes=<n>");
        head.num_classes = config_size(*classes, ctx + " class count");
        return head;
    }
    throw ConfigError("config: " + ctx + " has unknown kind '" + expr.kind + "'");
}

inline std::string layer_expr_string(const LayerSpec& layer, const Shape& input_shape) {
    std::ostringstream out;
    if (std::holds_alternative<InputSpec>(layer)) {
        out << "input(shape=" << input_shape.h << "x" << input_shape.w << "x"
            << input_shape.c << ")";
    } else if (const auto* conv = std::get_if<ConvBlockSpec>(&layer)) {
        out << "conv(c=" << conv->out_c << ", k=" << conv->k << ", s=" << conv->stride
            << ", act=" << activation_name(conv->act) << ")";
    } else if (const auto* csp = std::get_if<CspBlockSpec>(&layer)) {
        const char* variant = csp->variant == CspVariant::Csp    ? "csp"
                              : csp->variant == CspVariant::Csp1 ? "csp1"
                                                                 : "csp2";
        out << "csp(variant=" << variant << ", n=" << csp->n << ", c=" << csp->out_c << ")";
    } else if (const auto* dense = std::get_if<DenseBlockSpec>(&layer)) {
        out << "dense(layers=" << dense->num_layers << ", growth=" << dense->growth << ")";
    } else if (const auto* spp = std::get_if<SppSpec>(&layer)) {
        out << "spp(k=";
        for (std::size_t i = 0; i < spp->kernels.size(); ++i) {
            out << (i ? ":" : "") << spp->kernels[i];
        }
        out << ")";
    } else if (std::holds_alternative<Upsample2xSpec>(layer)) {
        out << "upsample()";
    } else if (std::holds_alternative<ConcatSpec>(layer)) {
        out << "concat()";
    } else if (const auto* head = std::get_if<HeadSpec>(&layer)) {
        out << "head(anchors=" << head->num_anchors << ", classes=" << head->num_classes
            << ")";
    }
    return out.str();
}

}  // namespace detail

/** @brief Parse a run configuration. Unknown sections or keys are errors. */
inline RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::string section;
    NetworkSpec nodes;
    bool have_nodes = false;
    bool have_outputs = false;

    std::istringstream stream(text);
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(stream, raw)) {
        ++line_no;
        const std::string line = detail::trim(raw);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        const std::string at = " (line " + std::to_string(line_no) + ")";

        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("config: unterminated section header '" + line + "'" + at);
            }
            section = detail::trim(line.substr(1, line.size() - 2));
            if (section != "net" && section != "anchors" && section != "augment" &&
                section != "nodes") {
                throw ConfigError("config: unknown section '[" + section + "]'" + at);
            }
            continue;
        }

        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: expected key = value, got '" + line + "'" + at);
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty()) {
            throw ConfigError("config: empty key" + at);
        }

        if (section == "net") {
            if (key == "input_size") {
                cfg.input_size = detail::config_size(value, "input_size");
            } else if (key == "classes") {
                cfg.classes = detail::config_size(value, "classes");
            } else if (key == "width_mult") {
                cfg.width_mult = detail::config_double(value, "width_mult");
                if (!(cfg.width_mult > 0.0)) {
                    throw ConfigError("config: width_mult must be positive" + at);
                }
            } else {
                throw ConfigError("config: unknown [net] key '" + key + "'" + at);
            }
        } else if (section == "anchors") {
            std::size_t scale_idx;
            if (key == "scale8") {
                scale_idx = 0;
            } else if (key == "scale16") {
                scale_idx = 1;
            } else if (key == "scale32") {
                scale_idx = 2;
            } else {
                throw ConfigError("config: unknown [anchors] key '" + key + "'" + at);
            }
            cfg.anchors.scales[scale_idx] = detail::parse_anchor_list(value, key);
        } else if (section == "augment") {
            if (key != "ops") {
                throw ConfigError("config: unknown [augment] key '" + key + "'" + at);
            }
            cfg.augment_ops.clear();
            for (const std::string& spec : detail::split_list(value, ',')) {
                cfg.augment_ops.push_back(detail::parse_augment_spec(spec));
            }
        } else if (section == "nodes") {
            have_nodes = true;
            if (key == "outputs") {
                nodes.outputs = detail::split_list(value, ',');
                have_outputs = true;
                continue;
            }
            // "id = kind(args) <- in1, in2"
            std::string expr_text = value;
            std::vector<std::string> inputs;
            const auto arrow = value.find("<-");
            if (arrow != std::string::npos) {
                expr_text = detail::trim(value.substr(0, arrow));
                inputs = detail::split_list(value.substr(arrow + 2), ',');
            }
            Node node;
            node.id = key;
            node.inputs = std::move(inputs);
            node.layer =
                detail::layer_from_expr(detail::parse_node_expr(expr_text, key), key,
                                        nodes.input);
            nodes.nodes.push_back(std::move(node));
        } else {
            throw ConfigError("config: key '" + key + "' outside any section" + at);
        }
    }

    if (have_nodes) {
        if (!have_outputs) {
            throw ConfigError("config: [nodes] section is missing 'outputs = a, b, c'");
        }
        cfg.custom_nodes = std::move(nodes);
    }
    try {
        cfg.anchors.validate();
    } catch (const ValueError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

/** @brief Render a configuration in the same format parse_config reads. */
inline std::string write_config(const RunConfig& cfg) {
    std::ostringstream out;
    out << "[net]\n";
    out << "input_size = " << cfg.input_size << "\n";
    out << "classes = " << cfg.classes << "\n";
    out << "width_mult = " << cfg.width_mult << "\n";
    out << "\n[anchors]\n";
    const char* scale_keys[3] = {"scale8", "scale16", "scale32"};
    for (std::size_t s = 0; s < 3; ++s) {
        out << scale_keys[s] << " = ";
        for (std::size_t i = 0; i < cfg.anchors.scales[s].size(); ++i) {
            if (i) out << ", ";
            out << cfg.anchors.scales[s][i].first << "x" << cfg.anchors.scales[s][i].second;
        }
        out << "\n";
    }
    out << "\n[augment]\n";
    out << "ops = ";
    for (std::size_t i = 0; i < cfg.augment_ops.size(); ++i) {
        if (i) out << ", ";
        out << detail::augment_spec_string(cfg.augment_ops[i]);
    }
    out << "\n";
    if (cfg.custom_nodes) {
        out << "\n[nodes]\n";
        for (const Node& node : cfg.custom_nodes->nodes) {
            out << node.id << " = "
                << detail::layer_expr_string(node.layer, cfg.custom_nodes->input);
            if (!node.inputs.empty()) {
                out << " <- ";
                for (std::size_t i = 0; i < node.inputs.size(); ++i) {
                    if (i) out << ", ";
                    out << node.inputs[i];
                }
            }
            out << "\n";
        }
        out << "outputs = ";
        for (std::size_t i = 0; i < cfg.custom_nodes->outputs.size(); ++i) {
            if (i) out << ", ";
            out << cfg.custom_nodes->outputs[i];
        }
        out << "\n";
    }
    return out.str();
}

/** @brief Load a configuration file. */
inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ConfigError("config: cannot open '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

/** @brief The network a configuration describes: custom nodes if present,
 * otherwise the stock improved detector for its size and class count. */
inline NetworkSpec config_network(const RunConfig& cfg) {
    if (cfg.custom_nodes) {
        return *cfg.custom_nodes;
    }
    return build_improved_yolov4(cfg.classes, cfg.input_size, cfg.width_mult);
}

}  // namespace fgd
