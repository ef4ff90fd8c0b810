#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fgd/activations.hpp"
#include "fgd/boxes.hpp"
#include "fgd/config.hpp"
#include "fgd/dataio.hpp"
#include "fgd/errors.hpp"
#include "fgd/forward.hpp"
#include "fgd/metrics.hpp"
#include "fgd/network.hpp"
#include "fgd/postprocess.hpp"
#include "fgd/report.hpp"
#include "fgd/weights.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitConsistency = 3;
constexpr int kExitCheckFailed = 4;

std::string slurp(const std::string& path, fgd::DataError::Kind kind,
                  const std::string& what) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw fgd::DataError(kind, what + ": cannot open '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << content)) {
        throw fgd::DataError(fgd::DataError::Kind::WriteFailed,
                             "cannot write '" + path + "'");
    }
}

/** Shared flag state; every subcommand reads from here after parsing. */
struct GlobalFlags {
    std::string config_path;
    std::uint64_t seed = 1;
    std::string threads = "auto";
    std::string format;  // empty = not given; "json" or "text"

    fgd::RunConfig run_config() const {
        if (config_path.empty()) return fgd::RunConfig{};
        return fgd::load_config(config_path);
    }

    bool json(bool default_json = false) const {
        if (format.empty()) return default_json;
        return format == "json";
    }
};

void check_threads_flag(const std::string& threads) {
    if (threads == "auto") return;
    try {
        std::size_t idx = 0;
        const long n = std::stol(threads, &idx);
        if (idx != threads.size() || n <= 0) throw std::invalid_argument(threads);
    } catch (const std::exception&) {
        throw fgd::ValueError("--threads must be a positive integer or 'auto', got '" +
                              threads + "'");
    }
}

fgd::BoundingBox parse_corner_box(const std::string& text, const std::string& flag) {
    std::vector<double> vals;
    std::string item;
    std::istringstream stream(text);
    while (std::getline(stream, item, ',')) {
        try {
            std::size_t idx = 0;
            vals.push_back(std::stod(item, &idx));
            if (idx != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw fgd::ValueError(flag + ": '" + item + "' is not a number");
        }
    }
    if (vals.size() != 4) {
        throw fgd::ValueError(flag + " must be x1,y1,x2,y2, got '" + text + "'");
    }
    return fgd::BoundingBox::from_corners(vals[0], vals[1], vals[2], vals[3]);
}

bool path_is_json(const std::string& path) {
    return fs::path(path).extension() == ".json";
}

std::vector<fgd::Detection> read_detections(const std::string& path) {
    const std::string text =
        slurp(path, fgd::DataError::Kind::BadDetections, "detections");
    if (path_is_json(path)) return fgd::detections_from_json(text);
    return fgd::detections_from_text(text);
}

void emit_detections(const std::vector<fgd::Detection>& dets, const std::string& out_path,
                     bool as_json) {
    const std::string rendered =
        as_json ? fgd::detections_to_json(dets) : fgd::detections_to_text(dets);
    if (out_path.empty()) {
        std::cout << rendered;
    } else {
        write_text_file(out_path, rendered);
    }
}

// ---------------------------------------------------------------------------
// summary
// ---------------------------------------------------------------------------

struct SummaryArgs {
    std::uint64_t classes = 0;
    std::uint64_t input_size = 0;
    double width_mult = 0.0;
    bool classes_set = false;
    bool input_size_set = false;
    bool width_mult_set = false;
};

int run_summary(const GlobalFlags& global, const SummaryArgs& args) {
    fgd::RunConfig cfg = global.run_config();
    if (args.classes_set) cfg.classes = args.classes;
    if (args.input_size_set) cfg.input_size = args.input_size;
    if (args.width_mult_set) cfg.width_mult = args.width_mult;

    const fgd::NetworkSpec spec = fgd::config_network(cfg);
    const fgd::ShapeReport report = fgd::infer_shapes(spec);

    if (global.json()) {
        nlohmann::ordered_json doc;
        doc["input"] = report.input.str();
        doc["nodes"] = nlohmann::ordered_json::array();
        for (const fgd::NodeReport& node : report.nodes) {
            nlohmann::ordered_json entry;
            entry["id"] = node.id;
            entry["shape"] = node.shape.str();
            entry["params"] = node.params;
            doc["nodes"].push_back(std::move(entry));
        }
        doc["total_params"] = report.total_params;
        doc["outputs"] = spec.outputs;
        std::cout << doc.dump(2) << "\n";
        return kExitOk;
    }

    std::printf("%-12s %-16s %12s\n", "node", "output", "params");
    for (const fgd::NodeReport& node : report.nodes) {
        std::printf("%-12s %-16s %12" PRIu64 "\n", node.id.c_str(),
                    node.shape.str().c_str(), node.params);
    }
    std::printf("total params: %" PRIu64 "\n", report.total_params);
    std::string outputs;
    for (const std::string& id : spec.outputs) {
        if (!outputs.empty()) outputs += ", ";
        outputs += id;
    }
    std::printf("outputs: %s\n", outputs.c_str());
    return kExitOk;
}

// ---------------------------------------------------------------------------
// eval
// ---------------------------------------------------------------------------

struct EvalArgs {
    std::string gt_dir;
    std::string dets_path;
    double iou = 0.5;
    bool with_range = false;
    bool with_sizes = false;
    std::string out_path;
    std::string pr_csv_path;
};

int run_eval(const GlobalFlags& global, const EvalArgs& args) {
    std::vector<fs::path> xml_paths;
    try {
        for (const auto& entry : fs::directory_iterator(args.gt_dir)) {
            if (entry.path().extension() == ".xml") xml_paths.push_back(entry.path());
        }
    } catch (const fs::filesystem_error& e) {
        throw fgd::DataError(fgd::DataError::Kind::MalformedXml,
                             std::string("eval: cannot list '") + args.gt_dir +
                                 "': " + e.what());
    }
    if (xml_paths.empty()) {
        throw fgd::DataError(fgd::DataError::Kind::MalformedXml,
                             "eval: no .xml annotations in '" + args.gt_dir + "'");
    }
    std::sort(xml_paths.begin(), xml_paths.end());

    std::vector<fgd::Annotation> annotations;
    std::vector<std::string> image_ids;
    for (const fs::path& path : xml_paths) {
        annotations.push_back(fgd::load_voc_xml(path.string()));
        image_ids.push_back(path.stem().string());
    }
    const std::map<std::string, int> class_map = fgd::make_class_map(annotations);

    fgd::GroundTruthByImage gts;
    for (std::size_t i = 0; i < annotations.size(); ++i) {
        gts[image_ids[i]] = fgd::annotation_to_gts(annotations[i], class_map);
    }

    fgd::DetectionsByImage dets;
    for (fgd::Detection& det : read_detections(args.dets_path)) {
        dets[det.image_id].push_back(std::move(det));
    }

    fgd::EvalOptions options;
    options.config.iou_threshold = args.iou;
    options.with_range = args.with_range;
    options.with_sizes = args.with_sizes;
    for (const auto& [name, id] : class_map) {
        options.class_names[id] = name;
    }

    const fgd::EvalReport report = fgd::evaluate(dets, gts, options);
    const std::string rendered = global.json() ? fgd::report_to_json(report)
                                               : fgd::report_to_text(report);
    if (args.out_path.empty()) {
        std::cout << rendered;
    } else {
        write_text_file(args.out_path, rendered);
    }
    if (!args.pr_csv_path.empty()) {
        write_text_file(args.pr_csv_path, fgd::pr_curves_to_csv(report));
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// loss
// ---------------------------------------------------------------------------

struct LossArgs {
    std::string pred;
    std::string gt;
    std::string kind;
};

int run_loss(const LossArgs& args) {
    const fgd::BoundingBox pred = parse_corner_box(args.pred, "--pred");
    const fgd::BoundingBox gt = parse_corner_box(args.gt, "--gt");
    double value = 0.0;
    if (args.kind == "iou") {
        value = fgd::iou(pred, gt);
    } else if (args.kind == "giou") {
        value = fgd::giou_loss(pred, gt);
    } else if (args.kind == "diou") {
        value = fgd::diou_loss(pred, gt);
    } else {
        value = fgd::ciou_loss(pred, gt);
    }
    std::printf("%.6f\n", value);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// nms
// ---------------------------------------------------------------------------

struct NmsArgs {
    std::string in_path;
    double iou = 0.5;
    double conf = 0.3;
    std::string out_path;
};

int run_nms(const GlobalFlags& global, const NmsArgs& args) {
    std::vector<fgd::Detection> dets = read_detections(args.in_path);
    dets = fgd::filter_confidence(std::move(dets), args.conf);
    dets = fgd::nms(std::move(dets), args.iou);
    const bool as_json = global.format.empty()
                             ? (args.out_path.empty() ? path_is_json(args.in_path)
                                                      : path_is_json(args.out_path))
                             : global.json();
    emit_detections(dets, args.out_path, as_json);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// gradcheck
// ---------------------------------------------------------------------------

struct GradCheckArgs {
    std::uint64_t samples = 1000;
};

struct CheckLine {
    std::string name;
    double worst = 0.0;
};

double rel_err(double analytic, double numeric) {
    const double mag = std::max(std::fabs(analytic), std::fabs(numeric));
    const double diff = std::fabs(analytic - numeric);
    return mag < 1e-8 ? diff : diff / mag;
}

int run_gradcheck(const GlobalFlags& global, const GradCheckArgs& args) {
    if (args.samples == 0) {
        std::cerr << "error: --samples must be positive\n";
        return kExitUsage;
    }
    constexpr double kTolerance = 1e-4;
    std::mt19937 rng(static_cast<std::uint32_t>(global.seed));
    const auto unif = [&rng](double lo, double hi) {
        return lo + (hi - lo) * ((rng() >> 8) * (1.0 / 16777216.0));
    };

    std::vector<CheckLine> checks;

    const fgd::ActivationKind kinds[] = {
        fgd::ActivationKind::LeakyRelu,
        fgd::ActivationKind::Swish,
        fgd::ActivationKind::Mish,
        fgd::ActivationKind::HardSwish,
    };
    for (fgd::ActivationKind kind : kinds) {
        CheckLine line;
        line.name = std::string("activation ") + fgd::activation_name(kind);
        for (std::uint64_t i = 0; i < args.samples; ++i) {
            double x = unif(-8.0, 8.0);
            // Step away from the kinks, where one-sided derivatives differ
            // and central differences measure neither.
            while (std::fabs(x) < 1e-3 || std::fabs(x - 3.0) < 1e-3 ||
                   std::fabs(x + 3.0) < 1e-3) {
                x = unif(-8.0, 8.0);
            }
            const double h = 1e-6 * std::max(1.0, std::fabs(x));
            const double numeric =
                (fgd::activate(kind, x + h) - fgd::activate(kind, x - h)) / (2.0 * h);
            const double analytic = fgd::activate_grad(kind, x);
            line.worst = std::max(line.worst, rel_err(analytic, numeric));
        }
        checks.push_back(line);
    }

    {
        CheckLine line;
        line.name = "ciou gradient";
        for (std::uint64_t i = 0; i < args.samples; ++i) {
            const fgd::BoundingBox pred = fgd::BoundingBox::from_center(
                unif(0.0, 10.0), unif(0.0, 10.0), unif(0.5, 6.0), unif(0.5, 6.0));
            const fgd::BoundingBox gt = fgd::BoundingBox::from_center(
                unif(0.0, 10.0), unif(0.0, 10.0), unif(0.5, 6.0), unif(0.5, 6.0));
            const fgd::BoxGrad analytic = fgd::ciou_grad(pred, gt);
            // The gradient holds alpha fixed, so the numeric check must
            // differentiate the same frozen-alpha surrogate.
            const double alpha0 = fgd::ciou_alpha(pred, gt);
            const auto frozen = [&gt, alpha0](const fgd::BoundingBox& p) {
                return fgd::diou_loss(p, gt) + alpha0 * fgd::aspect_term(p, gt);
            };
            const double coords[4] = {pred.cx, pred.cy, pred.w, pred.h};
            const double* analytic_parts[4] = {&analytic.cx, &analytic.cy, &analytic.w,
                                               &analytic.h};
            for (int axis = 0; axis < 4; ++axis) {
                const double h = 1e-5 * std::max(1.0, std::fabs(coords[axis]));
                fgd::BoundingBox lo = pred;
                fgd::BoundingBox hi = pred;
                (axis == 0   ? lo.cx
                 : axis == 1 ? lo.cy
                 : axis == 2 ? lo.w
                             : lo.h) -= h;
                (axis == 0   ? hi.cx
                 : axis == 1 ? hi.cy
                 : axis == 2 ? hi.w
                             : hi.h) += h;
                const double numeric = (frozen(hi) - frozen(lo)) / (2.0 * h);
                line.worst = std::max(line.worst, rel_err(*analytic_parts[axis], numeric));
            }
        }
        checks.push_back(line);
    }

    bool pass = true;
    for (const CheckLine& line : checks) {
        if (line.worst > kTolerance) pass = false;
    }

    if (global.json()) {
        nlohmann::ordered_json doc;
        doc["samples"] = args.samples;
        doc["seed"] = global.seed;
        doc["tolerance"] = kTolerance;
        doc["checks"] = nlohmann::ordered_json::array();
        for (const CheckLine& line : checks) {
            nlohmann::ordered_json entry;
            entry["name"] = line.name;
            entry["worst_rel_err"] = line.worst;
            entry["pass"] = line.worst <= kTolerance;
            doc["checks"].push_back(std::move(entry));
        }
        doc["pass"] = pass;
        std::cout << doc.dump(2) << "\n";
    } else {
        for (const CheckLine& line : checks) {
            std::printf("%-20s worst rel err %.3e  %s\n", line.name.c_str(), line.worst,
                        line.worst <= kTolerance ? "ok" : "FAIL");
        }
        std::printf("result: %s (%" PRIu64 " samples, tolerance %.0e)\n",
                    pass ? "PASS" : "FAIL", args.samples, kTolerance);
    }
    return pass ? kExitOk : kExitCheckFailed;
}

// ---------------------------------------------------------------------------
// augment
// ---------------------------------------------------------------------------

struct AugmentArgs {
    std::string in_manifest;
    std::string out_dir;
    std::string ops_config;
};

int run_augment(const GlobalFlags& global, const AugmentArgs& args) {
    std::vector<fgd::DatasetItem> items = fgd::load_manifest(args.in_manifest);
    const fs::path base = fs::path(args.in_manifest).parent_path();
    for (fgd::DatasetItem& item : items) {
        if (!fs::path(item.image).is_absolute()) {
            item.image = (base / item.image).string();
        }
        if (!fs::path(item.annotation).is_absolute()) {
            item.annotation = (base / item.annotation).string();
        }
    }

    std::vector<fgd::AugmentOp> ops;
    if (!args.ops_config.empty()) {
        ops = fgd::load_config(args.ops_config).augment_ops;
    } else {
        ops = global.run_config().augment_ops;
    }

    const fgd::ExpandResult result = fgd::expand_dataset(items, ops, args.out_dir);
    const std::string manifest_path = (fs::path(args.out_dir) / "manifest.json").string();
    if (global.json()) {
        nlohmann::ordered_json doc;
        doc["inputs"] = items.size();
        doc["outputs"] = result.items.size();
        doc["files_written"] = result.files_written;
        doc["manifest"] = manifest_path;
        std::cout << doc.dump(2) << "\n";
    } else {
        std::printf("expanded %zu items to %zu outputs (%zu files)\n", items.size(),
                    result.items.size(), result.files_written);
        std::printf("manifest: %s\n", manifest_path.c_str());
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// decode
// ---------------------------------------------------------------------------

struct DecodeArgs {
    std::string weights_path;
    std::string image_path;
    double conf = 0.3;
    double iou = 0.5;
    std::string out_path;
};

int run_decode(const GlobalFlags& global, const DecodeArgs& args) {
    const fgd::RunConfig cfg = global.run_config();
    const fgd::NetworkSpec spec = fgd::config_network(cfg);
    const fgd::WeightStore store = fgd::deserialize_weights(spec, args.weights_path);

    const fgd::ImageBuffer img = fgd::read_ppm(args.image_path);
    const fgd::Tensor input = fgd::image_to_tensor(img);
    const std::array<fgd::Tensor, 3> heads = fgd::forward(spec, store, input);

    const std::string image_id = fs::path(args.image_path).stem().string();
    std::vector<fgd::Detection> dets;
    for (std::size_t i = 0; i < heads.size(); ++i) {
        const double stride =
            static_cast<double>(spec.input.w) / static_cast<double>(heads[i].w);
        std::vector<fgd::Detection> scale = fgd::decode_head(
            heads[i], cfg.anchors.scales[i], stride, cfg.classes, image_id);
        dets.insert(dets.end(), scale.begin(), scale.end());
    }
    dets = fgd::filter_confidence(std::move(dets), args.conf);
    dets = fgd::nms(std::move(dets), args.iou);

    const bool as_json = global.format.empty()
                             ? (!args.out_path.empty() && path_is_json(args.out_path))
                             : global.json();
    emit_detections(dets, args.out_path, as_json);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// init-weights
// ---------------------------------------------------------------------------

struct InitWeightsArgs {
    std::string out_path;
    bool zero = false;
};

int run_init_weights(const GlobalFlags& global, const InitWeightsArgs& args) {
    const fgd::RunConfig cfg = global.run_config();
    const fgd::NetworkSpec spec = fgd::config_network(cfg);
    const fgd::WeightStore store =
        args.zero ? fgd::zero_weights(spec)
                  : fgd::random_weights(spec, static_cast<std::uint32_t>(global.seed));
    fgd::serialize_weights(spec, store, args.out_path);
    std::printf("wrote %zu conv nodes -> %s\n", store.size(), args.out_path.c_str());
    return kExitOk;
}

int guarded(const std::function<int()>& fn) {
    try {
        return fn();
    } catch (const fgd::ConsistencyError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConsistency;
    } catch (const fgd::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitCheckFailed;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Detection pipeline toolkit: network summaries, loss and NMS "
                 "utilities, VOC evaluation, dataset augmentation, and weight-file "
                 "decoding"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalFlags global;
    app.add_option("--config", global.config_path, "Run configuration file");
    app.add_option("--seed", global.seed, "Random seed for seeded commands");
    app.add_option("--threads", global.threads, "Worker threads (N or 'auto')");
    app.add_option("--format", global.format, "Output format")
        ->check(CLI::IsMember({"json", "text"}));

    SummaryArgs summary_args;
    CLI::App* cmd_summary =
        app.add_subcommand("summary", "Print per-node output shapes and parameter counts");
    CLI::Option* opt_classes =
        cmd_summary->add_option("--classes", summary_args.classes, "Number of classes");
    CLI::Option* opt_input_size = cmd_summary->add_option(
        "--input-size", summary_args.input_size, "Input resolution (multiple of 32)");
    CLI::Option* opt_width_mult = cmd_summary->add_option(
        "--width-mult", summary_args.width_mult, "Channel width multiplier");

    EvalArgs eval_args;
    CLI::App* cmd_eval =
        app.add_subcommand("eval", "Evaluate detections against VOC annotations");
    cmd_eval->add_option("--gt", eval_args.gt_dir, "Directory of VOC .xml annotations")
        ->required();
    cmd_eval->add_option("--dets", eval_args.dets_path, "Detections file (.json or text)")
        ->required();
    cmd_eval->add_option("--iou", eval_args.iou, "Matching IoU threshold");
    cmd_eval->add_flag("--range", eval_args.with_range, "Also report AP50:95");
    cmd_eval->add_flag("--sizes", eval_args.with_sizes,
                       "Also report AP by object size bucket");
    cmd_eval->add_option("--out", eval_args.out_path, "Write the report here");
    cmd_eval->add_option("--pr-csv", eval_args.pr_csv_path,
                         "Write per-class PR curves as CSV");

    LossArgs loss_args;
    CLI::App* cmd_loss =
        app.add_subcommand("loss", "Box overlap losses for a prediction/target pair");
    cmd_loss->add_option("--pred", loss_args.pred, "Predicted box x1,y1,x2,y2")->required();
    cmd_loss->add_option("--gt", loss_args.gt, "Ground-truth box x1,y1,x2,y2")->required();
    cmd_loss->add_option("--kind", loss_args.kind, "iou, giou, diou or ciou")
        ->required()
        ->check(CLI::IsMember({"iou", "giou", "diou", "ciou"}));

    NmsArgs nms_args;
    CLI::App* cmd_nms =
        app.add_subcommand("nms", "Confidence-filter and suppress a detections file");
    cmd_nms->add_option("--in", nms_args.in_path, "Detections file (.json or text)")
        ->required();
    cmd_nms->add_option("--iou", nms_args.iou, "Suppression IoU threshold");
    cmd_nms->add_option("--conf", nms_args.conf, "Confidence threshold");
    cmd_nms->add_option("--out", nms_args.out_path, "Write survivors here");

    GradCheckArgs gradcheck_args;
    CLI::App* cmd_gradcheck = app.add_subcommand(
        "gradcheck", "Check analytic gradients against central finite differences");
    cmd_gradcheck->add_option("--samples", gradcheck_args.samples,
                              "Random instances per check");

    AugmentArgs augment_args;
    CLI::App* cmd_augment =
        app.add_subcommand("augment", "Expand a dataset with deterministic augmentations");
    cmd_augment->add_option("--in", augment_args.in_manifest, "Input dataset manifest")
        ->required();
    cmd_augment->add_option("--out", augment_args.out_dir, "Output directory")->required();
    cmd_augment->add_option("--ops-config", augment_args.ops_config,
                            "Config file supplying the augmentation op list");

    DecodeArgs decode_args;
    CLI::App* cmd_decode =
        app.add_subcommand("decode", "Run the network on an image and decode detections");
    cmd_decode->add_option("--weights", decode_args.weights_path, "Weight file")->required();
    cmd_decode->add_option("--image", decode_args.image_path, "Input image (.ppm)")
        ->required();
    cmd_decode->add_option("--conf", decode_args.conf, "Confidence threshold");
    cmd_decode->add_option("--iou", decode_args.iou, "NMS IoU threshold");
    cmd_decode->add_option("--out", decode_args.out_path, "Write detections here");

    InitWeightsArgs init_args;
    CLI::App* cmd_init = app.add_subcommand(
        "init-weights", "Write a zero or seeded-random weight file for a network");
    cmd_init->add_option("--out", init_args.out_path, "Output weight file")->required();
    cmd_init->add_flag("--zero", init_args.zero, "All-zero weights instead of random");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    summary_args.classes_set = opt_classes->count() > 0;
    summary_args.input_size_set = opt_input_size->count() > 0;
    summary_args.width_mult_set = opt_width_mult->count() > 0;

    return guarded([&]() -> int {
        check_threads_flag(global.threads);
        if (cmd_summary->parsed()) return run_summary(global, summary_args);
        if (cmd_eval->parsed()) return run_eval(global, eval_args);
        if (cmd_loss->parsed()) return run_loss(loss_args);
        if (cmd_nms->parsed()) return run_nms(global, nms_args);
        if (cmd_gradcheck->parsed()) return run_gradcheck(global, gradcheck_args);
        if (cmd_augment->parsed()) return run_augment(global, augment_args);
        if (cmd_decode->parsed()) return run_decode(global, decode_args);
        if (cmd_init->parsed()) return run_init_weights(global, init_args);
        std::cerr << "error: no subcommand\n";
        return kExitUsage;
    });
}
