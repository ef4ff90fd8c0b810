#pragma once

#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fgd/metrics.hpp"

namespace fgd {

/** What evaluate() should compute beyond the single-threshold basics. */
struct EvalOptions {
    MatchConfig config;
    bool with_range = false;
    bool with_sizes = false;
    std::map<int, std::string> class_names;
};

/** Per-class slice of an evaluation. */
struct ClassReport {
    int class_id = 0;
    std::string name;
    std::size_t gt = 0;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double ap = 0.0;
    std::vector<PrPoint> curve;
};

/**
 * @brief Full evaluation summary. Overall precision/recall/F1 aggregate the
 * raw counts across classes (micro); map is the unweighted mean of the APs
 * of classes that have ground truth.
 */
struct EvalReport {
    double iou_threshold = 0.5;
    std::vector<ClassReport> classes;
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double map = 0.0;
    std::optional<ApRange> range;
    std::optional<ApBySize> sizes;
};

/** @brief Match, curve, and aggregate a detection set against ground truth. */
inline EvalReport evaluate(const DetectionsByImage& dets, const GroundTruthByImage& gts,
                           const EvalOptions& options = {}) {
    const MatchResult match = match_detections(dets, gts, options.config);

    EvalReport report;
    report.iou_threshold = options.config.iou_threshold;
    std::map<int, double> aps;
    for (const auto& [cls, labels] : match.per_class) {
        ClassReport cr;
        cr.class_id = cls;
        auto name_it = options.class_names.find(cls);
        cr.name = (name_it == options.class_names.end()) ? std::to_string(cls)
                                                         : name_it->second;
        auto gt_it = match.gt_count.find(cls);
        cr.gt = (gt_it == match.gt_count.end()) ? 0 : gt_it->second;
        for (const LabeledDetection& l : labels) {
            if (l.tp) {
                ++cr.tp;
            } else {
                ++cr.fp;
            }
        }
        cr.fn = match.fn.at(cls);
        const auto [p, r] = precision_recall(cr.tp, cr.fp, cr.fn);
        cr.precision = p;
        cr.recall = r;
        cr.f1 = f1_score(p, r);
        cr.curve = pr_curve(labels, cr.gt);
        if (cr.gt > 0) {
            cr.ap = average_precision(cr.curve);
            aps[cls] = cr.ap;
        }
        report.tp += cr.tp;
        report.fp += cr.fp;
        report.fn += cr.fn;
        report.classes.push_back(std::move(cr));
    }

    const auto [p, r] = precision_recall(report.tp, report.fp, report.fn);
    report.precision = p;
    report.recall = r;
    report.f1 = f1_score(p, r);
    report.map = aps.empty() ? 0.0 : mean_ap(aps);
    if (options.with_range) {
        report.range = ap_range(dets, gts, options.config);
    }
    if (options.with_sizes) {
        report.sizes = ap_by_size(dets, gts, options.config);
    }
    return report;
}

/** @brief Render a report as JSON with a stable key order. */
inline std::string report_to_json(const EvalReport& report) {
    using json = nlohmann::ordered_json;
    json root;
    root["iou_threshold"] = report.iou_threshold;
    root["classes"] = json::array();
    for (const ClassReport& cr : report.classes) {
        json c;
        c["id"] = cr.class_id;
        c["name"] = cr.name;
        c["gt"] = cr.gt;
        c["tp"] = cr.tp;
        c["fp"] = cr.fp;
        c["fn"] = cr.fn;
        c["precision"] = cr.precision;
        c["recall"] = cr.recall;
        c["f1"] = cr.f1;
        c["ap"] = cr.ap;
        root["classes"].push_back(std::move(c));
    }
    json overall;
    overall["tp"] = report.tp;
    overall["fp"] = report.fp;
    overall["fn"] = report.fn;
    overall["precision"] = report.precision;
    overall["recall"] = report.recall;
    overall["f1"] = report.f1;
    overall["map"] = report.map;
    root["overall"] = std::move(overall);
    if (report.range) {
        json range;
        range["ap50_95"] = report.range->ap50_95;
        range["ap50"] = report.range->ap50;
        range["ap75"] = report.range->ap75;
        root["ap_range"] = std::move(range);
    } else {
        root["ap_range"] = nullptr;
    }
    if (report.sizes) {
        json sizes;
        sizes["small"] = report.sizes->small ? json(*report.sizes->small) : json(nullptr);
        sizes["medium"] = report.sizes->medium ? json(*report.sizes->medium) : json(nullptr);
        sizes["large"] = report.sizes->large ? json(*report.sizes->large) : json(nullptr);
        root["ap_by_size"] = std::move(sizes);
    } else {
        root["ap_by_size"] = nullptr;
    }
    return root.dump(2) + "\n";
}

namespace detail {

inline std::string fmt4(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

inline std::string opt4(const std::optional<double>& v) {
    return v ? fmt4(*v) : std::string("n/a");
}

}  // namespace detail

/** @brief Render a report as an aligned text table. */
inline std::string report_to_text(const EvalReport& report) {
    std::string out;
    char line[256];
    std::snprintf(line, sizeof(line), "%-20s %7s %7s %7s %7s %10s %8s %8s %8s\n", "class",
                  "gt", "tp", "fp", "fn", "precision", "recall", "f1", "ap");
    out += line;
    for (const ClassReport& cr : report.classes) {
        std::snprintf(line, sizeof(line), "%-20s %7zu %7zu %7zu %7zu %10s %8s %8s %8s\n",
                      cr.name.c_str(), cr.gt, cr.tp, cr.fp, cr.fn,
                      detail::fmt4(cr.precision).c_str(), detail::fmt4(cr.recall).c_str(),
                      detail::fmt4(cr.f1).c_str(),
                      cr.gt > 0 ? detail::fmt4(cr.ap).c_str() : "n/a");
        out += line;
    }
    std::snprintf(line, sizeof(line), "%-20s %7zu %7zu %7zu %7zu %10s %8s %8s %8s\n", "all",
                  report.tp + report.fn, report.tp, report.fp, report.fn,
                  detail::fmt4(report.precision).c_str(), detail::fmt4(report.recall).c_str(),
                  detail::fmt4(report.f1).c_str(), "");
    out += line;
    out += "mAP@" + detail::fmt4(report.iou_threshold) + " = " + detail::fmt4(report.map) +
           "\n";
    if (report.range) {
        out += "AP50:95 = " + detail::fmt4(report.range->ap50_95) +
               "  AP50 = " + detail::fmt4(report.range->ap50) +
               "  AP75 = " + detail::fmt4(report.range->ap75) + "\n";
    }
    if (report.sizes) {
        out += "AP small = " + detail::opt4(report.sizes->small) +
               "  medium = " + detail::opt4(report.sizes->medium) +
               "  large = " + detail::opt4(report.sizes->large) + "\n";
    }
    return out;
}

/** @brief Render every per-class PR curve as CSV (class_id,recall,precision). */
inline std::string pr_curves_to_csv(const EvalReport& report) {
    std::string out = "class_id,recall,precision\n";
    char line[128];
    for (const ClassReport& cr : report.classes) {
        for (const PrPoint& pt : cr.curve) {
            std::snprintf(line, sizeof(line), "%d,%.6f,%.6f\n", cr.class_id, pt.recall,
                          pt.precision);
            out += line;
        }
    }
    return out;
}

}  // namespace fgd
