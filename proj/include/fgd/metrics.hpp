#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "fgd/boxes.hpp"
#include "fgd/errors.hpp"
#include "fgd/postprocess.hpp"

namespace fgd {

/** One ground-truth object. */
struct GtBox {
    int class_id = 0;
    BoundingBox box;
    bool difficult = false;
};

using DetectionsByImage = std::map<std::string, std::vector<Detection>>;
using GroundTruthByImage = std::map<std::string, std::vector<GtBox>>;

/**
 * @brief Matching configuration: the IoU a detection needs to claim a ground
 * truth, and the area cut points for the size buckets (strict upper bounds,
 * so an area exactly at small_max_area is medium).
 */
struct MatchConfig {
    double iou_threshold = 0.5;
    double small_max_area = 32.0 * 32.0;
    double medium_max_area = 96.0 * 96.0;

    void validate() const {
        if (!(iou_threshold > 0.0) || !(iou_threshold <= 1.0)) {
            throw ValueError("match: iou threshold outside (0, 1]");
        }
        if (!(small_max_area > 0.0) || !(small_max_area < medium_max_area)) {
            throw ValueError("match: size buckets need 0 < small_max_area < medium_max_area");
        }
    }
};

/** Outcome of one detection after matching, in per-class processing order. */
struct LabeledDetection {
    std::string image_id;
    double score = 0.0;
    bool tp = false;
};

/** Matching outcome for a whole detection set. */
struct MatchResult {
    std::map<int, std::vector<LabeledDetection>> per_class;  // score-descending labels
    std::map<int, std::size_t> gt_count;
    std::map<int, std::size_t> fn;
};

namespace detail {

/** Identifies one detection inside DetectionsByImage. */
struct DetRef {
    const Detection* det = nullptr;
    std::size_t index_in_image = 0;
};

/**
 * Content-only ordering for matching: score descending, then image id, then
 * box corners. Using no positional information keeps evaluation invariant
 * under permutations of images and of per-image detection order.
 */
inline bool match_order(const DetRef& a, const DetRef& b) {
    if (a.det->score != b.det->score) return a.det->score > b.det->score;
    if (a.det->image_id != b.det->image_id) return a.det->image_id < b.det->image_id;
    const BoundingBox& ba = a.det->box;
    const BoundingBox& bb = b.det->box;
    if (ba.x1() != bb.x1()) return ba.x1() < bb.x1();
    if (ba.y1() != bb.y1()) return ba.y1() < bb.y1();
    if (ba.x2() != bb.x2()) return ba.x2() < bb.x2();
    return ba.y2() < bb.y2();
}

/** Per-detection match info used by the size-bucket protocol. */
struct DetOutcome {
    bool matched = false;
    double gt_area = 0.0;
};

struct MatchCore {
    MatchResult result;
    // image id -> detection index -> outcome
    std::map<std::string, std::vector<DetOutcome>> outcomes;
};

inline MatchCore match_core(const DetectionsByImage& dets, const GroundTruthByImage& gts,
                            const MatchConfig& config) {
    config.validate();
    for (const auto& [image_id, image_dets] : dets) {
        (void)image_dets;
        if (!gts.count(image_id)) {
            throw ConsistencyError("match: detections reference image '" + image_id +
                                   "' which has no ground-truth entry");
        }
    }

    MatchCore core;
    std::set<int> classes;
    for (const auto& [image_id, boxes] : gts) {
        (void)image_id;
        for (const GtBox& g : boxes) {
            classes.insert(g.class_id);
            core.result.gt_count[g.class_id] += 1;
        }
    }
    for (const auto& [image_id, image_dets] : dets) {
        core.outcomes[image_id].resize(image_dets.size());
        for (const Detection& d : image_dets) classes.insert(d.class_id);
    }

    std::map<std::string, std::vector<bool>> gt_matched;
    for (const auto& [image_id, boxes] : gts) {
        gt_matched[image_id].assign(boxes.size(), false);
    }

    for (int cls : classes) {
        std::vector<DetRef> refs;
        for (const auto& [image_id, image_dets] : dets) {
            (void)image_id;
            for (std::size_t i = 0; i < image_dets.size(); ++i) {
                if (image_dets[i].class_id == cls) {
                    refs.push_back(DetRef{&image_dets[i], i});
                }
            }
        }
        std::sort(refs.begin(), refs.end(), match_order);

        auto& labels = core.result.per_class[cls];
        std::size_t matched_count = 0;
        for (const DetRef& ref : refs) {
            const Detection& d = *ref.det;
            const std::vector<GtBox>& image_gts = gts.at(d.image_id);
            std::vector<bool>& used = gt_matched.at(d.image_id);

            double best_iou = 0.0;
            std::size_t best_g = image_gts.size();
            for (std::size_t g = 0; g < image_gts.size(); ++g) {
                if (used[g] || image_gts[g].class_id != cls) continue;
                const double v = iou(d.box, image_gts[g].box);
                if (v > best_iou) {
                    best_iou = v;
                    best_g = g;
                }
            }

            LabeledDetection label;
            label.image_id = d.image_id;
            label.score = d.score;
            if (best_g < image_gts.size() && best_iou >= config.iou_threshold) {
                label.tp = true;
                used[best_g] = true;
                ++matched_count;
                auto& outcome = core.outcomes.at(d.image_id)[ref.index_in_image];
                outcome.matched = true;
                outcome.gt_area = image_gts[best_g].box.area();
            }
            labels.push_back(std::move(label));
        }

        const std::size_t total = core.result.gt_count.count(cls)
                                      ? core.result.gt_count.at(cls)
                                      : 0;
        core.result.fn[cls] = total - matched_count;
    }
    return core;
}

}  // namespace detail

/**
 * @brief Greedy matching: per class, walk detections by descending score and
 * give each the unmatched same-class ground truth with the highest IoU, if
 * that IoU reaches the threshold. Each ground truth matches at most once.
 */
inline MatchResult match_detections(const DetectionsByImage& dets,
                                    const GroundTruthByImage& gts,
                                    const MatchConfig& config = {}) {
    return detail::match_core(dets, gts, config).result;
}

/** @brief Precision and recall from counts; zero denominators yield zero. */
inline std::pair<double, double> precision_recall(std::size_t tp, std::size_t fp,
                                                  std::size_t fn) {
    const double p = (tp + fp == 0) ? 0.0
                                    : static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double r = (tp + fn == 0) ? 0.0
                                    : static_cast<double>(tp) / static_cast<double>(tp + fn);
    return {p, r};
}

/** @brief Harmonic mean of precision and recall; zero when both are zero. */
inline double f1_score(double precision, double recall) {
    const double s = precision + recall;
    if (s <= 0.0) return 0.0;
    return 2.0 * precision * recall / s;
}

/** One point of a precision/recall curve. */
struct PrPoint {
    double recall = 0.0;
    double precision = 0.0;
};

/**
 * @brief Cumulative precision/recall points for one class, one point per
 * score-descending prefix of the labeled detections.
 */
inline std::vector<PrPoint> pr_curve(const std::vector<LabeledDetection>& labels,
                                     std::size_t gt_count) {
    std::vector<PrPoint> points;
    points.reserve(labels.size());
    std::size_t tp = 0;
    for (std::size_t k = 0; k < labels.size(); ++k) {
        if (labels[k].tp) ++tp;
        PrPoint pt;
        pt.recall = gt_count == 0 ? 0.0
                                  : static_cast<double>(tp) / static_cast<double>(gt_count);
        pt.precision = static_cast<double>(tp) / static_cast<double>(k + 1);
        points.push_back(pt);
    }
    return points;
}

/**
 * @brief Area under the precision envelope of a PR curve, integrating over
 * every recall segment (all-point interpolation: the envelope at recall r is
 * the maximum precision among points at recall >= r).
 */
inline double average_precision(const std::vector<PrPoint>& curve) {
    if (curve.empty()) return 0.0;
    for (std::size_t i = 1; i < curve.size(); ++i) {
        if (curve[i].recall < curve[i - 1].recall) {
            throw ValueError("average_precision: recalls must be non-decreasing");
        }
    }
    std::vector<double> env(curve.size());
    env.back() = curve.back().precision;
    for (std::size_t i = curve.size() - 1; i-- > 0;) {
        env[i] = std::max(curve[i].precision, env[i + 1]);
    }
    double ap = 0.0;
    double prev_recall = 0.0;
    for (std::size_t i = 0; i < curve.size(); ++i) {
        ap += (curve[i].recall - prev_recall) * env[i];
        prev_recall = curve[i].recall;
    }
    return ap;
}

/** @brief Unweighted mean of per-class average precisions over at least one class. */
inline double mean_ap(const std::map<int, double>& per_class_ap) {
    if (per_class_ap.empty()) {
        throw ValueError("mean_ap: no classes to average over");
    }
    double sum = 0.0;
    for (const auto& [cls, ap] : per_class_ap) {
        (void)cls;
        sum += ap;
    }
    return sum / static_cast<double>(per_class_ap.size());
}

namespace detail {

/** Per-class APs at one threshold, restricted to classes with ground truth. */
inline std::map<int, double> class_aps(const DetectionsByImage& dets,
                                       const GroundTruthByImage& gts,
                                       const MatchConfig& config) {
    const MatchResult match = match_detections(dets, gts, config);
    std::map<int, double> aps;
    for (const auto& [cls, count] : match.gt_count) {
        if (count == 0) continue;
        auto it = match.per_class.find(cls);
        const std::vector<LabeledDetection> empty;
        const auto& labels = (it == match.per_class.end()) ? empty : it->second;
        aps[cls] = average_precision(pr_curve(labels, count));
    }
    return aps;
}

}  // namespace detail

/** Mean AP over the IoU threshold sweep 0.50:0.05:0.95, plus two fixed points. */
struct ApRange {
    double ap50_95 = 0.0;
    double ap50 = 0.0;
    double ap75 = 0.0;
};

/**
 * @brief Sweep the matching IoU threshold from 0.50 to 0.95 in steps of 0.05,
 * computing the class-mean AP at each, and average the ten values.
 */
inline ApRange ap_range(const DetectionsByImage& dets, const GroundTruthByImage& gts,
                        MatchConfig config = {}) {
    ApRange out;
    double sum = 0.0;
    for (int i = 0; i < 10; ++i) {
        config.iou_threshold = static_cast<double>(50 + 5 * i) / 100.0;
        const std::map<int, double> aps = detail::class_aps(dets, gts, config);
        const double m = aps.empty() ? 0.0 : mean_ap(aps);
        sum += m;
        if (i == 0) out.ap50 = m;
        if (i == 5) out.ap75 = m;
    }
    out.ap50_95 = sum / 10.0;
    return out;
}

/** Mean AP per ground-truth area bucket. A bucket with no ground truth is absent. */
struct ApBySize {
    std::optional<double> small;
    std::optional<double> medium;
    std::optional<double> large;
};

/**
 * @brief Size-bucketed AP: each bucket evaluates only the ground truths whose
 * area falls in it, excluding detections that the full match assigned to an
 * out-of-bucket ground truth (so a correct match never counts as a false
 * positive elsewhere). Empty buckets are reported absent, never as zero.
 */
inline ApBySize ap_by_size(const DetectionsByImage& dets, const GroundTruthByImage& gts,
                           const MatchConfig& config = {}) {
    const detail::MatchCore full = detail::match_core(dets, gts, config);

    const auto bucket_of = [&config](double area) {
        if (area < config.small_max_area) return 0;
        if (area < config.medium_max_area) return 1;
        return 2;
    };

    ApBySize out;
    for (int bucket = 0; bucket < 3; ++bucket) {
        GroundTruthByImage bucket_gts;
        bool any_gt = false;
        for (const auto& [image_id, boxes] : gts) {
            std::vector<GtBox> kept;
            for (const GtBox& g : boxes) {
                if (bucket_of(g.box.area()) == bucket) kept.push_back(g);
            }
            any_gt = any_gt || !kept.empty();
            bucket_gts.emplace(image_id, std::move(kept));
        }
        if (!any_gt) continue;

        DetectionsByImage bucket_dets;
        for (const auto& [image_id, image_dets] : dets) {
            const auto& outcomes = full.outcomes.at(image_id);
            std::vector<Detection> kept;
            for (std::size_t i = 0; i < image_dets.size(); ++i) {
                if (outcomes[i].matched && bucket_of(outcomes[i].gt_area) != bucket) {
                    continue;
                }
                kept.push_back(image_dets[i]);
            }
            bucket_dets.emplace(image_id, std::move(kept));
        }

        const std::map<int, double> aps = detail::class_aps(bucket_dets, bucket_gts, config);
        const double m = aps.empty() ? 0.0 : mean_ap(aps);
        if (bucket == 0) out.small = m;
        if (bucket == 1) out.medium = m;
        if (bucket == 2) out.large = m;
    }
    return out;
}

}  // namespace fgd
