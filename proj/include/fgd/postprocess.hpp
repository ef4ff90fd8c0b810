#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fgd/boxes.hpp"
#include "fgd/errors.hpp"
#include "fgd/tensor.hpp"

namespace fgd {

/**
 * @brief One scored detection. The box is in pixel units. source_index
 * records where the detection came from (grid slot for decoded heads, line
 * number for loaded files) and only serves deterministic tie-breaking.
 */
struct Detection {
    std::string image_id;
    int class_id = 0;
    double score = 0.0;
    BoundingBox box;
    std::size_t source_index = 0;
};

/** Anchor extents in pixels, one list per head scale (stride 8, 16, 32). */
struct AnchorSet {
    std::vector<std::vector<std::pair<double, double>>> scales;

    void validate() const {
        if (scales.size() != 3) {
            throw ValueError("anchors: expected 3 scales, got " +
                             std::to_string(scales.size()));
        }
        const std::size_t per_scale = scales[0].size();
        for (const auto& scale : scales) {
            if (scale.empty() || scale.size() != per_scale) {
                throw ValueError("anchors: every scale needs the same positive anchor count");
            }
            for (const auto& [w, h] : scale) {
                if (!(w > 0.0) || !(h > 0.0)) {
                    throw ValueError("anchors: extents must be positive");
                }
            }
        }
    }
};

/** The canonical 9-anchor arrangement for 416-pixel inputs. */
inline AnchorSet default_anchors() {
    AnchorSet a;
    a.scales = {
        {{10.0, 13.0}, {16.0, 30.0}, {33.0, 23.0}},
        {{30.0, 61.0}, {62.0, 45.0}, {59.0, 119.0}},
        {{116.0, 90.0}, {156.0, 198.0}, {373.0, 326.0}},
    };
    return a;
}

namespace detail {

/** Sort key shared by filter_confidence and nms: score desc, then class, then slot. */
inline bool detection_order(const Detection& a, const Detection& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.class_id != b.class_id) return a.class_id < b.class_id;
    return a.source_index < b.source_index;
}

}  // namespace detail

/**
 * @brief Decode one head tensor into all of its N*N*B candidate detections.
 *
 * Channel layout per slot j: [tx, ty, tw, th, obj, class logits...] at offset
 * j * (5 + num_classes). Score is sigmoid(obj) * max_c sigmoid(class_c);
 * class probabilities are independent sigmoids, not a softmax. Boxes come out
 * in pixels. No thresholding happens here.
 */
inline std::vector<Detection> decode_head(const Tensor& head,
                                          const std::vector<std::pair<double, double>>& anchors,
                                          double stride, std::size_t num_classes,
                                          const std::string& image_id) {
    if (anchors.empty()) {
        throw ValueError("decode_head: no anchors");
    }
    if (num_classes == 0) {
        throw ValueError("decode_head: num_classes must be positive");
    }
    if (!(stride > 0.0)) {
        throw ValueError("decode_head: stride must be positive");
    }
    if (head.h != head.w) {
        throw ShapeError("decode_head: grid is not square (" + head.shape_str() + ")");
    }
    const std::size_t b = anchors.size();
    const std::size_t depth = b * (5 + num_classes);
    if (head.c != depth) {
        throw ShapeError("decode_head: head has " + std::to_string(head.c) +
                         " channels, expected " + std::to_string(b) + " * (5 + " +
                         std::to_string(num_classes) + ") = " + std::to_string(depth));
    }

    const std::size_t n = head.h;
    std::vector<Detection> out;
    out.reserve(n * n * b);
    for (std::size_t y = 0; y < n; ++y) {
        for (std::size_t x = 0; x < n; ++x) {
            for (std::size_t j = 0; j < b; ++j) {
                const std::size_t off = j * (5 + num_classes);
                DecodeContext ctx;
                ctx.cell_x = x;
                ctx.cell_y = y;
                ctx.prior_w = anchors[j].first / stride;
                ctx.prior_h = anchors[j].second / stride;
                ctx.grid = n;
                ctx.stride = stride;
                const BoundingBox grid_box =
                    decode_box(head.at(y, x, off + 0), head.at(y, x, off + 1),
                               head.at(y, x, off + 2), head.at(y, x, off + 3), ctx);

                Detection det;
                det.image_id = image_id;
                det.box = BoundingBox::from_center(grid_box.cx * stride, grid_box.cy * stride,
                                                   grid_box.w * stride, grid_box.h * stride);
                const double obj = detail::sigmoid(head.at(y, x, off + 4));
                double best_p = -1.0;
                std::size_t best_c = 0;
                for (std::size_t c = 0; c < num_classes; ++c) {
                    const double p = detail::sigmoid(head.at(y, x, off + 5 + c));
                    if (p > best_p) {
                        best_p = p;
                        best_c = c;
                    }
                }
                det.class_id = static_cast<int>(best_c);
                det.score = obj * best_p;
                det.source_index = (y * n + x) * b + j;
                out.push_back(std::move(det));
            }
        }
    }
    return out;
}

/**
 * @brief Keep detections scoring at least threshold, ordered by descending
 * score with ties broken by (class_id, source_index).
 */
inline std::vector<Detection> filter_confidence(std::vector<Detection> dets,
                                                double threshold) {
    if (!(threshold >= 0.0) || !(threshold <= 1.0)) {
        throw ValueError("filter_confidence: threshold outside [0, 1]");
    }
    std::vector<Detection> out;
    out.reserve(dets.size());
    for (auto& d : dets) {
        if (d.score >= threshold) out.push_back(std::move(d));
    }
    std::sort(out.begin(), out.end(), detail::detection_order);
    return out;
}

/**
 * @brief Greedy per-class non-maximum suppression: walk detections by
 * descending score, keep each survivor, and drop any later detection of the
 * same class whose IoU with it exceeds iou_threshold. Detections of
 * different classes never suppress each other.
 */
inline std::vector<Detection> nms(std::vector<Detection> dets, double iou_threshold) {
    if (!(iou_threshold > 0.0) || !(iou_threshold <= 1.0)) {
        throw ValueError("nms: iou threshold outside (0, 1]");
    }
    std::sort(dets.begin(), dets.end(), detail::detection_order);
    std::vector<bool> suppressed(dets.size(), false);
    std::vector<Detection> out;
    for (std::size_t i = 0; i < dets.size(); ++i) {
        if (suppressed[i]) continue;
        for (std::size_t j = i + 1; j < dets.size(); ++j) {
            if (suppressed[j] || dets[j].class_id != dets[i].class_id) continue;
            if (iou(dets[i].box, dets[j].box) > iou_threshold) {
                suppressed[j] = true;
            }
        }
        out.push_back(std::move(dets[i]));
    }
    return out;
}

namespace detail {

inline std::string fixed6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace detail

/**
 * @brief Render detections as text: one line per detection,
 * "image_id class_id score x1 y1 x2 y2" with six-decimal fixed reals.
 */
inline std::string detections_to_text(const std::vector<Detection>& dets) {
    std::string out;
    for (const Detection& d : dets) {
        out += d.image_id;
        out += ' ';
        out += std::to_string(d.class_id);
        out += ' ';
        out += detail::fixed6(d.score);
        out += ' ';
        out += detail::fixed6(d.box.x1());
        out += ' ';
        out += detail::fixed6(d.box.y1());
        out += ' ';
        out += detail::fixed6(d.box.x2());
        out += ' ';
        out += detail::fixed6(d.box.y2());
        out += '\n';
    }
    return out;
}

/** @brief Parse the text detection format. Blank lines are skipped. */
inline std::vector<Detection> detections_from_text(const std::string& text) {
    std::vector<Detection> out;
    std::istringstream lines(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(lines, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        std::istringstream fields(line);
        Detection d;
        double x1, y1, x2, y2;
        if (!(fields >> d.image_id >> d.class_id >> d.score >> x1 >> y1 >> x2 >> y2)) {
            throw DataError(DataError::Kind::BadDetections,
                            "detections: line " + std::to_string(line_no) +
                                " does not have 7 fields");
        }
        std::string extra;
        if (fields >> extra) {
            throw DataError(DataError::Kind::BadDetections,
                            "detections: line " + std::to_string(line_no) +
                                " has trailing fields");
        }
        if (!(d.score >= 0.0) || !(d.score <= 1.0)) {
            throw DataError(DataError::Kind::BadDetections,
                            "detections: line " + std::to_string(line_no) +
                                " score outside [0, 1]");
        }
        if (x2 < x1 || y2 < y1) {
            throw DataError(DataError::Kind::BadDetections,
                            "detections: line " + std::to_string(line_no) +
                                " has inverted corners");
        }
        d.box = BoundingBox::from_corners(x1, y1, x2, y2);
        d.source_index = line_no - 1;
        out.push_back(std::move(d));
    }
    return out;
}

/** @brief Render detections as a JSON array of objects. */
inline std::string detections_to_json(const std::vector<Detection>& dets) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const Detection& d : dets) {
        nlohmann::ordered_json obj;
        obj["image_id"] = d.image_id;
        obj["class_id"] = d.class_id;
        obj["score"] = d.score;
        obj["box"] = {d.box.x1(), d.box.y1(), d.box.x2(), d.box.y2()};
        arr.push_back(std::move(obj));
    }
    return arr.dump(2) + "\n";
}

/** @brief Parse the JSON detection format. */
inline std::vector<Detection> detections_from_json(const std::string& text) {
    nlohmann::json arr;
    try {
        arr = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(DataError::Kind::BadDetections,
                        std::string("detections: invalid JSON: ") + e.what());
    }
    if (!arr.is_array()) {
        throw DataError(DataError::Kind::BadDetections,
                        "detections: top-level JSON value is not an array");
    }
    std::vector<Detection> out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const auto& obj = arr[i];
        if (!obj.is_object() || !obj.contains("image_id") || !obj.contains("class_id") ||
            !obj.contains("score") || !obj.contains("box") || !obj["box"].is_array() ||
            obj["box"].size() != 4) {
            throw DataError(DataError::Kind::BadDetections,
                            "detections: entry " + std::to_string(i) +
                                " is missing image_id/class_id/score/box[4]");
        }
        Detection d;
        d.image_id = obj["image_id"].get<std::string>();
        d.class_id = obj["class_id"].get<int>();
        d.score = obj["score"].get<double>();
        const double x1 = obj["box"][0].get<double>();
        const double y1 = obj["box"][1].get<double>();
        const double x2 = obj["box"][2].get<double>();
        const double y2 = obj["box"][3].get<double>();
        if (!(d.score >= 0.0) || !(d.score <= 1.0)) {
            throw DataError(DataError::Kind::BadDetections,
                            "detections: entry " + std::to_string(i) + " score outside [0, 1]");
        }
        if (x2 < x1 || y2 < y1) {
            throw DataError(DataError::Kind::BadDetections,
                            "detections: entry " + std::to_string(i) + " has inverted corners");
        }
        d.box = BoundingBox::from_corners(x1, y1, x2, y2);
        d.source_index = i;
        out.push_back(std::move(d));
    }
    return out;
}

}  // namespace fgd
