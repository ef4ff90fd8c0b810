#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fgd/boxes.hpp"
#include "fgd/errors.hpp"

namespace fgd {

/** Which penalty the localization term uses for responsible slots. */
enum class BoxTerm {
    SquaredCoord,
    GIoU,
    DIoU,
    CIoU,
};

/**
 * @brief Loss weighting knobs: coord scales the localization term,
 * noobj scales the confidence penalty on slots with no object.
 */
struct LossWeights {
    double coord = 5.0;
    double noobj = 0.5;
    BoxTerm box_term = BoxTerm::CIoU;
};

/** One predicted slot: a box, an objectness confidence, per-class probabilities. */
struct PredSlot {
    BoundingBox box;
    double conf = 0.0;
    std::vector<double> probs;
};

/**
 * @brief One target slot. When responsible is true the slot carries the true
 * box, the target confidence, and a one-hot class vector; otherwise only the
 * zero target confidence matters.
 */
struct TargetSlot {
    bool responsible = false;
    BoundingBox box;
    double conf = 0.0;
    std::vector<double> probs;
};

namespace detail {

inline void require_grid_dims(std::size_t n, std::size_t b, std::size_t classes,
                              std::size_t slot_count, const char* who) {
    if (n == 0 || b == 0 || classes == 0) {
        throw ValueError(std::string(who) + ": grid dims must be positive (n=" +
                         std::to_string(n) + ", b=" + std::to_string(b) +
                         ", classes=" + std::to_string(classes) + ")");
    }
    if (slot_count != n * n * b) {
        throw ShapeError(std::string(who) + ": slot count " + std::to_string(slot_count) +
                         " does not equal n*n*b = " + std::to_string(n * n * b));
    }
}

inline void require_unit(double v, const char* who, const char* what) {
    if (!(v >= 0.0) || !(v <= 1.0)) {
        throw ValueError(std::string(who) + ": " + what + " outside [0, 1]: " +
                         std::to_string(v));
    }
}

}  // namespace detail

/**
 * @brief Dense prediction grid for one head scale: n*n cells, b slots per cell.
 *
 * Slot (cell_y, cell_x, j) lives at index (cell_y * n + cell_x) * b + j.
 */
struct GridPrediction {
    std::size_t n = 0;
    std::size_t b = 0;
    std::size_t classes = 0;
    std::vector<PredSlot> slots;

    GridPrediction() = default;

    GridPrediction(std::size_t n_, std::size_t b_, std::size_t classes_)
        : n(n_), b(b_), classes(classes_) {
        slots.resize(n * n * b);
        for (auto& s : slots) s.probs.assign(classes, 0.0);
    }

    PredSlot& slot(std::size_t cell_y, std::size_t cell_x, std::size_t j) {
        return slots[(cell_y * n + cell_x) * b + j];
    }

    void validate() const {
        detail::require_grid_dims(n, b, classes, slots.size(), "GridPrediction");
        for (const auto& s : slots) {
            detail::require_unit(s.conf, "GridPrediction", "confidence");
            if (s.probs.size() != classes) {
                throw ShapeError("GridPrediction: class vector length " +
                                 std::to_string(s.probs.size()) + " != classes " +
                                 std::to_string(classes));
            }
            for (double p : s.probs) {
                detail::require_unit(p, "GridPrediction", "class probability");
            }
        }
    }
};

/** @brief Target grid matching a GridPrediction slot for slot. */
struct GridTarget {
    std::size_t n = 0;
    std::size_t b = 0;
    std::size_t classes = 0;
    std::vector<TargetSlot> slots;

    GridTarget() = default;

    GridTarget(std::size_t n_, std::size_t b_, std::size_t classes_)
        : n(n_), b(b_), classes(classes_) {
        slots.resize(n * n * b);
        for (auto& s : slots) s.probs.assign(classes, 0.0);
    }

    TargetSlot& slot(std::size_t cell_y, std::size_t cell_x, std::size_t j) {
        return slots[(cell_y * n + cell_x) * b + j];
    }

    void validate() const {
        detail::require_grid_dims(n, b, classes, slots.size(), "GridTarget");
        for (const auto& s : slots) {
            detail::require_unit(s.conf, "GridTarget", "confidence");
            if (s.probs.size() != classes) {
                throw ShapeError("GridTarget: class vector length " +
                                 std::to_string(s.probs.size()) + " != classes " +
                                 std::to_string(classes));
            }
            if (!s.responsible) continue;
            if (!(s.box.w > 0.0) || !(s.box.h > 0.0)) {
                throw ValueError("GridTarget: responsible slot carries a degenerate box");
            }
            double sum = 0.0;
            for (double p : s.probs) {
                if (p != 0.0 && p != 1.0) {
                    throw ValueError("GridTarget: class vector is not one-hot");
                }
                sum += p;
            }
            if (sum != 1.0) {
                throw ValueError("GridTarget: one-hot class vector sums to " +
                                 std::to_string(sum));
            }
        }
    }
};

namespace detail {

inline void require_same_grid(const GridPrediction& pred, const GridTarget& tgt,
                              const char* who) {
    if (pred.n != tgt.n || pred.b != tgt.b || pred.classes != tgt.classes) {
        throw ShapeError(std::string(who) + ": grids disagree (pred " +
                         std::to_string(pred.n) + "/" + std::to_string(pred.b) + "/" +
                         std::to_string(pred.classes) + " vs target " +
                         std::to_string(tgt.n) + "/" + std::to_string(tgt.b) + "/" +
                         std::to_string(tgt.classes) + ")");
    }
    pred.validate();
    tgt.validate();
}

}  // namespace detail

/**
 * @brief Localization term over responsible slots, scaled by weights.coord.
 *
 * SquaredCoord sums squared center and extent differences; the IoU-family
 * settings charge the corresponding box loss per responsible slot instead.
 */
inline double coord_error(const GridPrediction& pred, const GridTarget& tgt,
                          const LossWeights& weights = {}) {
    detail::require_same_grid(pred, tgt, "coord_error");
    double center_sum = 0.0;
    double extent_sum = 0.0;
    double box_sum = 0.0;
    for (std::size_t i = 0; i < pred.slots.size(); ++i) {
        if (!tgt.slots[i].responsible) continue;
        const BoundingBox& p = pred.slots[i].box;
        const BoundingBox& g = tgt.slots[i].box;
        switch (weights.box_term) {
            case BoxTerm::SquaredCoord:
                center_sum += (p.cx - g.cx) * (p.cx - g.cx) + (p.cy - g.cy) * (p.cy - g.cy);
                extent_sum += (p.w - g.w) * (p.w - g.w) + (p.h - g.h) * (p.h - g.h);
                break;
            case BoxTerm::GIoU:
                box_sum += giou_loss(p, g);
                break;
            case BoxTerm::DIoU:
                box_sum += diou_loss(p, g);
                break;
            case BoxTerm::CIoU:
                box_sum += ciou_loss(p, g);
                break;
        }
    }
    if (weights.box_term == BoxTerm::SquaredCoord) {
        return weights.coord * center_sum + weights.coord * extent_sum;
    }
    return weights.coord * box_sum;
}

/**
 * @brief Confidence term: squared error on responsible slots, plus
 * weights.noobj times the squared confidence on all other slots
 * (their target confidence is zero).
 */
inline double iou_error(const GridPrediction& pred, const GridTarget& tgt,
                        const LossWeights& weights = {}) {
    detail::require_same_grid(pred, tgt, "iou_error");
    double obj_sum = 0.0;
    double noobj_sum = 0.0;
    for (std::size_t i = 0; i < pred.slots.size(); ++i) {
        const double c = pred.slots[i].conf;
        if (tgt.slots[i].responsible) {
            const double d = c - tgt.slots[i].conf;
            obj_sum += d * d;
        } else {
            noobj_sum += c * c;
        }
    }
    return obj_sum + weights.noobj * noobj_sum;
}

/** @brief Classification term: squared per-class error over responsible slots. */
inline double class_error(const GridPrediction& pred, const GridTarget& tgt) {
    detail::require_same_grid(pred, tgt, "class_error");
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.slots.size(); ++i) {
        if (!tgt.slots[i].responsible) continue;
        for (std::size_t c = 0; c < pred.classes; ++c) {
            const double d = pred.slots[i].probs[c] - tgt.slots[i].probs[c];
            sum += d * d;
        }
    }
    return sum;
}

/** Loss components and their sum. total is exactly coord + iou + cls. */
struct LossBreakdown {
    double coord = 0.0;
    double iou = 0.0;
    double cls = 0.0;
    double total = 0.0;
};

/** @brief Full grid loss: localization + confidence + classification. */
inline LossBreakdown total_loss(const GridPrediction& pred, const GridTarget& tgt,
                                const LossWeights& weights = {}) {
    LossBreakdown out;
    out.coord = coord_error(pred, tgt, weights);
    out.iou = iou_error(pred, tgt, weights);
    out.cls = class_error(pred, tgt);
    out.total = out.coord + out.iou + out.cls;
    return out;
}

}  // namespace fgd
