#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <string>

#include "fgd/activations.hpp"
#include "fgd/errors.hpp"

namespace fgd {

/**
 * @brief Axis-aligned box in center form: center (cx, cy), extents (w, h).
 *
 * Extents are never negative. Corner accessors derive the usual
 * (x1, y1, x2, y2) with x1 <= x2 and y1 <= y2.
 */
struct BoundingBox {
    double cx = 0.0;
    double cy = 0.0;
    double w = 0.0;
    double h = 0.0;

    static BoundingBox from_center(double cx, double cy, double w, double h) {
        return BoundingBox{cx, cy, w, h};
    }

    static BoundingBox from_corners(double x1, double y1, double x2, double y2) {
        return BoundingBox{(x1 + x2) / 2.0, (y1 + y2) / 2.0, x2 - x1, y2 - y1};
    }

    double x1() const { return cx - w / 2.0; }
    double y1() const { return cy - h / 2.0; }
    double x2() const { return cx + w / 2.0; }
    double y2() const { return cy + h / 2.0; }
    double area() const { return w * h; }
};

/** Gradient of a box loss with respect to the predicted (cx, cy, w, h). */
struct BoxGrad {
    double cx = 0.0;
    double cy = 0.0;
    double w = 0.0;
    double h = 0.0;
};

/**
 * @brief Grid-cell context for decoding raw head offsets into a box.
 *
 * prior_w / prior_h are anchor extents expressed in grid units
 * (pixels divided by the head's stride).
 */
struct DecodeContext {
    std::size_t cell_x = 0;
    std::size_t cell_y = 0;
    double prior_w = 1.0;
    double prior_h = 1.0;
    std::size_t grid = 1;
    double stride = 1.0;
};

namespace detail {

inline void require_box(const BoundingBox& b, const char* who, const char* name) {
    if (!(b.w >= 0.0) || !(b.h >= 0.0)) {
        throw ValueError(std::string(who) + ": " + name + " has negative extent (w=" +
                         std::to_string(b.w) + ", h=" + std::to_string(b.h) + ")");
    }
}

inline void require_positive_area(const BoundingBox& b, const char* who, const char* name) {
    require_box(b, who, name);
    if (!(b.w > 0.0) || !(b.h > 0.0)) {
        throw ValueError(std::string(who) + ": " + name + " is degenerate (w=" +
                         std::to_string(b.w) + ", h=" + std::to_string(b.h) + ")");
    }
}

/**
 * Shared geometry for the IoU-family losses: intersection, union, enclosing
 * box, plus partial derivatives of each with respect to the predicted
 * (cx, cy, w, h). Tie configurations (an exactly shared edge) are
 * non-differentiable; derivatives there pick one one-sided limit.
 */
struct BoxPairGeom {
    double inter = 0.0, uni = 0.0, iou = 0.0;
    double cw = 0.0, ch = 0.0;
    std::array<double, 4> d_inter{}, d_uni{}, d_iou{}, d_cw{}, d_ch{};

    BoxPairGeom(const BoundingBox& p, const BoundingBox& g) {
        const double px1 = p.x1(), py1 = p.y1(), px2 = p.x2(), py2 = p.y2();
        const double gx1 = g.x1(), gy1 = g.y1(), gx2 = g.x2(), gy2 = g.y2();

        // Partials of pred corners wrt (cx, cy, w, h).
        const std::array<double, 4> d_px1{1.0, 0.0, -0.5, 0.0};
        const std::array<double, 4> d_px2{1.0, 0.0, 0.5, 0.0};
        const std::array<double, 4> d_py1{0.0, 1.0, 0.0, -0.5};
        const std::array<double, 4> d_py2{0.0, 1.0, 0.0, 0.5};

        const double iw = std::min(px2, gx2) - std::max(px1, gx1);
        const double ih = std::min(py2, gy2) - std::max(py1, gy1);

        std::array<double, 4> d_iw{}, d_ih{};
        if (iw > 0.0 && ih > 0.0) {
            for (int i = 0; i < 4; ++i) {
                d_iw[i] = (px2 < gx2 ? d_px2[i] : 0.0) - (px1 > gx1 ? d_px1[i] : 0.0);
                d_ih[i] = (py2 < gy2 ? d_py2[i] : 0.0) - (py1 > gy1 ? d_py1[i] : 0.0);
            }
            inter = iw * ih;
        }

        const std::array<double, 4> d_area_p{0.0, 0.0, p.h, p.w};
        uni = p.area() + g.area() - inter;
        for (int i = 0; i < 4; ++i) {
            d_inter[i] = (inter > 0.0) ? ih * d_iw[i] + iw * d_ih[i] : 0.0;
            d_uni[i] = d_area_p[i] - d_inter[i];
        }

        if (uni > 0.0) {
            iou = inter / uni;
            for (int i = 0; i < 4; ++i) {
                d_iou[i] = (d_inter[i] * uni - inter * d_uni[i]) / (uni * uni);
            }
        }

        cw = std::max(px2, gx2) - std::min(px1, gx1);
        ch = std::max(py2, gy2) - std::min(py1, gy1);
        for (int i = 0; i < 4; ++i) {
            d_cw[i] = (px2 > gx2 ? d_px2[i] : 0.0) - (px1 < gx1 ? d_px1[i] : 0.0);
            d_ch[i] = (py2 > gy2 ? d_py2[i] : 0.0) - (py1 < gy1 ? d_py1[i] : 0.0);
        }
    }
};

/** Aspect-ratio term of CIoU and its partials wrt predicted w and h. */
struct AspectTerm {
    double v = 0.0;
    double dv_dw = 0.0;
    double dv_dh = 0.0;

    AspectTerm(const BoundingBox& p, const BoundingBox& g) {
        constexpr double kFourOverPi2 = 4.0 / (M_PI * M_PI);
        const double diff = std::atan(g.w / g.h) - std::atan(p.w / p.h);
        v = kFourOverPi2 * diff * diff;
        const double denom = p.w * p.w + p.h * p.h;
        dv_dw = -2.0 * kFourOverPi2 * diff * (p.h / denom);
        dv_dh = 2.0 * kFourOverPi2 * diff * (p.w / denom);
    }
};

}  // namespace detail

/**
 * @brief Intersection over union of two boxes, in [0, 1].
 *
 * Boxes that merely touch (zero-width or zero-height overlap) score 0.
 * An empty union (two zero-area boxes) also scores 0.
 */
inline double iou(const BoundingBox& a, const BoundingBox& b) {
    detail::require_box(a, "iou", "first box");
    detail::require_box(b, "iou", "second box");
    const double iw = std::min(a.x2(), b.x2()) - std::max(a.x1(), b.x1());
    const double ih = std::min(a.y2(), b.y2()) - std::max(a.y1(), b.y1());
    if (iw <= 0.0 || ih <= 0.0) return 0.0;
    const double inter = iw * ih;
    const double uni = a.area() + b.area() - inter;
    if (uni <= 0.0) return 0.0;
    return inter / uni;
}

/**
 * @brief GIoU loss: 1 - IoU + (|C| - |union|) / |C| where C encloses both boxes.
 *
 * Ground truth must have positive area. Range is [0, 2).
 */
inline double giou_loss(const BoundingBox& pred, const BoundingBox& gt) {
    detail::require_box(pred, "giou_loss", "pred");
    detail::require_positive_area(gt, "giou_loss", "gt");
    const detail::BoxPairGeom geom(pred, gt);
    const double c_area = geom.cw * geom.ch;
    return 1.0 - geom.iou + (c_area - geom.uni) / c_area;
}

/** @brief Analytic gradient of giou_loss with respect to the predicted box. */
inline BoxGrad giou_grad(const BoundingBox& pred, const BoundingBox& gt) {
    detail::require_box(pred, "giou_grad", "pred");
    detail::require_positive_area(gt, "giou_grad", "gt");
    const detail::BoxPairGeom geom(pred, gt);
    const double c_area = geom.cw * geom.ch;
    BoxGrad out;
    double* g = &out.cx;
    for (int i = 0; i < 4; ++i) {
        const double d_c = geom.ch * geom.d_cw[i] + geom.cw * geom.d_ch[i];
        const double d_pen = -(geom.d_uni[i] * c_area - geom.uni * d_c) / (c_area * c_area);
        g[i] = -geom.d_iou[i] + d_pen;
    }
    return out;
}

/**
 * @brief DIoU loss: 1 - IoU + rho^2 / c^2, where rho is the center distance
 * and c the diagonal of the enclosing box.
 */
inline double diou_loss(const BoundingBox& pred, const BoundingBox& gt) {
    detail::require_box(pred, "diou_loss", "pred");
    detail::require_positive_area(gt, "diou_loss", "gt");
    const detail::BoxPairGeom geom(pred, gt);
    const double rho2 = (pred.cx - gt.cx) * (pred.cx - gt.cx) +
                        (pred.cy - gt.cy) * (pred.cy - gt.cy);
    const double c2 = geom.cw * geom.cw + geom.ch * geom.ch;
    return 1.0 - geom.iou + rho2 / c2;
}

/** @brief Analytic gradient of diou_loss with respect to the predicted box. */
inline BoxGrad diou_grad(const BoundingBox& pred, const BoundingBox& gt) {
    detail::require_box(pred, "diou_grad", "pred");
    detail::require_positive_area(gt, "diou_grad", "gt");
    const detail::BoxPairGeom geom(pred, gt);
    const double rho2 = (pred.cx - gt.cx) * (pred.cx - gt.cx) +
                        (pred.cy - gt.cy) * (pred.cy - gt.cy);
    const double c2 = geom.cw * geom.cw + geom.ch * geom.ch;
    const std::array<double, 4> d_rho2{2.0 * (pred.cx - gt.cx), 2.0 * (pred.cy - gt.cy),
                                       0.0, 0.0};
    BoxGrad out;
    double* g = &out.cx;
    for (int i = 0; i < 4; ++i) {
        const double d_c2 = 2.0 * geom.cw * geom.d_cw[i] + 2.0 * geom.ch * geom.d_ch[i];
        g[i] = -geom.d_iou[i] + (d_rho2[i] * c2 - rho2 * d_c2) / (c2 * c2);
    }
    return out;
}

/**
 * @brief The aspect-ratio disagreement term v of the CIoU penalty:
 * (4/pi^2) * (atan(w_gt/h_gt) - atan(w/h))^2. Both boxes need positive extents.
 */
inline double aspect_term(const BoundingBox& pred, const BoundingBox& gt) {
    detail::require_positive_area(pred, "aspect_term", "pred");
    detail::require_positive_area(gt, "aspect_term", "gt");
    return detail::AspectTerm(pred, gt).v;
}

/**
 * @brief The CIoU trade-off coefficient alpha = v / ((1 - IoU) + v) at this
 * configuration. Gradients hold it fixed, so a finite-difference check of
 * ciou_grad must differentiate diou_loss(p, gt) + alpha0 * aspect_term(p, gt)
 * with alpha0 frozen at the unperturbed pair.
 */
inline double ciou_alpha(const BoundingBox& pred, const BoundingBox& gt) {
    detail::require_positive_area(pred, "ciou_alpha", "pred");
    detail::require_positive_area(gt, "ciou_alpha", "gt");
    const detail::BoxPairGeom geom(pred, gt);
    const double v = detail::AspectTerm(pred, gt).v;
    const double trade = (1.0 - geom.iou) + v;
    return trade > 0.0 ? v / trade : 0.0;
}

/**
 * @brief CIoU loss: DIoU plus alpha * v, where v measures aspect-ratio
 * disagreement and alpha = v / ((1 - IoU) + v).
 *
 * Both boxes need strictly positive extents (the aspect term divides by them).
 */
inline double ciou_loss(const BoundingBox& pred, const BoundingBox& gt) {
    detail::require_positive_area(pred, "ciou_loss", "pred");
    detail::require_positive_area(gt, "ciou_loss", "gt");
    const detail::BoxPairGeom geom(pred, gt);
    const double rho2 = (pred.cx - gt.cx) * (pred.cx - gt.cx) +
                        (pred.cy - gt.cy) * (pred.cy - gt.cy);
    const double c2 = geom.cw * geom.cw + geom.ch * geom.ch;
    const detail::AspectTerm asp(pred, gt);
    const double trade = (1.0 - geom.iou) + asp.v;
    const double alpha = trade > 0.0 ? asp.v / trade : 0.0;
    return 1.0 - geom.iou + rho2 / c2 + alpha * asp.v;
}

/**
 * @brief Analytic gradient of ciou_loss with respect to the predicted box.
 *
 * alpha is treated as a constant during differentiation, matching the
 * convention the loss was published with.
 */
inline BoxGrad ciou_grad(const BoundingBox& pred, const BoundingBox& gt) {
    detail::require_positive_area(pred, "ciou_grad", "pred");
    detail::require_positive_area(gt, "ciou_grad", "gt");
    const detail::BoxPairGeom geom(pred, gt);
    const double rho2 = (pred.cx - gt.cx) * (pred.cx - gt.cx) +
                        (pred.cy - gt.cy) * (pred.cy - gt.cy);
    const double c2 = geom.cw * geom.cw + geom.ch * geom.ch;
    const std::array<double, 4> d_rho2{2.0 * (pred.cx - gt.cx), 2.0 * (pred.cy - gt.cy),
                                       0.0, 0.0};
    const detail::AspectTerm asp(pred, gt);
    const double trade = (1.0 - geom.iou) + asp.v;
    const double alpha = trade > 0.0 ? asp.v / trade : 0.0;

    BoxGrad out;
    double* g = &out.cx;
    for (int i = 0; i < 4; ++i) {
        const double d_c2 = 2.0 * geom.cw * geom.d_cw[i] + 2.0 * geom.ch * geom.d_ch[i];
        const double d_v = (i == 2) ? asp.dv_dw : (i == 3) ? asp.dv_dh : 0.0;
        g[i] = -geom.d_iou[i] + (d_rho2[i] * c2 - rho2 * d_c2) / (c2 * c2) + alpha * d_v;
    }
    return out;
}

/**
 * @brief Decode raw head offsets (tx, ty, tw, th) into a box in grid units.
 *
 * Center: sigmoid(tx) + cell_x, sigmoid(ty) + cell_y. Extents: prior * e^t.
 * Multiply the result by ctx.stride for pixel units.
 */
inline BoundingBox decode_box(double tx, double ty, double tw, double th,
                              const DecodeContext& ctx) {
    if (!std::isfinite(tx) || !std::isfinite(ty) || !std::isfinite(tw) ||
        !std::isfinite(th)) {
        throw ValueError("decode_box: non-finite raw offsets");
    }
    if (ctx.grid == 0 || ctx.cell_x >= ctx.grid || ctx.cell_y >= ctx.grid) {
        throw ValueError("decode_box: cell (" + std::to_string(ctx.cell_x) + ", " +
                         std::to_string(ctx.cell_y) + ") outside grid " +
                         std::to_string(ctx.grid));
    }
    if (!(ctx.prior_w > 0.0) || !(ctx.prior_h > 0.0)) {
        throw ValueError("decode_box: prior extents must be positive");
    }
    BoundingBox b;
    b.cx = detail::sigmoid(tx) + static_cast<double>(ctx.cell_x);
    b.cy = detail::sigmoid(ty) + static_cast<double>(ctx.cell_y);
    b.w = ctx.prior_w * std::exp(tw);
    b.h = ctx.prior_h * std::exp(th);
    return b;
}

/** @brief Confidence score: P(object) times the box-fit IoU. Both factors in [0, 1]. */
inline double confidence(double p_object, double iou_value) {
    if (!(p_object >= 0.0) || !(p_object <= 1.0)) {
        throw ValueError("confidence: p_object outside [0, 1]");
    }
    if (!(iou_value >= 0.0) || !(iou_value <= 1.0)) {
        throw ValueError("confidence: iou outside [0, 1]");
    }
    return p_object * iou_value;
}

}  // namespace fgd
