#pragma once

// Independent reference implementations the fast paths are checked against.
// Everything here favors obviousness over speed: straight loops, explicit
// bounds checks, no shared helpers with the library code.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "fgd/boxes.hpp"
#include "fgd/metrics.hpp"
#include "fgd/tensor.hpp"
#include "fgd/yolo_loss.hpp"

namespace oracles {

/** Six-loop convolution with explicit zero padding, output channel outermost. */
inline fgd::Tensor naive_conv2d(const fgd::Tensor& in, const fgd::ConvKernel& kernel,
                                std::size_t stride, std::size_t pad) {
    const std::size_t out_h = (in.h + 2 * pad - kernel.k) / stride + 1;
    const std::size_t out_w = (in.w + 2 * pad - kernel.k) / stride + 1;
    fgd::Tensor out(out_h, out_w, kernel.out_c);
    for (std::size_t co = 0; co < kernel.out_c; ++co) {
        for (std::size_t oy = 0; oy < out_h; ++oy) {
            for (std::size_t ox = 0; ox < out_w; ++ox) {
                double acc = 0.0;
                for (std::size_t ky = 0; ky < kernel.k; ++ky) {
                    for (std::size_t kx = 0; kx < kernel.k; ++kx) {
                        const long iy = static_cast<long>(oy * stride + ky) -
                                        static_cast<long>(pad);
                        const long ix = static_cast<long>(ox * stride + kx) -
                                        static_cast<long>(pad);
                        if (iy < 0 || ix < 0 || iy >= static_cast<long>(in.h) ||
                            ix >= static_cast<long>(in.w)) {
                            continue;
                        }
                        for (std::size_t ci = 0; ci < in.c; ++ci) {
                            acc += static_cast<double>(
                                       in.at(static_cast<std::size_t>(iy),
                                             static_cast<std::size_t>(ix), ci)) *
                                   static_cast<double>(kernel.at(ky, kx, ci, co));
                        }
                    }
                }
                out.at(oy, ox, co) = static_cast<float>(acc);
            }
        }
    }
    return out;
}

/** Window-scan max pooling; padded positions contribute -infinity. */
inline fgd::Tensor naive_maxpool2d(const fgd::Tensor& in, std::size_t k,
                                   std::size_t stride, std::size_t pad) {
    const std::size_t out_h = (in.h + 2 * pad - k) / stride + 1;
    const std::size_t out_w = (in.w + 2 * pad - k) / stride + 1;
    fgd::Tensor out(out_h, out_w, in.c);
    for (std::size_t oy = 0; oy < out_h; ++oy) {
        for (std::size_t ox = 0; ox < out_w; ++ox) {
            for (std::size_t c = 0; c < in.c; ++c) {
                float best = -std::numeric_limits<float>::infinity();
                for (std::size_t ky = 0; ky < k; ++ky) {
                    for (std::size_t kx = 0; kx < k; ++kx) {
                        const long iy = static_cast<long>(oy * stride + ky) -
                                        static_cast<long>(pad);
                        const long ix = static_cast<long>(ox * stride + kx) -
                                        static_cast<long>(pad);
                        if (iy < 0 || ix < 0 || iy >= static_cast<long>(in.h) ||
                            ix >= static_cast<long>(in.w)) {
                            continue;
                        }
                        best = std::max(best, in.at(static_cast<std::size_t>(iy),
                                                    static_cast<std::size_t>(ix), c));
                    }
                }
                out.at(oy, ox, c) = best;
            }
        }
    }
    return out;
}

/**
 * Rasterized IoU: cover the joint bounding region with a fine grid and count
 * cell centers falling inside each box. Accuracy is O(1/cells_per_axis).
 */
inline double raster_iou(const fgd::BoundingBox& a, const fgd::BoundingBox& b,
                         std::size_t cells_per_axis = 2000) {
    const double x_lo = std::min(a.x1(), b.x1());
    const double x_hi = std::max(a.x2(), b.x2());
    const double y_lo = std::min(a.y1(), b.y1());
    const double y_hi = std::max(a.y2(), b.y2());
    const double dx = (x_hi - x_lo) / static_cast<double>(cells_per_axis);
    const double dy = (y_hi - y_lo) / static_cast<double>(cells_per_axis);
    if (dx <= 0.0 || dy <= 0.0) return 0.0;

    std::size_t in_a = 0;
    std::size_t in_b = 0;
    std::size_t in_both = 0;
    for (std::size_t iy = 0; iy < cells_per_axis; ++iy) {
        const double y = y_lo + (static_cast<double>(iy) + 0.5) * dy;
        for (std::size_t ix = 0; ix < cells_per_axis; ++ix) {
            const double x = x_lo + (static_cast<double>(ix) + 0.5) * dx;
            const bool hit_a = x >= a.x1() && x <= a.x2() && y >= a.y1() && y <= a.y2();
            const bool hit_b = x >= b.x1() && x <= b.x2() && y >= b.y1() && y <= b.y2();
            in_a += hit_a;
            in_b += hit_b;
            in_both += hit_a && hit_b;
        }
    }
    const std::size_t in_union = in_a + in_b - in_both;
    if (in_union == 0) return 0.0;
    return static_cast<double>(in_both) / static_cast<double>(in_union);
}

/** Central finite difference of a scalar function of one variable. */
template <typename Fn>
double fd_central(Fn&& fn, double x, double h) {
    return (fn(x + h) - fn(x - h)) / (2.0 * h);
}

/**
 * Loss computed slot-by-slot in one flat pass, anchor-major, with the three
 * components accumulated straight from the definitions.
 */
struct FlatLoss {
    double coord = 0.0;
    double iou = 0.0;
    double cls = 0.0;
    double total = 0.0;
};

inline FlatLoss flat_total_loss(const fgd::GridPrediction& pred, const fgd::GridTarget& tgt,
                                const fgd::LossWeights& weights) {
    FlatLoss out;
    double coord_core = 0.0;
    double obj_sum = 0.0;
    double noobj_sum = 0.0;
    for (std::size_t j = 0; j < pred.b; ++j) {
        for (std::size_t cy = 0; cy < pred.n; ++cy) {
            for (std::size_t cx = 0; cx < pred.n; ++cx) {
                const std::size_t slot = (cy * pred.n + cx) * pred.b + j;
                const fgd::PredSlot& p = pred.slots[slot];
                const fgd::TargetSlot& t = tgt.slots[slot];
                if (t.responsible) {
                    switch (weights.box_term) {
                        case fgd::BoxTerm::SquaredCoord: {
                            const double dx = p.box.cx - t.box.cx;
                            const double dy = p.box.cy - t.box.cy;
                            const double dw = p.box.w - t.box.w;
                            const double dh = p.box.h - t.box.h;
                            coord_core += dx * dx + dy * dy + dw * dw + dh * dh;
                            break;
                        }
                        case fgd::BoxTerm::GIoU:
                            coord_core += fgd::giou_loss(p.box, t.box);
                            break;
                        case fgd::BoxTerm::DIoU:
                            coord_core += fgd::diou_loss(p.box, t.box);
                            break;
                        case fgd::BoxTerm::CIoU:
                            coord_core += fgd::ciou_loss(p.box, t.box);
                            break;
                    }
                    const double dc = p.conf - t.conf;
                    obj_sum += dc * dc;
                    for (std::size_t c = 0; c < pred.classes; ++c) {
                        const double d = p.probs[c] - t.probs[c];
                        out.cls += d * d;
                    }
                } else {
                    noobj_sum += p.conf * p.conf;
                }
            }
        }
    }
    out.coord = weights.coord * coord_core;
    out.iou = obj_sum + weights.noobj * noobj_sum;
    out.total = out.coord + out.iou + out.cls;
    return out;
}

/**
 * All-point interpolated AP by exhaustive per-segment search: for every curve
 * point, the interpolated precision is the maximum precision at any recall
 * >= its recall, found by a fresh forward scan. Terms are added in ascending
 * recall order, matching the library's summation order term for term.
 */
inline double segment_ap(const std::vector<fgd::PrPoint>& curve) {
    double ap = 0.0;
    double prev_recall = 0.0;
    for (std::size_t k = 0; k < curve.size(); ++k) {
        double envelope = 0.0;
        for (std::size_t j = k; j < curve.size(); ++j) {
            envelope = std::max(envelope, curve[j].precision);
        }
        ap += (curve[k].recall - prev_recall) * envelope;
        prev_recall = curve[k].recall;
    }
    return ap;
}

}  // namespace oracles
