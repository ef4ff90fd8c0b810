#include <gtest/gtest.h>

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <vector>

#include "fgd/yolo_loss.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using fgd::BoundingBox;
using fgd::BoxTerm;
using fgd::GridPrediction;
using fgd::GridTarget;
using fgd::LossBreakdown;
using fgd::LossWeights;
using testutil::Rng;

namespace {

/** Grid pair with every slot empty and confidences zero. */
struct GridPair {
    GridPrediction pred;
    GridTarget tgt;

    GridPair(std::size_t n, std::size_t b, std::size_t classes)
        : pred(n, b, classes), tgt(n, b, classes) {}
};

/** Mark a slot responsible with a ground-truth box and class. */
void set_truth(GridTarget& tgt, std::size_t cy, std::size_t cx, std::size_t j,
               const BoundingBox& box, std::size_t cls, double conf = 1.0) {
    fgd::TargetSlot& s = tgt.slot(cy, cx, j);
    s.responsible = true;
    s.box = box;
    s.conf = conf;
    std::fill(s.probs.begin(), s.probs.end(), 0.0);
    s.probs[cls] = 1.0;
}

/** Random grid pair where every responsible slot has plausible contents. */
GridPair random_pair(Rng& rng, std::size_t n, std::size_t b, std::size_t classes) {
    GridPair gp(n, b, classes);
    for (std::size_t i = 0; i < gp.pred.slots.size(); ++i) {
        fgd::PredSlot& p = gp.pred.slots[i];
        p.box = testutil::random_box(rng);
        p.conf = rng.unif(0.0, 1.0);
        for (double& v : p.probs) v = rng.unif(0.0, 1.0);

        if (rng.index(3) == 0) {
            fgd::TargetSlot& t = gp.tgt.slots[i];
            t.responsible = true;
            t.box = testutil::random_box(rng);
            t.conf = rng.unif(0.0, 1.0);
            t.probs[rng.index(classes)] = 1.0;
        }
    }
    return gp;
}

}  // namespace

TEST(YoloLoss, PerfectPredictionScoresZero) {
    GridPair gp(4, 2, 3);
    const BoundingBox box = BoundingBox::from_center(1.5, 2.5, 2.0, 1.0);
    set_truth(gp.tgt, 1, 2, 0, box, 1);
    gp.pred.slot(1, 2, 0).box = box;
    gp.pred.slot(1, 2, 0).conf = 1.0;
    gp.pred.slot(1, 2, 0).probs = {0.0, 1.0, 0.0};

    for (BoxTerm term :
         {BoxTerm::SquaredCoord, BoxTerm::GIoU, BoxTerm::DIoU, BoxTerm::CIoU}) {
        LossWeights w;
        w.box_term = term;
        const LossBreakdown out = fgd::total_loss(gp.pred, gp.tgt, w);
        EXPECT_DOUBLE_EQ(out.coord, 0.0);
        EXPECT_DOUBLE_EQ(out.iou, 0.0);
        EXPECT_DOUBLE_EQ(out.cls, 0.0);
        EXPECT_DOUBLE_EQ(out.total, 0.0);
    }
}

TEST(YoloLoss, CoordSubstitutionSingleSlot) {
    // One responsible slot whose center is off by 0.5 in x, default weight 5:
    // 5 * 0.5^2 = 1.25.
    GridPair gp(3, 1, 2);
    const BoundingBox truth = BoundingBox::from_center(1.5, 1.5, 1.0, 1.0);
    set_truth(gp.tgt, 1, 1, 0, truth, 0);
    gp.pred.slot(1, 1, 0).box = BoundingBox::from_center(2.0, 1.5, 1.0, 1.0);
    gp.pred.slot(1, 1, 0).conf = 1.0;
    gp.pred.slot(1, 1, 0).probs = {1.0, 0.0};

    LossWeights w;
    w.box_term = BoxTerm::SquaredCoord;
    EXPECT_DOUBLE_EQ(fgd::coord_error(gp.pred, gp.tgt, w), 1.25);
}

TEST(YoloLoss, NoObjectConfidencePenalty) {
    // A single empty slot predicting confidence 0.4 at default noobj weight:
    // 0.5 * 0.4^2 = 0.08.
    GridPair gp(1, 1, 1);
    gp.pred.slot(0, 0, 0).conf = 0.4;
    EXPECT_NEAR(fgd::iou_error(gp.pred, gp.tgt), 0.08, 1e-15);
}

TEST(YoloLoss, ClassTermSingleSlot) {
    GridPair gp(2, 1, 4);
    const BoundingBox box = BoundingBox::from_center(0.5, 0.5, 1.0, 1.0);
    set_truth(gp.tgt, 0, 0, 0, box, 2);
    gp.pred.slot(0, 0, 0).box = box;
    gp.pred.slot(0, 0, 0).probs = {0.0, 0.0, 0.9, 0.0};

    EXPECT_NEAR(fgd::class_error(gp.pred, gp.tgt), 0.01, 1e-15);
}

TEST(YoloLoss, ExtentTermUsesPlainDifferences) {
    // Extent error is (w - w_true)^2, not a transformed difference: a width
    // off by 2 at weight 5 contributes exactly 20.
    GridPair gp(1, 1, 1);
    const BoundingBox truth = BoundingBox::from_center(0.5, 0.5, 1.0, 1.0);
    set_truth(gp.tgt, 0, 0, 0, truth, 0);
    gp.pred.slot(0, 0, 0).box = BoundingBox::from_center(0.5, 0.5, 3.0, 1.0);
    gp.pred.slot(0, 0, 0).conf = 1.0;
    gp.pred.slot(0, 0, 0).probs = {1.0};

    LossWeights w;
    w.box_term = BoxTerm::SquaredCoord;
    EXPECT_DOUBLE_EQ(fgd::coord_error(gp.pred, gp.tgt, w), 20.0);
}

TEST(YoloLoss, MatchesFlatOracleOnRandomGrids) {
    Rng rng(51);
    for (BoxTerm term :
         {BoxTerm::SquaredCoord, BoxTerm::GIoU, BoxTerm::DIoU, BoxTerm::CIoU}) {
        for (int trial = 0; trial < 50; ++trial) {
            const GridPair gp = random_pair(rng, 3, 2, 3);
            LossWeights w;
            w.box_term = term;
            w.coord = rng.unif(0.5, 8.0);
            w.noobj = rng.unif(0.1, 1.0);

            const LossBreakdown lib = fgd::total_loss(gp.pred, gp.tgt, w);
            const oracles::FlatLoss flat = oracles::flat_total_loss(gp.pred, gp.tgt, w);
            EXPECT_TRUE(testutil::rel_close(lib.coord, flat.coord, 1e-12));
            EXPECT_TRUE(testutil::rel_close(lib.iou, flat.iou, 1e-12));
            EXPECT_TRUE(testutil::rel_close(lib.cls, flat.cls, 1e-12));
            EXPECT_TRUE(testutil::rel_close(lib.total, flat.total, 1e-12));
        }
    }
}

TEST(YoloLoss, TotalIsExactComponentSum) {
    Rng rng(52);
    for (int trial = 0; trial < 20; ++trial) {
        const GridPair gp = random_pair(rng, 4, 2, 2);
        const LossBreakdown out = fgd::total_loss(gp.pred, gp.tgt);
        EXPECT_EQ(out.total, out.coord + out.iou + out.cls);
    }
}

TEST(YoloLoss, DoublingCoordWeightDoublesCoordTerm) {
    Rng rng(53);
    for (BoxTerm term : {BoxTerm::SquaredCoord, BoxTerm::CIoU}) {
        const GridPair gp = random_pair(rng, 3, 2, 2);
        LossWeights w;
        w.box_term = term;
        w.coord = 5.0;
        const double base = fgd::coord_error(gp.pred, gp.tgt, w);
        w.coord = 10.0;
        EXPECT_DOUBLE_EQ(fgd::coord_error(gp.pred, gp.tgt, w), 2.0 * base);
    }
}

TEST(YoloLoss, InvariantUnderCellRelabeling) {
    Rng rng(54);
    const GridPair gp = random_pair(rng, 3, 2, 3);
    const LossBreakdown base = fgd::total_loss(gp.pred, gp.tgt);

    // Apply the same whole-cell permutation to both grids; sums only reorder.
    std::vector<std::size_t> cells(9);
    std::iota(cells.begin(), cells.end(), 0);
    for (std::size_t i = cells.size(); i > 1; --i) {
        std::swap(cells[i - 1], cells[rng.index(i)]);
    }
    GridPair shuffled(3, 2, 3);
    for (std::size_t cell = 0; cell < 9; ++cell) {
        for (std::size_t j = 0; j < 2; ++j) {
            shuffled.pred.slots[cells[cell] * 2 + j] = gp.pred.slots[cell * 2 + j];
            shuffled.tgt.slots[cells[cell] * 2 + j] = gp.tgt.slots[cell * 2 + j];
        }
    }
    const LossBreakdown out = fgd::total_loss(shuffled.pred, shuffled.tgt);
    EXPECT_TRUE(testutil::rel_close(out.coord, base.coord, 1e-12));
    EXPECT_TRUE(testutil::rel_close(out.iou, base.iou, 1e-12));
    EXPECT_TRUE(testutil::rel_close(out.cls, base.cls, 1e-12));
}

TEST(YoloLoss, ValidationRejectsBadGrids) {
    GridPair gp(2, 1, 2);
    const BoundingBox box = BoundingBox::from_center(0.5, 0.5, 1.0, 1.0);
    set_truth(gp.tgt, 0, 0, 0, box, 0);
    gp.pred.slot(0, 0, 0).box = box;
    gp.pred.slot(0, 0, 0).probs = {1.0, 0.0};

    GridTarget wrong_dims(3, 1, 2);
    EXPECT_THROW(fgd::total_loss(gp.pred, wrong_dims), fgd::ShapeError);

    GridPair conf_range(2, 1, 2);
    conf_range.pred.slot(0, 0, 0).conf = 1.5;
    EXPECT_THROW(fgd::total_loss(conf_range.pred, conf_range.tgt), fgd::ValueError);

    GridPair not_one_hot(2, 1, 2);
    set_truth(not_one_hot.tgt, 0, 0, 0, box, 0);
    not_one_hot.tgt.slot(0, 0, 0).probs = {0.5, 0.5};
    EXPECT_THROW(fgd::total_loss(not_one_hot.pred, not_one_hot.tgt), fgd::ValueError);

    GridPair degenerate(2, 1, 2);
    set_truth(degenerate.tgt, 0, 0, 0, BoundingBox::from_center(0.5, 0.5, 0.0, 1.0), 0);
    EXPECT_THROW(fgd::total_loss(degenerate.pred, degenerate.tgt), fgd::ValueError);

    GridPair ragged(2, 1, 2);
    ragged.pred.slots.pop_back();
    EXPECT_THROW(fgd::total_loss(ragged.pred, ragged.tgt), fgd::ShapeError);

    GridPair short_probs(2, 1, 2);
    short_probs.pred.slot(0, 0, 0).probs = {1.0};
    EXPECT_THROW(fgd::total_loss(short_probs.pred, short_probs.tgt), fgd::ShapeError);
}
