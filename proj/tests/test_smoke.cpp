#include <gtest/gtest.h>

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
#include "fgd/tensor.hpp"
#include "fgd/weights.hpp"
#include "fgd/yolo_loss.hpp"

TEST(Smoke, HeadersCompileAndLink) {
    const fgd::BoundingBox a = fgd::BoundingBox::from_corners(0.0, 0.0, 2.0, 2.0);
    EXPECT_DOUBLE_EQ(fgd::iou(a, a), 1.0);
}
