#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "fgd/dataio.hpp"
#include "fgd/postprocess.hpp"
#include "testutil.hpp"

namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = -1;
    std::string out;
    std::string err;
};

/** Run the installed binary with shell-quoted arguments, capturing streams. */
CliResult run_cli(const testutil::TempDir& dir, const std::string& args) {
    static int counter = 0;
    const std::string out_path = dir.file(".cli_out" + std::to_string(counter));
    const std::string err_path = dir.file(".cli_err" + std::to_string(counter));
    ++counter;
    const std::string cmd = std::string(FGD_CLI_PATH) + " " + args + " > '" + out_path +
                            "' 2> '" + err_path + "'";
    const int status = std::system(cmd.c_str());
    CliResult result;
    result.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.out = testutil::read_file(out_path);
    result.err = testutil::read_file(err_path);
    return result;
}

std::string head_shape(const nlohmann::json& doc, const std::string& id) {
    for (const auto& node : doc.at("nodes")) {
        if (node.at("id") == id) return node.at("shape");
    }
    return "<missing " + id + ">";
}

/**
 * A deterministic evaluation scene with known match counts: `tp` detections
 * sit exactly on ground-truth boxes, `fp` detections sit in an empty band
 * below them, and the remaining truths go unmatched. Objects are laid out on
 * a 16px grid across `images` annotation files so no two boxes overlap.
 */
void write_eval_scene(const testutil::TempDir& dir, std::size_t images, std::size_t gts,
                      std::size_t tp, std::size_t fp) {
    const std::string gt_dir = dir.file("gt");
    fs::create_directories(gt_dir);

    const std::size_t gt_share = (gts + images - 1) / images;
    const std::size_t fp_share = (fp + images - 1) / images;
    ASSERT_LE(gt_share, 22u * 21u);
    ASSERT_LE(fp_share, 47u);

    std::vector<fgd::Detection> dets;
    std::size_t gt_left = gts;
    std::size_t tp_left = tp;
    std::size_t fp_left = fp;
    for (std::size_t i = 0; i < images; ++i) {
        char name[16];
        std::snprintf(name, sizeof(name), "img%03zu", i);

        fgd::Annotation ann;
        ann.filename = std::string(name) + ".ppm";
        ann.width = 1024;
        ann.height = 512;
        const std::size_t n = std::min(gt_left, gt_share);
        for (std::size_t s = 0; s < n; ++s) {
            const long x = static_cast<long>(16 * (s % 22) + 1);
            const long y = static_cast<long>(16 * (s / 22) + 1);
            ann.objects.push_back({"leaf", x, y, x + 10, y + 10, false});
            if (tp_left > 0) {
                --tp_left;
                fgd::Detection det;
                det.image_id = name;
                det.class_id = 0;
                det.score = 0.9;
                det.box = fgd::BoundingBox::from_corners(
                    static_cast<double>(x), static_cast<double>(y),
                    static_cast<double>(x + 10), static_cast<double>(y + 10));
                dets.push_back(det);
            }
        }
        gt_left -= n;
        fgd::save_voc_xml(ann, gt_dir + "/" + name + ".xml");

        const std::size_t strays = std::min(fp_left, fp_share);
        for (std::size_t s = 0; s < strays; ++s) {
            fgd::Detection det;
            det.image_id = name;
            det.class_id = 0;
            det.score = 0.8;
            det.box = fgd::BoundingBox::from_corners(16.0 * s + 1, 401, 16.0 * s + 11, 411);
            dets.push_back(det);
        }
        fp_left -= strays;
    }
    ASSERT_EQ(gt_left, 0u);
    ASSERT_EQ(tp_left, 0u);
    ASSERT_EQ(fp_left, 0u);
    testutil::write_file(dir.file("dets.txt"), fgd::detections_to_text(dets));
}

/** A 64x64 run configuration plus matching zero or seeded weight file. */
std::string small_config(const testutil::TempDir& dir) {
    const std::string path = dir.file("small.ini");
    testutil::write_file(path,
                         "[net]\ninput_size = 64\nclasses = 1\nwidth_mult = 0.125\n");
    return path;
}

}  // namespace

TEST(CliSummary, DefaultNetworkReportsDocumentedShapes) {
    testutil::TempDir dir;
    const CliResult r =
        run_cli(dir, "--format json summary --classes 4 --input-size 416");
    ASSERT_EQ(r.code, 0) << r.err;
    const nlohmann::json doc = nlohmann::json::parse(r.out);
    EXPECT_EQ(doc.at("input"), "416x416x3");
    EXPECT_EQ(doc.at("total_params").get<std::uint64_t>(), 46776288u);
    const auto outputs = doc.at("outputs").get<std::vector<std::string>>();
    ASSERT_EQ(outputs.size(), 3u);
    EXPECT_EQ(head_shape(doc, outputs[0]), "52x52x27");
    EXPECT_EQ(head_shape(doc, outputs[1]), "26x26x27");
    EXPECT_EQ(head_shape(doc, outputs[2]), "13x13x27");
}

TEST(CliSummary, SmallNetworkGridsFollowTheStrides) {
    testutil::TempDir dir;
    const CliResult r = run_cli(
        dir, "--format json summary --classes 1 --input-size 64 --width-mult 0.125");
    ASSERT_EQ(r.code, 0) << r.err;
    const nlohmann::json doc = nlohmann::json::parse(r.out);
    const auto outputs = doc.at("outputs").get<std::vector<std::string>>();
    ASSERT_EQ(outputs.size(), 3u);
    EXPECT_EQ(head_shape(doc, outputs[0]), "8x8x18");
    EXPECT_EQ(head_shape(doc, outputs[1]), "4x4x18");
    EXPECT_EQ(head_shape(doc, outputs[2]), "2x2x18");
}

TEST(CliSummary, TextReportListsTotals) {
    testutil::TempDir dir;
    const CliResult r = run_cli(dir, "summary --classes 4 --input-size 416");
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("total params: 46776288"), std::string::npos);
    EXPECT_NE(r.out.find("outputs:"), std::string::npos);
}

TEST(CliSummary, RejectsInputSizeOffTheStrideGrid) {
    testutil::TempDir dir;
    const CliResult r = run_cli(dir, "summary --classes 4 --input-size 100");
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("multiple of 32"), std::string::npos);
}

TEST(CliSummary, ReadsNetworkFromConfigFile) {
    testutil::TempDir dir;
    const std::string cfg = small_config(dir);
    const CliResult r = run_cli(dir, "--config '" + cfg + "' --format json summary");
    ASSERT_EQ(r.code, 0) << r.err;
    const nlohmann::json doc = nlohmann::json::parse(r.out);
    EXPECT_EQ(doc.at("input"), "64x64x3");
}

TEST(CliGlobal, BadFlagsExitWithUsageError) {
    testutil::TempDir dir;
    EXPECT_EQ(run_cli(dir, "summary --clases 4").code, 2);
    EXPECT_EQ(run_cli(dir, "--format yaml summary").code, 2);
    EXPECT_EQ(run_cli(dir, "--threads 0 summary").code, 2);
    EXPECT_EQ(run_cli(dir, "").code, 2);
    EXPECT_EQ(run_cli(dir, "--threads auto summary --classes 1 --input-size 64").code, 0);
}

TEST(CliLoss, MatchesHandComputedValues) {
    testutil::TempDir dir;
    const CliResult giou = run_cli(dir, "loss --pred 0,0,1,1 --gt 2,2,3,3 --kind giou");
    ASSERT_EQ(giou.code, 0) << giou.err;
    EXPECT_EQ(giou.out, "1.777778\n");

    const CliResult same = run_cli(dir, "loss --pred 1,2,4,6 --gt 1,2,4,6 --kind ciou");
    ASSERT_EQ(same.code, 0) << same.err;
    EXPECT_EQ(same.out, "0.000000\n");

    const CliResult overlap = run_cli(dir, "loss --pred 0,0,2,2 --gt 1,1,3,3 --kind iou");
    ASSERT_EQ(overlap.code, 0) << overlap.err;
    EXPECT_EQ(overlap.out, "0.142857\n");
}

TEST(CliLoss, RejectsMalformedBoxes) {
    testutil::TempDir dir;
    EXPECT_EQ(run_cli(dir, "loss --pred 0,0,1 --gt 2,2,3,3 --kind giou").code, 2);
    EXPECT_EQ(run_cli(dir, "loss --pred 0,0,1,x --gt 2,2,3,3 --kind giou").code, 2);
    EXPECT_EQ(run_cli(dir, "loss --pred 0,0,1,1 --gt 2,2,3,3 --kind box").code, 2);
    // Zero-height ground truth violates the loss precondition.
    EXPECT_EQ(run_cli(dir, "loss --pred 0,0,1,1 --gt 0,2,5,2 --kind ciou").code, 2);
}

TEST(CliEval, SyntheticSceneReproducesHeadlineNumbers) {
    testutil::TempDir dir;
    write_eval_scene(dir, 25, 11090, 10780, 1153);
    const CliResult r = run_cli(dir, "--format json eval --gt '" + dir.file("gt") +
                                         "' --dets '" + dir.file("dets.txt") + "'");
    ASSERT_EQ(r.code, 0) << r.err;
    const nlohmann::json doc = nlohmann::json::parse(r.out);
    const auto& overall = doc.at("overall");
    EXPECT_EQ(overall.at("tp").get<int>(), 10780);
    EXPECT_EQ(overall.at("fp").get<int>(), 1153);
    EXPECT_EQ(overall.at("fn").get<int>(), 310);
    EXPECT_DOUBLE_EQ(overall.at("precision").get<double>(), 10780.0 / 11933.0);
    EXPECT_DOUBLE_EQ(overall.at("recall").get<double>(), 10780.0 / 11090.0);
    EXPECT_NEAR(overall.at("precision").get<double>(), 0.9033, 5e-4);
    EXPECT_NEAR(overall.at("recall").get<double>(), 0.9720, 1e-4);
    EXPECT_NEAR(overall.at("f1").get<double>(), 0.9364, 1e-4);
}

TEST(CliEval, EmptyDetectionsGiveAZeroReport) {
    testutil::TempDir dir;
    write_eval_scene(dir, 1, 4, 4, 0);
    testutil::write_file(dir.file("none.txt"), "");
    const CliResult r = run_cli(dir, "--format json eval --gt '" + dir.file("gt") +
                                         "' --dets '" + dir.file("none.txt") + "'");
    ASSERT_EQ(r.code, 0) << r.err;
    const nlohmann::json doc = nlohmann::json::parse(r.out);
    EXPECT_EQ(doc.at("overall").at("tp").get<int>(), 0);
    EXPECT_EQ(doc.at("overall").at("fn").get<int>(), 4);
    EXPECT_DOUBLE_EQ(doc.at("overall").at("map").get<double>(), 0.0);
}

TEST(CliEval, WritesReportAndCurveFiles) {
    testutil::TempDir dir;
    write_eval_scene(dir, 1, 4, 4, 0);
    const std::string report = dir.file("report.json");
    const std::string csv = dir.file("pr.csv");
    const CliResult r = run_cli(
        dir, "--format json eval --gt '" + dir.file("gt") + "' --dets '" +
                 dir.file("dets.txt") + "' --out '" + report + "' --pr-csv '" + csv + "'");
    ASSERT_EQ(r.code, 0) << r.err;
    const nlohmann::json doc = nlohmann::json::parse(testutil::read_file(report));
    EXPECT_EQ(doc.at("overall").at("tp").get<int>(), 4);
    EXPECT_EQ(testutil::read_file(csv).rfind("class_id,recall,precision", 0), 0u);
}

TEST(CliEval, BadInputsUseTheDocumentedExitCodes) {
    testutil::TempDir dir;
    write_eval_scene(dir, 1, 4, 4, 0);
    // Unreadable ground-truth directory or detections file: usage error.
    EXPECT_EQ(run_cli(dir, "eval --gt '" + dir.file("nope") + "' --dets '" +
                               dir.file("dets.txt") + "'")
                  .code,
              2);
    EXPECT_EQ(run_cli(dir, "eval --gt '" + dir.file("gt") + "' --dets '" +
                               dir.file("nope.txt") + "'")
                  .code,
              2);
    // Detections naming an image with no annotation: consistency error.
    testutil::write_file(dir.file("stray.txt"), "ghost 0 0.900000 1 1 4 4\n");
    EXPECT_EQ(run_cli(dir, "eval --gt '" + dir.file("gt") + "' --dets '" +
                               dir.file("stray.txt") + "'")
                  .code,
              3);
}

TEST(CliNms, FiltersThenSuppressesAndRoundTripsFiles) {
    testutil::TempDir dir;
    std::vector<fgd::Detection> dets;
    fgd::Detection a;
    a.image_id = "img";
    a.class_id = 0;
    a.score = 0.9;
    a.box = fgd::BoundingBox::from_corners(0, 0, 10, 10);
    fgd::Detection b = a;
    b.score = 0.8;
    b.box = fgd::BoundingBox::from_corners(3, 0, 13, 10);
    b.source_index = 1;
    fgd::Detection c = a;
    c.score = 0.7;
    c.box = fgd::BoundingBox::from_corners(6, 0, 16, 10);
    c.source_index = 2;
    fgd::Detection weak = a;
    weak.score = 0.1;
    weak.box = fgd::BoundingBox::from_corners(100, 100, 110, 110);
    weak.source_index = 3;
    dets = {a, b, c, weak};
    testutil::write_file(dir.file("in.txt"), fgd::detections_to_text(dets));

    const std::string out = dir.file("out.txt");
    const CliResult r = run_cli(dir, "nms --in '" + dir.file("in.txt") +
                                         "' --iou 0.5 --conf 0.3 --out '" + out + "'");
    ASSERT_EQ(r.code, 0) << r.err;
    const auto kept = fgd::detections_from_text(testutil::read_file(out));
    ASSERT_EQ(kept.size(), 2u);
    EXPECT_DOUBLE_EQ(kept[0].score, 0.9);
    EXPECT_DOUBLE_EQ(kept[1].score, 0.7);

    // JSON output format follows the file extension.
    const std::string out_json = dir.file("out.json");
    ASSERT_EQ(run_cli(dir, "nms --in '" + dir.file("in.txt") +
                               "' --iou 0.5 --conf 0.3 --out '" + out_json + "'")
                  .code,
              0);
    const auto from_json = fgd::detections_from_json(testutil::read_file(out_json));
    ASSERT_EQ(from_json.size(), 2u);
    EXPECT_DOUBLE_EQ(from_json[1].score, 0.7);
}

TEST(CliGradcheck, PassesAndIsSeedStable) {
    testutil::TempDir dir;
    const std::string args = "--seed 7 --format json gradcheck --samples 200";
    const CliResult first = run_cli(dir, args);
    ASSERT_EQ(first.code, 0) << first.err;
    const nlohmann::json doc = nlohmann::json::parse(first.out);
    EXPECT_TRUE(doc.at("pass").get<bool>());
    for (const auto& check : doc.at("checks")) {
        EXPECT_TRUE(check.at("pass").get<bool>()) << check.dump();
        EXPECT_LT(check.at("worst_rel_err").get<double>(), 1e-4);
    }
    const CliResult second = run_cli(dir, args);
    EXPECT_EQ(second.out, first.out);

    const CliResult text = run_cli(dir, "gradcheck --samples 100");
    ASSERT_EQ(text.code, 0) << text.err;
    EXPECT_NE(text.out.find("result: PASS"), std::string::npos);

    EXPECT_EQ(run_cli(dir, "gradcheck --samples 0").code, 2);
}

TEST(CliAugment, ExpandsADatasetAndWritesAManifest) {
    testutil::TempDir dir;
    const std::string data = dir.file("data");
    fs::create_directories(data);
    std::vector<fgd::DatasetItem> items;
    for (const std::string id : {"aphid", "beetle"}) {
        fgd::ImageBuffer img(12, 8);
        for (std::size_t i = 0; i < img.data.size(); ++i) {
            img.data[i] = static_cast<std::uint8_t>((i * 31 + id.size()) % 256);
        }
        fgd::write_ppm(img, data + "/" + id + ".ppm");
        fgd::Annotation ann;
        ann.filename = id + ".ppm";
        ann.width = 12;
        ann.height = 8;
        ann.objects.push_back({"leaf", 2, 1, 9, 6, false});
        fgd::save_voc_xml(ann, data + "/" + id + ".xml");
        items.push_back({id, id + ".ppm", id + ".xml", std::nullopt});
    }
    testutil::write_file(data + "/manifest.json", fgd::write_manifest(items));

    const std::string out_dir = dir.file("expanded");
    const CliResult r = run_cli(dir, "--format json augment --in '" + data +
                                         "/manifest.json' --out '" + out_dir + "'");
    ASSERT_EQ(r.code, 0) << r.err;
    const nlohmann::json doc = nlohmann::json::parse(r.out);
    EXPECT_EQ(doc.at("inputs").get<int>(), 2);
    EXPECT_EQ(doc.at("outputs").get<int>(), 20);
    EXPECT_EQ(doc.at("files_written").get<int>(), 41);

    const auto expanded = fgd::load_manifest(out_dir + "/manifest.json");
    ASSERT_EQ(expanded.size(), 20u);
    for (const fgd::DatasetItem& item : expanded) {
        const fgd::Annotation ann =
            fgd::load_voc_xml(out_dir + "/" + item.annotation);
        const fgd::ImageBuffer img = fgd::read_ppm(out_dir + "/" + item.image);
        EXPECT_EQ(ann.width, img.w);
        EXPECT_EQ(ann.height, img.h);
    }

    // A config file can swap in a different op list.
    testutil::write_file(dir.file("mirror.ini"), "[augment]\nops = mirror\n");
    const std::string out2 = dir.file("mirrored");
    const CliResult r2 =
        run_cli(dir, "--format json augment --in '" + data + "/manifest.json' --out '" +
                         out2 + "' --ops-config '" + dir.file("mirror.ini") + "'");
    ASSERT_EQ(r2.code, 0) << r2.err;
    EXPECT_EQ(nlohmann::json::parse(r2.out).at("outputs").get<int>(), 4);
}

TEST(CliDecode, ZeroWeightsYieldNothingAboveTheDefaultThreshold) {
    testutil::TempDir dir;
    const std::string cfg = small_config(dir);
    const std::string weights = dir.file("zero.fgdw");
    ASSERT_EQ(run_cli(dir, "--config '" + cfg + "' init-weights --zero --out '" +
                               weights + "'")
                  .code,
              0);
    fgd::write_ppm(fgd::ImageBuffer(64, 64, 96), dir.file("leaf.ppm"));

    const CliResult quiet =
        run_cli(dir, "--config '" + cfg + "' decode --weights '" + weights +
                         "' --image '" + dir.file("leaf.ppm") + "' --conf 0.3");
    ASSERT_EQ(quiet.code, 0) << quiet.err;
    EXPECT_TRUE(quiet.out.empty());

    // Zero logits put every slot at exactly sigmoid(0)^2 = 0.25.
    const CliResult loud =
        run_cli(dir, "--config '" + cfg + "' decode --weights '" + weights +
                         "' --image '" + dir.file("leaf.ppm") + "' --conf 0.2");
    ASSERT_EQ(loud.code, 0) << loud.err;
    const auto dets = fgd::detections_from_text(loud.out);
    ASSERT_FALSE(dets.empty());
    for (const fgd::Detection& det : dets) {
        EXPECT_DOUBLE_EQ(det.score, 0.25);
        EXPECT_EQ(det.image_id, "leaf");
    }
}

TEST(CliDecode, SeededWeightsDecodeIdenticallyAcrossRuns) {
    testutil::TempDir dir;
    const std::string cfg = small_config(dir);
    const std::string weights = dir.file("seeded.fgdw");
    ASSERT_EQ(run_cli(dir, "--config '" + cfg + "' --seed 5 init-weights --out '" +
                               weights + "'")
                  .code,
              0);
    fgd::ImageBuffer img(64, 64);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        img.data[i] = static_cast<std::uint8_t>((i * 131) % 256);
    }
    fgd::write_ppm(img, dir.file("leaf.ppm"));

    const std::string args = "--config '" + cfg + "' decode --weights '" + weights +
                             "' --image '" + dir.file("leaf.ppm") + "' --conf 0.01";
    const CliResult first = run_cli(dir, args);
    ASSERT_EQ(first.code, 0) << first.err;
    const CliResult second = run_cli(dir, args);
    EXPECT_EQ(second.out, first.out);
}

TEST(CliDecode, MismatchedWeightFileIsAUsageError) {
    testutil::TempDir dir;
    const std::string cfg = small_config(dir);
    const std::string weights = dir.file("small.fgdw");
    ASSERT_EQ(run_cli(dir, "--config '" + cfg + "' init-weights --zero --out '" +
                               weights + "'")
                  .code,
              0);
    fgd::write_ppm(fgd::ImageBuffer(416, 416, 10), dir.file("big.ppm"));
    // Default network, weights for the small one.
    const CliResult r = run_cli(dir, "decode --weights '" + weights + "' --image '" +
                                         dir.file("big.ppm") + "'");
    EXPECT_EQ(r.code, 2);
    EXPECT_FALSE(r.err.empty());
}
