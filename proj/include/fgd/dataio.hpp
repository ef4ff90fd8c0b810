#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <json.hpp>

#include "fgd/boxes.hpp"
#include "fgd/errors.hpp"
#include "fgd/metrics.hpp"
#include "fgd/tensor.hpp"

namespace fgd {

/**
 * @brief One annotated object. Corners are 0-based pixel indices with
 * x1 < x2 and y1 < y2, inside [0, width) x [0, height). The on-disk VOC
 * convention is 1-based; parsing and writing apply the shift explicitly.
 */
struct ObjectAnnotation {
    std::string class_name;
    long x1 = 0;
    long y1 = 0;
    long x2 = 0;
    long y2 = 0;
    bool difficult = false;

    bool operator==(const ObjectAnnotation& o) const {
        return class_name == o.class_name && x1 == o.x1 && y1 == o.y1 && x2 == o.x2 &&
               y2 == o.y2 && difficult == o.difficult;
    }
};

/** @brief One image's annotation: file name, dimensions, objects. */
struct Annotation {
    std::string filename;
    std::size_t width = 0;
    std::size_t height = 0;
    std::size_t depth = 3;
    std::vector<ObjectAnnotation> objects;

    bool operator==(const Annotation& o) const {
        return filename == o.filename && width == o.width && height == o.height &&
               depth == o.depth && objects == o.objects;
    }
};

/** @brief 8-bit RGB image, row-major, three channels interleaved. */
struct ImageBuffer {
    std::size_t w = 0;
    std::size_t h = 0;
    std::vector<std::uint8_t> data;

    ImageBuffer() = default;

    ImageBuffer(std::size_t w_, std::size_t h_, std::uint8_t fill = 0)
        : w(w_), h(h_), data(w_ * h_ * 3, fill) {}

    std::uint8_t& at(std::size_t y, std::size_t x, std::size_t ch) {
        return data[(y * w + x) * 3 + ch];
    }

    std::uint8_t at(std::size_t y, std::size_t x, std::size_t ch) const {
        return data[(y * w + x) * 3 + ch];
    }
};

// ---------------------------------------------------------------------------
// VOC XML annotations
// ---------------------------------------------------------------------------

namespace detail {

inline long get_coord(const boost::property_tree::ptree& bndbox, const char* key) {
    auto v = bndbox.get_optional<long>(key);
    if (!v) {
        throw DataError(DataError::Kind::MissingField,
                        std::string("annotation: bndbox is missing <") + key + ">");
    }
    return *v;
}

}  // namespace detail

/**
 * @brief Parse a VOC annotation document. Disk coordinates are 1-based with
 * inclusive corners; the result is shifted to 0-based. Boxes must sit inside
 * the image and have positive extent, and the size element is mandatory.
 */
inline Annotation parse_voc_xml(const std::string& xml_text) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        std::istringstream stream(xml_text);
        pt::read_xml(stream, tree);
    } catch (const pt::xml_parser_error& e) {
        throw DataError(DataError::Kind::MalformedXml,
                        std::string("annotation: malformed XML: ") + e.what());
    }

    auto root = tree.get_child_optional("annotation");
    if (!root) {
        throw DataError(DataError::Kind::MalformedXml,
                        "annotation: no <annotation> root element");
    }

    Annotation ann;
    auto filename = root->get_optional<std::string>("filename");
    if (!filename || filename->empty()) {
        throw DataError(DataError::Kind::MissingField, "annotation: missing <filename>");
    }
    ann.filename = *filename;

    auto size = root->get_child_optional("size");
    if (!size) {
        throw DataError(DataError::Kind::MissingField, "annotation: missing <size>");
    }
    auto width = size->get_optional<long>("width");
    auto height = size->get_optional<long>("height");
    if (!width || !height || *width <= 0 || *height <= 0) {
        throw DataError(DataError::Kind::MissingField,
                        "annotation: <size> needs positive <width> and <height>");
    }
    ann.width = static_cast<std::size_t>(*width);
    ann.height = static_cast<std::size_t>(*height);
    ann.depth = static_cast<std::size_t>(size->get<long>("depth", 3));

    for (const auto& [key, child] : *root) {
        if (key != "object") continue;
        ObjectAnnotation obj;
        auto name = child.get_optional<std::string>("name");
        if (!name || name->empty()) {
            throw DataError(DataError::Kind::MissingField, "annotation: object missing <name>");
        }
        obj.class_name = *name;
        obj.difficult = child.get<long>("difficult", 0) != 0;

        auto bndbox = child.get_child_optional("bndbox");
        if (!bndbox) {
            throw DataError(DataError::Kind::MissingField,
                            "annotation: object missing <bndbox>");
        }
        const long xmin = detail::get_coord(*bndbox, "xmin");
        const long ymin = detail::get_coord(*bndbox, "ymin");
        const long xmax = detail::get_coord(*bndbox, "xmax");
        const long ymax = detail::get_coord(*bndbox, "ymax");
        if (xmin >= xmax || ymin >= ymax) {
            throw DataError(DataError::Kind::DegenerateBox,
                            "annotation: degenerate box (" + std::to_string(xmin) + ", " +
                                std::to_string(ymin) + ", " + std::to_string(xmax) + ", " +
                                std::to_string(ymax) + ")");
        }
        if (xmin < 1 || ymin < 1 || xmax > *width || ymax > *height) {
            throw DataError(DataError::Kind::OutOfBounds,
                            "annotation: box (" + std::to_string(xmin) + ", " +
                                std::to_string(ymin) + ", " + std::to_string(xmax) + ", " +
                                std::to_string(ymax) + ") outside image " +
                                std::to_string(*width) + "x" + std::to_string(*height));
        }
        obj.x1 = xmin - 1;
        obj.y1 = ymin - 1;
        obj.x2 = xmax - 1;
        obj.y2 = ymax - 1;
        ann.objects.push_back(std::move(obj));
    }
    return ann;
}

/** @brief Render an annotation as VOC XML, shifting corners back to 1-based. */
inline std::string write_voc_xml(const Annotation& ann) {
    namespace pt = boost::property_tree;
    pt::ptree root;
    root.put("filename", ann.filename);
    root.put("size.width", ann.width);
    root.put("size.height", ann.height);
    root.put("size.depth", ann.depth);
    for (const ObjectAnnotation& obj : ann.objects) {
        pt::ptree node;
        node.put("name", obj.class_name);
        node.put("difficult", obj.difficult ? 1 : 0);
        node.put("bndbox.xmin", obj.x1 + 1);
        node.put("bndbox.ymin", obj.y1 + 1);
        node.put("bndbox.xmax", obj.x2 + 1);
        node.put("bndbox.ymax", obj.y2 + 1);
        root.add_child("object", node);
    }
    pt::ptree doc;
    doc.add_child("annotation", root);

    std::ostringstream out;
    pt::write_xml(out, doc,
                  pt::xml_writer_settings<std::string>(' ', 2));
    return out.str();
}

/** @brief Read and parse a VOC annotation file. */
inline Annotation load_voc_xml(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError(DataError::Kind::MalformedXml,
                        "annotation: cannot open '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_voc_xml(buf.str());
}

/** @brief Write an annotation file. */
inline void save_voc_xml(const Annotation& ann, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << write_voc_xml(ann))) {
        throw DataError(DataError::Kind::WriteFailed,
                        "annotation: cannot write '" + path + "'");
    }
}

// ---------------------------------------------------------------------------
// Class ids and ground-truth conversion
// ---------------------------------------------------------------------------

/**
 * @brief Stable class numbering: the sorted unique class names across all
 * annotations map to ids 0..K-1 in alphabetical order.
 */
inline std::map<std::string, int> make_class_map(const std::vector<Annotation>& annotations) {
    std::vector<std::string> names;
    for (const Annotation& ann : annotations) {
        for (const ObjectAnnotation& obj : ann.objects) {
            names.push_back(obj.class_name);
        }
    }
    std::sort(names.begin(), names.end());
    names.erase(std::unique(names.begin(), names.end()), names.end());
    std::map<std::string, int> out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        out[names[i]] = static_cast<int>(i);
    }
    return out;
}

/** @brief Convert one annotation's objects into ground-truth boxes. */
inline std::vector<GtBox> annotation_to_gts(const Annotation& ann,
                                            const std::map<std::string, int>& class_map) {
    std::vector<GtBox> out;
    out.reserve(ann.objects.size());
    for (const ObjectAnnotation& obj : ann.objects) {
        auto it = class_map.find(obj.class_name);
        if (it == class_map.end()) {
            throw ConsistencyError("annotation: class '" + obj.class_name +
                                   "' is not in the class map");
        }
        GtBox g;
        g.class_id = it->second;
        g.box = BoundingBox::from_corners(static_cast<double>(obj.x1),
                                          static_cast<double>(obj.y1),
                                          static_cast<double>(obj.x2),
                                          static_cast<double>(obj.y2));
        g.difficult = obj.difficult;
        out.push_back(g);
    }
    return out;
}

// ---------------------------------------------------------------------------
// PPM (P6) images
// ---------------------------------------------------------------------------

namespace detail {

inline int ppm_next_token(std::istream& in, std::string& token) {
    token.clear();
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    while (c != EOF && !std::isspace(c)) {
        token.push_back(static_cast<char>(c));
        c = in.get();
    }
    return token.empty() ? EOF : 0;
}

}  // namespace detail

/** @brief Read a binary PPM (P6) image with maxval 255. */
inline ImageBuffer read_ppm(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError(DataError::Kind::BadImage, "image: cannot open '" + path + "'");
    }
    std::string token;
    if (detail::ppm_next_token(in, token) == EOF || token != "P6") {
        throw DataError(DataError::Kind::BadImage,
                        "image: '" + path + "' is not a binary PPM (P6)");
    }
    long dims[3];
    for (long& d : dims) {
        if (detail::ppm_next_token(in, token) == EOF) {
            throw DataError(DataError::Kind::BadImage,
                            "image: '" + path + "' has a truncated header");
        }
        try {
            d = std::stol(token);
        } catch (const std::exception&) {
            throw DataError(DataError::Kind::BadImage,
                            "image: '" + path + "' has a malformed header token '" + token +
                                "'");
        }
    }
    if (dims[0] <= 0 || dims[1] <= 0) {
        throw DataError(DataError::Kind::BadImage,
                        "image: '" + path + "' has non-positive dimensions");
    }
    if (dims[2] != 255) {
        throw DataError(DataError::Kind::BadImage,
                        "image: '" + path + "' has maxval " + std::to_string(dims[2]) +
                            ", only 255 is supported");
    }

    ImageBuffer img(static_cast<std::size_t>(dims[0]), static_cast<std::size_t>(dims[1]));
    in.read(reinterpret_cast<char*>(img.data.data()),
            static_cast<std::streamsize>(img.data.size()));
    if (in.gcount() != static_cast<std::streamsize>(img.data.size())) {
        throw DataError(DataError::Kind::BadImage,
                        "image: '" + path + "' pixel data is truncated");
    }
    return img;
}

/** @brief Write a binary PPM (P6) image. */
inline void write_ppm(const ImageBuffer& img, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw DataError(DataError::Kind::WriteFailed, "image: cannot write '" + path + "'");
    }
    out << "P6\n" << img.w << " " << img.h << "\n255\n";
    out.write(reinterpret_cast<const char*>(img.data.data()),
              static_cast<std::streamsize>(img.data.size()));
    if (!out) {
        throw DataError(DataError::Kind::WriteFailed, "image: write to '" + path + "' failed");
    }
}

/** @brief Convert an image to a float tensor, scaling bytes to [0, 1]. */
inline Tensor image_to_tensor(const ImageBuffer& img) {
    Tensor t(img.h, img.w, 3);
    for (std::size_t i = 0; i < img.data.size(); ++i) {
        t.data[i] = static_cast<float>(img.data[i]) / 255.0f;
    }
    return t;
}

// ---------------------------------------------------------------------------
// Augmentation
// ---------------------------------------------------------------------------

/**
 * @brief One augmentation. Geometric ops (rotation, mirror) transform boxes
 * exactly; photometric ops (brightness, color balance, blur) leave them
 * untouched.
 */
struct AugmentOp {
    enum class Kind { Rotate90, Mirror, Brightness, ColorBalance, Blur };

    Kind kind = Kind::Mirror;
    int quarter_turns = 1;  // Rotate90: counter-clockwise quarter turns, 1..3
    double factor = 1.0;    // Brightness
    double gain_r = 1.0;    // ColorBalance
    double gain_g = 1.0;
    double gain_b = 1.0;
    double sigma = 1.0;     // Blur

    static AugmentOp rotate90(int quarter_turns) {
        AugmentOp op;
        op.kind = Kind::Rotate90;
        op.quarter_turns = quarter_turns;
        return op;
    }

    static AugmentOp mirror() {
        AugmentOp op;
        op.kind = Kind::Mirror;
        return op;
    }

    static AugmentOp brightness(double factor) {
        AugmentOp op;
        op.kind = Kind::Brightness;
        op.factor = factor;
        return op;
    }

    static AugmentOp color_balance(double r, double g, double b) {
        AugmentOp op;
        op.kind = Kind::ColorBalance;
        op.gain_r = r;
        op.gain_g = g;
        op.gain_b = b;
        return op;
    }

    static AugmentOp blur(double sigma) {
        AugmentOp op;
        op.kind = Kind::Blur;
        op.sigma = sigma;
        return op;
    }

    /** Filename suffix for outputs derived with this op. */
    std::string suffix() const {
        char buf[32];
        switch (kind) {
            case Kind::Rotate90:
                std::snprintf(buf, sizeof(buf), "rot%d", 90 * quarter_turns);
                return buf;
            case Kind::Mirror:
                return "mirror";
            case Kind::Brightness:
                std::snprintf(buf, sizeof(buf), "b%03d",
                              static_cast<int>(std::lround(factor * 100.0)));
                return buf;
            case Kind::ColorBalance:
                return "cbal";
            case Kind::Blur:
                return "blur";
        }
        return "op";
    }

    void validate() const {
        switch (kind) {
            case Kind::Rotate90:
                if (quarter_turns < 1 || quarter_turns > 3) {
                    throw ValueError("augment: quarter turns must be 1..3, got " +
                                     std::to_string(quarter_turns));
                }
                break;
            case Kind::Brightness:
                if (!(factor > 0.0) || factor > 4.0) {
                    throw ValueError("augment: brightness factor must be in (0, 4]");
                }
                break;
            case Kind::ColorBalance: {
                const bool ok = gain_r > 0.0 && gain_r <= 4.0 && gain_g > 0.0 &&
                                gain_g <= 4.0 && gain_b > 0.0 && gain_b <= 4.0;
                if (!ok) {
                    throw ValueError("augment: color gains must be in (0, 4]");
                }
                break;
            }
            case Kind::Blur:
                if (!(sigma > 0.0)) {
                    throw ValueError("augment: blur sigma must be positive");
                }
                break;
            case Kind::Mirror:
                break;
        }
    }
};

/**
 * @brief The stock 9-op expansion: three rotations, a mirror, a color
 * rebalance, three brightness settings, and a blur. With the original
 * kept alongside, each input becomes ten outputs.
 */
inline std::vector<AugmentOp> default_augment_ops() {
    return {
        AugmentOp::rotate90(1),
        AugmentOp::rotate90(2),
        AugmentOp::rotate90(3),
        AugmentOp::mirror(),
        AugmentOp::color_balance(1.1, 1.0, 0.9),
        AugmentOp::brightness(0.9),
        AugmentOp::brightness(0.8),
        AugmentOp::brightness(0.6),
        AugmentOp::blur(1.0),
    };
}

namespace detail {

inline ImageBuffer rotate90_acw_once(const ImageBuffer& in) {
    // (x, y) -> (y, W-1-x): width becomes height and vice versa.
    ImageBuffer out(in.h, in.w);
    for (std::size_t y = 0; y < in.h; ++y) {
        for (std::size_t x = 0; x < in.w; ++x) {
            for (std::size_t ch = 0; ch < 3; ++ch) {
                out.at(in.w - 1 - x, y, ch) = in.at(y, x, ch);
            }
        }
    }
    return out;
}

inline void rotate_boxes_acw_once(Annotation& ann) {
    const long w = static_cast<long>(ann.width);
    for (ObjectAnnotation& obj : ann.objects) {
        const long nx1 = obj.y1;
        const long nx2 = obj.y2;
        const long ny1 = w - 1 - obj.x2;
        const long ny2 = w - 1 - obj.x1;
        obj.x1 = nx1;
        obj.x2 = nx2;
        obj.y1 = ny1;
        obj.y2 = ny2;
    }
    std::swap(ann.width, ann.height);
}

inline std::uint8_t scale_clamp(std::uint8_t v, double factor) {
    const long scaled = std::lround(static_cast<double>(v) * factor);
    return static_cast<std::uint8_t>(std::clamp(scaled, 0l, 255l));
}

inline ImageBuffer gaussian_blur(const ImageBuffer& in, double sigma) {
    const long radius = static_cast<long>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(2 * radius + 1);
    double sum = 0.0;
    for (long i = -radius; i <= radius; ++i) {
        kernel[i + radius] = std::exp(-static_cast<double>(i * i) / (2.0 * sigma * sigma));
        sum += kernel[i + radius];
    }
    for (double& k : kernel) k /= sum;

    const long w = static_cast<long>(in.w);
    const long h = static_cast<long>(in.h);
    std::vector<double> horizontal(in.data.size());
    for (long y = 0; y < h; ++y) {
        for (long x = 0; x < w; ++x) {
            for (std::size_t ch = 0; ch < 3; ++ch) {
                double acc = 0.0;
                for (long i = -radius; i <= radius; ++i) {
                    const long xi = std::clamp(x + i, 0l, w - 1);
                    acc += kernel[i + radius] * in.at(y, xi, ch);
                }
                horizontal[(y * w + x) * 3 + ch] = acc;
            }
        }
    }
    ImageBuffer out(in.w, in.h);
    for (long y = 0; y < h; ++y) {
        for (long x = 0; x < w; ++x) {
            for (std::size_t ch = 0; ch < 3; ++ch) {
                double acc = 0.0;
                for (long i = -radius; i <= radius; ++i) {
                    const long yi = std::clamp(y + i, 0l, h - 1);
                    acc += kernel[i + radius] * horizontal[(yi * w + x) * 3 + ch];
                }
                out.at(y, x, ch) =
                    static_cast<std::uint8_t>(std::clamp(std::lround(acc), 0l, 255l));
            }
        }
    }
    return out;
}

}  // namespace detail

/**
 * @brief Apply one augmentation to an image and its annotation. The pair must
 * agree on dimensions. The returned annotation keeps the original filename;
 * dataset expansion renames derived outputs.
 */
inline std::pair<ImageBuffer, Annotation> apply_augment(const ImageBuffer& img,
                                                        const Annotation& ann,
                                                        const AugmentOp& op) {
    op.validate();
    if (img.w != ann.width || img.h != ann.height) {
        throw ConsistencyError("augment: image is " + std::to_string(img.w) + "x" +
                               std::to_string(img.h) + " but annotation says " +
                               std::to_string(ann.width) + "x" +
                               std::to_string(ann.height));
    }

    ImageBuffer out_img = img;
    Annotation out_ann = ann;
    switch (op.kind) {
        case AugmentOp::Kind::Rotate90:
            for (int i = 0; i < op.quarter_turns; ++i) {
                out_img = detail::rotate90_acw_once(out_img);
                detail::rotate_boxes_acw_once(out_ann);
            }
            break;
        case AugmentOp::Kind::Mirror: {
            const long w = static_cast<long>(ann.width);
            for (std::size_t y = 0; y < img.h; ++y) {
                for (std::size_t x = 0; x < img.w; ++x) {
                    for (std::size_t ch = 0; ch < 3; ++ch) {
                        out_img.at(y, img.w - 1 - x, ch) = img.at(y, x, ch);
                    }
                }
            }
            for (ObjectAnnotation& obj : out_ann.objects) {
                const long nx1 = w - 1 - obj.x2;
                const long nx2 = w - 1 - obj.x1;
                obj.x1 = nx1;
                obj.x2 = nx2;
            }
            break;
        }
        case AugmentOp::Kind::Brightness:
            for (std::uint8_t& v : out_img.data) v = detail::scale_clamp(v, op.factor);
            break;
        case AugmentOp::Kind::ColorBalance: {
            const double gains[3] = {op.gain_r, op.gain_g, op.gain_b};
            for (std::size_t i = 0; i < out_img.data.size(); ++i) {
                out_img.data[i] = detail::scale_clamp(out_img.data[i], gains[i % 3]);
            }
            break;
        }
        case AugmentOp::Kind::Blur:
            out_img = detail::gaussian_blur(img, op.sigma);
            break;
    }
    return {std::move(out_img), std::move(out_ann)};
}

// ---------------------------------------------------------------------------
// Dataset splits
// ---------------------------------------------------------------------------

struct SplitRatios {
    double train = 0.7;
    double val = 0.15;
    double test = 0.15;

    void validate() const {
        if (!(train >= 0.0) || !(val >= 0.0) || !(test >= 0.0)) {
            throw ValueError("split: ratios must be non-negative");
        }
        if (std::fabs(train + val + test - 1.0) > 1e-9) {
            throw ValueError("split: ratios must sum to 1");
        }
    }
};

struct SplitResult {
    std::vector<std::string> train;
    std::vector<std::string> val;
    std::vector<std::string> test;
};

/**
 * @brief Deterministic random split. Ids are sorted, shuffled with the seeded
 * generator, then dealt floor(ratio * n) each to validation and test; the
 * remainder stays in train. The same ids and seed always produce the same
 * split regardless of input order.
 */
inline SplitResult split_dataset(std::vector<std::string> ids, const SplitRatios& ratios,
                                 std::uint32_t seed) {
    ratios.validate();
    std::sort(ids.begin(), ids.end());
    if (std::adjacent_find(ids.begin(), ids.end()) != ids.end()) {
        throw ConsistencyError("split: duplicate item id");
    }

    std::mt19937 rng(seed);
    for (std::size_t i = ids.size(); i > 1; --i) {
        const std::size_t j = rng() % i;
        std::swap(ids[i - 1], ids[j]);
    }

    const std::size_t n = ids.size();
    const auto take = [n](double ratio) {
        return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n)));
    };
    const std::size_t n_train = take(ratios.train);
    const std::size_t n_val = take(ratios.val);
    const std::size_t n_test = take(ratios.test);

    SplitResult out;
    std::size_t i = 0;
    for (; i < n_train && i < n; ++i) out.train.push_back(ids[i]);
    for (std::size_t k = 0; k < n_val && i < n; ++k, ++i) out.val.push_back(ids[i]);
    for (std::size_t k = 0; k < n_test && i < n; ++k, ++i) out.test.push_back(ids[i]);
    for (; i < n; ++i) out.train.push_back(ids[i]);  // remainder goes to train
    return out;
}

// ---------------------------------------------------------------------------
// Manifests and dataset expansion
// ---------------------------------------------------------------------------

/** One dataset item: an id plus image and annotation paths (manifest-relative). */
struct DatasetItem {
    std::string id;
    std::string image;
    std::string annotation;
    std::optional<std::string> split;
};

/**
 * @brief Parse a dataset manifest: a JSON object whose "items" member maps
 * each item id to its image path, annotation path, and optional split.
 */
inline std::vector<DatasetItem> parse_manifest(const std::string& text) {
    nlohmann::json root;
    try {
        root = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(DataError::Kind::BadManifest,
                        std::string("manifest: invalid JSON: ") + e.what());
    }
    if (!root.is_object() || !root.contains("items") || !root["items"].is_object()) {
        throw DataError(DataError::Kind::BadManifest,
                        "manifest: top-level object needs an \"items\" object");
    }
    std::vector<DatasetItem> items;
    for (const auto& [id, obj] : root["items"].items()) {
        if (!obj.is_object() || !obj.contains("image") || !obj.contains("annotation")) {
            throw DataError(DataError::Kind::BadManifest,
                            "manifest: item '" + id + "' needs image and annotation");
        }
        DatasetItem item;
        item.id = id;
        item.image = obj["image"].get<std::string>();
        item.annotation = obj["annotation"].get<std::string>();
        if (obj.contains("split")) {
            item.split = obj["split"].get<std::string>();
        }
        items.push_back(std::move(item));
    }
    return items;
}

/** @brief Render a manifest; ids are object keys so output order is stable. */
inline std::string write_manifest(std::vector<DatasetItem> items) {
    std::sort(items.begin(), items.end(),
              [](const DatasetItem& a, const DatasetItem& b) { return a.id < b.id; });
    nlohmann::ordered_json entries = nlohmann::ordered_json::object();
    for (const DatasetItem& item : items) {
        nlohmann::ordered_json obj;
        obj["image"] = item.image;
        obj["annotation"] = item.annotation;
        if (item.split) obj["split"] = *item.split;
        if (entries.contains(item.id)) {
            throw DataError(DataError::Kind::BadManifest,
                            "manifest: duplicate item id '" + item.id + "'");
        }
        entries[item.id] = std::move(obj);
    }
    nlohmann::ordered_json root;
    root["items"] = std::move(entries);
    return root.dump(2) + "\n";
}

/** @brief Load a manifest file. */
inline std::vector<DatasetItem> load_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw DataError(DataError::Kind::BadManifest,
                        "manifest: cannot open '" + path + "'");
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_manifest(buf.str());
}

/** Outcome of a dataset expansion. */
struct ExpandResult {
    std::vector<DatasetItem> items;
    std::size_t files_written = 0;
};

/**
 * @brief Expand a dataset: every input item is rewritten into out_dir
 * (images/<id>.ppm, annotations/<id>.xml) together with one derived variant
 * per augmentation op, named <id>_<suffix>. A manifest.json listing all
 * outputs lands in out_dir. On a write failure the error reports how many
 * files were already written.
 */
inline ExpandResult expand_dataset(const std::vector<DatasetItem>& items,
                                   const std::vector<AugmentOp>& ops,
                                   const std::string& out_dir) {
    for (std::size_t i = 0; i < ops.size(); ++i) {
        ops[i].validate();
        for (std::size_t j = i + 1; j < ops.size(); ++j) {
            if (ops[i].suffix() == ops[j].suffix()) {
                throw ValueError("augment: ops " + std::to_string(i) + " and " +
                                 std::to_string(j) + " share the suffix '" +
                                 ops[i].suffix() + "'");
            }
        }
    }

    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(fs::path(out_dir) / "images", ec);
    fs::create_directories(fs::path(out_dir) / "annotations", ec);
    if (ec) {
        throw DataError(DataError::Kind::WriteFailed,
                        "expand: cannot create output directories under '" + out_dir +
                            "': " + ec.message());
    }

    ExpandResult result;
    const auto emit = [&](const std::string& id, const ImageBuffer& img,
                          Annotation ann) {
        const std::string image_rel = "images/" + id + ".ppm";
        const std::string ann_rel = "annotations/" + id + ".xml";
        ann.filename = id + ".ppm";
        try {
            write_ppm(img, (fs::path(out_dir) / image_rel).string());
            ++result.files_written;
            save_voc_xml(ann, (fs::path(out_dir) / ann_rel).string());
            ++result.files_written;
        } catch (const DataError& e) {
            throw DataError(DataError::Kind::WriteFailed,
                            std::string(e.what()) + " (" +
                                std::to_string(result.files_written) +
                                " files were written before the failure)");
        }
        DatasetItem item;
        item.id = id;
        item.image = image_rel;
        item.annotation = ann_rel;
        result.items.push_back(std::move(item));
    };

    for (const DatasetItem& item : items) {
        const ImageBuffer img = read_ppm(item.image);
        const Annotation ann = load_voc_xml(item.annotation);
        if (img.w != ann.width || img.h != ann.height) {
            throw ConsistencyError("expand: item '" + item.id + "' image is " +
                                   std::to_string(img.w) + "x" + std::to_string(img.h) +
                                   " but annotation says " + std::to_string(ann.width) +
                                   "x" + std::to_string(ann.height));
        }
        emit(item.id, img, ann);
        for (const AugmentOp& op : ops) {
            auto [aug_img, aug_ann] = apply_augment(img, ann, op);
            emit(item.id + "_" + op.suffix(), aug_img, aug_ann);
        }
    }

    std::ofstream manifest((fs::path(out_dir) / "manifest.json").string(),
                           std::ios::binary);
    if (!manifest || !(manifest << write_manifest(result.items))) {
        throw DataError(DataError::Kind::WriteFailed,
                        "expand: cannot write manifest under '" + out_dir + "' (" +
                            std::to_string(result.files_written) +
                            " files were written before the failure)");
    }
    ++result.files_written;
    return result;
}

}  // namespace fgd
