#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "fgd/errors.hpp"
#include "fgd/network.hpp"
#include "fgd/tensor.hpp"

namespace fgd {

/** Parameters of one lowered conv primitive. */
struct ConvWeights {
    ConvKernel kernel;
    bool has_bn = false;
    BatchNormParams bn;
};

/** All network parameters, keyed by lowered conv primitive id. */
using WeightStore = std::map<std::string, ConvWeights>;

/** One expected weight entry: which conv exists and what shape it takes. */
struct ConvManifestEntry {
    std::string id;
    std::size_t k = 0;
    std::size_t in_c = 0;
    std::size_t out_c = 0;
    bool has_bn = false;
};

/**
 * @brief Enumerate the conv primitives a network owns, in lowered order.
 * This is the schema a weight file for the network must follow.
 */
inline std::vector<ConvManifestEntry> conv_manifest(const NetworkSpec& spec) {
    const LoweredShapes lowered = lower_with_shapes(spec);
    std::vector<ConvManifestEntry> manifest;
    for (const PrimNode& p : lowered.graph.prims) {
        if (p.kind != PrimKind::Conv) continue;
        ConvManifestEntry e;
        e.id = p.id;
        e.k = p.k;
        e.in_c = lowered.shapes.at(p.inputs[0]).c;
        e.out_c = p.out_c;
        e.has_bn = p.has_bn;
        manifest.push_back(std::move(e));
    }
    return manifest;
}

/**
 * @brief Check a store against a network's manifest: every conv present,
 * every shape right, nothing extra. Throws WeightsError otherwise.
 */
inline void validate_weights(const NetworkSpec& spec, const WeightStore& store) {
    const std::vector<ConvManifestEntry> manifest = conv_manifest(spec);
    for (const ConvManifestEntry& e : manifest) {
        auto it = store.find(e.id);
        if (it == store.end()) {
            throw WeightsError(WeightsError::Kind::MissingNode,
                               "weights: no entry for node '" + e.id + "'");
        }
        const ConvWeights& w = it->second;
        if (w.kernel.k != e.k || w.kernel.in_c != e.in_c || w.kernel.out_c != e.out_c) {
            throw WeightsError(WeightsError::Kind::ShapeMismatch,
                               "weights: node '" + e.id + "' has kernel " +
                                   std::to_string(w.kernel.k) + "x" +
                                   std::to_string(w.kernel.k) + "x" +
                                   std::to_string(w.kernel.in_c) + "x" +
                                   std::to_string(w.kernel.out_c) + ", expected " +
                                   std::to_string(e.k) + "x" + std::to_string(e.k) + "x" +
                                   std::to_string(e.in_c) + "x" + std::to_string(e.out_c));
        }
        if (w.has_bn != e.has_bn) {
            throw WeightsError(WeightsError::Kind::ShapeMismatch,
                               "weights: node '" + e.id + "' " +
                                   (e.has_bn ? "needs" : "must not carry") +
                                   " batchnorm parameters");
        }
        if (e.has_bn && w.bn.channels() != e.out_c) {
            throw WeightsError(WeightsError::Kind::ShapeMismatch,
                               "weights: node '" + e.id + "' batchnorm has " +
                                   std::to_string(w.bn.channels()) +
                                   " channels, expected " + std::to_string(e.out_c));
        }
    }
    if (store.size() != manifest.size()) {
        for (const auto& [id, w] : store) {
            (void)w;
            bool known = false;
            for (const ConvManifestEntry& e : manifest) {
                if (e.id == id) {
                    known = true;
                    break;
                }
            }
            if (!known) {
                throw WeightsError(WeightsError::Kind::UnknownNode,
                                   "weights: entry '" + id + "' matches no network node");
            }
        }
    }
}

/**
 * @brief All-zero parameters (batchnorm variance 1). Running a network with
 * these yields all-zero head outputs, which is handy as a sanity mode.
 */
inline WeightStore zero_weights(const NetworkSpec& spec) {
    WeightStore store;
    for (const ConvManifestEntry& e : conv_manifest(spec)) {
        ConvWeights w;
        w.kernel = ConvKernel(e.k, e.in_c, e.out_c, 0.0f);
        w.has_bn = e.has_bn;
        if (e.has_bn) {
            w.bn = BatchNormParams(e.out_c);
            std::fill(w.bn.gamma.begin(), w.bn.gamma.end(), 0.0f);
        }
        store.emplace(e.id, std::move(w));
    }
    return store;
}

namespace detail {

/** Uniform draw in [lo, hi) from the top 24 bits, identical on every platform. */
inline float uniform_unit(std::mt19937& rng, float lo, float hi) {
    const float u = static_cast<float>(rng() >> 8) * (1.0f / 16777216.0f);
    return lo + (hi - lo) * u;
}

}  // namespace detail

/**
 * @brief Deterministic pseudo-random parameters for a given seed. Kernels are
 * scaled by fan-in; batchnorm parameters jitter around identity.
 */
inline WeightStore random_weights(const NetworkSpec& spec, std::uint32_t seed) {
    std::mt19937 rng(seed);
    WeightStore store;
    for (const ConvManifestEntry& e : conv_manifest(spec)) {
        ConvWeights w;
        w.kernel = ConvKernel(e.k, e.in_c, e.out_c);
        const float bound =
            1.0f / std::sqrt(static_cast<float>(e.k * e.k * e.in_c));
        for (float& v : w.kernel.data) {
            v = detail::uniform_unit(rng, -bound, bound);
        }
        w.has_bn = e.has_bn;
        if (e.has_bn) {
            w.bn = BatchNormParams(e.out_c);
            for (float& v : w.bn.gamma) v = detail::uniform_unit(rng, 0.8f, 1.2f);
            for (float& v : w.bn.beta) v = detail::uniform_unit(rng, -0.1f, 0.1f);
            for (float& v : w.bn.mean) v = detail::uniform_unit(rng, -0.1f, 0.1f);
            for (float& v : w.bn.var) v = detail::uniform_unit(rng, 0.5f, 1.5f);
        }
        store.emplace(e.id, std::move(w));
    }
    return store;
}

namespace detail {

constexpr char kWeightMagic[4] = {'F', 'G', 'D', 'W'};
constexpr std::uint32_t kWeightVersion = 1;

inline void put_u32(std::ostream& out, std::uint32_t v) {
    const unsigned char bytes[4] = {
        static_cast<unsigned char>(v & 0xff),
        static_cast<unsigned char>((v >> 8) & 0xff),
        static_cast<unsigned char>((v >> 16) & 0xff),
        static_cast<unsigned char>((v >> 24) & 0xff),
    };
    out.write(reinterpret_cast<const char*>(bytes), 4);
}

inline void put_f32(std::ostream& out, float f) {
    std::uint32_t v;
    std::memcpy(&v, &f, 4);
    put_u32(out, v);
}

struct WeightReader {
    std::istream& in;
    std::string path;

    unsigned char get_u8() {
        int c = in.get();
        if (c == EOF) {
            throw WeightsError(WeightsError::Kind::Truncated,
                               "weights: '" + path + "' ends mid-record");
        }
        return static_cast<unsigned char>(c);
    }

    std::uint32_t get_u32() {
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(get_u8()) << (8 * i);
        }
        return v;
    }

    float get_f32() {
        const std::uint32_t v = get_u32();
        float f;
        std::memcpy(&f, &v, 4);
        return f;
    }

    std::string get_string(std::uint32_t len) {
        std::string s(len, '\0');
        for (std::uint32_t i = 0; i < len; ++i) s[i] = static_cast<char>(get_u8());
        return s;
    }
};

inline void put_rank1(std::ostream& out, const std::vector<float>& v) {
    out.put(static_cast<char>(1));
    put_u32(out, static_cast<std::uint32_t>(v.size()));
    for (float f : v) put_f32(out, f);
}

inline std::vector<float> get_rank1(WeightReader& r, const std::string& node,
                                    std::size_t expect) {
    const unsigned rank = r.get_u8();
    if (rank != 1) {
        throw WeightsError(WeightsError::Kind::ShapeMismatch,
                           "weights: node '" + node + "' expected a rank-1 tensor, got rank " +
                               std::to_string(rank));
    }
    const std::uint32_t n = r.get_u32();
    if (n != expect) {
        throw WeightsError(WeightsError::Kind::ShapeMismatch,
                           "weights: node '" + node + "' rank-1 tensor has " +
                               std::to_string(n) + " entries, expected " +
                               std::to_string(expect));
    }
    std::vector<float> v(n);
    for (auto& f : v) f = r.get_f32();
    return v;
}

}  // namespace detail

/**
 * @brief Write a weight file: magic "FGDW", format version, then one record
 * per conv primitive in lowered order. Each record holds the id, a tensor
 * count, and the tensors (rank, dims, raw little-endian floats).
 */
inline void serialize_weights(const NetworkSpec& spec, const WeightStore& store,
                              const std::string& path) {
    validate_weights(spec, store);
    const std::vector<ConvManifestEntry> manifest = conv_manifest(spec);

    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw WeightsError(WeightsError::Kind::Io,
                           "weights: cannot open '" + path + "' for writing");
    }
    out.write(detail::kWeightMagic, 4);
    detail::put_u32(out, detail::kWeightVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(manifest.size()));

    for (const ConvManifestEntry& e : manifest) {
        const ConvWeights& w = store.at(e.id);
        detail::put_u32(out, static_cast<std::uint32_t>(e.id.size()));
        out.write(e.id.data(), static_cast<std::streamsize>(e.id.size()));
        out.put(static_cast<char>(e.has_bn ? 5 : 1));

        out.put(static_cast<char>(4));
        detail::put_u32(out, static_cast<std::uint32_t>(w.kernel.k));
        detail::put_u32(out, static_cast<std::uint32_t>(w.kernel.k));
        detail::put_u32(out, static_cast<std::uint32_t>(w.kernel.in_c));
        detail::put_u32(out, static_cast<std::uint32_t>(w.kernel.out_c));
        for (float f : w.kernel.data) detail::put_f32(out, f);

        if (e.has_bn) {
            detail::put_rank1(out, w.bn.gamma);
            detail::put_rank1(out, w.bn.beta);
            detail::put_rank1(out, w.bn.mean);
            detail::put_rank1(out, w.bn.var);
        }
    }
    if (!out) {
        throw WeightsError(WeightsError::Kind::Io, "weights: write to '" + path + "' failed");
    }
}

/**
 * @brief Read and validate a weight file against a network. Loading is
 * all-or-nothing: any mismatch (magic, version, truncation, unknown or
 * missing node, wrong shape) throws and nothing is returned.
 */
inline WeightStore deserialize_weights(const NetworkSpec& spec, const std::string& path) {
    const std::vector<ConvManifestEntry> manifest = conv_manifest(spec);
    std::map<std::string, const ConvManifestEntry*> by_id;
    for (const ConvManifestEntry& e : manifest) by_id.emplace(e.id, &e);

    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw WeightsError(WeightsError::Kind::Io, "weights: cannot open '" + path + "'");
    }
    detail::WeightReader r{in, path};

    char magic[4];
    for (char& c : magic) c = static_cast<char>(r.get_u8());
    if (std::memcmp(magic, detail::kWeightMagic, 4) != 0) {
        throw WeightsError(WeightsError::Kind::BadMagic,
                           "weights: '" + path + "' is not a weight file (bad magic)");
    }
    const std::uint32_t version = r.get_u32();
    if (version != detail::kWeightVersion) {
        throw WeightsError(WeightsError::Kind::VersionMismatch,
                           "weights: '" + path + "' has format version " +
                               std::to_string(version) + ", expected " +
                               std::to_string(detail::kWeightVersion));
    }
    const std::uint32_t count = r.get_u32();

    WeightStore store;
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t id_len = r.get_u32();
        const std::string id = r.get_string(id_len);
        auto it = by_id.find(id);
        if (it == by_id.end()) {
            throw WeightsError(WeightsError::Kind::UnknownNode,
                               "weights: entry '" + id + "' matches no network node");
        }
        if (store.count(id)) {
            throw WeightsError(WeightsError::Kind::DuplicateNode,
                               "weights: node '" + id + "' appears twice");
        }
        const ConvManifestEntry& e = *it->second;
        const unsigned tensors = r.get_u8();
        const unsigned expect_tensors = e.has_bn ? 5 : 1;
        if (tensors != expect_tensors) {
            throw WeightsError(WeightsError::Kind::ShapeMismatch,
                               "weights: node '" + id + "' has " + std::to_string(tensors) +
                                   " tensors, expected " + std::to_string(expect_tensors));
        }

        const unsigned rank = r.get_u8();
        if (rank != 4) {
            throw WeightsError(WeightsError::Kind::ShapeMismatch,
                               "weights: node '" + id + "' kernel has rank " +
                                   std::to_string(rank) + ", expected 4");
        }
        std::uint32_t dims[4];
        for (auto& d : dims) d = r.get_u32();
        if (dims[0] != e.k || dims[1] != e.k || dims[2] != e.in_c || dims[3] != e.out_c) {
            throw WeightsError(WeightsError::Kind::ShapeMismatch,
                               "weights: node '" + id + "' kernel is " +
                                   std::to_string(dims[0]) + "x" + std::to_string(dims[1]) +
                                   "x" + std::to_string(dims[2]) + "x" +
                                   std::to_string(dims[3]) + ", expected " +
                                   std::to_string(e.k) + "x" + std::to_string(e.k) + "x" +
                                   std::to_string(e.in_c) + "x" + std::to_string(e.out_c));
        }

        ConvWeights w;
        w.kernel = ConvKernel(e.k, e.in_c, e.out_c);
        for (float& f : w.kernel.data) f = r.get_f32();
        w.has_bn = e.has_bn;
        if (e.has_bn) {
            w.bn.gamma = detail::get_rank1(r, id, e.out_c);
            w.bn.beta = detail::get_rank1(r, id, e.out_c);
            w.bn.mean = detail::get_rank1(r, id, e.out_c);
            w.bn.var = detail::get_rank1(r, id, e.out_c);
        }
        store.emplace(id, std::move(w));
    }

    if (store.size() != manifest.size()) {
        for (const ConvManifestEntry& e : manifest) {
            if (!store.count(e.id)) {
                throw WeightsError(WeightsError::Kind::MissingNode,
                                   "weights: no entry for node '" + e.id + "'");
            }
        }
    }
    if (in.peek() != EOF) {
        throw WeightsError(WeightsError::Kind::Io,
                           "weights: '" + path + "' has trailing bytes after the last record");
    }
    return store;
}

}  // namespace fgd
