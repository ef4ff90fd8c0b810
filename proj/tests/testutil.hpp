#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "fgd/boxes.hpp"
#include "fgd/tensor.hpp"

namespace testutil {

/** Deterministic uniform draws that do not depend on libstdc++ internals. */
struct Rng {
    std::mt19937 gen;

    explicit Rng(std::uint32_t seed) : gen(seed) {}

    double unif(double lo, double hi) {
        return lo + (hi - lo) * ((gen() >> 8) * (1.0 / 16777216.0));
    }

    std::size_t index(std::size_t n) { return gen() % n; }

    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(gen() % static_cast<std::uint32_t>(hi - lo + 1));
    }
};

inline fgd::Tensor random_tensor(Rng& rng, std::size_t h, std::size_t w, std::size_t c,
                                 double lo = -1.0, double hi = 1.0) {
    fgd::Tensor t(h, w, c);
    for (float& v : t.data) v = static_cast<float>(rng.unif(lo, hi));
    return t;
}

inline fgd::ConvKernel random_kernel(Rng& rng, std::size_t k, std::size_t in_c,
                                     std::size_t out_c, double lo = -1.0,
                                     double hi = 1.0) {
    fgd::ConvKernel kernel(k, in_c, out_c);
    for (float& v : kernel.data) v = static_cast<float>(rng.unif(lo, hi));
    return kernel;
}

inline fgd::BoundingBox random_box(Rng& rng, double span = 10.0, double min_extent = 0.5,
                                   double max_extent = 6.0) {
    return fgd::BoundingBox::from_center(rng.unif(0.0, span), rng.unif(0.0, span),
                                         rng.unif(min_extent, max_extent),
                                         rng.unif(min_extent, max_extent));
}

/** Scratch directory, removed with everything in it when the test ends. */
class TempDir {
  public:
    TempDir() {
        static std::atomic<unsigned> counter{0};
        const auto base = std::filesystem::temp_directory_path();
        path_ = base / ("fgd-test-" + std::to_string(::getpid()) + "-" +
                        std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }

    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }

    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }

    std::string file(const std::string& name) const { return (path_ / name).string(); }

  private:
    std::filesystem::path path_;
};

inline std::string fixture_path(const std::string& name) {
    return std::string(FGD_FIXTURES_DIR) + "/" + name;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline bool rel_close(double a, double b, double tol) {
    const double mag = std::max(std::fabs(a), std::fabs(b));
    if (mag < 1e-8) return std::fabs(a - b) <= tol;
    return std::fabs(a - b) / mag <= tol;
}

}  // namespace testutil
