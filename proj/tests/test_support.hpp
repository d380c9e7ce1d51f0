#ifndef OCNNA_TEST_SUPPORT_HPP
#define OCNNA_TEST_SUPPORT_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <unistd.h>
#include <vector>

#include "ocnna/rng.hpp"
#include "ocnna/tensor.hpp"

namespace testutil {

inline ocnna::Tensor random_tensor(std::vector<std::size_t> shape, ocnna::Rng& rng,
                                   float lo = -1.0f, float hi = 1.0f) {
    const std::size_t n = ocnna::shape_product(shape);
    std::vector<float> data(n);
    for (float& v : data) v = rng.uniform(lo, hi);
    return ocnna::Tensor(std::move(shape), std::move(data));
}

inline std::vector<double> random_weights(std::size_t n, ocnna::Rng& rng) {
    std::vector<double> w(n);
    for (double& v : w) v = rng.uniform(-1.0f, 1.0f);
    return w;
}

inline bool bit_equal(const ocnna::Tensor& a, const ocnna::Tensor& b) {
    if (a.shape() != b.shape()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] != b[i]) return false;
    }
    return true;
}

// Unique per-process scratch directory, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        dir_ = std::filesystem::temp_directory_path() /
               ("ocnna_test_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::create_directories(dir_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(dir_, ec);
    }
    std::filesystem::path path(const std::string& name) const { return dir_ / name; }

private:
    std::filesystem::path dir_;
};

} // namespace testutil

#endif
