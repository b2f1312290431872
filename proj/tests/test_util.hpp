#pragma once

#include <cstdlib>
#include <filesystem>
#include <string>

#include "nss/network.hpp"
#include "nss/rng.hpp"
#include "nss/tensor.hpp"
#include "nss/trainer.hpp"

namespace nss::testutil {

inline Tensor random_tensor(std::vector<int> shape, Rng& rng, float lo = -1.0f, float hi = 1.0f) {
    Tensor t(std::move(shape));
    for (size_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform_float(lo, hi);
    return t;
}

inline Weights random_weights(const Model& model, const std::vector<int>& input_shape,
                              uint64_t seed) {
    return init_weights(model, input_shape, seed);
}

// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& tag) {
    static int counter = 0;
    auto dir = std::filesystem::temp_directory_path() /
               ("nss_test_" + tag + "_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter++));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace nss::testutil
