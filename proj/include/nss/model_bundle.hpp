#pragma once

#include <string>
#include <vector>

#include "nss/network.hpp"

namespace nss {

// Architecture manifest + weight blob pair persisted as a directory with two
// files: `manifest` (JSON, stable key order) and `weights.bin` (little-endian
// float32, layer order; dense layers as [out,in] row-major weight then bias,
// conv layers as [out_c,in_c,kh,kw] then bias).
struct ModelBundle {
    Model model;
    std::vector<int> input_shape;
    int class_count = 0;
    Weights weights;

    static constexpr int kFormatVersion = 1;
};

void save_model_bundle(const ModelBundle& bundle, const std::string& dir);
ModelBundle load_model_bundle(const std::string& dir);

}  // namespace nss
