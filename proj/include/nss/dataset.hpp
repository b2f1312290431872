#pragma once

#include <string>
#include <vector>

#include "nss/tensor.hpp"

namespace nss {

// Images as [n, c, h, w] with pixels normalized to [0,1], labels as class
// indices. Grayscale IDX files load with c = 1.
struct LabeledDataset {
    Tensor images;
    std::vector<int> labels;
    int class_count = 0;

    int size() const { return images.empty() ? 0 : images.dim(0); }

    // One image as its own [c,h,w] tensor.
    Tensor image(int i) const;

    // Subset by indices, in the given order.
    LabeledDataset subset(const std::vector<int>& indices) const;
};

// Parses the IDX pair (big-endian magic 0x00000803 / 0x00000801). The header
// is fully validated before any payload is touched; pixels are divided by
// 255. class_count 0 means "infer as max label + 1".
LabeledDataset load_idx(const std::string& images_path, const std::string& labels_path,
                        int class_count = 0);

// Inverse of load_idx for materialized dumps: pixels quantized to round(x*255).
void save_idx(const LabeledDataset& dataset, const std::string& images_path,
              const std::string& labels_path);

}  // namespace nss
