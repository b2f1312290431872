#pragma once

#include <cstdint>

#include "nss/dataset.hpp"

namespace nss {

// Deterministic 28x28 grayscale digit dataset: ten stroke-glyph classes with
// per-sample affine jitter, stroke width/intensity variation and mild pixel
// noise. Classes are balanced (sample i belongs to class i mod 10). Intended
// as a drop-in stand-in where no IDX files are available; the same pipeline
// accepts official MNIST files unchanged.
LabeledDataset synthetic_digits(int count, uint64_t seed);

}  // namespace nss
