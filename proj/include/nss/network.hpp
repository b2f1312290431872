#pragma once

#include <map>
#include <set>
#include <vector>

#include "nss/layers.hpp"
#include "nss/tensor.hpp"

namespace nss {

template <typename T>
struct LayerParamsT {
    TensorT<T> weight;  // dense: [out,in]; conv2d: [out_c,in_c,kh,kw]
    TensorT<T> bias;    // [out] / [out_c]
    bool empty() const { return weight.numel() == 0 && bias.numel() == 0; }
};

template <typename T>
using WeightsT = std::vector<LayerParamsT<T>>;

using LayerParams = LayerParamsT<float>;
using Weights = WeightsT<float>;

// Post-activation outputs captured at tapped layers; one [batch, ...] tensor
// per tapped layer id, ordered by id.
struct ActivationTrace {
    std::map<int, Tensor> layers;

    const Tensor& at(int layer_id) const;
    bool has(int layer_id) const { return layers.count(layer_id) != 0; }
};

struct ForwardResult {
    Tensor logits;  // [batch, classes]; softmax output when the model ends in softmax
    ActivationTrace trace;
};

// Validates `weights` against the shapes inferred for `model`; throws
// ShapeError naming the first offending layer.
void validate_weights(const Model& model, const std::vector<int>& input_shape,
                      const Weights& weights);

// Deterministic batched forward pass. `batch` is [n, ...input_shape]; `taps`
// selects layer ids whose post-activation outputs are captured. Bit-identical
// results for any worker count.
ForwardResult forward(const Model& model, const Weights& weights, const Tensor& batch,
                      const std::set<int>& taps = {});

// Argmax class per batch element, ties toward the smallest index.
std::vector<int> predict(const Model& model, const Weights& weights, const Tensor& batch);

std::vector<int> argmax_rows(const Tensor& logits);

}  // namespace nss
