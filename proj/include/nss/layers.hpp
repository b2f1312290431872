#pragma once

#include <string>
#include <vector>

#include "nss/errors.hpp"

namespace nss {

enum class LayerKind {
    Dense,
    Conv2d,
    Relu,
    Tanh,
    Sigmoid,
    MaxPool2d,
    Flatten,
    Softmax,
};

std::string layer_kind_name(LayerKind kind);
LayerKind layer_kind_from_name(const std::string& name);

// One sequential layer. Hyperparameters are interpreted per kind; unused
// fields stay zero.
struct LayerSpec {
    LayerKind kind = LayerKind::Relu;

    // dense
    int in_features = 0;
    int out_features = 0;

    // conv2d
    int in_channels = 0;
    int out_channels = 0;
    int kernel_h = 0;
    int kernel_w = 0;
    int stride = 1;
    int padding = 0;

    // maxpool2d
    int pool_h = 0;
    int pool_w = 0;
    int pool_stride = 0;

    static LayerSpec dense(int in, int out);
    static LayerSpec conv2d(int in_ch, int out_ch, int kh, int kw, int stride = 1, int padding = 0);
    static LayerSpec relu() { return LayerSpec{LayerKind::Relu}; }
    static LayerSpec tanh() { return LayerSpec{LayerKind::Tanh}; }
    static LayerSpec sigmoid() { return LayerSpec{LayerKind::Sigmoid}; }
    static LayerSpec maxpool2d(int ph, int pw, int stride);
    static LayerSpec flatten() { return LayerSpec{LayerKind::Flatten}; }
    static LayerSpec softmax() { return LayerSpec{LayerKind::Softmax}; }

    // Trainable parameter count given the layer's hyperparameters.
    size_t param_count() const;
    bool has_params() const { return kind == LayerKind::Dense || kind == LayerKind::Conv2d; }
};

using Model = std::vector<LayerSpec>;

// Per-layer output shapes (batch excluded). Rejects ill-formed stacks before
// any numeric work; errors name the offending layer index.
std::vector<std::vector<int>> infer_shapes(const Model& model, const std::vector<int>& input_shape);

// Product of a layer's output shape = its neuron count.
size_t neuron_count(const std::vector<int>& shape);

// Index of the last layer before the classifier head (the final dense
// layer). This is the default sensitivity tap.
int last_encoder_layer(const Model& model);

// Layers whose outputs are meaningful activation vectors for coverage
// metrics: everything except flatten (a reshape) and the trailing softmax.
std::vector<int> coverage_layers(const Model& model);

}  // namespace nss
