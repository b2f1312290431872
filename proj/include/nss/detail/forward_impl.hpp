#pragma once

#include <cstdint>

#include "nss/detail/kernels.hpp"
#include "nss/layers.hpp"
#include "nss/network.hpp"

// Single-layer dispatch shared by inference and training.

namespace nss::detail {

inline Conv2dDims conv_dims(const LayerSpec& layer, const std::vector<int>& in,
                            const std::vector<int>& out) {
    return Conv2dDims{layer.in_channels, in[1],  in[2], layer.out_channels, out[1],
                      out[2],            layer.kernel_h, layer.kernel_w,    layer.stride,
                      layer.padding};
}

inline Pool2dDims pool_dims(const LayerSpec& layer, const std::vector<int>& in,
                            const std::vector<int>& out) {
    return Pool2dDims{in[0], in[1], in[2], out[1], out[2], layer.pool_h, layer.pool_w,
                      layer.pool_stride};
}

// Forward `rows` batch elements through one layer. `x`/`y` point at the first
// row to process; `argmax` (maxpool only) may be null.
template <typename T>
void layer_forward(const LayerSpec& layer, const std::vector<int>& in_shape,
                   const std::vector<int>& out_shape, const LayerParamsT<T>& params, const T* x,
                   T* y, size_t rows, int32_t* argmax = nullptr) {
    const size_t in_sz = TensorT<T>::checked_numel(in_shape);
    const size_t out_sz = TensorT<T>::checked_numel(out_shape);
    switch (layer.kind) {
        case LayerKind::Dense:
            dense_forward(x, params.weight.data(), params.bias.data(), y, rows,
                          layer.in_features, layer.out_features);
            break;
        case LayerKind::Conv2d:
            conv2d_forward(x, params.weight.data(), params.bias.data(), y, rows,
                           conv_dims(layer, in_shape, out_shape));
            break;
        case LayerKind::Relu:
            relu_forward(x, y, rows * in_sz);
            break;
        case LayerKind::Tanh:
            tanh_forward(x, y, rows * in_sz);
            break;
        case LayerKind::Sigmoid:
            sigmoid_forward(x, y, rows * in_sz);
            break;
        case LayerKind::MaxPool2d:
            maxpool2d_forward(x, y, argmax, rows, pool_dims(layer, in_shape, out_shape));
            break;
        case LayerKind::Flatten:
            std::copy(x, x + rows * in_sz, y);
            break;
        case LayerKind::Softmax:
            softmax_forward(x, y, rows, static_cast<int>(out_sz));
            break;
    }
}

}  // namespace nss::detail
