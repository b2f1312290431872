#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "nss/detail/forward_impl.hpp"
#include "nss/parallel.hpp"

// Softmax cross-entropy backpropagation over the sequential layer stack,
// templated so gradient checks can run the identical code in double.

namespace nss::detail {

template <typename T>
struct LossGradsT {
    T loss = T(0);
    WeightsT<T> grads;
};

template <typename T>
WeightsT<T> zero_like_params(const Model& model) {
    WeightsT<T> grads(model.size());
    for (size_t i = 0; i < model.size(); ++i) {
        const LayerSpec& l = model[i];
        if (l.kind == LayerKind::Dense) {
            grads[i].weight = TensorT<T>({l.out_features, l.in_features});
            grads[i].bias = TensorT<T>({l.out_features});
        } else if (l.kind == LayerKind::Conv2d) {
            grads[i].weight = TensorT<T>({l.out_channels, l.in_channels, l.kernel_h, l.kernel_w});
            grads[i].bias = TensorT<T>({l.out_channels});
        }
    }
    return grads;
}

template <typename T>
std::vector<int> batched(const std::vector<int>& shape, int n) {
    std::vector<int> s;
    s.push_back(n);
    s.insert(s.end(), shape.begin(), shape.end());
    return s;
}

// Forward pass with every layer output cached (plus maxpool argmax), then the
// backward walk. `batch` is [n, ...]; `labels` one class per row. Gradients of
// the mean cross-entropy over the batch.
template <typename T>
LossGradsT<T> loss_and_grads_impl(const Model& model, const WeightsT<T>& weights,
                                  const TensorT<T>& batch, const std::vector<int>& labels) {
    const int n = batch.dim(0);
    if (static_cast<size_t>(n) != labels.size()) {
        throw ShapeError("batch of " + std::to_string(n) + " rows with " +
                         std::to_string(labels.size()) + " labels");
    }
    std::vector<int> input_shape(batch.shape().begin() + 1, batch.shape().end());
    auto shapes = infer_shapes(model, input_shape);
    for (size_t i = 0; i + 1 < model.size(); ++i) {
        if (model[i].kind == LayerKind::Softmax) {
            throw ConfigError("softmax is only trainable as the final layer");
        }
    }

    constexpr size_t kRowChunk = 16;

    // Forward, caching each layer's output.
    std::vector<TensorT<T>> outs(model.size());
    std::vector<std::vector<int32_t>> argmax(model.size());
    const TensorT<T>* cur = &batch;
    std::vector<int> cur_shape = input_shape;
    for (size_t li = 0; li < model.size(); ++li) {
        const auto& out_shape = shapes[li];
        outs[li] = TensorT<T>(batched<T>(out_shape, n));
        if (model[li].kind == LayerKind::MaxPool2d) {
            argmax[li].resize(outs[li].numel());
        }
        const size_t in_sz = TensorT<T>::checked_numel(cur_shape);
        const size_t out_sz = TensorT<T>::checked_numel(out_shape);
        const T* x = cur->data();
        T* y = outs[li].data();
        int32_t* am = argmax[li].empty() ? nullptr : argmax[li].data();
        const LayerSpec& layer = model[li];
        const LayerParamsT<T>& params = weights[li];
        parallel_chunks(0, static_cast<size_t>(n), kRowChunk, [&](size_t lo, size_t hi, size_t) {
            layer_forward(layer, cur_shape, out_shape, params, x + lo * in_sz, y + lo * out_sz,
                          hi - lo, am ? am + lo * out_sz : nullptr);
        });
        cur = &outs[li];
        cur_shape = out_shape;
    }

    // Softmax + cross entropy. When the model ends in softmax the final
    // output already holds probabilities; otherwise apply softmax here.
    const bool fused_softmax = model.back().kind == LayerKind::Softmax;
    const TensorT<T>& logits = fused_softmax && model.size() >= 2 ? outs[model.size() - 2]
                                                                  : outs.back();
    const int classes = static_cast<int>(logits.row_size());
    TensorT<T> probs;
    const TensorT<T>* p = nullptr;
    if (fused_softmax) {
        p = &outs.back();
    } else {
        probs = TensorT<T>(outs.back().shape());
        softmax_forward(outs.back().data(), probs.data(), static_cast<size_t>(n), classes);
        p = &probs;
    }

    LossGradsT<T> result;
    result.grads = zero_like_params<T>(model);
    const T tiny = std::numeric_limits<T>::min();
    T loss = T(0);
    for (int r = 0; r < n; ++r) {
        // Floor only true zeros; NaN from a diverged forward must propagate
        // so training can abort.
        T q = p->row(r)[labels[r]];
        if (q < tiny) q = tiny;
        loss -= std::log(q);
    }
    result.loss = loss / static_cast<T>(n);

    // d(mean CE)/d(logits) = (p - onehot) / n, which also steps over a
    // trailing softmax layer.
    TensorT<T> delta(logits.shape());
    for (int r = 0; r < n; ++r) {
        const T* pr = p->row(r);
        T* dr = delta.row(r);
        for (int c = 0; c < classes; ++c) dr[c] = pr[c] / static_cast<T>(n);
        dr[labels[r]] -= T(1) / static_cast<T>(n);
    }

    // Backward walk. `delta` holds dLoss/d(output of layer li).
    int start = static_cast<int>(model.size()) - 1 - (fused_softmax ? 1 : 0);
    for (int li = start; li >= 0; --li) {
        const LayerSpec& layer = model[li];
        const auto& out_shape = shapes[li];
        const std::vector<int>& in_shape = li == 0 ? input_shape : shapes[li - 1];
        const TensorT<T>& x = li == 0 ? batch : outs[li - 1];
        const TensorT<T>& y = outs[li];
        const size_t in_sz = TensorT<T>::checked_numel(in_shape);
        const size_t out_sz = TensorT<T>::checked_numel(out_shape);
        TensorT<T> dx(batched<T>(in_shape, n));

        switch (layer.kind) {
            case LayerKind::Dense: {
                const int in = layer.in_features, out = layer.out_features;
                parallel_chunks(0, static_cast<size_t>(n), kRowChunk,
                                [&](size_t lo, size_t hi, size_t) {
                                    dense_backward_input(delta.data() + lo * out_sz,
                                                         weights[li].weight.data(),
                                                         dx.data() + lo * in_sz, hi - lo, in, out);
                                });
                // Parameter gradients: fixed-chunk partials reduced in order.
                const size_t chunks = chunk_count(n, kRowChunk);
                std::vector<TensorT<T>> dw_part(chunks), db_part(chunks);
                parallel_chunks(0, static_cast<size_t>(n), kRowChunk,
                                [&](size_t lo, size_t hi, size_t c) {
                                    dw_part[c] = TensorT<T>({out, in});
                                    db_part[c] = TensorT<T>({out});
                                    dense_grad_params(x.data() + lo * in_sz,
                                                      delta.data() + lo * out_sz,
                                                      dw_part[c].data(), db_part[c].data(),
                                                      hi - lo, in, out);
                                });
                for (size_t c = 0; c < chunks; ++c) {
                    for (size_t j = 0; j < dw_part[c].numel(); ++j) {
                        result.grads[li].weight[j] += dw_part[c][j];
                    }
                    for (size_t j = 0; j < db_part[c].numel(); ++j) {
                        result.grads[li].bias[j] += db_part[c][j];
                    }
                }
                break;
            }
            case LayerKind::Conv2d: {
                Conv2dDims d = conv_dims(layer, in_shape, out_shape);
                parallel_chunks(0, static_cast<size_t>(n), kRowChunk,
                                [&](size_t lo, size_t hi, size_t) {
                                    conv2d_backward_input(delta.data() + lo * out_sz,
                                                          weights[li].weight.data(),
                                                          dx.data() + lo * in_sz, hi - lo, d);
                                });
                const size_t chunks = chunk_count(n, kRowChunk);
                std::vector<TensorT<T>> dw_part(chunks), db_part(chunks);
                parallel_chunks(0, static_cast<size_t>(n), kRowChunk,
                                [&](size_t lo, size_t hi, size_t c) {
                                    dw_part[c] = TensorT<T>(weights[li].weight.shape());
                                    db_part[c] = TensorT<T>(weights[li].bias.shape());
                                    conv2d_grad_params(x.data() + lo * in_sz,
                                                       delta.data() + lo * out_sz,
                                                       dw_part[c].data(), db_part[c].data(),
                                                       hi - lo, d);
                                });
                for (size_t c = 0; c < chunks; ++c) {
                    for (size_t j = 0; j < dw_part[c].numel(); ++j) {
                        result.grads[li].weight[j] += dw_part[c][j];
                    }
                    for (size_t j = 0; j < db_part[c].numel(); ++j) {
                        result.grads[li].bias[j] += db_part[c][j];
                    }
                }
                break;
            }
            case LayerKind::Relu:
                relu_backward(delta.data(), y.data(), dx.data(), y.numel());
                break;
            case LayerKind::Tanh:
                tanh_backward(delta.data(), y.data(), dx.data(), y.numel());
                break;
            case LayerKind::Sigmoid:
                sigmoid_backward(delta.data(), y.data(), dx.data(), y.numel());
                break;
            case LayerKind::MaxPool2d: {
                Pool2dDims d = pool_dims(layer, in_shape, out_shape);
                parallel_chunks(0, static_cast<size_t>(n), kRowChunk,
                                [&](size_t lo, size_t hi, size_t) {
                                    maxpool2d_backward(delta.data() + lo * out_sz,
                                                       argmax[li].data() + lo * out_sz,
                                                       dx.data() + lo * in_sz, hi - lo, d);
                                });
                break;
            }
            case LayerKind::Flatten:
                std::copy(delta.data(), delta.data() + delta.numel(), dx.data());
                break;
            case LayerKind::Softmax:
                throw ConfigError("softmax is only trainable as the final layer");
        }
        delta = std::move(dx);
    }
    return result;
}

}  // namespace nss::detail
