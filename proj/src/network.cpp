#include "nss/network.hpp"

#include "nss/detail/forward_impl.hpp"
#include "nss/parallel.hpp"

namespace nss {

const Tensor& ActivationTrace::at(int layer_id) const {
    auto it = layers.find(layer_id);
    if (it == layers.end()) {
        throw ShapeError("layer " + std::to_string(layer_id) + " missing from activation trace");
    }
    return it->second;
}

void validate_weights(const Model& model, const std::vector<int>& input_shape,
                      const Weights& weights) {
    auto shapes = infer_shapes(model, input_shape);
    if (weights.size() != model.size()) {
        throw ShapeError("weights hold " + std::to_string(weights.size()) + " layers, model has " +
                         std::to_string(model.size()));
    }
    for (size_t i = 0; i < model.size(); ++i) {
        const LayerSpec& l = model[i];
        const LayerParams& p = weights[i];
        if (!l.has_params()) {
            if (!p.empty()) {
                throw ShapeError("layer " + std::to_string(i) + " (" + layer_kind_name(l.kind) +
                                 ") takes no parameters");
            }
            continue;
        }
        std::vector<int> w_shape, b_shape;
        if (l.kind == LayerKind::Dense) {
            w_shape = {l.out_features, l.in_features};
            b_shape = {l.out_features};
        } else {
            w_shape = {l.out_channels, l.in_channels, l.kernel_h, l.kernel_w};
            b_shape = {l.out_channels};
        }
        if (p.weight.shape() != w_shape || p.bias.shape() != b_shape) {
            throw ShapeError("layer " + std::to_string(i) + " (" + layer_kind_name(l.kind) +
                             "): parameter shapes " + shape_str(p.weight.shape()) + "/" +
                             shape_str(p.bias.shape()) + " do not match expected " +
                             shape_str(w_shape) + "/" + shape_str(b_shape));
        }
    }
}

namespace {

std::vector<int> batch_shape(const std::vector<int>& shape, int n) {
    std::vector<int> s;
    s.reserve(shape.size() + 1);
    s.push_back(n);
    s.insert(s.end(), shape.begin(), shape.end());
    return s;
}

constexpr size_t kRowChunk = 32;

}  // namespace

ForwardResult forward(const Model& model, const Weights& weights, const Tensor& batch,
                      const std::set<int>& taps) {
    if (batch.rank() < 2) {
        throw ShapeError("batch must have an explicit leading batch dimension, got " +
                         shape_str(batch.shape()));
    }
    const int n = batch.dim(0);
    std::vector<int> input_shape(batch.shape().begin() + 1, batch.shape().end());
    auto shapes = infer_shapes(model, input_shape);
    validate_weights(model, input_shape, weights);
    for (int t : taps) {
        if (t < 0 || t >= static_cast<int>(model.size())) {
            throw ShapeError("tap layer " + std::to_string(t) + " out of range");
        }
    }
    if (!batch.all_finite()) throw NumericError("forward: non-finite input");

    ForwardResult result;
    Tensor cur = batch;
    std::vector<int> cur_shape = input_shape;
    for (size_t li = 0; li < model.size(); ++li) {
        const auto& out_shape = shapes[li];
        Tensor out(batch_shape(out_shape, n));
        const size_t in_sz = Tensor::checked_numel(cur_shape);
        const size_t out_sz = Tensor::checked_numel(out_shape);
        const float* x = cur.data();
        float* y = out.data();
        const LayerSpec& layer = model[li];
        const LayerParams& params = weights[li];
        parallel_chunks(0, static_cast<size_t>(n), kRowChunk,
                        [&](size_t lo, size_t hi, size_t) {
                            detail::layer_forward(layer, cur_shape, out_shape, params,
                                                  x + lo * in_sz, y + lo * out_sz, hi - lo);
                        });
        if (taps.count(static_cast<int>(li))) {
            result.trace.layers.emplace(static_cast<int>(li), out);
        }
        cur = std::move(out);
        cur_shape = out_shape;
    }
    result.logits = std::move(cur);
    return result;
}

std::vector<int> argmax_rows(const Tensor& logits) {
    const int n = logits.dim(0);
    const size_t classes = logits.row_size();
    std::vector<int> out(n);
    for (int r = 0; r < n; ++r) {
        const float* row = logits.row(r);
        int best = 0;
        for (size_t c = 1; c < classes; ++c) {
            if (row[c] > row[best]) best = static_cast<int>(c);
        }
        out[r] = best;
    }
    return out;
}

std::vector<int> predict(const Model& model, const Weights& weights, const Tensor& batch) {
    return argmax_rows(forward(model, weights, batch).logits);
}

}  // namespace nss
