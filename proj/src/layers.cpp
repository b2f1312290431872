#include "nss/layers.hpp"

#include "nss/tensor.hpp"

namespace nss {

std::string layer_kind_name(LayerKind kind) {
    switch (kind) {
        case LayerKind::Dense: return "dense";
        case LayerKind::Conv2d: return "conv2d";
        case LayerKind::Relu: return "relu";
        case LayerKind::Tanh: return "tanh";
        case LayerKind::Sigmoid: return "sigmoid";
        case LayerKind::MaxPool2d: return "maxpool2d";
        case LayerKind::Flatten: return "flatten";
        case LayerKind::Softmax: return "softmax";
    }
    throw ConfigError("unreachable layer kind");
}

LayerKind layer_kind_from_name(const std::string& name) {
    if (name == "dense") return LayerKind::Dense;
    if (name == "conv2d") return LayerKind::Conv2d;
    if (name == "relu") return LayerKind::Relu;
    if (name == "tanh") return LayerKind::Tanh;
    if (name == "sigmoid") return LayerKind::Sigmoid;
    if (name == "maxpool2d") return LayerKind::MaxPool2d;
    if (name == "flatten") return LayerKind::Flatten;
    if (name == "softmax") return LayerKind::Softmax;
    throw FormatError("unknown layer kind '" + name + "'");
}

LayerSpec LayerSpec::dense(int in, int out) {
    if (in <= 0 || out <= 0) throw ConfigError("dense layer sizes must be positive");
    LayerSpec s;
    s.kind = LayerKind::Dense;
    s.in_features = in;
    s.out_features = out;
    return s;
}

LayerSpec LayerSpec::conv2d(int in_ch, int out_ch, int kh, int kw, int stride, int padding) {
    if (in_ch <= 0 || out_ch <= 0 || kh <= 0 || kw <= 0 || stride <= 0 || padding < 0) {
        throw ConfigError("invalid conv2d hyperparameters");
    }
    LayerSpec s;
    s.kind = LayerKind::Conv2d;
    s.in_channels = in_ch;
    s.out_channels = out_ch;
    s.kernel_h = kh;
    s.kernel_w = kw;
    s.stride = stride;
    s.padding = padding;
    return s;
}

LayerSpec LayerSpec::maxpool2d(int ph, int pw, int stride) {
    if (ph <= 0 || pw <= 0 || stride <= 0) throw ConfigError("invalid maxpool2d hyperparameters");
    LayerSpec s;
    s.kind = LayerKind::MaxPool2d;
    s.pool_h = ph;
    s.pool_w = pw;
    s.pool_stride = stride;
    return s;
}

size_t LayerSpec::param_count() const {
    switch (kind) {
        case LayerKind::Dense:
            return static_cast<size_t>(in_features) * out_features + out_features;
        case LayerKind::Conv2d:
            return static_cast<size_t>(out_channels) * in_channels * kernel_h * kernel_w +
                   out_channels;
        default:
            return 0;
    }
}

namespace {

[[noreturn]] void shape_fail(size_t layer_idx, const LayerSpec& layer, const std::string& why) {
    throw ShapeError("layer " + std::to_string(layer_idx) + " (" + layer_kind_name(layer.kind) +
                     "): " + why);
}

std::vector<int> layer_output_shape(size_t idx, const LayerSpec& layer,
                                    const std::vector<int>& in) {
    switch (layer.kind) {
        case LayerKind::Dense: {
            if (in.size() != 1 || in[0] != layer.in_features) {
                shape_fail(idx, layer,
                           "expected input shape [" + std::to_string(layer.in_features) +
                               "], got " + shape_str(in));
            }
            return {layer.out_features};
        }
        case LayerKind::Conv2d: {
            if (in.size() != 3) shape_fail(idx, layer, "expected rank-3 input, got " + shape_str(in));
            if (in[0] != layer.in_channels) {
                shape_fail(idx, layer,
                           "expected " + std::to_string(layer.in_channels) + " input channels, got " +
                               std::to_string(in[0]));
            }
            int h = (in[1] + 2 * layer.padding - layer.kernel_h) / layer.stride + 1;
            int w = (in[2] + 2 * layer.padding - layer.kernel_w) / layer.stride + 1;
            if (in[1] + 2 * layer.padding < layer.kernel_h ||
                in[2] + 2 * layer.padding < layer.kernel_w || h <= 0 || w <= 0) {
                shape_fail(idx, layer, "kernel does not fit input " + shape_str(in));
            }
            return {layer.out_channels, h, w};
        }
        case LayerKind::Relu:
        case LayerKind::Tanh:
        case LayerKind::Sigmoid:
            return in;
        case LayerKind::MaxPool2d: {
            if (in.size() != 3) shape_fail(idx, layer, "expected rank-3 input, got " + shape_str(in));
            if (in[1] < layer.pool_h || in[2] < layer.pool_w) {
                shape_fail(idx, layer, "window does not fit input " + shape_str(in));
            }
            int h = (in[1] - layer.pool_h) / layer.pool_stride + 1;
            int w = (in[2] - layer.pool_w) / layer.pool_stride + 1;
            return {in[0], h, w};
        }
        case LayerKind::Flatten: {
            size_t n = Tensor::checked_numel(in);
            return {static_cast<int>(n)};
        }
        case LayerKind::Softmax: {
            if (in.size() != 1) {
                shape_fail(idx, layer, "expected rank-1 input, got " + shape_str(in));
            }
            return in;
        }
    }
    shape_fail(idx, layer, "unreachable");
}

}  // namespace

std::vector<std::vector<int>> infer_shapes(const Model& model, const std::vector<int>& input_shape) {
    if (model.empty()) throw ShapeError("empty model");
    Tensor::checked_numel(input_shape);
    std::vector<std::vector<int>> out;
    out.reserve(model.size());
    std::vector<int> cur = input_shape;
    for (size_t i = 0; i < model.size(); ++i) {
        cur = layer_output_shape(i, model[i], cur);
        out.push_back(cur);
    }
    return out;
}

size_t neuron_count(const std::vector<int>& shape) { return Tensor::checked_numel(shape); }

int last_encoder_layer(const Model& model) {
    int head = -1;
    for (int i = static_cast<int>(model.size()) - 1; i >= 0; --i) {
        if (model[i].kind == LayerKind::Dense) {
            head = i;
            break;
        }
    }
    if (head <= 0) {
        throw ConfigError("model has no encoder layer before the classifier head");
    }
    return head - 1;
}

std::vector<int> coverage_layers(const Model& model) {
    std::vector<int> out;
    for (size_t i = 0; i < model.size(); ++i) {
        if (model[i].kind == LayerKind::Flatten || model[i].kind == LayerKind::Softmax) continue;
        out.push_back(static_cast<int>(i));
    }
    return out;
}

}  // namespace nss
