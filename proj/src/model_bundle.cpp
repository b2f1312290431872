#include "nss/model_bundle.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace nss {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

ordered_json layer_to_json(const LayerSpec& l) {
    ordered_json j;
    j["kind"] = layer_kind_name(l.kind);
    switch (l.kind) {
        case LayerKind::Dense:
            j["in"] = l.in_features;
            j["out"] = l.out_features;
            break;
        case LayerKind::Conv2d:
            j["in_channels"] = l.in_channels;
            j["out_channels"] = l.out_channels;
            j["kernel"] = {l.kernel_h, l.kernel_w};
            j["stride"] = l.stride;
            j["padding"] = l.padding;
            break;
        case LayerKind::MaxPool2d:
            j["window"] = {l.pool_h, l.pool_w};
            j["stride"] = l.pool_stride;
            break;
        default:
            break;
    }
    return j;
}

LayerSpec layer_from_json(const ordered_json& j) {
    LayerKind kind = layer_kind_from_name(j.at("kind").get<std::string>());
    switch (kind) {
        case LayerKind::Dense:
            return LayerSpec::dense(j.at("in").get<int>(), j.at("out").get<int>());
        case LayerKind::Conv2d: {
            auto kernel = j.at("kernel");
            return LayerSpec::conv2d(j.at("in_channels").get<int>(),
                                     j.at("out_channels").get<int>(), kernel.at(0).get<int>(),
                                     kernel.at(1).get<int>(), j.at("stride").get<int>(),
                                     j.at("padding").get<int>());
        }
        case LayerKind::MaxPool2d: {
            auto window = j.at("window");
            return LayerSpec::maxpool2d(window.at(0).get<int>(), window.at(1).get<int>(),
                                        j.at("stride").get<int>());
        }
        case LayerKind::Relu: return LayerSpec::relu();
        case LayerKind::Tanh: return LayerSpec::tanh();
        case LayerKind::Sigmoid: return LayerSpec::sigmoid();
        case LayerKind::Flatten: return LayerSpec::flatten();
        case LayerKind::Softmax: return LayerSpec::softmax();
    }
    throw FormatError("unreachable layer kind");
}

void append_floats(std::ofstream& out, const Tensor& t) {
    for (size_t i = 0; i < t.numel(); ++i) {
        uint32_t bits;
        float v = t[i];
        std::memcpy(&bits, &v, 4);
        unsigned char buf[4] = {static_cast<unsigned char>(bits),
                                static_cast<unsigned char>(bits >> 8),
                                static_cast<unsigned char>(bits >> 16),
                                static_cast<unsigned char>(bits >> 24)};
        out.write(reinterpret_cast<const char*>(buf), 4);
    }
}

void read_floats(std::ifstream& in, Tensor& t, size_t layer_idx) {
    std::vector<unsigned char> buf(t.numel() * 4);
    if (!in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()))) {
        throw FormatError("weights.bin: truncated while reading layer " +
                          std::to_string(layer_idx) + " (need " + std::to_string(buf.size()) +
                          " bytes)");
    }
    for (size_t i = 0; i < t.numel(); ++i) {
        uint32_t bits = uint32_t(buf[4 * i]) | (uint32_t(buf[4 * i + 1]) << 8) |
                        (uint32_t(buf[4 * i + 2]) << 16) | (uint32_t(buf[4 * i + 3]) << 24);
        float v;
        std::memcpy(&v, &bits, 4);
        t[i] = v;
    }
}

}  // namespace

void save_model_bundle(const ModelBundle& bundle, const std::string& dir) {
    validate_weights(bundle.model, bundle.input_shape, bundle.weights);
    fs::create_directories(dir);

    ordered_json manifest;
    manifest["format_version"] = ModelBundle::kFormatVersion;
    manifest["input_shape"] = bundle.input_shape;
    manifest["class_count"] = bundle.class_count;
    ordered_json layers = ordered_json::array();
    for (const auto& l : bundle.model) layers.push_back(layer_to_json(l));
    manifest["layers"] = layers;

    std::ofstream mf(fs::path(dir) / "manifest", std::ios::binary);
    if (!mf) throw FormatError(dir + "/manifest: cannot open for writing");
    mf << manifest.dump(2) << "\n";

    std::ofstream wf(fs::path(dir) / "weights.bin", std::ios::binary);
    if (!wf) throw FormatError(dir + "/weights.bin: cannot open for writing");
    for (const auto& p : bundle.weights) {
        if (p.empty()) continue;
        append_floats(wf, p.weight);
        append_floats(wf, p.bias);
    }
    if (!wf) throw FormatError(dir + "/weights.bin: write failure");
}

ModelBundle load_model_bundle(const std::string& dir) {
    std::ifstream mf(fs::path(dir) / "manifest", std::ios::binary);
    if (!mf) throw FormatError(dir + "/manifest: cannot open");
    ordered_json manifest;
    try {
        mf >> manifest;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(dir + "/manifest: parse error: " + e.what());
    }

    int version = manifest.at("format_version").get<int>();
    if (version != ModelBundle::kFormatVersion) {
        throw FormatError(dir + "/manifest: format version " + std::to_string(version) +
                          " not supported (expected " +
                          std::to_string(ModelBundle::kFormatVersion) + ")");
    }

    ModelBundle bundle;
    bundle.input_shape = manifest.at("input_shape").get<std::vector<int>>();
    bundle.class_count = manifest.at("class_count").get<int>();
    for (const auto& lj : manifest.at("layers")) bundle.model.push_back(layer_from_json(lj));

    // Shape inference up front so byte counts below are trustworthy.
    infer_shapes(bundle.model, bundle.input_shape);

    std::ifstream wf(fs::path(dir) / "weights.bin", std::ios::binary);
    if (!wf) throw FormatError(dir + "/weights.bin: cannot open");
    bundle.weights.resize(bundle.model.size());
    for (size_t i = 0; i < bundle.model.size(); ++i) {
        const LayerSpec& l = bundle.model[i];
        if (!l.has_params()) continue;
        LayerParams& p = bundle.weights[i];
        if (l.kind == LayerKind::Dense) {
            p.weight = Tensor({l.out_features, l.in_features});
            p.bias = Tensor({l.out_features});
        } else {
            p.weight = Tensor({l.out_channels, l.in_channels, l.kernel_h, l.kernel_w});
            p.bias = Tensor({l.out_channels});
        }
        read_floats(wf, p.weight, i);
        read_floats(wf, p.bias, i);
    }
    // Trailing garbage means the manifest and blob disagree.
    char extra;
    if (wf.read(&extra, 1)) {
        throw FormatError("weights.bin: trailing bytes beyond the last layer");
    }
    return bundle;
}

}  // namespace nss
