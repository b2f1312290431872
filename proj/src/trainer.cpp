#include "nss/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nss/detail/backprop.hpp"
#include "nss/rng.hpp"

namespace nss {

void TrainConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    if (lr < 0.0f) throw ConfigError("learning rate must not be negative");
    if (momentum < 0.0f || momentum >= 1.0f) throw ConfigError("momentum must be in [0, 1)");
    if (!(lr_decay_factor > 0.0f)) throw ConfigError("lr decay factor must be positive");
}

TrainConfig TrainConfig::retrain_defaults() {
    TrainConfig c;
    c.epochs = 10;
    c.batch_size = 64;
    c.lr = 0.001f;
    c.lr_decay_epochs = {5, 8};
    c.lr_decay_factor = 0.1f;
    c.momentum = 0.9f;
    c.nesterov = true;
    return c;
}

LossAndGrads loss_and_grads(const Model& model, const Weights& weights, const Tensor& batch,
                            const std::vector<int>& labels) {
    std::vector<int> input_shape(batch.shape().begin() + 1, batch.shape().end());
    validate_weights(model, input_shape, weights);
    auto r = detail::loss_and_grads_impl<float>(model, weights, batch, labels);
    return {r.loss, std::move(r.grads)};
}

LossAndGradsF64 loss_and_grads_f64(const Model& model, const WeightsT<double>& weights,
                                   const TensorT<double>& batch, const std::vector<int>& labels) {
    auto r = detail::loss_and_grads_impl<double>(model, weights, batch, labels);
    return {r.loss, std::move(r.grads)};
}

Weights init_weights(const Model& model, const std::vector<int>& input_shape, uint64_t seed) {
    infer_shapes(model, input_shape);
    Weights weights(model.size());
    for (size_t i = 0; i < model.size(); ++i) {
        const LayerSpec& l = model[i];
        if (!l.has_params()) continue;
        int fan_in, fan_out;
        if (l.kind == LayerKind::Dense) {
            fan_in = l.in_features;
            fan_out = l.out_features;
            weights[i].weight = Tensor({l.out_features, l.in_features});
            weights[i].bias = Tensor({l.out_features});
        } else {
            fan_in = l.in_channels * l.kernel_h * l.kernel_w;
            fan_out = l.out_channels * l.kernel_h * l.kernel_w;
            weights[i].weight = Tensor({l.out_channels, l.in_channels, l.kernel_h, l.kernel_w});
            weights[i].bias = Tensor({l.out_channels});
        }
        float bound = std::sqrt(6.0f / static_cast<float>(fan_in + fan_out));
        Rng rng(seed, i);
        for (size_t j = 0; j < weights[i].weight.numel(); ++j) {
            weights[i].weight[j] = rng.uniform_float(-bound, bound);
        }
    }
    return weights;
}

double accuracy(const Model& model, const Weights& weights, const LabeledDataset& dataset) {
    auto pred = predict(model, weights, dataset.images);
    int correct = 0;
    for (int i = 0; i < dataset.size(); ++i) correct += pred[i] == dataset.labels[i];
    return dataset.size() > 0 ? static_cast<double>(correct) / dataset.size() : 0.0;
}

TrainResult train(const Model& model, const std::vector<int>& input_shape, const Weights& init,
                  const LabeledDataset& dataset, const TrainConfig& config) {
    config.validate();
    if (dataset.size() == 0) throw ConfigError("cannot train on an empty dataset");
    validate_weights(model, input_shape, init);

    TrainResult result;
    result.weights = init;
    Weights velocity = detail::zero_like_params<float>(model);

    const int n = dataset.size();
    const size_t img_sz = dataset.images.row_size();
    float lr = config.lr;

    std::vector<int> indices(n);
    std::iota(indices.begin(), indices.end(), 0);

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        Rng shuffle_rng(config.seed, static_cast<uint64_t>(epoch));
        shuffle_rng.shuffle(indices);

        for (int start = 0; start < n; start += config.batch_size) {
            int bsize = std::min(config.batch_size, n - start);
            std::vector<int> shape = {bsize};
            shape.insert(shape.end(), input_shape.begin(), input_shape.end());
            Tensor batch(shape);
            std::vector<int> labels(bsize);
            for (int b = 0; b < bsize; ++b) {
                int src = indices[start + b];
                std::copy(dataset.images.row(src), dataset.images.row(src) + img_sz,
                          batch.row(b));
                labels[b] = dataset.labels[src];
            }

            auto lg = loss_and_grads(model, result.weights, batch, labels);
            if (!std::isfinite(lg.loss)) {
                throw NumericError("training diverged: non-finite loss at epoch " +
                                   std::to_string(epoch) + ", batch offset " +
                                   std::to_string(start));
            }

            for (size_t li = 0; li < model.size(); ++li) {
                if (!model[li].has_params()) continue;
                auto step_tensor = [&](Tensor& w, Tensor& v, const Tensor& g) {
                    for (size_t j = 0; j < w.numel(); ++j) {
                        v[j] = config.momentum * v[j] + g[j];
                        float step = config.nesterov ? g[j] + config.momentum * v[j] : v[j];
                        w[j] -= lr * step;
                    }
                };
                step_tensor(result.weights[li].weight, velocity[li].weight, lg.grads[li].weight);
                step_tensor(result.weights[li].bias, velocity[li].bias, lg.grads[li].bias);
            }
        }

        result.epoch_accuracy.push_back(accuracy(model, result.weights, dataset));
        if (std::find(config.lr_decay_epochs.begin(), config.lr_decay_epochs.end(), epoch) !=
            config.lr_decay_epochs.end()) {
            lr *= config.lr_decay_factor;
        }
    }
    return result;
}

}  // namespace nss
