#pragma once

#include <cstdint>
#include <vector>

#include "nss/dataset.hpp"
#include "nss/network.hpp"

namespace nss {

struct TrainConfig {
    int epochs = 10;
    int batch_size = 64;
    float lr = 0.01f;
    std::vector<int> lr_decay_epochs;  // 1-based epochs after which lr steps down
    float lr_decay_factor = 0.1f;
    float momentum = 0.9f;
    bool nesterov = true;
    uint64_t seed = 0;

    void validate() const;

    // Fine-tuning schedule used by the retraining experiment: 10 epochs,
    // lr 1e-3 stepped down tenfold after epochs 5 and 8, Nesterov 0.9.
    static TrainConfig retrain_defaults();
};

struct LossAndGrads {
    float loss = 0.0f;
    Weights grads;
};

// Mean softmax cross-entropy over the batch plus gradients for every
// trainable tensor.
LossAndGrads loss_and_grads(const Model& model, const Weights& weights, const Tensor& batch,
                            const std::vector<int>& labels);

// Double-precision twin used by gradient verification.
struct LossAndGradsF64 {
    double loss = 0.0;
    WeightsT<double> grads;
};
LossAndGradsF64 loss_and_grads_f64(const Model& model, const WeightsT<double>& weights,
                                   const TensorT<double>& batch, const std::vector<int>& labels);

// Fan-scaled uniform initialization (+-sqrt(6/(fan_in+fan_out))), zero
// biases, deterministic per (seed, layer).
Weights init_weights(const Model& model, const std::vector<int>& input_shape, uint64_t seed);

struct TrainResult {
    Weights weights;
    std::vector<double> epoch_accuracy;  // on the training set, one per epoch
};

// Minibatch SGD with (Nesterov) momentum, seed-pinned shuffling. Aborts with
// NumericError if the loss goes non-finite.
TrainResult train(const Model& model, const std::vector<int>& input_shape, const Weights& init,
                  const LabeledDataset& dataset, const TrainConfig& config);

// Fraction of dataset elements the model classifies correctly.
double accuracy(const Model& model, const Weights& weights, const LabeledDataset& dataset);

}  // namespace nss
