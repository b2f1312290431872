#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nss/dataset.hpp"
#include "nss/selection.hpp"

namespace nss {

struct BaselineConfig {
    float nac_threshold = 0.5f;
    int kmnc_bins = 1000;
    int dsa_train_cap = 1000;  // cached training activations per class
    uint64_t seed = 0;
    int tap_layer = -1;              // DSA tap; -1 = last encoder
    std::vector<int> coverage_taps;  // NAC/KMNC; empty = all coverage layers

    void validate(int class_count) const;
};

// Per-neuron training-set output bounds over the profiled layers.
struct CoverageProfile {
    std::vector<int> layers;
    std::vector<float> low;   // one entry per neuron, layer-major
    std::vector<float> high;
    int bins = 1;
};

void save_coverage_profile(const CoverageProfile& profile, const std::string& path);
CoverageProfile load_coverage_profile(const std::string& path);

// Uniform sample without replacement; `order` holds a full seed-deterministic
// permutation, `ranked` its first N entries.
SelectionReport random_select(int candidate_count, int budget, uint64_t seed);

// Descending Gini impurity 1 - sum(p^2) over the model's class probabilities.
SelectionReport gini_prioritize(const Model& model, const Weights& weights, const Tensor& images,
                                int budget);

// Greedy neuron-activation-coverage selection: a neuron is activated when its
// per-input min-max-scaled output exceeds `threshold`.
SelectionReport nac_select(const Model& model, const Weights& weights, const Tensor& images,
                           float threshold, int budget, const std::vector<int>& taps = {});

CoverageProfile kmnc_profile(const Model& model, const Weights& weights,
                             const LabeledDataset& train_set, int bins,
                             const std::vector<int>& taps = {});

// Greedy k-multisection coverage: a candidate covers bin (i,b) when neuron
// i's output falls inside bin b of [low_i, high_i]; out-of-range outputs
// cover nothing; a degenerate range (low == high) is one coverable bin.
SelectionReport kmnc_select(const Model& model, const Weights& weights, const Tensor& images,
                            const CoverageProfile& profile, int budget);

// Distance-based surprise: dist_a = nearest same-class cached training
// activation, dist_b = nearest other-class activation from that neighbor;
// score = dist_a / dist_b, descending. dist_a == 0 scores 0; otherwise
// dist_b == 0 scores +inf and ranks first.
SelectionReport dsa_prioritize(const Model& model, const Weights& weights,
                               const LabeledDataset& train_set, const Tensor& images, int cap,
                               int budget, uint64_t seed, int tap_layer = -1);

}  // namespace nss
