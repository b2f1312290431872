#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nss/mutation.hpp"
#include "nss/network.hpp"

namespace nss {

// Stable identifier for one scalar neuron: a layer id plus the flat index
// into that layer's (batch-less) output.
struct NeuronAddress {
    int layer = 0;
    int index = 0;

    bool operator==(const NeuronAddress&) const = default;
};

// Per-neuron sensitivity at one tap layer: |N(x) - N(x')| for a single pair,
// or the accumulated sum over many pairs.
struct SensitivityVector {
    int layer = 0;
    std::vector<float> values;
};

struct SelectionConfig {
    double k = 0.10;                // fraction of sensitive neurons, (0, 1]
    double budget = 0.10;           // < 1: fraction of candidates; >= 1: count
    int tap_layer = -1;             // -1 selects the last encoder layer
    double identify_fraction = 1.0; // share of candidates the identifier sees
    uint64_t seed = 0;
};

// Budget resolution shared by every selector: fractions round down with a
// floor of one; counts pass through. Must not exceed the candidate count.
int resolve_budget(double budget, int candidate_count);

struct SelectionReport {
    std::string selector;
    std::vector<int> ranked;   // selected indices, best first (size = budget)
    std::vector<int> order;    // full prioritized order over all candidates
    std::vector<float> scores; // per-candidate score; empty when not score-based
    std::vector<int> predicted;
    std::vector<int> labels;
    std::vector<NeuronAddress> sensitive;
    std::vector<std::pair<std::string, std::string>> config;
    std::vector<std::pair<std::string, double>> timings;  // phase -> seconds
};

// Elementwise |N_i(x) - N_i(x')| for a single pair. Both traces must contain
// `layer` with identical single-row shapes.
SensitivityVector neuron_sensitivity(const ActivationTrace& trace_x,
                                     const ActivationTrace& trace_x_prime, int layer);

// Accumulates per-neuron sensitivity over all pairs (or the seed-chosen
// subset when identify_fraction < 1) and keeps the ceil(k*n) most sensitive
// neurons, ordered by descending accumulated sensitivity, ties toward the
// smaller flat index.
std::vector<NeuronAddress> identify_sensitive(const Model& model, const Weights& weights,
                                              const std::vector<CandidatePair>& pairs, double k,
                                              int tap_layer = -1,
                                              double identify_fraction = 1.0, uint64_t seed = 0);

// Accumulated per-neuron sensitivities (the identifier's internal list),
// exposed for checkpoint comparisons and diagnostics.
SensitivityVector accumulate_sensitivity(const Model& model, const Weights& weights,
                                         const std::vector<CandidatePair>& pairs,
                                         int tap_layer = -1);

// Sum of single-pair sensitivities over `sensitive` (ascending-index
// summation order). All addresses must share one layer and lie within it.
float tnss_score(const Model& model, const Weights& weights, const CandidatePair& pair,
                 const std::vector<NeuronAddress>& sensitive);

// Full pipeline: identify sensitive neurons on the candidate set, score every
// candidate, rank by descending score (ties toward the smaller candidate
// index) and truncate to the budget. O(n log n) comparison sort.
SelectionReport select(const Model& model, const Weights& weights,
                       const std::vector<CandidatePair>& candidates,
                       const SelectionConfig& config);

// Fills report.predicted/labels from the model's predictions on the candidate
// (mutated) images, enabling metric computation from the persisted file alone.
void attach_predictions(SelectionReport& report, const Model& model, const Weights& weights,
                        const std::vector<CandidatePair>& candidates);

// Stacks the candidate (mutated) images into one [n,c,h,w] batch.
Tensor candidate_batch(const std::vector<CandidatePair>& candidates);
Tensor original_batch(const std::vector<CandidatePair>& candidates);

}  // namespace nss
