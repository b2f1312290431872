#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "nss/baselines.hpp"
#include "nss/selection.hpp"
#include "nss/trainer.hpp"

namespace nss {

// Fraction of selected candidates the model misclassifies. `predicted` and
// `labels` are per-candidate arrays (as cached in a SelectionReport).
double fdr(const std::vector<int>& selected, const std::vector<int>& predicted,
           const std::vector<int>& labels);

// Distinct (ground truth -> prediction) confusions among misclassified cases.
// `subset` empty means all candidates.
std::set<std::pair<int, int>> fault_types(const std::vector<int>& subset,
                                          const std::vector<int>& predicted,
                                          const std::vector<int>& labels);

struct FtcrResult {
    std::vector<double> budgets;  // fractions, e.g. 0.01 .. 0.20
    std::vector<double> rates;    // fault-type coverage per budget
    double auc_percent = 0.0;     // mean of rates over the grid, as a percentage
    bool no_faults = false;       // candidate pool triggers no fault at all
};

// Fault-type coverage curve over a prioritized order that covers all
// candidates. Default grid is 1%..20% in 1% steps.
FtcrResult ftcr_curve(const std::vector<int>& order, const std::vector<int>& predicted,
                      const std::vector<int>& labels, std::vector<double> budgets = {});

struct TimingRow {
    std::string selector;
    double budget = 0.0;
    double score_seconds = 0.0;
    double order_seconds = 0.0;
    double total_seconds = 0.0;
};

// Wall-clock table for the given selector reports; random rows report zero.
TimingRow timing_row(const SelectionReport& report, double budget);

struct ScalingResult {
    double t_n = 0.0;
    double t_2n = 0.0;
    double ratio() const { return t_n > 0.0 ? t_2n / t_n : 0.0; }
};

// Ordering-phase scaling on synthetic scores: time to rank n vs 2n
// candidates. Minimum over `repeats` runs.
ScalingResult bench_sort_scaling(size_t n, int repeats, uint64_t seed);

// Greedy-coverage scaling at a fixed neuron count with a proportional
// budget: doubling n roughly quadruples the work.
ScalingResult bench_kmnc_greedy_scaling(size_t n, int neurons, int bins, double budget_fraction,
                                        int repeats, uint64_t seed);

struct SweepRow {
    double parameter = 0.0;  // k fraction or layer id
    double fdr = 0.0;
};

// FDR at `budget` for each sensitive-neuron fraction k.
std::vector<SweepRow> sweep_k(const Model& model, const Weights& weights,
                              const std::vector<CandidatePair>& candidates,
                              const std::vector<double>& ks, double budget = 0.20,
                              int tap_layer = -1);

// FDR at `budget` for each tap layer.
std::vector<SweepRow> sweep_layers(const Model& model, const Weights& weights,
                                   const std::vector<CandidatePair>& candidates,
                                   const std::vector<int>& layers, double budget = 0.20,
                                   double k = 0.10);

struct RetrainResult {
    double base_accuracy = 0.0;  // on the test set, before fine-tuning
    double new_accuracy = 0.0;
    double delta() const { return new_accuracy - base_accuracy; }
};

// Fine-tunes a copy of the weights on train_set plus the selected candidates
// (with their carried ground-truth labels) and reports the test-accuracy
// change.
RetrainResult retrain_experiment(const Model& model, const std::vector<int>& input_shape,
                                 const Weights& weights, const LabeledDataset& train_set,
                                 const LabeledDataset& test_set,
                                 const std::vector<CandidatePair>& candidates,
                                 const std::vector<int>& selected, const TrainConfig& config);

}  // namespace nss
