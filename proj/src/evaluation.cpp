#include "nss/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>

namespace nss {

namespace {

using Clock = std::chrono::steady_clock;

double time_call(const std::function<void()>& fn) {
    auto t0 = Clock::now();
    fn();
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int budget_count(double fraction, int n) {
    return std::max(1, static_cast<int>(fraction * n));
}

}  // namespace

double fdr(const std::vector<int>& selected, const std::vector<int>& predicted,
           const std::vector<int>& labels) {
    if (selected.empty()) throw ConfigError("FDR of an empty selection is undefined");
    int wrong = 0;
    for (int i : selected) {
        if (i < 0 || static_cast<size_t>(i) >= predicted.size()) {
            throw ConfigError("selected index " + std::to_string(i) + " out of range");
        }
        wrong += predicted[i] != labels[i];
    }
    return static_cast<double>(wrong) / static_cast<double>(selected.size());
}

std::set<std::pair<int, int>> fault_types(const std::vector<int>& subset,
                                          const std::vector<int>& predicted,
                                          const std::vector<int>& labels) {
    std::set<std::pair<int, int>> types;
    auto add = [&](int i) {
        if (predicted[i] != labels[i]) types.emplace(labels[i], predicted[i]);
    };
    if (subset.empty()) {
        for (size_t i = 0; i < predicted.size(); ++i) add(static_cast<int>(i));
    } else {
        for (int i : subset) add(i);
    }
    return types;
}

FtcrResult ftcr_curve(const std::vector<int>& order, const std::vector<int>& predicted,
                      const std::vector<int>& labels, std::vector<double> budgets) {
    if (order.size() != predicted.size() || predicted.size() != labels.size()) {
        throw ConfigError("ftcr_curve needs a full prioritized order over all candidates");
    }
    if (budgets.empty()) {
        for (int b = 1; b <= 20; ++b) budgets.push_back(b / 100.0);
    }
    FtcrResult result;
    result.budgets = budgets;

    auto total = fault_types({}, predicted, labels);
    if (total.empty()) {
        result.no_faults = true;
        result.rates.assign(budgets.size(), 0.0);
        result.auc_percent = 0.0;
        return result;
    }

    const int n = static_cast<int>(order.size());
    for (double b : budgets) {
        int count = std::clamp(budget_count(b, n), 1, n);
        std::vector<int> head(order.begin(), order.begin() + count);
        auto covered = fault_types(head, predicted, labels);
        result.rates.push_back(static_cast<double>(covered.size()) /
                               static_cast<double>(total.size()));
    }
    double mean = std::accumulate(result.rates.begin(), result.rates.end(), 0.0) /
                  static_cast<double>(result.rates.size());
    result.auc_percent = mean * 100.0;
    return result;
}

TimingRow timing_row(const SelectionReport& report, double budget) {
    TimingRow row;
    row.selector = report.selector;
    row.budget = budget;
    if (report.selector == "random") {
        return row;  // random selection is charged zero time
    }
    for (const auto& [phase, seconds] : report.timings) {
        if (phase == "order") {
            row.order_seconds += seconds;
        } else {
            row.score_seconds += seconds;
        }
        row.total_seconds += seconds;
    }
    return row;
}

ScalingResult bench_sort_scaling(size_t n, int repeats, uint64_t seed) {
    auto run = [&](size_t count) {
        Rng rng(seed, count);
        std::vector<float> scores(count);
        for (auto& s : scores) s = rng.next_float();
        double best = std::numeric_limits<double>::infinity();
        for (int r = 0; r < repeats; ++r) {
            std::vector<int> order(count);
            double t = time_call([&] {
                std::iota(order.begin(), order.end(), 0);
                std::sort(order.begin(), order.end(), [&](int a, int b) {
                    if (scores[a] != scores[b]) return scores[a] > scores[b];
                    return a < b;
                });
            });
            best = std::min(best, t);
            if (order[0] < 0) break;  // keep the optimizer honest
        }
        return best;
    };
    ScalingResult result;
    result.t_n = run(n);
    result.t_2n = run(2 * n);
    return result;
}

ScalingResult bench_kmnc_greedy_scaling(size_t n, int neurons, int bins, double budget_fraction,
                                        int repeats, uint64_t seed) {
    auto run = [&](size_t count) {
        // Synthetic covered-bin sets: every candidate hits one bin per neuron.
        Rng rng(seed, count);
        std::vector<std::vector<int64_t>> covers(count);
        for (size_t i = 0; i < count; ++i) {
            covers[i].reserve(neurons);
            for (int j = 0; j < neurons; ++j) {
                covers[i].push_back(static_cast<int64_t>(j) * bins +
                                    static_cast<int64_t>(rng.uniform_int(bins)));
            }
        }
        const int64_t item_count = static_cast<int64_t>(neurons) * bins;
        const int picks = budget_count(budget_fraction, static_cast<int>(count));
        double best = std::numeric_limits<double>::infinity();
        for (int r = 0; r < repeats; ++r) {
            double t = time_call([&] {
                std::vector<uint8_t> covered(item_count, 0);
                std::vector<uint8_t> picked(count, 0);
                for (int p = 0; p < picks; ++p) {
                    int best_i = -1;
                    int64_t best_gain = -1;
                    for (size_t i = 0; i < count; ++i) {
                        if (picked[i]) continue;
                        int64_t gain = 0;
                        for (int64_t item : covers[i]) gain += covered[item] == 0;
                        if (gain > best_gain) {
                            best_gain = gain;
                            best_i = static_cast<int>(i);
                        }
                    }
                    picked[best_i] = 1;
                    for (int64_t item : covers[best_i]) covered[item] = 1;
                }
            });
            best = std::min(best, t);
        }
        return best;
    };
    ScalingResult result;
    result.t_n = run(n);
    result.t_2n = run(2 * n);
    return result;
}

std::vector<SweepRow> sweep_k(const Model& model, const Weights& weights,
                              const std::vector<CandidatePair>& candidates,
                              const std::vector<double>& ks, double budget, int tap_layer) {
    std::vector<int> predicted = predict(model, weights, candidate_batch(candidates));
    std::vector<int> labels;
    for (const auto& c : candidates) labels.push_back(c.label);

    std::vector<SweepRow> rows;
    for (double k : ks) {
        SelectionConfig config;
        config.k = k;
        config.budget = budget;
        config.tap_layer = tap_layer;
        auto report = select(model, weights, candidates, config);
        rows.push_back({k, fdr(report.ranked, predicted, labels)});
    }
    return rows;
}

std::vector<SweepRow> sweep_layers(const Model& model, const Weights& weights,
                                   const std::vector<CandidatePair>& candidates,
                                   const std::vector<int>& layers, double budget, double k) {
    std::vector<int> predicted = predict(model, weights, candidate_batch(candidates));
    std::vector<int> labels;
    for (const auto& c : candidates) labels.push_back(c.label);

    std::vector<SweepRow> rows;
    for (int layer : layers) {
        SelectionConfig config;
        config.k = k;
        config.budget = budget;
        config.tap_layer = layer;
        auto report = select(model, weights, candidates, config);
        rows.push_back({static_cast<double>(layer), fdr(report.ranked, predicted, labels)});
    }
    return rows;
}

RetrainResult retrain_experiment(const Model& model, const std::vector<int>& input_shape,
                                 const Weights& weights, const LabeledDataset& train_set,
                                 const LabeledDataset& test_set,
                                 const std::vector<CandidatePair>& candidates,
                                 const std::vector<int>& selected, const TrainConfig& config) {
    RetrainResult result;
    result.base_accuracy = accuracy(model, weights, test_set);

    // Augmented training set: originals plus the selected candidates with
    // their carried ground-truth labels.
    const int extra = static_cast<int>(selected.size());
    std::vector<int> shape = train_set.images.shape();
    shape[0] = train_set.size() + extra;
    LabeledDataset augmented;
    augmented.images = Tensor(shape);
    augmented.labels = train_set.labels;
    augmented.class_count = train_set.class_count;
    const size_t row = train_set.images.row_size();
    std::copy(train_set.images.data(), train_set.images.data() + train_set.images.numel(),
              augmented.images.data());
    for (int i = 0; i < extra; ++i) {
        int idx = selected[i];
        if (idx < 0 || static_cast<size_t>(idx) >= candidates.size()) {
            throw ConfigError("selected index " + std::to_string(idx) + " out of range");
        }
        const CandidatePair& c = candidates[idx];
        if (c.label < 0 || c.label >= train_set.class_count) {
            throw ConfigError("candidate " + std::to_string(idx) + " carries no valid label");
        }
        std::copy(c.mutated.data(), c.mutated.data() + row,
                  augmented.images.row(train_set.size() + i));
        augmented.labels.push_back(c.label);
    }

    auto tuned = train(model, input_shape, weights, augmented, config);
    result.new_accuracy = accuracy(model, tuned.weights, test_set);
    return result;
}

}  // namespace nss
