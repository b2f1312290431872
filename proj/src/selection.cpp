#include "nss/selection.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "nss/parallel.hpp"

namespace nss {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int resolve_tap(const Model& model, int tap_layer) {
    if (tap_layer < 0) return last_encoder_layer(model);
    if (tap_layer >= static_cast<int>(model.size())) {
        throw ConfigError("tap layer " + std::to_string(tap_layer) + " out of range for model of " +
                          std::to_string(model.size()) + " layers");
    }
    return tap_layer;
}

Tensor stack_images(const std::vector<CandidatePair>& candidates, bool mutated) {
    if (candidates.empty()) throw ConfigError("empty candidate set");
    const Tensor& first = mutated ? candidates[0].mutated : candidates[0].original;
    std::vector<int> shape;
    shape.push_back(static_cast<int>(candidates.size()));
    shape.insert(shape.end(), first.shape().begin(), first.shape().end());
    Tensor batch(shape);
    const size_t row = first.numel();
    for (size_t i = 0; i < candidates.size(); ++i) {
        const Tensor& img = mutated ? candidates[i].mutated : candidates[i].original;
        if (img.shape() != first.shape()) {
            throw ShapeError("candidate " + std::to_string(i) + " image shape " +
                             shape_str(img.shape()) + " differs from " + shape_str(first.shape()));
        }
        std::copy(img.data(), img.data() + row, batch.row(i));
    }
    return batch;
}

// Per-pair |trace_x - trace_x'| rows: an [n, neurons] matrix.
Tensor abs_diff_rows(const Tensor& trace_x, const Tensor& trace_x_prime) {
    const int n = trace_x.dim(0);
    const size_t m = trace_x.row_size();
    Tensor diff({n, static_cast<int>(m)});
    parallel_chunks(0, static_cast<size_t>(n), 64, [&](size_t lo, size_t hi, size_t) {
        for (size_t r = lo; r < hi; ++r) {
            const float* a = trace_x.row(r);
            const float* b = trace_x_prime.row(r);
            float* d = diff.row(r);
            for (size_t j = 0; j < m; ++j) d[j] = std::fabs(a[j] - b[j]);
        }
    });
    return diff;
}

// Column sums over `rows` (all rows when empty), accumulated in fixed 64-row
// chunks reduced in chunk order: identical bytes for any worker count.
std::vector<float> column_sums(const Tensor& diff, const std::vector<int>& rows) {
    const size_t m = diff.row_size();
    std::vector<int> all;
    const std::vector<int>* use = &rows;
    if (rows.empty()) {
        all.resize(diff.dim(0));
        std::iota(all.begin(), all.end(), 0);
        use = &all;
    }
    const size_t n = use->size();
    constexpr size_t kChunk = 64;
    const size_t chunks = chunk_count(n, kChunk);
    std::vector<std::vector<float>> partial(chunks);
    parallel_chunks(0, n, kChunk, [&](size_t lo, size_t hi, size_t c) {
        std::vector<float>& acc = partial[c];
        acc.assign(m, 0.0f);
        for (size_t r = lo; r < hi; ++r) {
            const float* d = diff.row((*use)[r]);
            for (size_t j = 0; j < m; ++j) acc[j] += d[j];
        }
    });
    std::vector<float> total(m, 0.0f);
    for (const auto& acc : partial) {
        for (size_t j = 0; j < m; ++j) total[j] += acc[j];
    }
    return total;
}

// ceil(k*n) most sensitive neurons, descending value, ties ascending index.
std::vector<int> top_k_neurons(const std::vector<float>& values, double k) {
    if (!(k > 0.0) || k > 1.0) throw ConfigError("k must be in (0, 1]");
    const size_t m = values.size();
    size_t keep = static_cast<size_t>(std::ceil(k * static_cast<double>(m)));
    keep = std::min(std::max<size_t>(keep, 1), m);
    std::vector<int> idx(m);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (values[a] != values[b]) return values[a] > values[b];
        return a < b;
    });
    idx.resize(keep);
    return idx;
}

std::vector<int> identify_subset(size_t n, double fraction, uint64_t seed) {
    if (!(fraction > 0.0) || fraction > 1.0) {
        throw ConfigError("identify_fraction must be in (0, 1]");
    }
    if (fraction >= 1.0) return {};
    size_t keep = std::max<size_t>(1, static_cast<size_t>(fraction * static_cast<double>(n)));
    std::vector<int> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(seed, 0xD5A7u);
    rng.shuffle(idx);
    idx.resize(keep);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace

int resolve_budget(double budget, int candidate_count) {
    if (budget <= 0.0) throw ConfigError("budget must be positive");
    int n;
    if (budget < 1.0) {
        n = std::max(1, static_cast<int>(budget * candidate_count));
    } else {
        n = static_cast<int>(budget);
    }
    if (n > candidate_count) {
        throw ConfigError("budget " + std::to_string(n) + " exceeds candidate count " +
                          std::to_string(candidate_count));
    }
    return n;
}

Tensor candidate_batch(const std::vector<CandidatePair>& candidates) {
    return stack_images(candidates, true);
}

Tensor original_batch(const std::vector<CandidatePair>& candidates) {
    return stack_images(candidates, false);
}

SensitivityVector neuron_sensitivity(const ActivationTrace& trace_x,
                                     const ActivationTrace& trace_x_prime, int layer) {
    const Tensor& a = trace_x.at(layer);
    const Tensor& b = trace_x_prime.at(layer);
    if (!a.same_shape(b)) {
        throw ShapeError("trace shapes differ at layer " + std::to_string(layer) + ": " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    }
    if (a.dim(0) != 1) {
        throw ShapeError("single-pair sensitivity expects batch of 1, got " +
                         std::to_string(a.dim(0)));
    }
    SensitivityVector out;
    out.layer = layer;
    out.values.resize(a.row_size());
    for (size_t j = 0; j < out.values.size(); ++j) {
        out.values[j] = std::fabs(a[j] - b[j]);
    }
    return out;
}

SensitivityVector accumulate_sensitivity(const Model& model, const Weights& weights,
                                         const std::vector<CandidatePair>& pairs, int tap_layer) {
    if (pairs.empty()) throw ConfigError("empty pair list");
    const int tap = resolve_tap(model, tap_layer);
    auto fx = forward(model, weights, original_batch(pairs), {tap});
    auto fm = forward(model, weights, candidate_batch(pairs), {tap});
    Tensor diff = abs_diff_rows(fx.trace.at(tap), fm.trace.at(tap));
    SensitivityVector out;
    out.layer = tap;
    out.values = column_sums(diff, {});
    return out;
}

std::vector<NeuronAddress> identify_sensitive(const Model& model, const Weights& weights,
                                              const std::vector<CandidatePair>& pairs, double k,
                                              int tap_layer, double identify_fraction,
                                              uint64_t seed) {
    if (pairs.empty()) throw ConfigError("empty pair list");
    if (!(k > 0.0) || k > 1.0) throw ConfigError("k must be in (0, 1]");
    const int tap = resolve_tap(model, tap_layer);

    std::vector<int> subset = identify_subset(pairs.size(), identify_fraction, seed);
    std::vector<CandidatePair> held;
    const std::vector<CandidatePair>* use = &pairs;
    if (!subset.empty()) {
        held.reserve(subset.size());
        for (int i : subset) held.push_back(pairs[i]);
        use = &held;
    }
    SensitivityVector acc = accumulate_sensitivity(model, weights, *use, tap);
    std::vector<NeuronAddress> out;
    for (int j : top_k_neurons(acc.values, k)) out.push_back({tap, j});
    return out;
}

float tnss_score(const Model& model, const Weights& weights, const CandidatePair& pair,
                 const std::vector<NeuronAddress>& sensitive) {
    if (sensitive.empty()) throw ConfigError("sensitive neuron set is empty");
    const int tap = sensitive[0].layer;
    std::vector<CandidatePair> one{pair};
    auto fx = forward(model, weights, original_batch(one), {tap});
    auto fm = forward(model, weights, candidate_batch(one), {tap});
    const Tensor& a = fx.trace.at(tap);
    const Tensor& b = fm.trace.at(tap);
    const size_t m = a.row_size();

    std::vector<int> cols;
    cols.reserve(sensitive.size());
    for (const auto& addr : sensitive) {
        if (addr.layer != tap) {
            throw ConfigError("sensitive set mixes layers " + std::to_string(tap) + " and " +
                              std::to_string(addr.layer));
        }
        if (addr.index < 0 || static_cast<size_t>(addr.index) >= m) {
            throw ConfigError("neuron index " + std::to_string(addr.index) +
                              " outside tapped layer of " + std::to_string(m) + " neurons");
        }
        cols.push_back(addr.index);
    }
    std::sort(cols.begin(), cols.end());
    float score = 0.0f;
    for (int j : cols) score += std::fabs(a[j] - b[j]);
    return score;
}

SelectionReport select(const Model& model, const Weights& weights,
                       const std::vector<CandidatePair>& candidates,
                       const SelectionConfig& config) {
    if (candidates.empty()) throw ConfigError("empty candidate set");
    const int n = static_cast<int>(candidates.size());
    const int budget = resolve_budget(config.budget, n);
    const int tap = resolve_tap(model, config.tap_layer);

    SelectionReport report;
    report.selector = "nss";

    // Phase 1: identify sensitive neurons on the candidate set.
    auto t0 = Clock::now();
    auto fx = forward(model, weights, original_batch(candidates), {tap});
    auto fm = forward(model, weights, candidate_batch(candidates), {tap});
    Tensor diff = abs_diff_rows(fx.trace.at(tap), fm.trace.at(tap));
    std::vector<int> subset = identify_subset(candidates.size(), config.identify_fraction,
                                              config.seed);
    std::vector<float> ns_list = column_sums(diff, subset);
    std::vector<int> sensitive_cols = top_k_neurons(ns_list, config.k);
    for (int j : sensitive_cols) report.sensitive.push_back({tap, j});
    report.timings.emplace_back("identify", seconds_since(t0));

    // Phase 2: per-candidate score over the sensitive set (ascending index
    // summation for bit-stable results).
    t0 = Clock::now();
    std::vector<int> cols = sensitive_cols;
    std::sort(cols.begin(), cols.end());
    report.scores.resize(n);
    parallel_chunks(0, static_cast<size_t>(n), 64, [&](size_t lo, size_t hi, size_t) {
        for (size_t r = lo; r < hi; ++r) {
            const float* d = diff.row(r);
            float s = 0.0f;
            for (int j : cols) s += d[j];
            report.scores[r] = s;
        }
    });
    report.timings.emplace_back("score", seconds_since(t0));

    // Phase 3: comparison sort, descending score, ties ascending index.
    t0 = Clock::now();
    report.order.resize(n);
    std::iota(report.order.begin(), report.order.end(), 0);
    std::sort(report.order.begin(), report.order.end(), [&](int a, int b) {
        if (report.scores[a] != report.scores[b]) return report.scores[a] > report.scores[b];
        return a < b;
    });
    report.ranked.assign(report.order.begin(), report.order.begin() + budget);
    report.timings.emplace_back("order", seconds_since(t0));

    report.config = {
        {"selector", "nss"},
        {"k", std::to_string(config.k)},
        {"budget", std::to_string(config.budget)},
        {"tap_layer", std::to_string(tap)},
        {"identify_fraction", std::to_string(config.identify_fraction)},
        {"seed", std::to_string(config.seed)},
    };
    return report;
}

void attach_predictions(SelectionReport& report, const Model& model, const Weights& weights,
                        const std::vector<CandidatePair>& candidates) {
    report.predicted = predict(model, weights, candidate_batch(candidates));
    report.labels.clear();
    report.labels.reserve(candidates.size());
    for (const auto& c : candidates) report.labels.push_back(c.label);
}

}  // namespace nss
