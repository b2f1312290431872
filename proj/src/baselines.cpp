#include "nss/baselines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>

#include "nss/detail/kernels.hpp"
#include "nss/parallel.hpp"

namespace nss {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

int resolve_tap(const Model& model, int tap_layer) {
    return tap_layer < 0 ? last_encoder_layer(model) : tap_layer;
}

std::vector<int> resolve_coverage_taps(const Model& model, const std::vector<int>& taps) {
    return taps.empty() ? coverage_layers(model) : taps;
}

// Rank by descending score, ties ascending index; fills order/ranked.
void rank_by_score(SelectionReport& report, int budget) {
    const int n = static_cast<int>(report.scores.size());
    report.order.resize(n);
    std::iota(report.order.begin(), report.order.end(), 0);
    std::sort(report.order.begin(), report.order.end(), [&](int a, int b) {
        if (report.scores[a] != report.scores[b]) return report.scores[a] > report.scores[b];
        return a < b;
    });
    report.ranked.assign(report.order.begin(), report.order.begin() + budget);
}

// Concatenated per-layer activations for every image: [n, total_neurons],
// plus per-layer [offset, size) extents.
struct TapActivations {
    Tensor values;  // [n, total]
    std::vector<size_t> offsets;
    std::vector<size_t> sizes;
};

TapActivations collect_activations(const Model& model, const Weights& weights,
                                   const Tensor& images, const std::vector<int>& taps) {
    std::set<int> tap_set(taps.begin(), taps.end());
    auto result = forward(model, weights, images, tap_set);
    TapActivations out;
    size_t total = 0;
    for (int t : taps) {
        out.offsets.push_back(total);
        size_t sz = result.trace.at(t).row_size();
        out.sizes.push_back(sz);
        total += sz;
    }
    const int n = images.dim(0);
    out.values = Tensor({n, static_cast<int>(total)});
    for (size_t ti = 0; ti < taps.size(); ++ti) {
        const Tensor& layer = result.trace.at(taps[ti]);
        for (int r = 0; r < n; ++r) {
            std::copy(layer.row(r), layer.row(r) + out.sizes[ti],
                      out.values.row(r) + out.offsets[ti]);
        }
    }
    return out;
}

// DeepXplore-style scaling: each (input, layer) activation block is min-max
// scaled to [0,1]; a constant block scales to all zeros.
void scale_per_layer(TapActivations& acts) {
    const int n = acts.values.dim(0);
    parallel_chunks(0, static_cast<size_t>(n), 64, [&](size_t lo, size_t hi, size_t) {
        for (size_t r = lo; r < hi; ++r) {
            float* row = acts.values.row(r);
            for (size_t ti = 0; ti < acts.offsets.size(); ++ti) {
                float* block = row + acts.offsets[ti];
                size_t m = acts.sizes[ti];
                float mn = block[0], mx = block[0];
                for (size_t j = 1; j < m; ++j) {
                    mn = std::min(mn, block[j]);
                    mx = std::max(mx, block[j]);
                }
                float range = mx - mn;
                for (size_t j = 0; j < m; ++j) {
                    block[j] = range > 0.0f ? (block[j] - mn) / range : 0.0f;
                }
            }
        }
    });
}

// Greedy max-new-coverage loop over per-candidate coverage-item lists. Ties
// go to the smaller index; once nothing adds coverage, remaining picks follow
// ascending index. The greedy search stops at the budget (the order beyond it
// is ascending-index bookkeeping, not greedy). Returns pick-time gains as
// scores.
void greedy_cover(SelectionReport& report, const std::vector<std::vector<int64_t>>& covers,
                  int64_t item_count, int budget) {
    const int n = static_cast<int>(covers.size());
    std::vector<uint8_t> covered(static_cast<size_t>(item_count), 0);
    std::vector<uint8_t> picked(n, 0);
    report.scores.assign(n, 0.0f);
    report.order.clear();
    report.order.reserve(n);

    int picks = 0;
    bool coverage_exhausted = false;
    while (picks < budget) {
        int best = -1;
        int64_t best_gain = -1;
        if (!coverage_exhausted) {
            for (int i = 0; i < n; ++i) {
                if (picked[i]) continue;
                int64_t gain = 0;
                for (int64_t item : covers[i]) {
                    gain += covered[static_cast<size_t>(item)] == 0;
                }
                if (gain > best_gain) {
                    best_gain = gain;
                    best = i;
                }
            }
            if (best_gain <= 0) coverage_exhausted = true;
        }
        if (coverage_exhausted) {
            for (int i = 0; i < n; ++i) {
                if (!picked[i]) {
                    best = i;
                    best_gain = 0;
                    break;
                }
            }
        }
        picked[best] = 1;
        for (int64_t item : covers[best]) covered[static_cast<size_t>(item)] = 1;
        report.scores[best] = static_cast<float>(best_gain);
        report.order.push_back(best);
        ++picks;
    }
    for (int i = 0; i < n; ++i) {
        if (!picked[i]) report.order.push_back(i);
    }
    report.ranked.assign(report.order.begin(), report.order.begin() + budget);

    int64_t covered_count = std::count(covered.begin(), covered.end(), uint8_t(1));
    double coverage =
        item_count > 0 ? static_cast<double>(covered_count) / static_cast<double>(item_count) : 0.0;
    report.config.emplace_back("final_coverage", std::to_string(coverage));
}

float squared_distance(const float* a, const float* b, size_t m) {
    float acc = 0.0f;
    for (size_t j = 0; j < m; ++j) {
        float d = a[j] - b[j];
        acc += d * d;
    }
    return acc;
}

}  // namespace

void BaselineConfig::validate(int class_count) const {
    if (nac_threshold < 0.0f || nac_threshold >= 1.0f) {
        throw ConfigError("NAC threshold must be in [0, 1)");
    }
    if (kmnc_bins < 1) throw ConfigError("KMNC bin count must be >= 1");
    if (dsa_train_cap < class_count) {
        throw ConfigError("DSA training cap must be at least the class count");
    }
}

void save_coverage_profile(const CoverageProfile& profile, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError(path + ": cannot open for writing");
    const char magic[8] = {'N', 'S', 'S', 'C', 'O', 'V', '0', '1'};
    out.write(magic, 8);
    auto write_i32 = [&](int32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    write_i32(profile.bins);
    write_i32(static_cast<int32_t>(profile.layers.size()));
    for (int l : profile.layers) write_i32(l);
    write_i32(static_cast<int32_t>(profile.low.size()));
    out.write(reinterpret_cast<const char*>(profile.low.data()), profile.low.size() * 4);
    out.write(reinterpret_cast<const char*>(profile.high.data()), profile.high.size() * 4);
    if (!out) throw FormatError(path + ": write failure");
}

CoverageProfile load_coverage_profile(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path + ": cannot open");
    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, "NSSCOV01", 8) != 0) {
        throw FormatError(path + ": bad coverage profile magic");
    }
    auto read_i32 = [&]() {
        int32_t v;
        if (!in.read(reinterpret_cast<char*>(&v), 4)) {
            throw FormatError(path + ": truncated coverage profile");
        }
        return v;
    };
    CoverageProfile profile;
    profile.bins = read_i32();
    int32_t layer_count = read_i32();
    for (int32_t i = 0; i < layer_count; ++i) profile.layers.push_back(read_i32());
    int32_t neurons = read_i32();
    profile.low.resize(neurons);
    profile.high.resize(neurons);
    if (!in.read(reinterpret_cast<char*>(profile.low.data()), size_t(neurons) * 4) ||
        !in.read(reinterpret_cast<char*>(profile.high.data()), size_t(neurons) * 4)) {
        throw FormatError(path + ": truncated coverage profile");
    }
    return profile;
}

SelectionReport random_select(int candidate_count, int budget, uint64_t seed) {
    if (budget > candidate_count) {
        throw ConfigError("random selection budget " + std::to_string(budget) +
                          " exceeds candidate count " + std::to_string(candidate_count));
    }
    SelectionReport report;
    report.selector = "random";
    report.order.resize(candidate_count);
    std::iota(report.order.begin(), report.order.end(), 0);
    Rng rng(seed, 0x5EEDu);
    rng.shuffle(report.order);
    report.ranked.assign(report.order.begin(), report.order.begin() + budget);
    report.config = {{"selector", "random"}, {"seed", std::to_string(seed)}};
    return report;
}

SelectionReport gini_prioritize(const Model& model, const Weights& weights, const Tensor& images,
                                int budget) {
    const int n = images.dim(0);
    SelectionReport report;
    report.selector = "gini";

    auto t0 = Clock::now();
    Tensor logits = forward(model, weights, images).logits;
    Tensor probs = logits;
    if (model.back().kind != LayerKind::Softmax) {
        // The impurity is defined over class probabilities.
        probs = Tensor(logits.shape());
        detail::softmax_forward(logits.data(), probs.data(), static_cast<size_t>(n),
                                static_cast<int>(logits.row_size()));
    }
    report.scores.resize(n);
    const size_t classes = probs.row_size();
    for (int r = 0; r < n; ++r) {
        const float* p = probs.row(r);
        float sum_sq = 0.0f;
        for (size_t c = 0; c < classes; ++c) sum_sq += p[c] * p[c];
        report.scores[r] = 1.0f - sum_sq;
    }
    report.timings.emplace_back("score", seconds_since(t0));

    t0 = Clock::now();
    rank_by_score(report, budget);
    report.timings.emplace_back("order", seconds_since(t0));
    report.config = {{"selector", "gini"}};
    return report;
}

SelectionReport nac_select(const Model& model, const Weights& weights, const Tensor& images,
                           float threshold, int budget, const std::vector<int>& taps) {
    if (threshold < 0.0f || threshold >= 1.0f) throw ConfigError("NAC threshold must be in [0, 1)");
    const int n = images.dim(0);
    SelectionReport report;
    report.selector = "nac";

    auto t0 = Clock::now();
    auto acts = collect_activations(model, weights, images, resolve_coverage_taps(model, taps));
    scale_per_layer(acts);
    const size_t m = acts.values.row_size();
    std::vector<std::vector<int64_t>> covers(n);
    parallel_chunks(0, static_cast<size_t>(n), 64, [&](size_t lo, size_t hi, size_t) {
        for (size_t r = lo; r < hi; ++r) {
            const float* row = acts.values.row(r);
            for (size_t j = 0; j < m; ++j) {
                if (row[j] > threshold) covers[r].push_back(static_cast<int64_t>(j));
            }
        }
    });
    report.timings.emplace_back("score", seconds_since(t0));

    t0 = Clock::now();
    greedy_cover(report, covers, static_cast<int64_t>(m), budget);
    report.timings.emplace_back("order", seconds_since(t0));
    report.config.insert(report.config.begin(),
                         {{"selector", "nac"}, {"threshold", std::to_string(threshold)}});
    return report;
}

CoverageProfile kmnc_profile(const Model& model, const Weights& weights,
                             const LabeledDataset& train_set, int bins,
                             const std::vector<int>& taps) {
    if (train_set.size() == 0) throw ConfigError("KMNC profile needs a nonempty training set");
    if (bins < 1) throw ConfigError("KMNC bin count must be >= 1");
    auto acts = collect_activations(model, weights, train_set.images,
                                    resolve_coverage_taps(model, taps));
    const int n = train_set.size();
    const size_t m = acts.values.row_size();

    CoverageProfile profile;
    profile.layers = resolve_coverage_taps(model, taps);
    profile.bins = bins;
    profile.low.assign(m, 0.0f);
    profile.high.assign(m, 0.0f);
    for (size_t j = 0; j < m; ++j) {
        profile.low[j] = profile.high[j] = acts.values.row(0)[j];
    }
    for (int r = 1; r < n; ++r) {
        const float* row = acts.values.row(r);
        for (size_t j = 0; j < m; ++j) {
            profile.low[j] = std::min(profile.low[j], row[j]);
            profile.high[j] = std::max(profile.high[j], row[j]);
        }
    }
    return profile;
}

SelectionReport kmnc_select(const Model& model, const Weights& weights, const Tensor& images,
                            const CoverageProfile& profile, int budget) {
    const int n = images.dim(0);
    SelectionReport report;
    report.selector = "kmnc";

    auto t0 = Clock::now();
    auto acts = collect_activations(model, weights, images, profile.layers);
    const size_t m = acts.values.row_size();
    if (m != profile.low.size()) {
        throw ShapeError("coverage profile holds " + std::to_string(profile.low.size()) +
                         " neurons, activations hold " + std::to_string(m));
    }
    const int bins = profile.bins;
    std::vector<std::vector<int64_t>> covers(n);
    parallel_chunks(0, static_cast<size_t>(n), 64, [&](size_t lo, size_t hi, size_t) {
        for (size_t r = lo; r < hi; ++r) {
            const float* row = acts.values.row(r);
            for (size_t j = 0; j < m; ++j) {
                float lo_j = profile.low[j], hi_j = profile.high[j];
                if (row[j] < lo_j || row[j] > hi_j) continue;  // out of range: covers nothing
                int bin;
                if (hi_j > lo_j) {
                    bin = static_cast<int>((row[j] - lo_j) / (hi_j - lo_j) *
                                           static_cast<float>(bins));
                    bin = std::min(bin, bins - 1);
                } else {
                    bin = 0;  // degenerate range: a single coverable bin
                }
                covers[r].push_back(static_cast<int64_t>(j) * bins + bin);
            }
        }
    });
    report.timings.emplace_back("score", seconds_since(t0));

    t0 = Clock::now();
    greedy_cover(report, covers, static_cast<int64_t>(m) * bins, budget);
    report.timings.emplace_back("order", seconds_since(t0));
    report.config.insert(report.config.begin(),
                         {{"selector", "kmnc"}, {"bins", std::to_string(bins)}});
    return report;
}

SelectionReport dsa_prioritize(const Model& model, const Weights& weights,
                               const LabeledDataset& train_set, const Tensor& images, int cap,
                               int budget, uint64_t seed, int tap_layer) {
    if (cap < 1) throw ConfigError("DSA training cap must be >= 1");
    if (train_set.size() == 0) throw ConfigError("DSA needs a nonempty training set");
    const int tap = resolve_tap(model, tap_layer);
    const int n = images.dim(0);

    SelectionReport report;
    report.selector = "dsa";

    auto t0 = Clock::now();
    // Seed-deterministic per-class subsample of training activations.
    std::vector<std::vector<int>> by_class(train_set.class_count);
    for (int i = 0; i < train_set.size(); ++i) by_class[train_set.labels[i]].push_back(i);
    std::vector<int> cached;
    std::vector<int> cached_class;
    for (int c = 0; c < train_set.class_count; ++c) {
        auto& idx = by_class[c];
        Rng rng(seed, 0xD5A0u + static_cast<uint64_t>(c));
        rng.shuffle(idx);
        int keep = std::min<int>(cap, static_cast<int>(idx.size()));
        std::sort(idx.begin(), idx.begin() + keep);
        for (int i = 0; i < keep; ++i) {
            cached.push_back(idx[i]);
            cached_class.push_back(c);
        }
    }
    auto train_acts = forward(model, weights, train_set.subset(cached).images, {tap});
    const Tensor& ta = train_acts.trace.at(tap);
    const size_t m = ta.row_size();

    auto cand_fwd = forward(model, weights, images, {tap});
    const Tensor& ca = cand_fwd.trace.at(tap);
    std::vector<int> cand_pred = argmax_rows(cand_fwd.logits);

    const int t_count = static_cast<int>(cached.size());
    // dist_b depends only on the nearest neighbor, so memoize per train row.
    std::vector<float> db_cache(t_count, -1.0f);
    auto nearest_other = [&](int train_row) {
        if (db_cache[train_row] >= 0.0f) return db_cache[train_row];
        int cls = cached_class[train_row];
        float best = std::numeric_limits<float>::infinity();
        const float* a = ta.row(train_row);
        for (int t = 0; t < t_count; ++t) {
            if (cached_class[t] == cls) continue;
            best = std::min(best, squared_distance(a, ta.row(t), m));
        }
        db_cache[train_row] = best;
        return best;
    };

    report.scores.resize(n);
    for (int r = 0; r < n; ++r) {
        int cls = cand_pred[r];
        const float* a = ca.row(r);
        float best = std::numeric_limits<float>::infinity();
        int best_row = -1;
        for (int t = 0; t < t_count; ++t) {
            if (cached_class[t] != cls) continue;
            float d = squared_distance(a, ta.row(t), m);
            if (d < best) {
                best = d;
                best_row = t;
            }
        }
        if (best_row < 0) {
            throw ConfigError("no cached training activations for predicted class " +
                              std::to_string(cls));
        }
        float dist_a = std::sqrt(best);
        if (dist_a == 0.0f) {
            report.scores[r] = 0.0f;
            continue;
        }
        float dist_b = std::sqrt(nearest_other(best_row));
        report.scores[r] = dist_b > 0.0f ? dist_a / dist_b
                                         : std::numeric_limits<float>::infinity();
    }
    report.timings.emplace_back("score", seconds_since(t0));

    t0 = Clock::now();
    rank_by_score(report, budget);
    report.timings.emplace_back("order", seconds_since(t0));
    report.config = {{"selector", "dsa"},
                     {"cap", std::to_string(cap)},
                     {"tap_layer", std::to_string(tap)},
                     {"seed", std::to_string(seed)}};
    return report;
}

}  // namespace nss
