#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "nss/evaluation.hpp"
#include "nss/synth.hpp"
#include "test_util.hpp"

using namespace nss;

TEST(Fdr, Arithmetic) {
    std::vector<int> predicted = {1, 2, 3, 4, 5};
    std::vector<int> labels = {1, 2, 0, 0, 5};  // indices 2 and 3 wrong
    EXPECT_EQ(fdr({0, 1, 2, 3, 4}, predicted, labels), 0.4);
    EXPECT_EQ(fdr({2, 3}, predicted, labels), 1.0);
    EXPECT_EQ(fdr({0, 1, 4}, predicted, labels), 0.0);
    EXPECT_THROW(fdr({}, predicted, labels), ConfigError);
}

TEST(FaultTypes, EmptyWhenNoMisclassification) {
    std::vector<int> predicted = {0, 1, 2};
    std::vector<int> labels = {0, 1, 2};
    EXPECT_TRUE(fault_types({}, predicted, labels).empty());
}

TEST(FaultTypes, DistinctConfusionsCounted) {
    std::vector<int> predicted = {1, 1, 2, 0, 1};
    std::vector<int> labels = {0, 0, 0, 0, 2};
    // Confusions: (0->1) twice, (0->2), (2->1): 3 distinct types.
    auto types = fault_types({}, predicted, labels);
    EXPECT_EQ(types.size(), 3u);
    EXPECT_TRUE(types.count({0, 1}));
    EXPECT_TRUE(types.count({0, 2}));
    EXPECT_TRUE(types.count({2, 1}));
}

TEST(FaultTypes, BoundedByClassPairs) {
    Rng rng(4);
    const int classes = 10;
    std::vector<int> predicted(500), labels(500);
    for (int i = 0; i < 500; ++i) {
        predicted[i] = static_cast<int>(rng.uniform_int(classes));
        labels[i] = static_cast<int>(rng.uniform_int(classes));
    }
    auto types = fault_types({}, predicted, labels);
    EXPECT_LE(types.size(), size_t(classes * (classes - 1)));  // 10*9 = 90
}

TEST(Ftcr, FullBudgetReachesOne) {
    std::vector<int> predicted = {1, 1, 2, 0};
    std::vector<int> labels = {0, 1, 0, 0};
    std::vector<int> order = {0, 1, 2, 3};
    auto result = ftcr_curve(order, predicted, labels, {1.0});
    ASSERT_EQ(result.rates.size(), 1u);
    EXPECT_EQ(result.rates[0], 1.0);
}

TEST(Ftcr, FrontLoadedOrderSaturatesEarly) {
    // Candidates 0 and 1 carry the only two fault types.
    std::vector<int> predicted = {1, 2, 0, 1, 2};
    std::vector<int> labels = {0, 0, 0, 1, 2};
    std::vector<int> order = {0, 1, 2, 3, 4};
    auto result = ftcr_curve(order, predicted, labels, {0.2, 0.4, 0.6, 1.0});
    EXPECT_EQ(result.rates[0], 0.5);  // top 1 of 5
    EXPECT_EQ(result.rates[1], 1.0);  // top 2 of 5: both types found
    EXPECT_EQ(result.rates[2], 1.0);
    EXPECT_EQ(result.rates[3], 1.0);
}

TEST(Ftcr, MonotoneAndMatchesDirectSummationOracle) {
    Rng rng(11);
    const int n = 200;
    std::vector<int> predicted(n), labels(n), order(n);
    for (int i = 0; i < n; ++i) {
        predicted[i] = static_cast<int>(rng.uniform_int(4));
        labels[i] = static_cast<int>(rng.uniform_int(4));
    }
    std::iota(order.begin(), order.end(), 0);
    rng.shuffle(order);

    auto result = ftcr_curve(order, predicted, labels);
    ASSERT_EQ(result.budgets.size(), 20u);
    for (size_t i = 0; i + 1 < result.rates.size(); ++i) {
        EXPECT_LE(result.rates[i], result.rates[i + 1] + 1e-12);
    }

    // Direct recomputation over the grid.
    std::set<std::pair<int, int>> total;
    for (int i = 0; i < n; ++i) {
        if (predicted[i] != labels[i]) total.emplace(labels[i], predicted[i]);
    }
    double sum = 0.0;
    for (int b = 1; b <= 20; ++b) {
        int count = std::max(1, n * b / 100);
        std::set<std::pair<int, int>> seen;
        for (int i = 0; i < count; ++i) {
            int idx = order[i];
            if (predicted[idx] != labels[idx]) seen.emplace(labels[idx], predicted[idx]);
        }
        sum += static_cast<double>(seen.size()) / static_cast<double>(total.size());
    }
    double oracle_auc = sum / 20.0 * 100.0;
    EXPECT_NEAR(result.auc_percent, oracle_auc, 1e-9);
}

TEST(Ftcr, NoFaultMarker) {
    std::vector<int> predicted = {0, 1};
    std::vector<int> labels = {0, 1};
    auto result = ftcr_curve({0, 1}, predicted, labels);
    EXPECT_TRUE(result.no_faults);
}

TEST(Timing, RandomChargedZero) {
    SelectionReport r;
    r.selector = "random";
    r.timings = {{"score", 1.0}, {"order", 2.0}};
    auto row = timing_row(r, 0.05);
    EXPECT_EQ(row.total_seconds, 0.0);

    SelectionReport s;
    s.selector = "nss";
    s.timings = {{"identify", 1.0}, {"score", 0.5}, {"order", 0.25}};
    auto row2 = timing_row(s, 0.05);
    EXPECT_EQ(row2.score_seconds, 1.5);
    EXPECT_EQ(row2.order_seconds, 0.25);
    EXPECT_EQ(row2.total_seconds, 1.75);
}

TEST(Bench, ScalingBenchesProduceTimes) {
    auto sort_scaling = bench_sort_scaling(20000, 3, 1);
    EXPECT_GT(sort_scaling.t_n, 0.0);
    EXPECT_GT(sort_scaling.t_2n, 0.0);
    auto kmnc_scaling = bench_kmnc_greedy_scaling(300, 16, 10, 0.05, 2, 1);
    EXPECT_GT(kmnc_scaling.t_n, 0.0);
    EXPECT_GT(kmnc_scaling.t_2n, kmnc_scaling.t_n);  // superlinear growth
}

TEST(Sweeps, OneRowPerParameter) {
    auto ds = synthetic_digits(60, 9);
    Model m = {LayerSpec::flatten(), LayerSpec::dense(784, 12), LayerSpec::relu(),
               LayerSpec::dense(12, 10), LayerSpec::softmax()};
    Weights w = init_weights(m, {1, 28, 28}, 2);
    auto pairs = generate_candidates(ds, 5);

    auto k_rows = sweep_k(m, w, pairs, {0.01, 0.10, 1.0});
    ASSERT_EQ(k_rows.size(), 3u);
    for (const auto& row : k_rows) {
        EXPECT_GE(row.fdr, 0.0);
        EXPECT_LE(row.fdr, 1.0);
    }

    auto layer_rows = sweep_layers(m, w, pairs, {1, 2});
    ASSERT_EQ(layer_rows.size(), 2u);
    EXPECT_EQ(layer_rows[0].parameter, 1.0);
    EXPECT_EQ(layer_rows[1].parameter, 2.0);
}

TEST(Sweeps, KOneEqualsFullLayerSelectionFdr) {
    auto ds = synthetic_digits(80, 10);
    Model m = {LayerSpec::flatten(), LayerSpec::dense(784, 16), LayerSpec::relu(),
               LayerSpec::dense(16, 10), LayerSpec::softmax()};
    Weights w = init_weights(m, {1, 28, 28}, 3);
    auto pairs = generate_candidates(ds, 6);

    auto rows = sweep_k(m, w, pairs, {1.0});
    SelectionConfig cfg;
    cfg.k = 1.0;
    cfg.budget = 0.20;
    auto report = select(m, w, pairs, cfg);
    attach_predictions(report, m, w, pairs);
    EXPECT_EQ(rows[0].fdr, fdr(report.ranked, report.predicted, report.labels));
}

TEST(Retrain, DeterministicAndControlArmRuns) {
    auto train_set = synthetic_digits(300, 12);
    auto test_set = synthetic_digits(200, 13);
    Model m = {LayerSpec::flatten(), LayerSpec::dense(784, 16), LayerSpec::relu(),
               LayerSpec::dense(16, 10), LayerSpec::softmax()};
    TrainConfig pre;
    pre.epochs = 3;
    pre.lr = 0.05f;
    pre.seed = 0;
    auto trained = train(m, {1, 28, 28}, init_weights(m, {1, 28, 28}, 0), train_set, pre);

    auto pairs = generate_candidates(test_set, 3);
    std::vector<int> selected = {0, 5, 9, 12, 44};

    TrainConfig fine = TrainConfig::retrain_defaults();
    fine.epochs = 2;
    fine.seed = 1;
    auto a = retrain_experiment(m, {1, 28, 28}, trained.weights, train_set, test_set, pairs,
                                selected, fine);
    auto b = retrain_experiment(m, {1, 28, 28}, trained.weights, train_set, test_set, pairs,
                                selected, fine);
    EXPECT_EQ(a.delta(), b.delta());
    EXPECT_EQ(a.base_accuracy, b.base_accuracy);

    // Control arm: no selected cases; reported, not asserted.
    auto control = retrain_experiment(m, {1, 28, 28}, trained.weights, train_set, test_set, pairs,
                                      {}, fine);
    EXPECT_GE(control.new_accuracy, 0.0);

    EXPECT_THROW(retrain_experiment(m, {1, 28, 28}, trained.weights, train_set, test_set, pairs,
                                    {9999}, fine),
                 ConfigError);
}
