#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "nss/mutation.hpp"
#include "nss/parallel.hpp"
#include "nss/synth.hpp"
#include "test_util.hpp"

using namespace nss;

namespace {

Tensor constant_image(int h, int w, float v) {
    Tensor t({1, h, w});
    for (size_t i = 0; i < t.numel(); ++i) t[i] = v;
    return t;
}

Tensor random_image(int h, int w, uint64_t seed) {
    Rng rng(seed);
    Tensor t({1, h, w});
    for (size_t i = 0; i < t.numel(); ++i) t[i] = rng.next_float();
    return t;
}

float image_sum(const Tensor& t) {
    float s = 0.0f;
    for (size_t i = 0; i < t.numel(); ++i) s += t[i];
    return s;
}

// Centroid of mass in (row, col).
std::pair<float, float> centroid(const Tensor& t) {
    const int h = t.dim(1), w = t.dim(2);
    float sum = 0.0f, ry = 0.0f, rx = 0.0f;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            float v = t[y * w + x];
            sum += v;
            ry += v * y;
            rx += v * x;
        }
    }
    return {ry / sum, rx / sum};
}

}  // namespace

TEST(Mutate, BrightnessIdentity) {
    Tensor img = random_image(8, 8, 1);
    Tensor out = mutate(img, MutationSpec::brightness(1.0f));
    for (size_t i = 0; i < img.numel(); ++i) EXPECT_EQ(out[i], img[i]);
}

TEST(Mutate, BlurOfConstantIsConstant) {
    for (int ks : {2, 3, 5, 7}) {
        Tensor img = constant_image(9, 9, 0.625f);
        Tensor out = mutate(img, MutationSpec::blur(ks));
        for (size_t i = 0; i < out.numel(); ++i) {
            EXPECT_NEAR(out[i], 0.625f, 1e-6f) << "ks " << ks;
        }
    }
}

TEST(Mutate, RotationMatchesAnalyticCoordinate) {
    // A single bright pixel must land within one pixel of the closed-form
    // rotation of its coordinate about the image center.
    const int h = 21, w = 21;
    const int r0 = 4, c0 = 14;
    Tensor img({1, h, w});
    img[r0 * w + c0] = 1.0f;

    for (int sign : {1, -1}) {
        auto spec = MutationSpec::rotation(10.0f, sign);
        Tensor out = mutate(img, spec);
        ASSERT_GT(image_sum(out), 0.1f);
        auto [ry, rx] = centroid(out);

        const double theta = sign * 10.0 * M_PI / 180.0;
        const double cy = (h - 1) / 2.0, cx = (w - 1) / 2.0;
        const double dx = c0 - cx, dy = r0 - cy;
        const double ex = cx + std::cos(theta) * dx - std::sin(theta) * dy;
        const double ey = cy + std::sin(theta) * dx + std::cos(theta) * dy;

        EXPECT_NEAR(rx, ex, 1.0) << "sign " << sign;
        EXPECT_NEAR(ry, ey, 1.0) << "sign " << sign;
    }
}

TEST(Mutate, ShiftMovesCentroid) {
    const int h = 20, w = 20;
    Tensor img({1, h, w});
    img[10 * w + 10] = 1.0f;
    auto spec = MutationSpec::shift(0.10f, 0.10f, 1, -1);
    Tensor out = mutate(img, spec);
    auto [ry, rx] = centroid(out);
    EXPECT_NEAR(rx, 10.0 + 0.10 * w, 1e-3);
    EXPECT_NEAR(ry, 10.0 - 0.10 * h, 1e-3);
}

TEST(Mutate, ScaleMovesPointTowardCenter) {
    const int h = 21, w = 21;
    Tensor img({1, h, w});
    img[10 * w + 18] = 1.0f;  // on the center row, right of center
    Tensor out = mutate(img, MutationSpec::scale(0.8f));
    auto [ry, rx] = centroid(out);
    EXPECT_NEAR(rx, 10.0 + 0.8 * 8.0, 0.5);
    EXPECT_NEAR(ry, 10.0, 0.5);
}

TEST(Mutate, ContrastPivotsAboutMidGray) {
    Tensor img({1, 1, 3}, {0.5f, 0.75f, 0.25f});
    Tensor out = mutate(img, MutationSpec::contrast(1.5f));
    EXPECT_NEAR(out[0], 0.5f, 1e-6f);
    EXPECT_NEAR(out[1], 0.875f, 1e-6f);
    EXPECT_NEAR(out[2], 0.125f, 1e-6f);
}

TEST(Mutate, OutputsClampedAndShapePreserved) {
    Rng rng(77);
    Tensor img = random_image(12, 12, 77);
    for (int trial = 0; trial < 200; ++trial) {
        MutationSpec spec = sample_spec(rng);
        Tensor out = mutate(img, spec);
        ASSERT_EQ(out.shape(), img.shape());
        for (size_t i = 0; i < out.numel(); ++i) {
            ASSERT_GE(out[i], 0.0f);
            ASSERT_LE(out[i], 1.0f);
        }
    }
}

TEST(Mutate, BlurPreservesInteriorImpulseMass) {
    const int h = 24, w = 24;
    for (int ks : {2, 3, 5, 7}) {
        Tensor img({1, h, w});
        img[12 * w + 11] = 0.875f;  // >= ks pixels from every border
        Tensor out = mutate(img, MutationSpec::blur(ks));
        EXPECT_NEAR(image_sum(out), 0.875f, 1e-5f) << "ks " << ks;
    }
}

TEST(Mutate, RejectsOutOfRangeParameters) {
    EXPECT_THROW(MutationSpec::rotation(30.0f), ConfigError);
    EXPECT_THROW(MutationSpec::scale(0.5f), ConfigError);
    EXPECT_THROW(MutationSpec::blur(4), ConfigError);
    EXPECT_THROW(MutationSpec::shift(0.2f, 0.1f), ConfigError);
    EXPECT_THROW(MutationSpec::contrast(2.0f), ConfigError);
    MutationSpec bad = MutationSpec::brightness(1.0f);
    bad.gain = 1.6f;
    Tensor img = constant_image(4, 4, 0.5f);
    EXPECT_THROW(mutate(img, bad), ConfigError);
}

TEST(SampleSpec, SeededDeterminism) {
    Rng a(0), b(0);
    for (int i = 0; i < 50; ++i) {
        MutationSpec sa = sample_spec(a);
        MutationSpec sb = sample_spec(b);
        EXPECT_EQ(sa.kind, sb.kind);
        EXPECT_EQ(sa.shift_x, sb.shift_x);
        EXPECT_EQ(sa.angle, sb.angle);
        EXPECT_EQ(sa.ratio, sb.ratio);
        EXPECT_EQ(sa.gain, sb.gain);
        EXPECT_EQ(sa.kernel, sb.kernel);
    }
}

TEST(SampleSpec, KindFrequenciesNearUniform) {
    Rng rng(123);
    std::vector<int> counts(7, 0);
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) counts[static_cast<int>(sample_spec(rng).kind)]++;
    for (int k = 0; k < 7; ++k) {
        double freq = static_cast<double>(counts[k]) / draws;
        EXPECT_NEAR(freq, 1.0 / 7.0, 0.02) << "kind " << k;
    }
}

TEST(SampleSpec, DrawsAlwaysValid) {
    Rng rng(9);
    for (int i = 0; i < 5000; ++i) EXPECT_NO_THROW(sample_spec(rng).validate());
}

TEST(GenerateCandidates, OnePairPerElementWithLabels) {
    auto ds = synthetic_digits(50, 3);
    auto pairs = generate_candidates(ds, 17);
    ASSERT_EQ(pairs.size(), 50u);
    for (int i = 0; i < 50; ++i) {
        EXPECT_EQ(pairs[i].index, i);
        EXPECT_EQ(pairs[i].label, ds.labels[i]);
        EXPECT_EQ(pairs[i].original.shape(), pairs[i].mutated.shape());
    }
}

TEST(GenerateCandidates, SeedDeterminismAcrossWorkerCounts) {
    auto ds = synthetic_digits(40, 3);
    set_worker_count(1);
    auto a = generate_candidates(ds, 7);
    set_worker_count(4);
    auto b = generate_candidates(ds, 7);
    set_worker_count(0);
    ASSERT_EQ(a.size(), b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        ASSERT_EQ(a[i].spec.kind, b[i].spec.kind);
        for (size_t j = 0; j < a[i].mutated.numel(); ++j) {
            ASSERT_EQ(a[i].mutated[j], b[i].mutated[j]);
        }
    }
    auto c = generate_candidates(ds, 8);
    bool any_diff = false;
    for (size_t i = 0; i < a.size() && !any_diff; ++i) {
        any_diff = a[i].spec.kind != c[i].spec.kind || a[i].spec.gain != c[i].spec.gain;
    }
    EXPECT_TRUE(any_diff);
}

TEST(GenerateCandidates, MutatedDiffersUnlessIdentityByChance) {
    auto ds = synthetic_digits(100, 5);
    auto pairs = generate_candidates(ds, 2);
    for (const auto& p : pairs) {
        bool identity_by_chance = (p.spec.kind == MutationKind::Brightness ||
                                   p.spec.kind == MutationKind::Contrast) &&
                                  p.spec.gain == 1.0f;
        if (identity_by_chance) continue;
        bool differs = false;
        for (size_t j = 0; j < p.original.numel() && !differs; ++j) {
            differs = p.original[j] != p.mutated[j];
        }
        EXPECT_TRUE(differs) << "pair " << p.index << " kind "
                             << mutation_kind_name(p.spec.kind);
    }
}

TEST(MutationLog, RoundTripRegeneratesBitExactly) {
    auto dir = testutil::scratch_dir("mutlog");
    auto ds = synthetic_digits(30, 11);
    auto pairs = generate_candidates(ds, 21);
    std::vector<MutationSpec> specs;
    for (const auto& p : pairs) specs.push_back(p.spec);
    save_mutation_log((dir / "log.csv").string(), specs, "digits-30", 21);

    auto log = load_mutation_log((dir / "log.csv").string());
    EXPECT_EQ(log.dataset_ref, "digits-30");
    EXPECT_EQ(log.seed, 21u);
    ASSERT_EQ(log.specs.size(), specs.size());

    auto rebuilt = candidates_from_specs(ds, log.specs);
    for (size_t i = 0; i < pairs.size(); ++i) {
        for (size_t j = 0; j < pairs[i].mutated.numel(); ++j) {
            ASSERT_EQ(rebuilt[i].mutated[j], pairs[i].mutated[j]) << "pair " << i;
        }
    }
}

TEST(FixedMutation, ParseAndApply) {
    auto spec = parse_fixed_mutation("scale:0.8");
    EXPECT_EQ(spec.kind, MutationKind::Scale);
    EXPECT_FLOAT_EQ(spec.ratio, 0.8f);
    auto rot = parse_fixed_mutation("rotation:-10");
    EXPECT_EQ(rot.sign, -1);
    EXPECT_FLOAT_EQ(rot.angle, 10.0f);
    auto sh = parse_fixed_mutation("shift:0.15,0.15");
    EXPECT_FLOAT_EQ(sh.shift_x, 0.15f);
    EXPECT_THROW(parse_fixed_mutation("sparkle:1"), ConfigError);

    auto ds = synthetic_digits(10, 1);
    auto pairs = generate_candidates_fixed(ds, spec);
    for (const auto& p : pairs) EXPECT_EQ(p.spec.kind, MutationKind::Scale);
}
