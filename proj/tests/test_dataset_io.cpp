#include <gtest/gtest.h>

#include <cstdint>
#include <filesystem>
#include <fstream>

#include "nss/dataset.hpp"
#include "nss/model_bundle.hpp"
#include "nss/report_io.hpp"
#include "test_util.hpp"

using namespace nss;
namespace fs = std::filesystem;

namespace {

void write_bytes(const fs::path& path, const std::vector<uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

std::vector<uint8_t> be32(uint32_t v) {
    return {uint8_t(v >> 24), uint8_t(v >> 16), uint8_t(v >> 8), uint8_t(v)};
}

std::vector<uint8_t> idx_images(uint32_t n, uint32_t rows, uint32_t cols,
                                const std::vector<uint8_t>& pixels) {
    std::vector<uint8_t> bytes = be32(0x00000803);
    auto append = [&](const std::vector<uint8_t>& v) { bytes.insert(bytes.end(), v.begin(), v.end()); };
    append(be32(n));
    append(be32(rows));
    append(be32(cols));
    append(pixels);
    return bytes;
}

std::vector<uint8_t> idx_labels(const std::vector<uint8_t>& labels) {
    std::vector<uint8_t> bytes = be32(0x00000801);
    auto count = be32(static_cast<uint32_t>(labels.size()));
    bytes.insert(bytes.end(), count.begin(), count.end());
    bytes.insert(bytes.end(), labels.begin(), labels.end());
    return bytes;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

ModelBundle random_bundle(uint64_t seed) {
    ModelBundle b;
    Rng rng(seed);
    if (rng.coin_flip()) {
        b.model = {LayerSpec::flatten(), LayerSpec::dense(2 * 3 * 3, 4), LayerSpec::relu(),
                   LayerSpec::dense(4, 3), LayerSpec::softmax()};
        b.input_shape = {2, 3, 3};
        b.class_count = 3;
    } else {
        b.model = {LayerSpec::conv2d(1, 2, 3, 3), LayerSpec::tanh(), LayerSpec::maxpool2d(2, 2, 2),
                   LayerSpec::flatten(), LayerSpec::dense(2 * 3 * 3, 2)};
        b.input_shape = {1, 8, 8};
        b.class_count = 2;
    }
    b.weights = init_weights(b.model, b.input_shape, seed);
    // init_weights zeroes biases; scribble on them so round-trips see
    // nontrivial bytes everywhere.
    for (auto& p : b.weights) {
        for (size_t i = 0; i < p.bias.numel(); ++i) p.bias[i] = rng.uniform_float(-1.0f, 1.0f);
    }
    return b;
}

}  // namespace

TEST(LoadIdx, TinyFixtureNormalizes) {
    auto dir = testutil::scratch_dir("idx_tiny");
    write_bytes(dir / "im", idx_images(2, 2, 2, {0, 255, 255, 0, 0, 0, 255, 255}));
    write_bytes(dir / "lb", idx_labels({1, 0}));
    auto ds = load_idx((dir / "im").string(), (dir / "lb").string());
    EXPECT_EQ(ds.images.shape(), std::vector<int>({2, 1, 2, 2}));
    EXPECT_EQ(ds.images[0], 0.0f);
    EXPECT_EQ(ds.images[1], 1.0f);
    EXPECT_EQ(ds.labels, std::vector<int>({1, 0}));
    EXPECT_EQ(ds.class_count, 2);
}

TEST(LoadIdx, OfficialHeaderLayout) {
    // Header with the official MNIST test-set field values; payload present
    // so the file is structurally complete.
    auto dir = testutil::scratch_dir("idx_official");
    std::vector<uint8_t> pixels(size_t(10000) * 28 * 28, 7);
    write_bytes(dir / "im", idx_images(10000, 28, 28, pixels));
    write_bytes(dir / "lb", idx_labels(std::vector<uint8_t>(10000, 3)));
    auto ds = load_idx((dir / "im").string(), (dir / "lb").string(), 10);
    EXPECT_EQ(ds.size(), 10000);
    EXPECT_EQ(ds.images.dim(2), 28);
    EXPECT_EQ(ds.images.dim(3), 28);
}

TEST(LoadIdx, LabelValues) {
    auto dir = testutil::scratch_dir("idx_labels");
    write_bytes(dir / "im", idx_images(3, 1, 1, {5, 5, 5}));
    write_bytes(dir / "lb", idx_labels({1, 0, 2}));
    auto ds = load_idx((dir / "im").string(), (dir / "lb").string());
    EXPECT_EQ(ds.labels, std::vector<int>({1, 0, 2}));
}

TEST(LoadIdx, RejectsBadMagic) {
    auto dir = testutil::scratch_dir("idx_magic");
    auto bytes = idx_images(1, 2, 2, {1, 2, 3, 4});
    bytes[2] = 0x0D;
    write_bytes(dir / "im", bytes);
    write_bytes(dir / "lb", idx_labels({0}));
    EXPECT_THROW(load_idx((dir / "im").string(), (dir / "lb").string()), FormatError);
}

TEST(LoadIdx, RejectsCountMismatch) {
    auto dir = testutil::scratch_dir("idx_count");
    write_bytes(dir / "im", idx_images(2, 2, 2, std::vector<uint8_t>(8, 1)));
    write_bytes(dir / "lb", idx_labels({0, 1, 1}));
    EXPECT_THROW(load_idx((dir / "im").string(), (dir / "lb").string()), FormatError);
}

TEST(LoadIdx, FuzzedHeadersAllRejected) {
    // 100 single-or-multi-byte corruptions of the 16-byte image header. Skip
    // mutations that leave a structurally valid file (same payload size with
    // consistent dims and count): corrupting must mean rejection.
    auto dir = testutil::scratch_dir("idx_fuzz");
    const std::vector<uint8_t> pixels = {10, 20, 30, 40, 50, 60, 70, 80};
    const auto valid = idx_images(2, 2, 2, pixels);
    write_bytes(dir / "lb", idx_labels({0, 1}));

    Rng rng(42);
    int tested = 0;
    int rejected = 0;
    while (tested < 100) {
        auto mutant = valid;
        int flips = 1 + static_cast<int>(rng.uniform_int(3));
        for (int f = 0; f < flips; ++f) {
            size_t pos = rng.uniform_int(16);
            mutant[pos] = static_cast<uint8_t>(rng.uniform_int(256));
        }
        if (mutant == valid) continue;
        // Structural validity probe: magic intact, count matches labels, and
        // dim product matches the payload.
        uint32_t magic = (uint32_t(mutant[0]) << 24) | (uint32_t(mutant[1]) << 16) |
                         (uint32_t(mutant[2]) << 8) | mutant[3];
        auto field = [&](int i) {
            return (uint32_t(mutant[4 * i]) << 24) | (uint32_t(mutant[4 * i + 1]) << 16) |
                   (uint32_t(mutant[4 * i + 2]) << 8) | uint32_t(mutant[4 * i + 3]);
        };
        if (magic == 0x00000803 && field(1) == 2 &&
            uint64_t(field(1)) * field(2) * field(3) == pixels.size()) {
            continue;  // byte-different but structurally valid; not a corruption
        }
        write_bytes(dir / "im", mutant);
        ++tested;
        try {
            load_idx((dir / "im").string(), (dir / "lb").string());
        } catch (const FormatError&) {
            ++rejected;
        }
    }
    EXPECT_EQ(tested, 100);
    EXPECT_EQ(rejected, 100);
}

TEST(LoadIdx, NormalizationBounds) {
    auto dir = testutil::scratch_dir("idx_norm");
    std::vector<uint8_t> pixels;
    for (int i = 0; i < 16; ++i) pixels.push_back(static_cast<uint8_t>(i * 17));
    write_bytes(dir / "im", idx_images(4, 2, 2, pixels));
    write_bytes(dir / "lb", idx_labels({0, 1, 2, 3}));
    auto ds = load_idx((dir / "im").string(), (dir / "lb").string());
    float mn = 1.0f, mx = 0.0f;
    for (size_t i = 0; i < ds.images.numel(); ++i) {
        mn = std::min(mn, ds.images[i]);
        mx = std::max(mx, ds.images[i]);
    }
    EXPECT_GE(mn, 0.0f);
    EXPECT_LE(mx, 1.0f);
}

TEST(SaveIdx, RoundTripQuantized) {
    auto dir = testutil::scratch_dir("idx_save");
    LabeledDataset ds;
    ds.images = Tensor({2, 1, 2, 2}, {0.0f, 1.0f, 0.5f, 0.25f, 1.0f, 0.0f, 0.75f, 0.1f});
    ds.labels = {3, 1};
    ds.class_count = 4;
    save_idx(ds, (dir / "im").string(), (dir / "lb").string());
    auto back = load_idx((dir / "im").string(), (dir / "lb").string(), 4);
    EXPECT_EQ(back.labels, ds.labels);
    for (size_t i = 0; i < ds.images.numel(); ++i) {
        EXPECT_NEAR(back.images[i], ds.images[i], 0.5f / 255.0f + 1e-6f);
    }
}

TEST(ModelBundle, RoundTripBitwise) {
    for (uint64_t seed = 0; seed < 20; ++seed) {
        auto dir = testutil::scratch_dir("bundle_" + std::to_string(seed));
        ModelBundle b = random_bundle(seed);
        save_model_bundle(b, dir.string());
        ModelBundle back = load_model_bundle(dir.string());
        ASSERT_EQ(back.model.size(), b.model.size());
        EXPECT_EQ(back.input_shape, b.input_shape);
        EXPECT_EQ(back.class_count, b.class_count);
        for (size_t i = 0; i < b.model.size(); ++i) {
            EXPECT_EQ(back.model[i].kind, b.model[i].kind);
            ASSERT_EQ(back.weights[i].weight.numel(), b.weights[i].weight.numel());
            for (size_t j = 0; j < b.weights[i].weight.numel(); ++j) {
                ASSERT_EQ(back.weights[i].weight[j], b.weights[i].weight[j]);
            }
            for (size_t j = 0; j < b.weights[i].bias.numel(); ++j) {
                ASSERT_EQ(back.weights[i].bias[j], b.weights[i].bias[j]);
            }
        }
        // Save-again determinism: identical bytes.
        auto dir2 = testutil::scratch_dir("bundle_again_" + std::to_string(seed));
        save_model_bundle(back, dir2.string());
        EXPECT_EQ(read_file(dir / "manifest"), read_file(dir2 / "manifest"));
        EXPECT_EQ(read_file(dir / "weights.bin"), read_file(dir2 / "weights.bin"));
    }
}

TEST(ModelBundle, DenseBlobLength) {
    EXPECT_EQ(LayerSpec::dense(2, 3).param_count() * 4, 36u);  // 4*(6+3)
}

TEST(ModelBundle, TruncationNamesLayer) {
    auto dir = testutil::scratch_dir("bundle_trunc");
    ModelBundle b;
    b.model = {LayerSpec::dense(4, 3), LayerSpec::relu(), LayerSpec::dense(3, 2)};
    b.input_shape = {4};
    b.class_count = 2;
    b.weights = init_weights(b.model, b.input_shape, 5);
    save_model_bundle(b, dir.string());
    auto blob = read_file(dir / "weights.bin");
    std::ofstream(dir / "weights.bin", std::ios::binary) << blob.substr(0, blob.size() - 6);
    try {
        load_model_bundle(dir.string());
        FAIL() << "expected FormatError";
    } catch (const FormatError& e) {
        EXPECT_NE(std::string(e.what()).find("layer 2"), std::string::npos) << e.what();
    }
}

TEST(ModelBundle, VersionMismatchRejected) {
    auto dir = testutil::scratch_dir("bundle_version");
    ModelBundle b = random_bundle(3);
    save_model_bundle(b, dir.string());
    auto manifest = read_file(dir / "manifest");
    auto pos = manifest.find("\"format_version\": 1");
    ASSERT_NE(pos, std::string::npos);
    manifest.replace(pos, 19, "\"format_version\": 9");
    std::ofstream(dir / "manifest", std::ios::binary) << manifest;
    EXPECT_THROW(load_model_bundle(dir.string()), FormatError);
}

TEST(ModelBundle, UnknownLayerKindRejected) {
    auto dir = testutil::scratch_dir("bundle_kind");
    ModelBundle b = random_bundle(4);
    save_model_bundle(b, dir.string());
    auto manifest = read_file(dir / "manifest");
    auto pos = manifest.find("\"relu\"");
    if (pos == std::string::npos) pos = manifest.find("\"tanh\"");
    ASSERT_NE(pos, std::string::npos);
    manifest.replace(pos, 6, "\"gelu\"");
    std::ofstream(dir / "manifest", std::ios::binary) << manifest;
    EXPECT_THROW(load_model_bundle(dir.string()), FormatError);
}

TEST(ExportReport, EmptySelectionHeaderOnly) {
    auto dir = testutil::scratch_dir("report_empty");
    SelectionReport r;
    r.selector = "nss";
    export_selection_report(r, (dir / "sel").string());
    EXPECT_EQ(read_file(dir / "sel.csv"), "rank,index,score,predicted,label\n");
}

TEST(ExportReport, ReExportByteIdentical) {
    auto dir = testutil::scratch_dir("report_bytes");
    SelectionReport r;
    r.selector = "nss";
    r.order = {2, 0, 1};
    r.ranked = {2, 0};
    r.scores = {0.125f, 0.0f, 1.5f};
    r.predicted = {1, 0, 2};
    r.labels = {1, 1, 0};
    r.sensitive = {{1, 3}, {1, 0}};
    r.config = {{"selector", "nss"}, {"k", "0.1"}};
    r.timings = {{"identify", 0.5}, {"score", 0.25}};
    export_selection_report(r, (dir / "a").string());
    auto first_json = read_file(dir / "a.json");
    auto first_csv = read_file(dir / "a.csv");
    export_selection_report(r, (dir / "a").string());
    EXPECT_EQ(read_file(dir / "a.json"), first_json);
    EXPECT_EQ(read_file(dir / "a.csv"), first_csv);

    auto back = load_selection_report((dir / "a.json").string());
    EXPECT_EQ(back.ranked, r.ranked);
    EXPECT_EQ(back.order, r.order);
    EXPECT_EQ(back.scores, r.scores);
    EXPECT_EQ(back.predicted, r.predicted);
    EXPECT_EQ(back.labels, r.labels);
}

TEST(ExportReport, FdrTableFourBudgetRows) {
    auto dir = testutil::scratch_dir("report_fdr");
    EvalReport e;
    for (double b : {0.05, 0.10, 0.15, 0.20}) e.fdr_rows.emplace_back("nss", b, 0.5);
    export_eval_report(e, dir.string());
    auto csv = read_file(dir / "fdr.csv");
    int rows = 0;
    for (char c : csv) rows += c == '\n';
    EXPECT_EQ(rows, 5);  // header + 4
    EXPECT_NE(csv.find("nss,5.00,50.00"), std::string::npos);
}
