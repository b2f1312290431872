// nss: neuron-sensitivity-guided test-input prioritization pipeline.
//
// Subcommands: datagen, train, mutate, identify, select, eval, bench, sweep.
// Every run writes its artifacts plus a run_manifest.json with input hashes
// under --out. Identical config and seed reproduce identical artifact bytes
// (timing sidecars excepted); --workers never changes results.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nss/baselines.hpp"
#include "nss/dataset.hpp"
#include "nss/evaluation.hpp"
#include "nss/model_bundle.hpp"
#include "nss/mutation.hpp"
#include "nss/parallel.hpp"
#include "nss/report_io.hpp"
#include "nss/selection.hpp"
#include "nss/synth.hpp"
#include "nss/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace nss;

namespace {

struct GlobalOpts {
    std::string out = "out";
    unsigned workers = 0;
};

uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError(path + ": cannot open for hashing");
    uint64_t h = 0xCBF29CE484222325ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001B3ULL;
        }
        if (!in) break;
    }
    char hex[20];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
    return h;
}

std::string hex64(uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// Option echo for provenance. --out and --workers are excluded: the first
// names the artifact location, the second must never affect results.
void write_run_manifest(const GlobalOpts& g, const CLI::App* sub,
                        const std::vector<std::string>& input_paths) {
    ordered_json j;
    j["subcommand"] = sub->get_name();
    ordered_json inputs = ordered_json::object();
    for (const auto& p : input_paths) {
        if (!p.empty()) inputs[p] = hex64(fnv1a_file(p));
    }
    j["inputs"] = inputs;
    ordered_json opts = ordered_json::object();
    for (const CLI::Option* opt : sub->get_options()) {
        std::string name = opt->get_name();
        if (name == "--help") continue;
        if (opt->results().empty()) continue;
        std::string joined;
        for (const auto& r : opt->results()) {
            if (!joined.empty()) joined += ",";
            joined += r;
        }
        opts[name] = joined;
    }
    j["options"] = opts;
    std::ofstream out(fs::path(g.out) / "run_manifest.json", std::ios::binary);
    out << j.dump(2) << "\n";
}

struct DatasetArgs {
    std::string images, labels;
    int limit = 0;
    int classes = 0;

    void add_to(CLI::App* sub, const std::string& prefix = "") {
        std::string dash = prefix.empty() ? "--" : "--" + prefix + "-";
        sub->add_option(dash + "images", images, "IDX image file")->required(prefix.empty());
        sub->add_option(dash + "labels", labels, "IDX label file")->required(prefix.empty());
        sub->add_option(dash + "limit", limit, "Keep only the first N elements (0 = all)");
        if (prefix.empty()) {
            sub->add_option("--classes", classes, "Class count (0 = infer from labels)");
        }
    }

    LabeledDataset load() const {
        LabeledDataset ds = load_idx(images, labels, classes);
        if (limit > 0 && limit < ds.size()) {
            std::vector<int> head(limit);
            std::iota(head.begin(), head.end(), 0);
            ds = ds.subset(head);
        }
        return ds;
    }
};

struct CandidateArgs {
    std::string log_path;
    uint64_t seed = 0;
    std::string fixed;

    void add_to(CLI::App* sub) {
        sub->add_option("--log", log_path, "Mutation log to replay (overrides --seed)");
        sub->add_option("--seed", seed, "Master seed for candidate generation");
        sub->add_option("--fixed", fixed,
                        "Fixed mutation kind:params (e.g. scale:0.8) instead of random draws");
    }

    std::vector<CandidatePair> make(const LabeledDataset& ds) const {
        if (!log_path.empty()) {
            auto log = load_mutation_log(log_path);
            return candidates_from_specs(ds, log.specs);
        }
        if (!fixed.empty()) {
            return generate_candidates_fixed(ds, parse_fixed_mutation(fixed));
        }
        return generate_candidates(ds, seed);
    }
};

Model make_arch(const std::string& arch, const std::vector<int>& input_shape, int classes) {
    size_t flat = Tensor::checked_numel(input_shape);
    if (arch == "mlp") {
        return {LayerSpec::flatten(), LayerSpec::dense(static_cast<int>(flat), 128),
                LayerSpec::relu(), LayerSpec::dense(128, classes), LayerSpec::softmax()};
    }
    if (arch == "mlp-small") {
        return {LayerSpec::flatten(), LayerSpec::dense(static_cast<int>(flat), 32),
                LayerSpec::relu(), LayerSpec::dense(32, classes), LayerSpec::softmax()};
    }
    if (arch == "cnn") {
        if (input_shape.size() != 3) throw ConfigError("cnn needs [c,h,w] input");
        Model m = {LayerSpec::conv2d(input_shape[0], 8, 3, 3), LayerSpec::relu(),
                   LayerSpec::maxpool2d(2, 2, 2), LayerSpec::conv2d(8, 12, 3, 3),
                   LayerSpec::relu(), LayerSpec::maxpool2d(2, 2, 2), LayerSpec::flatten()};
        auto shapes = infer_shapes(m, input_shape);
        int flat_dim = shapes.back()[0];
        m.push_back(LayerSpec::dense(flat_dim, 64));
        m.push_back(LayerSpec::relu());
        m.push_back(LayerSpec::dense(64, classes));
        m.push_back(LayerSpec::softmax());
        return m;
    }
    throw ConfigError("unknown architecture '" + arch + "' (mlp, mlp-small, cnn)");
}

std::vector<double> parse_budgets(const std::string& text) {
    std::vector<double> budgets;
    std::istringstream ss(text);
    std::string field;
    while (std::getline(ss, field, ',')) {
        double v = std::stod(field);
        if (v <= 0) throw ConfigError("budget must be positive: " + field);
        budgets.push_back(v >= 1.0 ? v / 100.0 : v);  // >= 1 means percent
    }
    if (budgets.empty()) throw ConfigError("no budgets given");
    return budgets;
}

std::vector<std::string> split_csv(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream ss(text);
    std::string field;
    while (std::getline(ss, field, ',')) {
        if (!field.empty()) out.push_back(field);
    }
    return out;
}

void write_text_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError(path.string() + ": cannot open for writing");
    out << content;
}

// Shared selector dispatch for select/eval/bench. kmnc/dsa need a training
// set; the profile is cached across calls.
struct SelectorRunner {
    const ModelBundle& bundle;
    const std::vector<CandidatePair>& candidates;
    Tensor images;  // stacked candidate (mutated) images
    SelectionConfig nss_config;
    BaselineConfig base_config;
    const LabeledDataset* train_set = nullptr;
    CoverageProfile profile;
    bool have_profile = false;

    SelectorRunner(const ModelBundle& b, const std::vector<CandidatePair>& c)
        : bundle(b), candidates(c), images(candidate_batch(c)) {}

    SelectionReport run(const std::string& name, double budget) {
        const int n = static_cast<int>(candidates.size());
        int count = resolve_budget(budget, n);
        if (name == "nss") {
            SelectionConfig cfg = nss_config;
            cfg.budget = budget;
            return select(bundle.model, bundle.weights, candidates, cfg);
        }
        if (name == "random") return random_select(n, count, base_config.seed);
        if (name == "gini") return gini_prioritize(bundle.model, bundle.weights, images, count);
        if (name == "nac") {
            return nac_select(bundle.model, bundle.weights, images, base_config.nac_threshold,
                              count, base_config.coverage_taps);
        }
        if (name == "kmnc") {
            if (!train_set) throw ConfigError("kmnc needs --train-images/--train-labels");
            if (!have_profile) {
                profile = kmnc_profile(bundle.model, bundle.weights, *train_set,
                                       base_config.kmnc_bins, base_config.coverage_taps);
                have_profile = true;
            }
            return kmnc_select(bundle.model, bundle.weights, images, profile, count);
        }
        if (name == "dsa") {
            if (!train_set) throw ConfigError("dsa needs --train-images/--train-labels");
            return dsa_prioritize(bundle.model, bundle.weights, *train_set, images,
                                  base_config.dsa_train_cap, count, base_config.seed,
                                  base_config.tap_layer);
        }
        throw ConfigError("unknown selector '" + name + "'");
    }
};

int run_cli(int argc, char** argv) {
    CLI::App app{"Test-input prioritization for small neural classifiers"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Config file (key=value; command-line flags win)");

    GlobalOpts g;
    app.add_option("--out", g.out, "Output directory for artifacts")
        ->envname("NSS_OUT_DIR")
        ->capture_default_str();
    app.add_option("--workers", g.workers,
                   "Worker thread cap (0 = all cores); never changes results");

    // datagen
    auto* datagen = app.add_subcommand("datagen", "Generate the synthetic digit dataset as IDX");
    int dg_count = 1000;
    uint64_t dg_seed = 0;
    datagen->add_option("--count", dg_count, "Number of images")->capture_default_str();
    datagen->add_option("--seed", dg_seed, "Generator seed")->capture_default_str();

    // train
    auto* train_cmd = app.add_subcommand("train", "Train a model and save a bundle");
    DatasetArgs train_data;
    train_data.add_to(train_cmd);
    std::string arch = "mlp";
    TrainConfig train_cfg;
    train_cfg.lr = 0.05f;
    std::string decay_epochs_text;
    train_cmd->add_option("--arch", arch, "Architecture: mlp, mlp-small, cnn")
        ->capture_default_str();
    train_cmd->add_option("--epochs", train_cfg.epochs)->capture_default_str();
    train_cmd->add_option("--batch", train_cfg.batch_size)->capture_default_str();
    train_cmd->add_option("--lr", train_cfg.lr)->capture_default_str();
    train_cmd->add_option("--momentum", train_cfg.momentum)->capture_default_str();
    bool no_nesterov = false;
    train_cmd->add_flag("--no-nesterov", no_nesterov, "Plain momentum instead of Nesterov");
    train_cmd->add_option("--decay-epochs", decay_epochs_text,
                          "Comma-separated epochs after which lr steps down");
    train_cmd->add_option("--decay-factor", train_cfg.lr_decay_factor)->capture_default_str();
    uint64_t train_seed = 0;
    train_cmd->add_option("--seed", train_seed)->capture_default_str();

    // mutate
    auto* mutate_cmd = app.add_subcommand("mutate", "Generate candidate mutations");
    DatasetArgs mutate_data;
    mutate_data.add_to(mutate_cmd);
    CandidateArgs mutate_cand;
    mutate_cand.add_to(mutate_cmd);
    bool materialize = false;
    mutate_cmd->add_flag("--materialize", materialize, "Also dump mutated images as IDX");

    // identify
    auto* identify_cmd = app.add_subcommand("identify", "Identify sensitive neurons");
    DatasetArgs identify_data;
    identify_data.add_to(identify_cmd);
    CandidateArgs identify_cand;
    identify_cand.add_to(identify_cmd);
    std::string identify_bundle;
    double identify_k = 0.10;
    int identify_layer = -1;
    identify_cmd->add_option("--bundle", identify_bundle, "Model bundle directory")->required();
    identify_cmd->add_option("--k", identify_k, "Sensitive-neuron fraction (0,1]")
        ->capture_default_str();
    identify_cmd->add_option("--layer", identify_layer, "Tap layer id (-1 = last encoder)")
        ->capture_default_str();

    // select
    auto* select_cmd = app.add_subcommand("select", "Run one selector over candidates");
    DatasetArgs select_data;
    select_data.add_to(select_cmd);
    CandidateArgs select_cand;
    select_cand.add_to(select_cmd);
    DatasetArgs select_train;
    select_train.add_to(select_cmd, "train");
    std::string select_bundle, selector = "nss";
    double select_budget = 0.10;
    double select_k = 0.10;
    int select_layer = -1;
    double identify_fraction = 1.0;
    BaselineConfig select_base;
    select_cmd->add_option("--bundle", select_bundle, "Model bundle directory")->required();
    select_cmd->add_option("--selector", selector, "nss, random, gini, nac, kmnc, dsa")
        ->capture_default_str();
    select_cmd->add_option("--budget", select_budget, "Fraction (<1) or count (>=1)")
        ->capture_default_str();
    select_cmd->add_option("--k", select_k)->capture_default_str();
    select_cmd->add_option("--layer", select_layer)->capture_default_str();
    select_cmd->add_option("--identify-fraction", identify_fraction)->capture_default_str();
    select_cmd->add_option("--nac-threshold", select_base.nac_threshold)->capture_default_str();
    select_cmd->add_option("--kmnc-bins", select_base.kmnc_bins)->capture_default_str();
    select_cmd->add_option("--dsa-cap", select_base.dsa_train_cap)->capture_default_str();

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "FDR / FTCR / timing across selectors");
    DatasetArgs eval_data;
    eval_data.add_to(eval_cmd);
    CandidateArgs eval_cand;
    eval_cand.add_to(eval_cmd);
    DatasetArgs eval_train;
    eval_train.add_to(eval_cmd, "train");
    std::string eval_bundle;
    std::string selectors_text = "nss,random,gini";
    std::string budgets_text = "5,10,15,20";
    double eval_k = 0.10;
    int eval_layer = -1;
    BaselineConfig eval_base;
    bool do_retrain = false;
    TrainConfig retrain_cfg = TrainConfig::retrain_defaults();
    eval_cmd->add_option("--bundle", eval_bundle, "Model bundle directory")->required();
    eval_cmd->add_option("--selectors", selectors_text, "Comma-separated selector list")
        ->capture_default_str();
    eval_cmd->add_option("--budgets", budgets_text, "Percentages (>=1) or fractions (<1)")
        ->capture_default_str();
    eval_cmd->add_option("--k", eval_k)->capture_default_str();
    eval_cmd->add_option("--layer", eval_layer)->capture_default_str();
    eval_cmd->add_option("--nac-threshold", eval_base.nac_threshold)->capture_default_str();
    eval_cmd->add_option("--kmnc-bins", eval_base.kmnc_bins)->capture_default_str();
    eval_cmd->add_option("--dsa-cap", eval_base.dsa_train_cap)->capture_default_str();
    eval_cmd->add_flag("--retrain", do_retrain, "Fine-tune on selected cases per budget");
    eval_cmd->add_option("--retrain-epochs", retrain_cfg.epochs)->capture_default_str();
    eval_cmd->add_option("--retrain-lr", retrain_cfg.lr)->capture_default_str();
    eval_cmd->add_option("--retrain-momentum", retrain_cfg.momentum)->capture_default_str();

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "Overhead micro-benchmarks / timing table");
    std::string bench_mode = "sort";
    size_t bench_n = 100000;
    int bench_neurons = 64, bench_bins = 100, bench_repeats = 5;
    double bench_budget = 0.05;
    DatasetArgs bench_data;
    CandidateArgs bench_cand;
    DatasetArgs bench_train;
    std::string bench_bundle;
    std::string bench_selectors = "nss,random,gini";
    std::string bench_budgets = "5,10,15,20";
    bench_cmd->add_option("--mode", bench_mode, "sort, kmnc, or selectors")->capture_default_str();
    bench_cmd->add_option("--n", bench_n, "Problem size for scaling modes")->capture_default_str();
    bench_cmd->add_option("--neurons", bench_neurons)->capture_default_str();
    bench_cmd->add_option("--bins", bench_bins)->capture_default_str();
    bench_cmd->add_option("--repeats", bench_repeats)->capture_default_str();
    bench_cmd->add_option("--budget", bench_budget)->capture_default_str();
    bench_cmd->add_option("--images", bench_data.images, "IDX images (selectors mode)");
    bench_cmd->add_option("--labels", bench_data.labels, "IDX labels (selectors mode)");
    bench_cmd->add_option("--limit", bench_data.limit);
    bench_cmd->add_option("--seed", bench_cand.seed)->capture_default_str();
    bench_cmd->add_option("--log", bench_cand.log_path);
    bench_cmd->add_option("--bundle", bench_bundle, "Model bundle (selectors mode)");
    bench_cmd->add_option("--train-images", bench_train.images);
    bench_cmd->add_option("--train-labels", bench_train.labels);
    bench_cmd->add_option("--train-limit", bench_train.limit);
    bench_cmd->add_option("--selectors", bench_selectors)->capture_default_str();
    bench_cmd->add_option("--budgets", bench_budgets)->capture_default_str();

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "FDR sweeps over k or tap layers");
    DatasetArgs sweep_data;
    sweep_data.add_to(sweep_cmd);
    CandidateArgs sweep_cand;
    sweep_cand.add_to(sweep_cmd);
    std::string sweep_bundle;
    std::string sweep_mode = "k";
    std::string ks_text = "1,5,10,20,100";
    std::string layers_text;
    double sweep_budget = 0.20;
    double sweep_k_fraction = 0.10;
    sweep_cmd->add_option("--bundle", sweep_bundle, "Model bundle directory")->required();
    sweep_cmd->add_option("--mode", sweep_mode, "k or layers")->capture_default_str();
    sweep_cmd->add_option("--ks", ks_text, "Sensitive-neuron percentages (>=1) or fractions")
        ->capture_default_str();
    sweep_cmd->add_option("--layers", layers_text,
                          "Comma-separated tap layer ids (empty = all coverage layers)");
    sweep_cmd->add_option("--budget", sweep_budget)->capture_default_str();
    sweep_cmd->add_option("--k", sweep_k_fraction, "k used in layers mode")
        ->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    set_worker_count(g.workers);
    fs::create_directories(g.out);
    CLI::App* sub = app.get_subcommands().front();

    if (sub == datagen) {
        auto ds = synthetic_digits(dg_count, dg_seed);
        save_idx(ds, (fs::path(g.out) / "images.idx").string(),
                 (fs::path(g.out) / "labels.idx").string());
        write_run_manifest(g, sub, {});
        std::cout << "wrote " << dg_count << " images to " << g.out << "\n";
        return 0;
    }

    if (sub == train_cmd) {
        auto ds = train_data.load();
        std::vector<int> input_shape(ds.images.shape().begin() + 1, ds.images.shape().end());
        Model model = make_arch(arch, input_shape, ds.class_count);
        train_cfg.nesterov = !no_nesterov;
        train_cfg.seed = train_seed;
        for (const auto& e : split_csv(decay_epochs_text)) {
            train_cfg.lr_decay_epochs.push_back(std::stoi(e));
        }
        auto result = train(model, input_shape, init_weights(model, input_shape, train_seed), ds,
                            train_cfg);

        ModelBundle bundle;
        bundle.model = model;
        bundle.input_shape = input_shape;
        bundle.class_count = ds.class_count;
        bundle.weights = result.weights;
        save_model_bundle(bundle, (fs::path(g.out) / "bundle").string());

        std::string history = "epoch,train_accuracy\n";
        for (size_t e = 0; e < result.epoch_accuracy.size(); ++e) {
            history += std::to_string(e + 1) + "," + format_float(result.epoch_accuracy[e]) + "\n";
        }
        write_text_file(fs::path(g.out) / "history.csv", history);
        write_run_manifest(g, sub, {train_data.images, train_data.labels});
        std::cout << "final train accuracy " << result.epoch_accuracy.back() << "\n";
        return 0;
    }

    if (sub == mutate_cmd) {
        auto ds = mutate_data.load();
        auto pairs = mutate_cand.make(ds);
        std::vector<MutationSpec> specs;
        specs.reserve(pairs.size());
        for (const auto& p : pairs) specs.push_back(p.spec);
        save_mutation_log((fs::path(g.out) / "mutation_log.csv").string(), specs,
                          mutate_data.images, mutate_cand.seed);
        if (materialize) {
            LabeledDataset mutated;
            mutated.images = candidate_batch(pairs);
            mutated.labels = ds.labels;
            mutated.class_count = ds.class_count;
            save_idx(mutated, (fs::path(g.out) / "mutated_images.idx").string(),
                     (fs::path(g.out) / "mutated_labels.idx").string());
        }
        write_run_manifest(g, sub, {mutate_data.images, mutate_data.labels});
        std::cout << "wrote mutation log for " << pairs.size() << " candidates\n";
        return 0;
    }

    if (sub == identify_cmd) {
        auto bundle = load_model_bundle(identify_bundle);
        auto ds = identify_data.load();
        auto pairs = identify_cand.make(ds);
        int tap = identify_layer < 0 ? last_encoder_layer(bundle.model) : identify_layer;
        auto acc = accumulate_sensitivity(bundle.model, bundle.weights, pairs, tap);
        auto top = identify_sensitive(bundle.model, bundle.weights, pairs, identify_k, tap);

        std::string csv = "rank,layer,index,accumulated_sensitivity\n";
        for (size_t r = 0; r < top.size(); ++r) {
            csv += std::to_string(r) + "," + std::to_string(top[r].layer) + "," +
                   std::to_string(top[r].index) + "," + format_float(acc.values[top[r].index]) +
                   "\n";
        }
        write_text_file(fs::path(g.out) / "sensitive_neurons.csv", csv);
        write_run_manifest(g, sub, {identify_data.images, identify_data.labels,
                                    identify_cand.log_path});
        std::cout << "identified " << top.size() << " sensitive neurons at layer " << tap << "\n";
        return 0;
    }

    if (sub == select_cmd) {
        auto bundle = load_model_bundle(select_bundle);
        auto ds = select_data.load();
        auto pairs = select_cand.make(ds);

        SelectorRunner runner(bundle, pairs);
        runner.nss_config.k = select_k;
        runner.nss_config.tap_layer = select_layer;
        runner.nss_config.identify_fraction = identify_fraction;
        runner.nss_config.seed = select_cand.seed;
        runner.base_config = select_base;
        runner.base_config.seed = select_cand.seed;
        runner.base_config.tap_layer = select_layer;
        LabeledDataset train_set;
        if (!select_train.images.empty()) {
            train_set = select_train.load();
            if (train_set.class_count < ds.class_count) train_set.class_count = ds.class_count;
            runner.train_set = &train_set;
        }

        auto report = runner.run(selector, select_budget);
        attach_predictions(report, bundle.model, bundle.weights, pairs);
        export_selection_report(report, (fs::path(g.out) / "selection").string());
        if (runner.have_profile) {
            save_coverage_profile(runner.profile, (fs::path(g.out) / "coverage.bin").string());
        }
        write_run_manifest(g, sub, {select_data.images, select_data.labels, select_cand.log_path,
                                    select_train.images, select_train.labels});
        std::cout << "selected " << report.ranked.size() << " of " << pairs.size()
                  << " candidates with " << selector << "\n";
        return 0;
    }

    if (sub == eval_cmd || (sub == bench_cmd && bench_mode == "selectors")) {
        const bool timing_only = sub == bench_cmd;
        std::string bundle_path = timing_only ? bench_bundle : eval_bundle;
        if (bundle_path.empty()) throw ConfigError("--bundle is required");
        auto bundle = load_model_bundle(bundle_path);
        DatasetArgs& data = timing_only ? bench_data : eval_data;
        CandidateArgs& cand = timing_only ? bench_cand : eval_cand;
        auto ds = data.load();
        auto pairs = cand.make(ds);
        auto budgets = parse_budgets(timing_only ? bench_budgets : budgets_text);
        auto selector_names = split_csv(timing_only ? bench_selectors : selectors_text);
        double max_budget = *std::max_element(budgets.begin(), budgets.end());
        double order_budget = std::max(max_budget, 0.20);

        SelectorRunner runner(bundle, pairs);
        runner.nss_config.k = eval_k;
        runner.nss_config.tap_layer = eval_layer;
        runner.nss_config.seed = cand.seed;
        runner.base_config = eval_base;
        runner.base_config.seed = cand.seed;
        runner.base_config.tap_layer = eval_layer;
        LabeledDataset train_set;
        DatasetArgs& train_args = timing_only ? bench_train : eval_train;
        if (!train_args.images.empty()) {
            train_set = train_args.load();
            if (train_set.class_count < ds.class_count) train_set.class_count = ds.class_count;
            runner.train_set = &train_set;
        }

        std::vector<int> predicted = predict(bundle.model, bundle.weights, runner.images);
        std::vector<int> labels;
        for (const auto& p : pairs) labels.push_back(p.label);

        EvalReport report;
        report.config = {{"budgets", timing_only ? bench_budgets : budgets_text},
                         {"selectors", timing_only ? bench_selectors : selectors_text},
                         {"k", std::to_string(eval_k)},
                         {"seed", std::to_string(cand.seed)}};
        std::string retrain_csv = "selector,budget_percent,base_accuracy,new_accuracy,delta\n";

        for (const auto& name : selector_names) {
            runner.run(name, budgets[0]);  // discarded warm-up run
            auto full = runner.run(name, order_budget);
            auto ftcr = ftcr_curve(full.order, predicted, labels);
            report.no_faults = report.no_faults || ftcr.no_faults;
            for (size_t b = 0; b < ftcr.budgets.size(); ++b) {
                report.ftcr_rows.emplace_back(name, ftcr.budgets[b], ftcr.rates[b]);
            }
            report.auc_rows.emplace_back(name, ftcr.auc_percent);

            for (double budget : budgets) {
                auto run = runner.run(name, budget);
                report.fdr_rows.emplace_back(name, budget, fdr(run.ranked, predicted, labels));
                report.timing_rows.push_back(timing_row(run, budget));
                if (!timing_only && do_retrain) {
                    if (!runner.train_set) {
                        throw ConfigError("--retrain needs --train-images/--train-labels");
                    }
                    retrain_cfg.seed = cand.seed;
                    auto rr = retrain_experiment(bundle.model, bundle.input_shape, bundle.weights,
                                                 *runner.train_set, ds, pairs, run.ranked,
                                                 retrain_cfg);
                    retrain_csv += name + "," + format_percent(budget) + "," +
                                   format_float(rr.base_accuracy) + "," +
                                   format_float(rr.new_accuracy) + "," +
                                   format_float(rr.delta()) + "\n";
                }
            }
        }

        if (timing_only) {
            report.fdr_rows.clear();
            report.ftcr_rows.clear();
            report.auc_rows.clear();
        }
        export_eval_report(report, g.out);
        if (!timing_only && do_retrain) {
            write_text_file(fs::path(g.out) / "retrain.csv", retrain_csv);
        }
        write_run_manifest(g, sub, {data.images, data.labels, cand.log_path, train_args.images,
                                    train_args.labels});
        std::cout << (timing_only ? "timing table" : "evaluation") << " written to " << g.out
                  << "\n";
        return 0;
    }

    if (sub == bench_cmd) {
        std::string csv = "mode,n,t_n_seconds,t_2n_seconds,ratio\n";
        if (bench_mode == "sort") {
            auto r = bench_sort_scaling(bench_n, bench_repeats, bench_cand.seed);
            csv += "sort," + std::to_string(bench_n) + "," + format_float(r.t_n) + "," +
                   format_float(r.t_2n) + "," + format_float(r.ratio()) + "\n";
        } else if (bench_mode == "kmnc") {
            auto r = bench_kmnc_greedy_scaling(bench_n, bench_neurons, bench_bins, bench_budget,
                                               bench_repeats, bench_cand.seed);
            csv += "kmnc," + std::to_string(bench_n) + "," + format_float(r.t_n) + "," +
                   format_float(r.t_2n) + "," + format_float(r.ratio()) + "\n";
        } else {
            throw ConfigError("unknown bench mode '" + bench_mode + "'");
        }
        write_text_file(fs::path(g.out) / "bench.csv", csv);
        write_run_manifest(g, sub, {});
        std::cout << csv;
        return 0;
    }

    if (sub == sweep_cmd) {
        auto bundle = load_model_bundle(sweep_bundle);
        auto ds = sweep_data.load();
        auto pairs = sweep_cand.make(ds);
        if (sweep_mode == "k") {
            std::vector<double> ks;
            for (const auto& t : split_csv(ks_text)) {
                double v = std::stod(t);
                ks.push_back(v >= 1.0 ? v / 100.0 : v);
            }
            auto rows = sweep_k(bundle.model, bundle.weights, pairs, ks, sweep_budget);
            export_sweep(rows, "k_fraction", (fs::path(g.out) / "sweep_k.csv").string());
        } else if (sweep_mode == "layers") {
            std::vector<int> layers;
            if (layers_text.empty()) {
                layers = coverage_layers(bundle.model);
            } else {
                for (const auto& t : split_csv(layers_text)) layers.push_back(std::stoi(t));
            }
            auto rows = sweep_layers(bundle.model, bundle.weights, pairs, layers, sweep_budget,
                                     sweep_k_fraction);
            export_sweep(rows, "layer", (fs::path(g.out) / "sweep_layers.csv").string());
        } else {
            throw ConfigError("unknown sweep mode '" + sweep_mode + "'");
        }
        write_run_manifest(g, sub, {sweep_data.images, sweep_data.labels, sweep_cand.log_path});
        std::cout << "sweep written to " << g.out << "\n";
        return 0;
    }

    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
