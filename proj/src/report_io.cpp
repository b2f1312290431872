#include "nss/report_io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace nss {

namespace {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError(path + ": cannot open for writing");
    out << content;
    if (!out) throw FormatError(path + ": write failure");
}

}  // namespace

std::string format_percent(double fraction) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", fraction * 100.0);
    return buf;
}

std::string format_float(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

void export_selection_report(const SelectionReport& report, const std::string& stem) {
    ordered_json j;
    j["selector"] = report.selector;
    ordered_json config = ordered_json::object();
    for (const auto& [k, v] : report.config) config[k] = v;
    j["config"] = config;
    j["candidate_count"] = report.order.size();
    j["budget"] = report.ranked.size();
    if (!report.sensitive.empty()) {
        ordered_json sens = ordered_json::array();
        for (const auto& addr : report.sensitive) {
            sens.push_back({{"layer", addr.layer}, {"index", addr.index}});
        }
        j["sensitive_neurons"] = sens;
    }
    j["ranked"] = report.ranked;
    j["order"] = report.order;
    j["scores"] = report.scores;
    j["predicted"] = report.predicted;
    j["labels"] = report.labels;
    j["timings_file"] = fs::path(stem + "_timings.csv").filename().string();
    write_text(stem + ".json", j.dump(2) + "\n");

    std::string csv = "rank,index,score,predicted,label\n";
    for (size_t r = 0; r < report.ranked.size(); ++r) {
        int idx = report.ranked[r];
        csv += std::to_string(r) + "," + std::to_string(idx) + ",";
        if (idx >= 0 && static_cast<size_t>(idx) < report.scores.size()) {
            csv += format_float(report.scores[idx]);
        }
        csv += ",";
        if (static_cast<size_t>(idx) < report.predicted.size()) {
            csv += std::to_string(report.predicted[idx]);
        }
        csv += ",";
        if (static_cast<size_t>(idx) < report.labels.size()) {
            csv += std::to_string(report.labels[idx]);
        }
        csv += "\n";
    }
    write_text(stem + ".csv", csv);

    std::string timings = "phase,seconds\n";
    for (const auto& [phase, seconds] : report.timings) {
        timings += phase + "," + format_float(seconds) + "\n";
    }
    write_text(stem + "_timings.csv", timings);
}

SelectionReport load_selection_report(const std::string& json_path) {
    std::ifstream in(json_path, std::ios::binary);
    if (!in) throw FormatError(json_path + ": cannot open");
    ordered_json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(json_path + ": parse error: " + e.what());
    }
    SelectionReport report;
    report.selector = j.at("selector").get<std::string>();
    for (auto& [k, v] : j.at("config").items()) {
        report.config.emplace_back(k, v.get<std::string>());
    }
    report.ranked = j.at("ranked").get<std::vector<int>>();
    report.order = j.at("order").get<std::vector<int>>();
    report.scores = j.at("scores").get<std::vector<float>>();
    report.predicted = j.at("predicted").get<std::vector<int>>();
    report.labels = j.at("labels").get<std::vector<int>>();
    if (j.contains("sensitive_neurons")) {
        for (const auto& s : j.at("sensitive_neurons")) {
            report.sensitive.push_back({s.at("layer").get<int>(), s.at("index").get<int>()});
        }
    }
    return report;
}

void export_eval_report(const EvalReport& report, const std::string& dir) {
    fs::create_directories(dir);

    std::string fdr_csv = "selector,budget_percent,fdr_percent\n";
    for (const auto& [selector, budget, value] : report.fdr_rows) {
        fdr_csv += selector + "," + format_percent(budget) + "," + format_percent(value) + "\n";
    }
    write_text((fs::path(dir) / "fdr.csv").string(), fdr_csv);

    std::string ftcr_csv = "selector,budget_percent,ftcr_percent\n";
    for (const auto& [selector, budget, value] : report.ftcr_rows) {
        ftcr_csv += selector + "," + format_percent(budget) + "," + format_percent(value) + "\n";
    }
    write_text((fs::path(dir) / "ftcr.csv").string(), ftcr_csv);

    std::string auc_csv = "selector,ftcr_auc_percent\n";
    for (const auto& [selector, auc] : report.auc_rows) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", auc);
        auc_csv += selector + "," + buf + "\n";
    }
    write_text((fs::path(dir) / "auc.csv").string(), auc_csv);

    std::string timing_csv = "selector,budget_percent,score_seconds,order_seconds,total_seconds\n";
    for (const auto& row : report.timing_rows) {
        timing_csv += row.selector + "," + format_percent(row.budget) + "," +
                      format_float(row.score_seconds) + "," + format_float(row.order_seconds) +
                      "," + format_float(row.total_seconds) + "\n";
    }
    write_text((fs::path(dir) / "timings.csv").string(), timing_csv);

    ordered_json j;
    ordered_json config = ordered_json::object();
    for (const auto& [k, v] : report.config) config[k] = v;
    j["config"] = config;
    j["no_faults"] = report.no_faults;
    ordered_json fdr_rows = ordered_json::array();
    for (const auto& [selector, budget, value] : report.fdr_rows) {
        fdr_rows.push_back({{"selector", selector},
                            {"budget_percent", format_percent(budget)},
                            {"fdr_percent", format_percent(value)}});
    }
    j["fdr"] = fdr_rows;
    ordered_json auc_rows = ordered_json::array();
    for (const auto& [selector, auc] : report.auc_rows) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.2f", auc);
        auc_rows.push_back({{"selector", selector}, {"ftcr_auc_percent", std::string(buf)}});
    }
    j["ftcr_auc"] = auc_rows;
    j["artifacts"] = {"fdr.csv", "ftcr.csv", "auc.csv", "timings.csv"};
    write_text((fs::path(dir) / "eval.json").string(), j.dump(2) + "\n");
}

void export_sweep(const std::vector<SweepRow>& rows, const std::string& parameter_name,
                  const std::string& path) {
    std::string csv = parameter_name + ",fdr_percent\n";
    for (const auto& row : rows) {
        csv += format_float(row.parameter) + "," + format_percent(row.fdr) + "\n";
    }
    write_text(path, csv);
}

}  // namespace nss
