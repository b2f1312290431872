#pragma once

#include <string>
#include <tuple>
#include <vector>

#include "nss/evaluation.hpp"
#include "nss/selection.hpp"

namespace nss {

// Writes `<stem>.json` (full report), `<stem>.csv` (rank,index,score,
// predicted,label) and `<stem>_timings.csv`. Everything except the timing
// sidecar is byte-stable across reruns of the same configuration.
void export_selection_report(const SelectionReport& report, const std::string& stem);

SelectionReport load_selection_report(const std::string& json_path);

struct EvalReport {
    // selector, budget fraction, value
    std::vector<std::tuple<std::string, double, double>> fdr_rows;
    std::vector<std::tuple<std::string, double, double>> ftcr_rows;
    std::vector<std::pair<std::string, double>> auc_rows;  // selector, AUC %
    std::vector<TimingRow> timing_rows;
    std::vector<std::pair<std::string, std::string>> config;
    bool no_faults = false;
};

// Writes eval.json, fdr.csv, ftcr.csv, auc.csv and timings.csv under `dir`.
void export_eval_report(const EvalReport& report, const std::string& dir);

// sweep.csv with one row per parameter value.
void export_sweep(const std::vector<SweepRow>& rows, const std::string& parameter_name,
                  const std::string& path);

// Percentages are serialized with fixed two decimals.
std::string format_percent(double fraction);
std::string format_float(double v);

}  // namespace nss
