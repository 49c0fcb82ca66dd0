#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fairsp/config.hpp"
#include "fairsp/correction.hpp"
#include "fairsp/data.hpp"
#include "fairsp/debias.hpp"
#include "fairsp/metrics.hpp"
#include "fairsp/privacy.hpp"

namespace fairsp::experiment {

enum class DatasetKind { Csv, Synthetic };

struct ExperimentConfig {
    DatasetKind dataset_kind = DatasetKind::Synthetic;
    std::string csv_path;
    data::DatasetSchema schema;
    std::size_t synthetic_n = 4000;
    double test_fraction = 0.5;

    std::vector<debias::TrainerVariant> variants{debias::TrainerVariant::FairSp};
    std::vector<double> epsilons{0.5, 1.0};
    std::vector<double> clean_ratios{0.2};
    std::vector<std::uint64_t> seeds{5, 7, 11, 19, 29};

    debias::DebiasConfig debias;
    std::size_t workers = 1;
    std::string out_dir = "results";

    void validate() const;
};

struct ReportRow {
    std::string variant;
    double epsilon = 0.0;
    double clean_ratio = 0.0;
    std::uint64_t seed = 0;
    metrics::FairnessReport metrics;
    std::optional<correction::CorruptionMatrix> c_hat;
    std::optional<double> corrector_recovery_accuracy;
    privacy::NoiseReport noise;
    double runtime_seconds = 0.0;

    std::string to_json() const;
    static ReportRow from_json(const std::string& line);
};

struct AggregateRow {
    std::string variant;
    double epsilon = 0.0;
    double clean_ratio = 0.0;
    std::size_t num_seeds = 0;
    double acc_mean = 0, acc_std = 0;
    double f1_mean = 0, f1_std = 0;
    double dp_mean = 0, dp_std = 0;
    double eo_mean = 0, eo_std = 0;
};

struct ExperimentReport {
    std::vector<ReportRow> rows;
    std::vector<AggregateRow> aggregates;
    std::vector<std::string> failures;  // per-cell error messages, sweep continued

    void write(const std::string& out_dir) const;  // rows.jsonl, aggregate.csv, curves.csv
};

std::vector<AggregateRow> aggregate(const std::vector<ReportRow>& rows);

// Executes load -> encode -> split -> partition -> noise -> (correct) ->
// train -> evaluate, fully seeded; deterministic per tuple.
ReportRow run_single(const ExperimentConfig& cfg, debias::TrainerVariant variant,
                     double epsilon, double clean_ratio, std::uint64_t seed);

// Cartesian product of (variant x epsilon x ratio x seed). Cells failing with
// an exception are recorded and skipped; the sweep continues.
ExperimentReport run_sweep(const ExperimentConfig& cfg);

// FairSP with and without the correction stage under identical seeds,
// 2 x |seeds| rows.
ExperimentReport ablate_correction(const ExperimentConfig& cfg);

// Hyperparameter sensitivity grid over alpha, beta in {0.6 .. 1.0}.
ExperimentReport sensitivity_sweep(const ExperimentConfig& cfg);

// Re-aggregate a rows.jsonl file and cross-check stored aggregates on load.
ExperimentReport load_report(const std::string& rows_path);

ExperimentConfig config_from_table(const config::Table& table);

// `prepare`: parse and clean the CSV, cache it under a content-hash key and
// emit the audit encoding map. Returns the cache file path.
std::string prepare_dataset(const ExperimentConfig& cfg, const std::string& cache_dir);

}  // namespace fairsp::experiment
