#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "fairsp/nn.hpp"

namespace fairsp::data {

enum class ColumnKind { Numeric, Categorical };

struct ColumnSpec {
    std::string name;
    ColumnKind kind;
};

struct DatasetSchema {
    std::vector<ColumnSpec> columns;  // feature columns only
    std::string label_column;
    std::string label_positive;  // cell value mapped to Y = 1
    std::string sensitive_column;
    std::string sensitive_protected;  // cell value mapped to A = 1

    void validate() const;
};

struct RawTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::size_t dropped_rows = 0;
};

RawTable load_csv(const std::string& path, const DatasetSchema& schema);

struct NumericStats {
    double mean = 0.0;
    double std = 1.0;  // population std
};

/// Fitted encoding state, recorded for reproducibility and audit.
struct EncodingMap {
    // categorical column -> categories in first-occurrence order
    std::map<std::string, std::vector<std::string>> categories;
    std::map<std::string, NumericStats> numeric_stats;
    std::size_t unseen_category_count = 0;

    std::string to_json() const;
};

struct EncodedDataset {
    nn::Matrix X;
    std::vector<int> y;
    std::vector<int> a;       // observed sensitive attribute (possibly noised)
    std::vector<int> a_true;  // ground truth, evaluation only

    std::size_t size() const { return y.size(); }
    EncodedDataset select(const std::vector<std::size_t>& idx) const;
    void validate() const;
};

// Fits the encoding on `table` (category order by first occurrence, z-score
// by population mean/std) and encodes it. The sensitive column never enters X.
EncodedDataset encode(const RawTable& table, const DatasetSchema& schema, EncodingMap& map);

// Encodes with an already-fitted map (test data with training statistics).
// Unseen categories map to an all-zero one-hot and are counted on the map.
EncodedDataset encode_with(const RawTable& table, const DatasetSchema& schema,
                           EncodingMap& map);

struct SplitIndices {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

// Deterministic shuffle by seed; train gets floor((1 - test_fraction) * n)
// rows, the remainder goes to test.
SplitIndices split_train_test(std::size_t n, double test_fraction, std::uint64_t seed);

struct SemiPrivatePartition {
    EncodedDataset clean;     // a == a_true
    EncodedDataset priv;      // a will be LDP-noised by the caller
    double clean_ratio = 0.0; // |clean| / (|clean| + |priv|), exact
};

// |clean| = round(clean_ratio * |train|); subsets are disjoint and exhaustive.
SemiPrivatePartition partition_semi_private(const EncodedDataset& train, double clean_ratio,
                                            std::uint64_t seed);

struct SyntheticSpec {
    std::size_t n = 4000;
    std::size_t feature_dim = 8;
    double p_a1 = 0.5;
    // Group-conditional diagonal Gaussians.
    std::vector<double> mean_a0;
    std::vector<double> mean_a1;
    std::vector<double> stddev;
    // p(Y=1 | X, A) = sigmoid(w . x + bias + attr_coef * a)
    std::vector<double> label_weights;
    double label_bias = 0.0;
    double label_attr_coef = 0.0;
    std::uint64_t seed = 0;

    void fill_defaults();  // sizes vectors to feature_dim if left empty
    void validate() const;
};

// Deterministic per seed; a_true == a (clean by construction).
EncodedDataset synthesize(const SyntheticSpec& spec);

// A generator where A correlates with both X and Y, used by the debiasing
// experiments: group-shifted features plus a direct A term in the label rule.
SyntheticSpec biased_synthetic_spec(std::size_t n, std::uint64_t seed);

// Appends the observed attribute as an extra feature column (the "vanilla"
// baseline input).
nn::Matrix append_attribute_column(const nn::Matrix& x, const std::vector<int>& a);

}  // namespace fairsp::data
