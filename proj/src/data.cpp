#include "fairsp/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace fairsp::data {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"') {
            quoted = !quoted;
        } else if (ch == ',' && !quoted) {
            cells.push_back(cell);
            cell.clear();
        } else {
            cell.push_back(ch);
        }
    }
    cells.push_back(cell);
    return cells;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

bool is_missing(const std::string& cell) {
    return cell.empty() || cell == "?" || cell == "NA" || cell == "nan";
}

}  // namespace

void DatasetSchema::validate() const {
    std::set<std::string> seen;
    for (const auto& c : columns) {
        if (!seen.insert(c.name).second)
            throw std::invalid_argument("schema: column listed twice: " + c.name);
    }
    if (label_column.empty() || sensitive_column.empty())
        throw std::invalid_argument("schema: label and sensitive columns required");
    if (seen.count(label_column) || seen.count(sensitive_column))
        throw std::invalid_argument("schema: label/sensitive must not be feature columns");
}

RawTable load_csv(const std::string& path, const DatasetSchema& schema) {
    schema.validate();
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_csv: cannot open " + path);

    RawTable table;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("load_csv: empty file " + path);
    for (auto& h : split_csv_line(line)) table.header.push_back(trim(h));

    std::vector<std::size_t> used;  // header indices of used columns
    auto col_index = [&](const std::string& name) {
        auto it = std::find(table.header.begin(), table.header.end(), name);
        if (it == table.header.end())
            throw std::runtime_error("load_csv: missing column " + name);
        return std::size_t(it - table.header.begin());
    };
    for (const auto& c : schema.columns) used.push_back(col_index(c.name));
    used.push_back(col_index(schema.label_column));
    used.push_back(col_index(schema.sensitive_column));

    std::vector<std::size_t> numeric_cols;
    for (const auto& c : schema.columns)
        if (c.kind == ColumnKind::Numeric) numeric_cols.push_back(col_index(c.name));

    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto cells = split_csv_line(line);
        for (auto& c : cells) c = trim(c);
        if (cells.size() != table.header.size()) {
            ++table.dropped_rows;
            continue;
        }
        bool drop = false;
        for (std::size_t idx : used)
            if (is_missing(cells[idx])) drop = true;
        if (!drop) {
            for (std::size_t idx : numeric_cols) {
                try {
                    std::size_t pos = 0;
                    (void)std::stod(cells[idx], &pos);
                    if (pos != cells[idx].size())
                        throw std::invalid_argument("trailing junk");
                } catch (const std::exception&) {
                    throw std::runtime_error("load_csv: unparseable numeric cell '" +
                                             cells[idx] + "' in column index " +
                                             std::to_string(idx));
                }
            }
        }
        if (drop) {
            ++table.dropped_rows;
        } else {
            table.rows.push_back(std::move(cells));
        }
    }
    return table;
}

std::string EncodingMap::to_json() const {
    nlohmann::json j;
    for (const auto& [name, cats] : categories) j["categories"][name] = cats;
    for (const auto& [name, st] : numeric_stats)
        j["numeric"][name] = {{"mean", st.mean}, {"std", st.std}};
    j["unseen_category_count"] = unseen_category_count;
    return j.dump(2);
}

void EncodedDataset::validate() const {
    if (X.rows != y.size() || y.size() != a.size() || a_true.size() != a.size())
        throw std::runtime_error("EncodedDataset: inconsistent row counts");
    if (!X.all_finite()) throw std::runtime_error("EncodedDataset: non-finite feature");
}

EncodedDataset EncodedDataset::select(const std::vector<std::size_t>& idx) const {
    EncodedDataset out;
    out.X = nn::Matrix(idx.size(), X.cols);
    out.y.reserve(idx.size());
    out.a.reserve(idx.size());
    out.a_true.reserve(idx.size());
    for (std::size_t r = 0; r < idx.size(); ++r) {
        const std::size_t s = idx[r];
        std::copy(X.row(s), X.row(s) + X.cols, out.X.row(r));
        out.y.push_back(y[s]);
        out.a.push_back(a[s]);
        out.a_true.push_back(a_true[s]);
    }
    return out;
}

namespace {

std::size_t header_index(const RawTable& table, const std::string& name) {
    auto it = std::find(table.header.begin(), table.header.end(), name);
    if (it == table.header.end())
        throw std::runtime_error("encode: missing column " + name);
    return std::size_t(it - table.header.begin());
}

EncodedDataset encode_impl(const RawTable& table, const DatasetSchema& schema,
                           EncodingMap& map, bool fit) {
    schema.validate();
    const std::size_t n = table.rows.size();
    const std::size_t label_idx = header_index(table, schema.label_column);
    const std::size_t sens_idx = header_index(table, schema.sensitive_column);

    if (fit) {
        for (const auto& c : schema.columns) {
            const std::size_t idx = header_index(table, c.name);
            if (c.kind == ColumnKind::Categorical) {
                std::vector<std::string> cats;
                for (const auto& row : table.rows)
                    if (std::find(cats.begin(), cats.end(), row[idx]) == cats.end())
                        cats.push_back(row[idx]);
                map.categories[c.name] = std::move(cats);
            } else {
                double sum = 0.0, sq = 0.0;
                for (const auto& row : table.rows) {
                    const double v = std::stod(row[idx]);
                    sum += v;
                    sq += v * v;
                }
                NumericStats st;
                st.mean = sum / double(n);
                const double var = sq / double(n) - st.mean * st.mean;
                st.std = var > 0.0 ? std::sqrt(var) : 1.0;
                map.numeric_stats[c.name] = st;
            }
        }
    }

    std::size_t width = 0;
    for (const auto& c : schema.columns)
        width += c.kind == ColumnKind::Numeric ? 1 : map.categories.at(c.name).size();

    EncodedDataset out;
    out.X = nn::Matrix(n, width);
    for (std::size_t r = 0; r < n; ++r) {
        const auto& row = table.rows[r];
        std::size_t col = 0;
        for (const auto& c : schema.columns) {
            const std::size_t idx = header_index(table, c.name);
            if (c.kind == ColumnKind::Numeric) {
                const auto& st = map.numeric_stats.at(c.name);
                out.X(r, col++) = (std::stod(row[idx]) - st.mean) / st.std;
            } else {
                const auto& cats = map.categories.at(c.name);
                auto it = std::find(cats.begin(), cats.end(), row[idx]);
                if (it == cats.end())
                    ++map.unseen_category_count;  // all-zero one-hot
                else
                    out.X(r, col + std::size_t(it - cats.begin())) = 1.0;
                col += cats.size();
            }
        }
        out.y.push_back(row[label_idx] == schema.label_positive ? 1 : 0);
        out.a.push_back(row[sens_idx] == schema.sensitive_protected ? 1 : 0);
    }
    out.a_true = out.a;
    out.validate();
    return out;
}

}  // namespace

EncodedDataset encode(const RawTable& table, const DatasetSchema& schema, EncodingMap& map) {
    return encode_impl(table, schema, map, true);
}

EncodedDataset encode_with(const RawTable& table, const DatasetSchema& schema,
                           EncodingMap& map) {
    return encode_impl(table, schema, map, false);
}

SplitIndices split_train_test(std::size_t n, double test_fraction, std::uint64_t seed) {
    if (test_fraction <= 0.0 || test_fraction >= 1.0)
        throw std::invalid_argument("split_train_test: test_fraction out of (0,1)");
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t train_n = std::size_t(std::floor((1.0 - test_fraction) * double(n)));
    if (train_n == 0 || train_n == n)
        throw std::invalid_argument("split_train_test: empty split");
    SplitIndices s;
    s.train.assign(idx.begin(), idx.begin() + train_n);
    s.test.assign(idx.begin() + train_n, idx.end());
    return s;
}

SemiPrivatePartition partition_semi_private(const EncodedDataset& train, double clean_ratio,
                                            std::uint64_t seed) {
    if (clean_ratio <= 0.0 || clean_ratio > 1.0)
        throw std::invalid_argument("partition_semi_private: ratio out of (0,1]");
    const std::size_t n = train.size();
    const std::size_t clean_n = std::size_t(std::llround(clean_ratio * double(n)));
    if (clean_n == 0)
        throw std::invalid_argument("partition_semi_private: clean set empty after rounding");
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);

    SemiPrivatePartition p;
    p.clean = train.select({idx.begin(), idx.begin() + clean_n});
    p.priv = train.select({idx.begin() + clean_n, idx.end()});
    p.clean_ratio = double(clean_n) / double(n);
    return p;
}

void SyntheticSpec::fill_defaults() {
    if (mean_a0.empty()) mean_a0.assign(feature_dim, 0.0);
    if (mean_a1.empty()) mean_a1.assign(feature_dim, 0.0);
    if (stddev.empty()) stddev.assign(feature_dim, 1.0);
    if (label_weights.empty()) label_weights.assign(feature_dim, 0.0);
}

void SyntheticSpec::validate() const {
    if (n == 0 || feature_dim == 0) throw std::invalid_argument("SyntheticSpec: empty");
    if (p_a1 <= 0.0 || p_a1 >= 1.0)
        throw std::invalid_argument("SyntheticSpec: p_a1 out of (0,1)");
    if (mean_a0.size() != feature_dim || mean_a1.size() != feature_dim ||
        stddev.size() != feature_dim || label_weights.size() != feature_dim)
        throw std::invalid_argument("SyntheticSpec: vector size mismatch");
    for (double s : stddev)
        if (s <= 0.0) throw std::invalid_argument("SyntheticSpec: nonpositive stddev");
}

EncodedDataset synthesize(const SyntheticSpec& spec_in) {
    SyntheticSpec spec = spec_in;
    spec.fill_defaults();
    spec.validate();

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    EncodedDataset out;
    out.X = nn::Matrix(spec.n, spec.feature_dim);
    for (std::size_t i = 0; i < spec.n; ++i) {
        const int ai = unif(rng) < spec.p_a1 ? 1 : 0;
        const auto& mean = ai == 1 ? spec.mean_a1 : spec.mean_a0;
        double logit = spec.label_bias + spec.label_attr_coef * double(ai);
        for (std::size_t d = 0; d < spec.feature_dim; ++d) {
            const double v = mean[d] + spec.stddev[d] * normal(rng);
            out.X(i, d) = v;
            logit += spec.label_weights[d] * v;
        }
        const double py = 1.0 / (1.0 + std::exp(-logit));
        out.y.push_back(unif(rng) < py ? 1 : 0);
        out.a.push_back(ai);
    }
    out.a_true = out.a;
    out.validate();
    return out;
}

SyntheticSpec biased_synthetic_spec(std::size_t n, std::uint64_t seed) {
    SyntheticSpec s;
    s.n = n;
    s.feature_dim = 8;
    s.p_a1 = 0.5;
    s.seed = seed;
    s.mean_a0.assign(s.feature_dim, 0.0);
    s.mean_a1.assign(s.feature_dim, 0.0);
    // The first two features carry a strong group signature, so the attribute
    // stays recoverable from X even after its own noising.
    s.mean_a1[0] = 1.8;
    s.mean_a1[1] = -1.2;
    s.stddev.assign(s.feature_dim, 1.0);
    s.label_weights.assign(s.feature_dim, 0.0);
    // The label leans mostly on group-neutral features, with a modest
    // group-correlated term and a direct dependence on A itself.
    s.label_weights[0] = 0.4;
    s.label_weights[2] = 1.2;
    s.label_weights[3] = -0.8;
    s.label_attr_coef = 0.6;
    s.label_bias = -0.5;
    return s;
}

nn::Matrix append_attribute_column(const nn::Matrix& x, const std::vector<int>& a) {
    if (x.rows != a.size())
        throw std::invalid_argument("append_attribute_column: row count mismatch");
    nn::Matrix out(x.rows, x.cols + 1);
    for (std::size_t r = 0; r < x.rows; ++r) {
        std::copy(x.row(r), x.row(r) + x.cols, out.row(r));
        out(r, x.cols) = double(a[r]);
    }
    return out;
}

}  // namespace fairsp::data
