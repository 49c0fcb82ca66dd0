#include "fairsp/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

namespace fairsp::experiment {

namespace {

using nlohmann::json;

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + stream * 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

// per-pipeline-stage RNG streams
constexpr std::uint64_t kGen = 101, kSplit = 102, kPart = 103, kNoise = 104, kCorr = 105,
                        kTrain = 106;

// CSV tables are immutable once parsed; memoize per path.
const data::RawTable& cached_table(const std::string& path,
                                   const data::DatasetSchema& schema) {
    static std::mutex mu;
    static std::map<std::string, data::RawTable> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(path);
    if (it == cache.end()) it = cache.emplace(path, data::load_csv(path, schema)).first;
    return it->second;
}

struct TrainTest {
    data::EncodedDataset train;
    data::EncodedDataset test;
};

TrainTest materialize(const ExperimentConfig& cfg, std::uint64_t seed) {
    TrainTest tt;
    if (cfg.dataset_kind == DatasetKind::Synthetic) {
        data::SyntheticSpec spec = data::biased_synthetic_spec(cfg.synthetic_n, 0);
        spec.seed = mix_seed(seed, kGen);
        const data::EncodedDataset all = data::synthesize(spec);
        const auto split =
            data::split_train_test(all.size(), cfg.test_fraction, mix_seed(seed, kSplit));
        tt.train = all.select(split.train);
        tt.test = all.select(split.test);
    } else {
        const data::RawTable& table = cached_table(cfg.csv_path, cfg.schema);
        const auto split = data::split_train_test(table.rows.size(), cfg.test_fraction,
                                                  mix_seed(seed, kSplit));
        data::RawTable train_raw, test_raw;
        train_raw.header = test_raw.header = table.header;
        for (std::size_t i : split.train) train_raw.rows.push_back(table.rows[i]);
        for (std::size_t i : split.test) test_raw.rows.push_back(table.rows[i]);
        data::EncodingMap map;  // fitted on training rows only
        tt.train = data::encode(train_raw, cfg.schema, map);
        tt.test = data::encode_with(test_raw, cfg.schema, map);
    }
    return tt;
}

double stddev(const std::vector<double>& v, double mean) {
    if (v.size() < 2) return 0.0;
    double sq = 0.0;
    for (double x : v) sq += (x - mean) * (x - mean);
    return std::sqrt(sq / double(v.size()));
}

}  // namespace

void ExperimentConfig::validate() const {
    if (seeds.empty()) throw std::invalid_argument("config: seeds must be nonempty");
    if (variants.empty()) throw std::invalid_argument("config: variants must be nonempty");
    if (epsilons.empty()) throw std::invalid_argument("config: epsilons must be nonempty");
    for (double e : epsilons)
        if (!(e > 0.0)) throw std::invalid_argument("config: epsilons must be positive");
    for (double r : clean_ratios)
        if (r <= 0.0 || r > 1.0)
            throw std::invalid_argument("config: clean ratios must be in (0,1]");
    if (dataset_kind == DatasetKind::Csv && csv_path.empty())
        throw std::invalid_argument("config: csv dataset needs a path");
    debias.validate();
}

std::string ReportRow::to_json() const {
    json j;
    j["variant"] = variant;
    j["epsilon"] = epsilon;
    j["clean_ratio"] = clean_ratio;
    j["seed"] = seed;
    j["accuracy"] = metrics.accuracy;
    j["f1"] = metrics.f1;
    j["delta_dp"] = metrics.delta_dp;
    j["delta_eo"] = metrics.delta_eo;
    j["group_counts"] = {{metrics.group_counts[0][0], metrics.group_counts[0][1]},
                         {metrics.group_counts[1][0], metrics.group_counts[1][1]}};
    if (c_hat) {
        j["c_hat"] = {{c_hat->c[0][0], c_hat->c[0][1]}, {c_hat->c[1][0], c_hat->c[1][1]}};
    } else {
        j["c_hat"] = nullptr;
    }
    if (corrector_recovery_accuracy)
        j["corrector_recovery_accuracy"] = *corrector_recovery_accuracy;
    else
        j["corrector_recovery_accuracy"] = nullptr;
    j["noise"] = {{"flip_prob", noise.flip_prob},
                  {"flipped_count", noise.flipped_count},
                  {"total", noise.total}};
    // wall time is deliberately left out: a row must be bit-identical when
    // regenerated from the same config tuple
    return j.dump();
}

ReportRow ReportRow::from_json(const std::string& line) {
    const json j = json::parse(line);
    ReportRow r;
    r.variant = j.at("variant").get<std::string>();
    r.epsilon = j.at("epsilon").get<double>();
    r.clean_ratio = j.at("clean_ratio").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.metrics.accuracy = j.at("accuracy").get<double>();
    r.metrics.f1 = j.at("f1").get<double>();
    r.metrics.delta_dp = j.at("delta_dp").get<double>();
    r.metrics.delta_eo = j.at("delta_eo").get<double>();
    for (int a = 0; a < 2; ++a)
        for (int y = 0; y < 2; ++y)
            r.metrics.group_counts[a][y] = j.at("group_counts")[a][y].get<std::size_t>();
    if (!j.at("c_hat").is_null()) {
        correction::CorruptionMatrix c;
        for (int m = 0; m < 2; ++m)
            for (int k = 0; k < 2; ++k) c.c[m][k] = j.at("c_hat")[m][k].get<double>();
        r.c_hat = c;
    }
    if (!j.at("corrector_recovery_accuracy").is_null())
        r.corrector_recovery_accuracy = j.at("corrector_recovery_accuracy").get<double>();
    r.noise.flip_prob = j.at("noise").at("flip_prob").get<double>();
    r.noise.flipped_count = j.at("noise").at("flipped_count").get<std::size_t>();
    r.noise.total = j.at("noise").at("total").get<std::size_t>();
    return r;
}

std::vector<AggregateRow> aggregate(const std::vector<ReportRow>& rows) {
    std::vector<AggregateRow> out;
    auto find = [&](const ReportRow& r) -> AggregateRow* {
        for (auto& a : out)
            if (a.variant == r.variant && a.epsilon == r.epsilon &&
                a.clean_ratio == r.clean_ratio)
                return &a;
        return nullptr;
    };
    // group rows in insertion order
    std::vector<std::vector<const ReportRow*>> groups;
    for (const auto& r : rows) {
        AggregateRow* a = find(r);
        if (!a) {
            AggregateRow fresh;
            fresh.variant = r.variant;
            fresh.epsilon = r.epsilon;
            fresh.clean_ratio = r.clean_ratio;
            out.push_back(fresh);
            groups.emplace_back();
            a = &out.back();
        }
        const std::size_t gi = std::size_t(a - out.data());
        groups[gi].push_back(&r);
    }
    for (std::size_t g = 0; g < out.size(); ++g) {
        std::vector<double> acc, f1, dp, eo;
        for (const ReportRow* r : groups[g]) {
            acc.push_back(r->metrics.accuracy);
            f1.push_back(r->metrics.f1);
            dp.push_back(r->metrics.delta_dp);
            eo.push_back(r->metrics.delta_eo);
        }
        auto mean = [](const std::vector<double>& v) {
            double s = 0.0;
            for (double x : v) s += x;
            return s / double(v.size());
        };
        AggregateRow& a = out[g];
        a.num_seeds = acc.size();
        a.acc_mean = mean(acc);
        a.acc_std = stddev(acc, a.acc_mean);
        a.f1_mean = mean(f1);
        a.f1_std = stddev(f1, a.f1_mean);
        a.dp_mean = mean(dp);
        a.dp_std = stddev(dp, a.dp_mean);
        a.eo_mean = mean(eo);
        a.eo_std = stddev(eo, a.eo_mean);
    }
    return out;
}

void ExperimentReport::write(const std::string& out_dir) const {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);

    std::ofstream rows_out(fs::path(out_dir) / "rows.jsonl");
    for (const auto& r : rows) rows_out << r.to_json() << "\n";

    std::ofstream agg_out(fs::path(out_dir) / "aggregate.csv");
    agg_out << "variant,epsilon,clean_ratio,num_seeds,acc_mean,acc_std,f1_mean,f1_std,"
               "dp_mean,dp_std,eo_mean,eo_std\n";
    agg_out.precision(10);
    for (const auto& a : aggregates)
        agg_out << a.variant << ',' << a.epsilon << ',' << a.clean_ratio << ','
                << a.num_seeds << ',' << a.acc_mean << ',' << a.acc_std << ',' << a.f1_mean
                << ',' << a.f1_std << ',' << a.dp_mean << ',' << a.dp_std << ',' << a.eo_mean
                << ',' << a.eo_std << "\n";

    // long format for epsilon / clean-ratio curves
    std::ofstream curves(fs::path(out_dir) / "curves.csv");
    curves << "variant,epsilon,clean_ratio,seed,metric,value\n";
    curves.precision(10);
    for (const auto& r : rows) {
        const std::pair<const char*, double> ms[4] = {{"accuracy", r.metrics.accuracy},
                                                      {"f1", r.metrics.f1},
                                                      {"delta_dp", r.metrics.delta_dp},
                                                      {"delta_eo", r.metrics.delta_eo}};
        for (const auto& [name, value] : ms)
            curves << r.variant << ',' << r.epsilon << ',' << r.clean_ratio << ',' << r.seed
                   << ',' << name << ',' << value << "\n";
    }

    if (!failures.empty()) {
        std::ofstream fail_out(fs::path(out_dir) / "failures.txt");
        for (const auto& f : failures) fail_out << f << "\n";
    }
}

ReportRow run_single(const ExperimentConfig& cfg, debias::TrainerVariant variant,
                     double epsilon, double clean_ratio, std::uint64_t seed) {
    cfg.validate();
    const auto t0 = std::chrono::steady_clock::now();

    TrainTest tt = materialize(cfg, seed);
    data::SemiPrivatePartition part =
        data::partition_semi_private(tt.train, clean_ratio, mix_seed(seed, kPart));

    privacy::PrivacyBudget budget{epsilon};
    auto [noised, noise_report] = privacy::randomize(part.priv.a, budget, mix_seed(seed, kNoise));
    part.priv.a = std::move(noised);

    debias::DebiasConfig dc = cfg.debias;
    dc.seed = mix_seed(seed, kTrain);

    ReportRow row;
    row.variant = debias::variant_name(variant);
    row.epsilon = epsilon;
    row.clean_ratio = clean_ratio;
    row.seed = seed;
    row.noise = noise_report;

    debias::FairSpModel model;
    nn::Matrix test_x = tt.test.X;

    try {
        switch (variant) {
            case debias::TrainerVariant::FairSp: {
                data::EncodedDataset corrected;
                if (part.priv.size() > 0) {
                    correction::TrainConfig cc;
                    cc.epochs = cfg.debias.epochs;
                    cc.batch_size = cfg.debias.batch_size;
                    cc.seed = mix_seed(seed, kCorr);
                    const auto res = correction::run_correction(part.clean, part.priv, cc);
                    corrected = res.corrected;
                    row.c_hat = res.c_hat;
                    row.corrector_recovery_accuracy = res.recovery_accuracy;
                }
                model = debias::train_fairsp(part.clean, corrected, dc);
                break;
            }
            case debias::TrainerVariant::Vanilla: {
                // the observed attribute becomes an input feature
                data::SemiPrivatePartition vp;
                vp.clean = part.clean;
                vp.clean.X = data::append_attribute_column(part.clean.X, part.clean.a);
                vp.priv = part.priv;
                vp.priv.X = data::append_attribute_column(part.priv.X, part.priv.a);
                vp.clean_ratio = part.clean_ratio;
                model = debias::train_baseline(variant, vp, dc);
                test_x = data::append_attribute_column(tt.test.X, tt.test.a);
                break;
            }
            default:
                model = debias::train_baseline(variant, part, dc);
        }
    } catch (const std::exception& e) {
        throw std::runtime_error("stage=train variant=" + row.variant + ": " + e.what());
    }

    try {
        const auto [probs, labels] = debias::predict(model, test_x);
        row.metrics = metrics::evaluate(labels, tt.test.y, tt.test.a_true);
    } catch (const std::exception& e) {
        throw std::runtime_error("stage=evaluate variant=" + row.variant + ": " + e.what());
    }

    row.runtime_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return row;
}

ExperimentReport run_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    struct Cell {
        debias::TrainerVariant variant;
        double epsilon;
        double ratio;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    for (auto v : cfg.variants)
        for (double e : cfg.epsilons)
            for (double r : cfg.clean_ratios)
                for (std::uint64_t s : cfg.seeds) cells.push_back({v, e, r, s});

    std::vector<std::optional<ReportRow>> results(cells.size());
    std::vector<std::string> failures(cells.size());
    std::atomic<std::size_t> next{0};

    const std::size_t workers = std::max<std::size_t>(1, cfg.workers);
    auto work = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            const Cell& c = cells[i];
            try {
                results[i] = run_single(cfg, c.variant, c.epsilon, c.ratio, c.seed);
            } catch (const std::exception& e) {
                std::ostringstream ss;
                ss << debias::variant_name(c.variant) << " eps=" << c.epsilon
                   << " ratio=" << c.ratio << " seed=" << c.seed << ": " << e.what();
                failures[i] = ss.str();
            }
        }
    };
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }

    ExperimentReport report;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (results[i])
            report.rows.push_back(std::move(*results[i]));
        else
            report.failures.push_back(failures[i]);
    }
    report.aggregates = aggregate(report.rows);
    return report;
}

ExperimentReport ablate_correction(const ExperimentConfig& cfg) {
    cfg.validate();
    const double epsilon = cfg.epsilons.front();
    const double ratio = cfg.clean_ratios.front();
    ExperimentReport report;
    for (std::uint64_t seed : cfg.seeds) {
        ReportRow with =
            run_single(cfg, debias::TrainerVariant::FairSp, epsilon, ratio, seed);
        with.variant = "fairsp_correction";
        report.rows.push_back(std::move(with));
        // without correction: the same two-head trainer on the raw noised attributes
        ReportRow without =
            run_single(cfg, debias::TrainerVariant::CleanPlusPrivate, epsilon, ratio, seed);
        without.variant = "fairsp_no_correction";
        report.rows.push_back(std::move(without));
    }
    report.aggregates = aggregate(report.rows);
    return report;
}

ExperimentReport sensitivity_sweep(const ExperimentConfig& cfg) {
    cfg.validate();
    const double epsilon = cfg.epsilons.front();
    const double ratio = cfg.clean_ratios.front();
    const double grid[] = {0.6, 0.7, 0.8, 0.9, 1.0};
    ExperimentReport report;
    for (double alpha : grid) {
        for (double beta : grid) {
            ExperimentConfig c = cfg;
            c.debias.alpha = alpha;
            c.debias.beta = beta;
            for (std::uint64_t seed : cfg.seeds) {
                ReportRow row =
                    run_single(c, debias::TrainerVariant::FairSp, epsilon, ratio, seed);
                std::ostringstream name;
                name << "fairsp_a" << alpha << "_b" << beta;
                row.variant = name.str();
                report.rows.push_back(std::move(row));
            }
        }
    }
    report.aggregates = aggregate(report.rows);
    return report;
}

ExperimentReport load_report(const std::string& rows_path) {
    std::ifstream in(rows_path);
    if (!in) throw std::runtime_error("load_report: cannot open " + rows_path);
    ExperimentReport report;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        report.rows.push_back(ReportRow::from_json(line));
    }
    report.aggregates = aggregate(report.rows);

    // cross-check a stored aggregate file when present
    const auto agg_path = std::filesystem::path(rows_path).parent_path() / "aggregate.csv";
    if (std::filesystem::exists(agg_path)) {
        std::ifstream agg(agg_path);
        std::string header;
        std::getline(agg, header);
        std::size_t i = 0;
        while (std::getline(agg, line)) {
            if (line.empty()) continue;
            if (i >= report.aggregates.size())
                throw std::runtime_error("load_report: aggregate row count mismatch");
            std::istringstream ss(line);
            std::string cell;
            std::vector<std::string> cells;
            while (std::getline(ss, cell, ',')) cells.push_back(cell);
            const AggregateRow& a = report.aggregates[i];
            const double stored[4] = {std::stod(cells[4]), std::stod(cells[6]),
                                      std::stod(cells[8]), std::stod(cells[10])};
            const double fresh[4] = {a.acc_mean, a.f1_mean, a.dp_mean, a.eo_mean};
            for (int k = 0; k < 4; ++k)
                if (std::abs(stored[k] - fresh[k]) > 1e-8)
                    throw std::runtime_error(
                        "load_report: stored aggregate disagrees with per-seed rows");
            ++i;
        }
    }
    return report;
}

ExperimentConfig config_from_table(const config::Table& t) {
    ExperimentConfig cfg;
    const std::string kind = t.get_string("dataset", "kind", "synthetic");
    if (kind == "csv")
        cfg.dataset_kind = DatasetKind::Csv;
    else if (kind == "synthetic")
        cfg.dataset_kind = DatasetKind::Synthetic;
    else
        throw std::runtime_error("config: dataset kind must be csv or synthetic");
    cfg.csv_path = t.get_string("dataset", "path", "");
    cfg.synthetic_n = std::size_t(t.get_int("dataset", "synthetic_n", 4000));
    cfg.test_fraction = t.get_double("dataset", "test_fraction", 0.5);

    if (t.has("schema", "label")) {
        cfg.schema.label_column = t.get("schema", "label").as_string();
        cfg.schema.label_positive = t.get_string("schema", "label_positive", "1");
        cfg.schema.sensitive_column = t.get_string("schema", "sensitive", "");
        cfg.schema.sensitive_protected = t.get_string("schema", "sensitive_protected", "1");
        if (t.has("schema", "numeric"))
            for (const auto& name : t.get("schema", "numeric").as_string_array())
                cfg.schema.columns.push_back({name, data::ColumnKind::Numeric});
        if (t.has("schema", "categorical"))
            for (const auto& name : t.get("schema", "categorical").as_string_array())
                cfg.schema.columns.push_back({name, data::ColumnKind::Categorical});
    }

    if (t.has("experiment", "variants")) {
        cfg.variants.clear();
        for (const auto& v : t.get("experiment", "variants").as_string_array())
            cfg.variants.push_back(debias::variant_from_name(v));
    }
    if (t.has("experiment", "epsilons"))
        cfg.epsilons = t.get("experiment", "epsilons").as_double_array();
    if (t.has("experiment", "clean_ratios"))
        cfg.clean_ratios = t.get("experiment", "clean_ratios").as_double_array();
    if (t.has("experiment", "seeds")) {
        cfg.seeds.clear();
        for (long long s : t.get("experiment", "seeds").as_int_array())
            cfg.seeds.push_back(std::uint64_t(s));
    }
    cfg.workers = std::size_t(t.get_int("experiment", "workers", 1));

    const char* env_out = std::getenv("FAIRSP_OUT");
    cfg.out_dir =
        t.get_string("experiment", "out", env_out ? std::string(env_out) : "results");

    cfg.debias.alpha = t.get_double("debias", "alpha", 1.0);
    cfg.debias.beta = t.get_double("debias", "beta", 1.0);
    cfg.debias.epochs = std::size_t(t.get_int("debias", "epochs", 50));
    cfg.debias.batch_size = std::size_t(t.get_int("debias", "batch_size", 128));
    cfg.debias.adversary_steps_per_batch =
        std::size_t(t.get_int("debias", "adversary_steps_per_batch", 1));
    cfg.debias.embed_dim = std::size_t(t.get_int("debias", "embed_dim", 64));
    return cfg;
}

std::string prepare_dataset(const ExperimentConfig& cfg, const std::string& cache_dir) {
    if (cfg.dataset_kind != DatasetKind::Csv)
        throw std::runtime_error("prepare: only csv datasets are cached");
    namespace fs = std::filesystem;
    fs::create_directories(cache_dir);

    // content hash (FNV-1a) keys the cache
    std::ifstream in(cfg.csv_path, std::ios::binary);
    if (!in) throw std::runtime_error("prepare: cannot open " + cfg.csv_path);
    std::uint64_t hash = 0xcbf29ce484222325ull;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        for (std::streamsize i = 0; i < in.gcount(); ++i) {
            hash ^= std::uint8_t(buf[i]);
            hash *= 0x100000001b3ull;
        }
    }
    std::ostringstream key;
    key << std::hex << hash;

    const fs::path cache_file = fs::path(cache_dir) / (key.str() + ".json");
    const data::RawTable table = data::load_csv(cfg.csv_path, cfg.schema);
    data::EncodingMap map;
    (void)data::encode(table, cfg.schema, map);

    json j;
    j["source"] = cfg.csv_path;
    j["content_hash"] = key.str();
    j["rows"] = table.rows.size();
    j["dropped_rows"] = table.dropped_rows;
    std::ofstream out(cache_file);
    out << j.dump(2) << "\n";

    std::ofstream map_out(fs::path(cache_dir) / (key.str() + ".encoding.json"));
    map_out << map.to_json() << "\n";
    return cache_file.string();
}

}  // namespace fairsp::experiment
