#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fairsp/experiment.hpp"

namespace {

using namespace fairsp;

struct CommonOpts {
    std::string config_path;
    std::string dataset;
    std::string schema_path;
    std::string variant = "fairsp";
    std::vector<std::string> variants;
    std::vector<double> epsilons;
    std::vector<double> clean_ratios;
    std::vector<std::uint64_t> seeds;
    std::optional<double> alpha, beta;
    std::optional<std::size_t> epochs;
    std::string out;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--config", o.config_path, "experiment config file (key = value)");
    cmd->add_option("--dataset", o.dataset, "CSV path (overrides config)");
    cmd->add_option("--schema", o.schema_path, "schema config file (overrides config)");
    cmd->add_option("--epsilon", o.epsilons, "privacy budgets");
    cmd->add_option("--clean-ratio", o.clean_ratios, "clean ratios");
    cmd->add_option("--seed,--seeds", o.seeds, "random seeds");
    cmd->add_option("--alpha", o.alpha, "private-adversary weight");
    cmd->add_option("--beta", o.beta, "adversarial term weight");
    cmd->add_option("--epochs", o.epochs, "training epochs");
    cmd->add_option("--out", o.out, "output directory");
}

experiment::ExperimentConfig build_config(const CommonOpts& o) {
    config::Table table;
    if (!o.config_path.empty()) table = config::parse_file(o.config_path);
    if (!o.schema_path.empty()) {
        // a separate schema file is merged under the same section names
        const config::Table schema = config::parse_file(o.schema_path);
        for (const char* key : {"label", "label_positive", "sensitive",
                                "sensitive_protected", "numeric", "categorical"})
            if (schema.has("schema", key)) table.set("schema", key, schema.get("schema", key));
    }
    experiment::ExperimentConfig cfg = experiment::config_from_table(table);
    if (!o.dataset.empty()) {
        cfg.dataset_kind = experiment::DatasetKind::Csv;
        cfg.csv_path = o.dataset;
    }
    if (!o.variants.empty()) {
        cfg.variants.clear();
        for (const auto& v : o.variants) cfg.variants.push_back(debias::variant_from_name(v));
    }
    if (!o.epsilons.empty()) cfg.epsilons = o.epsilons;
    if (!o.clean_ratios.empty()) cfg.clean_ratios = o.clean_ratios;
    if (!o.seeds.empty()) cfg.seeds = o.seeds;
    if (o.alpha) cfg.debias.alpha = *o.alpha;
    if (o.beta) cfg.debias.beta = *o.beta;
    if (o.epochs) cfg.debias.epochs = *o.epochs;
    if (!o.out.empty()) cfg.out_dir = o.out;
    return cfg;
}

void print_aggregates(const experiment::ExperimentReport& report) {
    std::printf("%-28s %8s %8s %10s %10s %10s %10s\n", "variant", "eps", "ratio", "acc",
                "f1", "d_dp", "d_eo");
    for (const auto& a : report.aggregates)
        std::printf("%-28s %8.3g %8.3g %6.2f±%.2f %6.2f±%.2f %6.2f±%.2f %6.2f±%.2f\n",
                    a.variant.c_str(), a.epsilon, a.clean_ratio, 100 * a.acc_mean,
                    100 * a.acc_std, 100 * a.f1_mean, 100 * a.f1_std, 100 * a.dp_mean,
                    100 * a.dp_std, 100 * a.eo_mean, 100 * a.eo_std);
    for (const auto& f : report.failures) std::cerr << "failed: " << f << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"FairSP: fair classification with semi-private sensitive attributes"};
    app.require_subcommand(1);

    CommonOpts o;

    auto* prepare = app.add_subcommand("prepare", "parse, clean and cache a CSV dataset");
    add_common(prepare, o);
    std::string cache_dir = "cache";
    prepare->add_option("--cache-dir", cache_dir, "dataset cache directory");

    auto* run = app.add_subcommand("run", "run a single (variant, eps, ratio, seed) cell");
    add_common(run, o);
    run->add_option("--variant", o.variant, "trainer variant");

    auto* sweep = app.add_subcommand("sweep", "run the full variant x eps x ratio x seed grid");
    add_common(sweep, o);
    sweep->add_option("--variant", o.variants, "trainer variants");

    auto* ablate = app.add_subcommand("ablate", "fairsp with vs without correction");
    add_common(ablate, o);

    auto* sensitivity = app.add_subcommand("sensitivity", "alpha/beta sensitivity grid");
    add_common(sensitivity, o);

    auto* report_cmd = app.add_subcommand("report", "re-aggregate a rows.jsonl file");
    std::string rows_path;
    report_cmd->add_option("rows", rows_path, "path to rows.jsonl")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (prepare->parsed()) {
            const auto cfg = build_config(o);
            std::cout << experiment::prepare_dataset(cfg, cache_dir) << "\n";
        } else if (run->parsed()) {
            const auto cfg = build_config(o);
            const auto row = experiment::run_single(
                cfg, debias::variant_from_name(o.variant), cfg.epsilons.front(),
                cfg.clean_ratios.front(), cfg.seeds.front());
            std::cout << row.to_json() << "\n";
        } else if (sweep->parsed()) {
            const auto cfg = build_config(o);
            const auto report = experiment::run_sweep(cfg);
            report.write(cfg.out_dir);
            print_aggregates(report);
        } else if (ablate->parsed()) {
            const auto cfg = build_config(o);
            const auto report = experiment::ablate_correction(cfg);
            report.write(cfg.out_dir);
            print_aggregates(report);
        } else if (sensitivity->parsed()) {
            const auto cfg = build_config(o);
            const auto report = experiment::sensitivity_sweep(cfg);
            report.write(cfg.out_dir);
            print_aggregates(report);
        } else if (report_cmd->parsed()) {
            const auto report = experiment::load_report(rows_path);
            print_aggregates(report);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
