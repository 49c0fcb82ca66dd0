#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fairsp/correction.hpp"
#include "fairsp/data.hpp"
#include "fairsp/debias.hpp"
#include "fairsp/experiment.hpp"
#include "fairsp/metrics.hpp"
#include "fairsp/privacy.hpp"

namespace py = pybind11;
using namespace fairsp;

namespace {

nn::Matrix to_matrix(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) return {};
    nn::Matrix m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != m.cols)
            throw std::invalid_argument("ragged feature matrix");
        for (std::size_t c = 0; c < m.cols; ++c) m(r, c) = rows[r][c];
    }
    return m;
}

std::vector<std::vector<double>> from_matrix(const nn::Matrix& m) {
    std::vector<std::vector<double>> rows(m.rows);
    for (std::size_t r = 0; r < m.rows; ++r)
        rows[r].assign(m.row(r), m.row(r) + m.cols);
    return rows;
}

data::EncodedDataset make_dataset(const std::vector<std::vector<double>>& x,
                                  const std::vector<int>& y, const std::vector<int>& a,
                                  const std::vector<int>& a_true) {
    data::EncodedDataset ds;
    ds.X = to_matrix(x);
    ds.y = y;
    ds.a = a;
    ds.a_true = a_true.empty() ? a : a_true;
    ds.validate();
    return ds;
}

py::dict report_dict(const metrics::FairnessReport& r) {
    py::dict d;
    d["accuracy"] = r.accuracy;
    d["f1"] = r.f1;
    d["delta_dp"] = r.delta_dp;
    d["delta_eo"] = r.delta_eo;
    return d;
}

}  // namespace

PYBIND11_MODULE(_fairsp, m) {
    m.doc() = "Fair classification with semi-private sensitive attributes";

    // randomized response
    m.def("flip_prob", [](double eps) { return privacy::flip_prob({eps}); }, py::arg("epsilon"));
    m.def("verify_ldp_ratio",
          [](double eps) { return privacy::verify_ldp_ratio({eps}); }, py::arg("epsilon"));
    m.def(
        "randomize",
        [](const std::vector<int>& a, double eps, std::uint64_t seed) {
            const auto [noised, rep] = privacy::randomize(a, {eps}, seed);
            py::dict d;
            d["flip_prob"] = rep.flip_prob;
            d["flipped_count"] = rep.flipped_count;
            d["total"] = rep.total;
            return py::make_tuple(noised, d);
        },
        py::arg("a"), py::arg("epsilon"), py::arg("seed"));

    // metrics
    m.def(
        "evaluate",
        [](const std::vector<int>& y_hat, const std::vector<int>& y,
           const std::vector<int>& a) { return report_dict(metrics::evaluate(y_hat, y, a)); },
        py::arg("y_hat"), py::arg("y"), py::arg("a"));

    // datasets
    py::class_<data::EncodedDataset>(m, "Dataset")
        .def(py::init(&make_dataset), py::arg("x"), py::arg("y"), py::arg("a"),
             py::arg("a_true") = std::vector<int>{})
        .def_property_readonly("x",
                               [](const data::EncodedDataset& d) { return from_matrix(d.X); })
        .def_readonly("y", &data::EncodedDataset::y)
        .def_readonly("a", &data::EncodedDataset::a)
        .def_readonly("a_true", &data::EncodedDataset::a_true)
        .def("__len__", &data::EncodedDataset::size);

    m.def(
        "synthesize_biased",
        [](std::size_t n, std::uint64_t seed) {
            return data::synthesize(data::biased_synthetic_spec(n, seed));
        },
        py::arg("n"), py::arg("seed"));
    m.def(
        "partition",
        [](const data::EncodedDataset& ds, double clean_ratio, std::uint64_t seed) {
            auto part = data::partition_semi_private(ds, clean_ratio, seed);
            return py::make_tuple(part.clean, part.priv);
        },
        py::arg("dataset"), py::arg("clean_ratio"), py::arg("seed"));

    // attribute correction
    m.def(
        "run_correction",
        [](const data::EncodedDataset& clean, const data::EncodedDataset& priv,
           std::size_t epochs, std::uint64_t seed) {
            correction::TrainConfig cfg;
            cfg.epochs = epochs;
            cfg.seed = seed;
            const auto res = correction::run_correction(clean, priv, cfg);
            py::dict d;
            d["corrected"] = res.corrected;
            d["c_hat"] = std::vector<std::vector<double>>{
                {res.c_hat.c[0][0], res.c_hat.c[0][1]},
                {res.c_hat.c[1][0], res.c_hat.c[1][1]}};
            d["recovery_accuracy"] = res.recovery_accuracy;
            return d;
        },
        py::arg("clean"), py::arg("priv"), py::arg("epochs") = 50, py::arg("seed") = 0);

    // debiased training
    py::class_<debias::FairSpModel>(m, "Model")
        .def("predict",
             [](const debias::FairSpModel& model, const std::vector<std::vector<double>>& x) {
                 const auto [probs, labels] = debias::predict(model, to_matrix(x));
                 return py::make_tuple(probs, labels);
             })
        .def("embed", [](const debias::FairSpModel& model,
                         const std::vector<std::vector<double>>& x) {
            return from_matrix(debias::embed(model, to_matrix(x)));
        });

    m.def(
        "train",
        [](const data::EncodedDataset& clean, const data::EncodedDataset& corrected,
           double alpha, double beta, std::size_t epochs, std::uint64_t seed) {
            debias::DebiasConfig cfg;
            cfg.alpha = alpha;
            cfg.beta = beta;
            cfg.epochs = epochs;
            cfg.seed = seed;
            return debias::train_fairsp(clean, corrected, cfg);
        },
        py::arg("clean"), py::arg("corrected"), py::arg("alpha") = 1.0, py::arg("beta") = 1.0,
        py::arg("epochs") = 50, py::arg("seed") = 0);

    // one experiment cell on the synthetic benchmark, returned as a JSON row
    m.def(
        "run_single",
        [](const std::string& variant, double epsilon, double clean_ratio, std::uint64_t seed,
           std::size_t n, std::size_t epochs) {
            experiment::ExperimentConfig cfg;
            cfg.synthetic_n = n;
            cfg.debias.epochs = epochs;
            const auto row = experiment::run_single(cfg, debias::variant_from_name(variant),
                                                    epsilon, clean_ratio, seed);
            return row.to_json();
        },
        py::arg("variant"), py::arg("epsilon"), py::arg("clean_ratio"), py::arg("seed"),
        py::arg("n") = 2000, py::arg("epochs") = 10);
}
