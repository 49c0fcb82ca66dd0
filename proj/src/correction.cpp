#include "fairsp/correction.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace fairsp::correction {

namespace {

nn::MlpSpec softmax_spec(std::size_t input_width, const std::vector<std::size_t>& hidden) {
    nn::MlpSpec spec;
    spec.layer_sizes.push_back(input_width);
    for (std::size_t h : hidden) spec.layer_sizes.push_back(h);
    spec.layer_sizes.push_back(2);
    spec.hidden_activation = nn::Activation::Relu;
    spec.output = nn::Output::Softmax;
    return spec;
}

nn::Matrix select_rows(const nn::Matrix& x, const std::vector<std::size_t>& idx,
                       std::size_t begin, std::size_t end) {
    nn::Matrix out(end - begin, x.cols);
    for (std::size_t r = begin; r < end; ++r)
        std::copy(x.row(idx[r]), x.row(idx[r]) + x.cols, out.row(r - begin));
    return out;
}

}  // namespace

CorruptionMatrix CorruptionMatrix::identity() {
    CorruptionMatrix m;
    m.c[0][0] = m.c[1][1] = 1.0;
    return m;
}

void CorruptionMatrix::validate() const {
    for (int r = 0; r < 2; ++r) {
        for (int k = 0; k < 2; ++k)
            if (c[r][k] < 0.0 || c[r][k] > 1.0)
                throw std::runtime_error("CorruptionMatrix: entry out of [0,1]");
        if (std::abs(c[r][0] + c[r][1] - 1.0) > 1e-9)
            throw std::runtime_error("CorruptionMatrix: row does not sum to 1");
    }
}

nn::Mlp train_softmax_classifier(const nn::Matrix& x, const std::vector<int>& labels,
                                 const TrainConfig& cfg) {
    if (x.rows == 0) throw std::invalid_argument("train: empty dataset");
    nn::Mlp model = nn::Mlp::create(softmax_spec(x.cols, cfg.hidden), cfg.seed, cfg.rho,
                                    cfg.eps_num);
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    std::vector<std::size_t> idx(x.rows);
    std::iota(idx.begin(), idx.end(), 0);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(idx.begin(), idx.end(), rng);
        for (std::size_t start = 0; start < idx.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(idx.size(), start + cfg.batch_size);
            nn::Matrix xb = select_rows(x, idx, start, end);
            std::vector<int> yb;
            for (std::size_t r = start; r < end; ++r) yb.push_back(labels[idx[r]]);

            nn::ForwardCache cache;
            const nn::Matrix out = nn::forward(model.params, model.spec, xb, &cache);
            const nn::Matrix og = nn::cross_entropy_grad(out, yb);
            const nn::GradSet grads = nn::backward(model.params, model.spec, cache, og);
            nn::adadelta_step(model.params, grads, model.opt);
        }
    }
    return model;
}

nn::Mlp train_noisy_attr_predictor(const data::EncodedDataset& priv, const TrainConfig& cfg) {
    if (priv.size() == 0)
        throw std::invalid_argument("train_noisy_attr_predictor: empty private set");
    const bool has0 = std::find(priv.a.begin(), priv.a.end(), 0) != priv.a.end();
    const bool has1 = std::find(priv.a.begin(), priv.a.end(), 1) != priv.a.end();
    if (!has0 || !has1)
        throw std::invalid_argument(
            "train_noisy_attr_predictor: single-class private attributes");
    return train_softmax_classifier(priv.X, priv.a, cfg);
}

CorruptionMatrix estimate_corruption_matrix(const PosteriorFn& posterior,
                                            const data::EncodedDataset& clean) {
    if (clean.size() == 0)
        throw std::invalid_argument("estimate_corruption_matrix: empty clean set");
    double sum[2][2] = {{0, 0}, {0, 0}};
    std::size_t count[2] = {0, 0};
    for (std::size_t i = 0; i < clean.size(); ++i) {
        const int m = clean.a[i];
        const auto p = posterior(clean.X.row(i), clean.X.cols);
        sum[m][0] += p[0];
        sum[m][1] += p[1];
        ++count[m];
    }
    for (int m = 0; m < 2; ++m)
        if (count[m] == 0)
            throw std::runtime_error("estimate_corruption_matrix: no clean samples with A=" +
                                     std::to_string(m));
    CorruptionMatrix c_hat;
    for (int m = 0; m < 2; ++m)
        for (int r = 0; r < 2; ++r) c_hat.c[m][r] = sum[m][r] / double(count[m]);
    c_hat.validate();
    return c_hat;
}

CorruptionMatrix estimate_corruption_matrix(const nn::Mlp& g,
                                            const data::EncodedDataset& clean) {
    // Average the batched softmax output directly instead of per-row calls.
    const nn::Matrix probs = g(clean.X);
    double sum[2][2] = {{0, 0}, {0, 0}};
    std::size_t count[2] = {0, 0};
    for (std::size_t i = 0; i < clean.size(); ++i) {
        const int m = clean.a[i];
        sum[m][0] += probs(i, 0);
        sum[m][1] += probs(i, 1);
        ++count[m];
    }
    for (int m = 0; m < 2; ++m)
        if (count[m] == 0)
            throw std::runtime_error("estimate_corruption_matrix: no clean samples with A=" +
                                     std::to_string(m));
    CorruptionMatrix c_hat;
    for (int m = 0; m < 2; ++m)
        for (int r = 0; r < 2; ++r) c_hat.c[m][r] = sum[m][r] / double(count[m]);
    c_hat.validate();
    return c_hat;
}

nn::Mlp train_corrector(const data::EncodedDataset& clean, const data::EncodedDataset& priv,
                        const CorruptionMatrix& c_hat, const TrainConfig& cfg) {
    c_hat.validate();
    // identical rows make the forward correction non-invertible: the noised
    // attribute then carries no information about the clean one
    if (std::abs(c_hat.c[0][0] - c_hat.c[1][0]) < 1e-9)
        throw std::invalid_argument("train_corrector: degenerate corruption matrix rows");
    if (clean.size() == 0) throw std::invalid_argument("train_corrector: empty clean set");

    nn::Mlp model = nn::Mlp::create(softmax_spec(clean.X.cols, cfg.hidden), cfg.seed,
                                    cfg.rho, cfg.eps_num);
    std::mt19937_64 rng(cfg.seed ^ 0xda3e39cb94b95bdbull);
    std::vector<std::size_t> ci(clean.size()), pi(priv.size());
    std::iota(ci.begin(), ci.end(), 0);
    std::iota(pi.begin(), pi.end(), 0);

    const std::size_t total = clean.size() + priv.size();
    const std::size_t num_batches =
        std::max<std::size_t>(1, (total + cfg.batch_size - 1) / cfg.batch_size);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(ci.begin(), ci.end(), rng);
        std::shuffle(pi.begin(), pi.end(), rng);
        for (std::size_t b = 0; b < num_batches; ++b) {
            const std::size_t c0 = b * clean.size() / num_batches;
            const std::size_t c1 = (b + 1) * clean.size() / num_batches;
            const std::size_t p0 = b * priv.size() / num_batches;
            const std::size_t p1 = (b + 1) * priv.size() / num_batches;

            nn::GradSet grads;
            bool have = false;

            if (c1 > c0) {
                nn::Matrix xb = select_rows(clean.X, ci, c0, c1);
                std::vector<int> ab;
                for (std::size_t r = c0; r < c1; ++r) ab.push_back(clean.a[ci[r]]);
                nn::ForwardCache cache;
                const nn::Matrix out = nn::forward(model.params, model.spec, xb, &cache);
                const nn::Matrix og = nn::cross_entropy_grad(out, ab);
                grads = nn::backward(model.params, model.spec, cache, og);
                have = true;
            }

            if (p1 > p0) {
                nn::Matrix xb = select_rows(priv.X, pi, p0, p1);
                std::vector<int> ab;
                for (std::size_t r = p0; r < p1; ++r) ab.push_back(priv.a[pi[r]]);
                nn::ForwardCache cache;
                const nn::Matrix q = nn::forward(model.params, model.spec, xb, &cache);

                // Forward-corrected probabilities p = C^T q, renormalized
                // before the log against float drift.
                const std::size_t nb = q.rows;
                nn::Matrix og(nb, 2, 0.0);
                const double w = 1.0 / double(nb);
                for (std::size_t i = 0; i < nb; ++i) {
                    double p[2];
                    for (int r = 0; r < 2; ++r)
                        p[r] = c_hat.c[0][r] * q(i, 0) + c_hat.c[1][r] * q(i, 1);
                    double s = p[0] + p[1];
                    if (s < 1e-12) s = 1e-12;
                    const int t = ab[i];
                    const double pt = std::max(1e-12, p[t] / s);
                    // d(-log(p_t / s))/dq_m = -(C_mt / p_t - (C_m0 + C_m1) / s)
                    for (int m = 0; m < 2; ++m) {
                        const double row_sum = c_hat.c[m][0] + c_hat.c[m][1];
                        og(i, std::size_t(m)) =
                            -w * (c_hat.c[m][t] / (pt * s) - row_sum / s);
                    }
                }
                const nn::GradSet pg = nn::backward(model.params, model.spec, cache, og);
                if (have)
                    nn::accumulate(grads, pg);
                else {
                    grads = pg;
                    have = true;
                }
            }

            if (have) nn::adadelta_step(model.params, grads, model.opt);
        }
    }
    return model;
}

std::vector<int> correct_attributes(const nn::Mlp& g_prime, const nn::Matrix& x) {
    const nn::Matrix probs = g_prime(x);
    std::vector<int> out;
    out.reserve(x.rows);
    for (std::size_t i = 0; i < probs.rows; ++i)
        out.push_back(probs(i, 1) > probs(i, 0) ? 1 : 0);  // tie -> 0
    return out;
}

data::EncodedDataset apply_correction(const nn::Mlp& g_prime,
                                      const data::EncodedDataset& priv) {
    data::EncodedDataset out = priv;
    out.a = correct_attributes(g_prime, priv.X);
    return out;
}

CorrectionResult run_correction(const data::EncodedDataset& clean,
                                const data::EncodedDataset& priv, const TrainConfig& cfg) {
    CorrectionResult res;
    res.g = train_noisy_attr_predictor(priv, cfg);
    res.c_hat = estimate_corruption_matrix(res.g, clean);
    TrainConfig gp_cfg = cfg;
    gp_cfg.seed = cfg.seed ^ 0xc2b2ae3d27d4eb4full;  // fresh initialization for g'
    res.g_prime = train_corrector(clean, priv, res.c_hat, gp_cfg);
    res.corrected = apply_correction(res.g_prime, priv);

    std::size_t hits = 0;
    for (std::size_t i = 0; i < res.corrected.size(); ++i)
        if (res.corrected.a[i] == res.corrected.a_true[i]) ++hits;
    res.recovery_accuracy =
        res.corrected.size() ? double(hits) / double(res.corrected.size()) : 0.0;
    return res;
}

}  // namespace fairsp::correction
