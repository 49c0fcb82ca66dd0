#include "fairsp/debias.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace fairsp::debias {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 over seed + stream
    std::uint64_t z = seed + stream * 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

nn::MlpSpec encoder_spec(std::size_t input_width, const DebiasConfig& cfg) {
    nn::MlpSpec spec;
    spec.layer_sizes = {input_width, cfg.embed_dim};
    spec.hidden_activation = cfg.activation;
    spec.output = nn::Output::Embedding;
    return spec;
}

nn::MlpSpec head_spec(const DebiasConfig& cfg) {
    nn::MlpSpec spec;
    spec.layer_sizes.push_back(cfg.embed_dim);
    for (std::size_t h : cfg.head_hidden) spec.layer_sizes.push_back(h);
    spec.layer_sizes.push_back(1);
    spec.hidden_activation = cfg.activation;
    spec.output = nn::Output::SigmoidBinary;
    return spec;
}

nn::Matrix select_rows(const nn::Matrix& x, const std::vector<std::size_t>& idx,
                       std::size_t begin, std::size_t end) {
    nn::Matrix out(end - begin, x.cols);
    for (std::size_t r = begin; r < end; ++r)
        std::copy(x.row(idx[r]), x.row(idx[r]) + x.cols, out.row(r - begin));
    return out;
}

nn::Matrix slice_rows(const nn::Matrix& x, std::size_t begin, std::size_t end) {
    nn::Matrix out(end - begin, x.cols);
    for (std::size_t r = begin; r < end; ++r)
        std::copy(x.row(r), x.row(r) + x.cols, out.row(r - begin));
    return out;
}

// Weights realizing per-group means: w_i = 1 / count(group of i). Groups
// missing from the batch simply contribute nothing.
std::vector<double> group_balanced_weights(const std::vector<int>& groups) {
    std::size_t n[2] = {0, 0};
    for (int g : groups) ++n[g];
    std::vector<double> w;
    w.reserve(groups.size());
    for (int g : groups) w.push_back(1.0 / double(n[g]));
    return w;
}

double clamped_log(double p) { return std::log(std::min(1.0 - 1e-12, std::max(1e-12, p))); }

// E[log f | g=1] + E[log(1 - f) | g=0] with empirical group means.
double gan_objective(const nn::Matrix& probs, const std::vector<int>& groups) {
    double sum[2] = {0.0, 0.0};
    std::size_t n[2] = {0, 0};
    for (std::size_t i = 0; i < groups.size(); ++i) {
        const double f = probs(i, 0);
        if (groups[i] == 1)
            sum[1] += clamped_log(f);
        else
            sum[0] += clamped_log(1.0 - f);
        ++n[groups[i]];
    }
    double r = 0.0;
    if (n[1]) r += sum[1] / double(n[1]);
    if (n[0]) r += sum[0] / double(n[0]);
    return r;
}

struct Pool {
    const data::EncodedDataset* ds = nullptr;
    bool adversary = false;  // whether an adversary head trains on this pool

    std::size_t size() const { return ds ? ds->size() : 0; }
};

// One adversary inner update on a batch of embeddings.
void adversary_update(nn::Mlp& head, const nn::Matrix& emb, const std::vector<int>& targets) {
    if (targets.empty()) return;
    const std::vector<double> w = group_balanced_weights(targets);
    nn::ForwardCache cache;
    const nn::Matrix out = nn::forward(head.params, head.spec, emb, &cache);
    const nn::Matrix og = nn::cross_entropy_grad_weighted(out, targets, w);
    const nn::GradSet grads = nn::backward(head.params, head.spec, cache, og);
    nn::adadelta_step(head.params, grads, head.opt);
}

// Adversary loss gradient w.r.t. the embedding rows, for the reversed path
// into the encoder. Head parameters are left untouched.
nn::Matrix adversary_embedding_grad(const nn::Mlp& head, const nn::Matrix& emb,
                                    const std::vector<int>& targets) {
    const std::vector<double> w = group_balanced_weights(targets);
    nn::ForwardCache cache;
    const nn::Matrix out = nn::forward(head.params, head.spec, emb, &cache);
    const nn::Matrix og = nn::cross_entropy_grad_weighted(out, targets, w);
    nn::Matrix demb;
    (void)nn::backward(head.params, head.spec, cache, og, &demb);
    return demb;
}

FairSpModel train_core(const Pool& clean_pool, const Pool& priv_pool,
                       std::size_t input_width, const DebiasConfig& cfg, TrainTrace* trace) {
    cfg.validate();
    const std::size_t nc = clean_pool.size();
    const std::size_t np = priv_pool.size();
    if (nc + np == 0) throw std::invalid_argument("train: no training data");

    FairSpModel model;
    model.config = cfg;
    model.encoder = nn::Mlp::create(encoder_spec(input_width, cfg), mix_seed(cfg.seed, 1),
                                    cfg.rho, cfg.eps_num);
    model.label_head =
        nn::Mlp::create(head_spec(cfg), mix_seed(cfg.seed, 2), cfg.rho, cfg.eps_num);
    model.clean_adv =
        nn::Mlp::create(head_spec(cfg), mix_seed(cfg.seed, 3), cfg.rho, cfg.eps_num);
    model.private_adv =
        nn::Mlp::create(head_spec(cfg), mix_seed(cfg.seed, 4), cfg.rho, cfg.eps_num);

    std::mt19937_64 shuffle_rng(mix_seed(cfg.seed, 5));
    std::vector<std::size_t> ci(nc), pi(np);
    std::iota(ci.begin(), ci.end(), 0);
    std::iota(pi.begin(), pi.end(), 0);

    const std::size_t total = nc + np;
    const std::size_t num_batches =
        std::max<std::size_t>(1, (total + cfg.batch_size - 1) / cfg.batch_size);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(ci.begin(), ci.end(), shuffle_rng);
        std::shuffle(pi.begin(), pi.end(), shuffle_rng);

        for (std::size_t b = 0; b < num_batches; ++b) {
            // proportional stratified slices
            const std::size_t c0 = b * nc / num_batches, c1 = (b + 1) * nc / num_batches;
            const std::size_t p0 = b * np / num_batches, p1 = (b + 1) * np / num_batches;
            const std::size_t bc = c1 - c0, bp = p1 - p0;
            if (bc + bp == 0) continue;

            nn::Matrix xb(bc + bp, input_width);
            std::vector<int> yb(bc + bp);
            std::vector<int> ac(bc), ap(bp);
            for (std::size_t r = 0; r < bc; ++r) {
                const std::size_t s = ci[c0 + r];
                std::copy(clean_pool.ds->X.row(s), clean_pool.ds->X.row(s) + input_width,
                          xb.row(r));
                yb[r] = clean_pool.ds->y[s];
                ac[r] = clean_pool.ds->a[s];
            }
            for (std::size_t r = 0; r < bp; ++r) {
                const std::size_t s = pi[p0 + r];
                std::copy(priv_pool.ds->X.row(s), priv_pool.ds->X.row(s) + input_width,
                          xb.row(bc + r));
                yb[bc + r] = priv_pool.ds->y[s];
                ap[r] = priv_pool.ds->a[s];
            }

            nn::ForwardCache enc_cache;
            const nn::Matrix emb =
                nn::forward(model.encoder.params, model.encoder.spec, xb, &enc_cache);
            const nn::Matrix emb_c = slice_rows(emb, 0, bc);
            const nn::Matrix emb_p = slice_rows(emb, bc, bc + bp);

            // (i) adversary updates, encoder frozen
            for (std::size_t step = 0; step < cfg.adversary_steps_per_batch; ++step) {
                if (clean_pool.adversary && bc > 0)
                    adversary_update(model.clean_adv, emb_c, ac);
                if (priv_pool.adversary && bp > 0)
                    adversary_update(model.private_adv, emb_p, ap);
            }

            // (ii) main update: label head + encoder with reversed adversary
            // gradients scaled by beta and beta * alpha
            nn::ForwardCache label_cache;
            const nn::Matrix out =
                nn::forward(model.label_head.params, model.label_head.spec, emb, &label_cache);
            const nn::Matrix og = nn::cross_entropy_grad(out, yb);
            nn::Matrix demb;
            const nn::GradSet label_grads =
                nn::backward(model.label_head.params, model.label_head.spec, label_cache, og,
                             &demb);
            nn::adadelta_step(model.label_head.params, label_grads, model.label_head.opt);

            if (cfg.beta > 0.0) {
                if (clean_pool.adversary && bc > 0) {
                    const nn::Matrix dc = adversary_embedding_grad(model.clean_adv, emb_c, ac);
                    for (std::size_t r = 0; r < bc; ++r)
                        for (std::size_t k = 0; k < emb.cols; ++k)
                            demb(r, k) += -cfg.beta * dc(r, k);
                }
                if (priv_pool.adversary && bp > 0 && cfg.alpha > 0.0) {
                    const nn::Matrix dp =
                        adversary_embedding_grad(model.private_adv, emb_p, ap);
                    for (std::size_t r = 0; r < bp; ++r)
                        for (std::size_t k = 0; k < emb.cols; ++k)
                            demb(bc + r, k) += -cfg.beta * cfg.alpha * dp(r, k);
                }
            }

            const nn::GradSet enc_grads =
                nn::backward(model.encoder.params, model.encoder.spec, enc_cache, demb);
            nn::adadelta_step(model.encoder.params, enc_grads, model.encoder.opt);
        }

        if (trace) {
            const data::EncodedDataset empty;
            trace->adversary_objective.push_back(adversary_objective_value(
                model, clean_pool.adversary && clean_pool.ds ? *clean_pool.ds : empty,
                priv_pool.adversary && priv_pool.ds ? *priv_pool.ds : empty, cfg.alpha));
        }
    }
    return model;
}

data::EncodedDataset concat(const data::EncodedDataset& a, const data::EncodedDataset& b) {
    if (a.size() == 0) return b;
    if (b.size() == 0) return a;
    data::EncodedDataset out;
    out.X = nn::Matrix(a.size() + b.size(), a.X.cols);
    for (std::size_t r = 0; r < a.size(); ++r)
        std::copy(a.X.row(r), a.X.row(r) + a.X.cols, out.X.row(r));
    for (std::size_t r = 0; r < b.size(); ++r)
        std::copy(b.X.row(r), b.X.row(r) + b.X.cols, out.X.row(a.size() + r));
    auto app = [](std::vector<int> x, const std::vector<int>& y) {
        x.insert(x.end(), y.begin(), y.end());
        return x;
    };
    out.y = app(a.y, b.y);
    out.a = app(a.a, b.a);
    out.a_true = app(a.a_true, b.a_true);
    return out;
}

}  // namespace

std::string variant_name(TrainerVariant v) {
    switch (v) {
        case TrainerVariant::FairSp: return "fairsp";
        case TrainerVariant::Vanilla: return "vanilla";
        case TrainerVariant::RemoveS: return "remove_s";
        case TrainerVariant::CleanOnly: return "clean_only";
        case TrainerVariant::PrivateOnly: return "private_only";
        case TrainerVariant::CleanPlusPrivate: return "clean_plus_private";
    }
    throw std::invalid_argument("variant_name: bad variant");
}

TrainerVariant variant_from_name(const std::string& name) {
    if (name == "fairsp") return TrainerVariant::FairSp;
    if (name == "vanilla") return TrainerVariant::Vanilla;
    if (name == "remove_s") return TrainerVariant::RemoveS;
    if (name == "clean_only") return TrainerVariant::CleanOnly;
    if (name == "private_only") return TrainerVariant::PrivateOnly;
    if (name == "clean_plus_private") return TrainerVariant::CleanPlusPrivate;
    throw std::invalid_argument("unknown variant: " + name);
}

void DebiasConfig::validate() const {
    if (alpha < 0.0 || beta < 0.0)
        throw std::invalid_argument("DebiasConfig: alpha and beta must be >= 0");
    if (epochs == 0 || batch_size == 0 || embed_dim == 0)
        throw std::invalid_argument("DebiasConfig: zero epochs/batch/embed_dim");
}

FairSpModel train_fairsp(const data::EncodedDataset& clean,
                         const data::EncodedDataset& corrected, const DebiasConfig& cfg) {
    return train_fairsp_traced(clean, corrected, cfg, nullptr);
}

FairSpModel train_fairsp_traced(const data::EncodedDataset& clean,
                                const data::EncodedDataset& corrected,
                                const DebiasConfig& cfg, TrainTrace* trace) {
    if (clean.size() == 0) throw std::invalid_argument("train_fairsp: empty clean subset");
    Pool cp{&clean, true};
    Pool pp{corrected.size() ? &corrected : nullptr, corrected.size() > 0};
    return train_core(cp, pp, clean.X.cols, cfg, trace);
}

FairSpModel train_baseline(TrainerVariant variant, const data::SemiPrivatePartition& part,
                           const DebiasConfig& cfg) {
    switch (variant) {
        case TrainerVariant::FairSp:
            throw std::invalid_argument(
                "train_baseline: use train_fairsp with the corrected subset");
        case TrainerVariant::Vanilla:
        case TrainerVariant::RemoveS: {
            // plain classifier on the union; no adversary compute at all
            const data::EncodedDataset all = concat(part.clean, part.priv);
            if (all.size() == 0) throw std::invalid_argument("train_baseline: empty data");
            Pool cp{&all, false};
            Pool pp{nullptr, false};
            DebiasConfig c = cfg;
            c.beta = 0.0;
            return train_core(cp, pp, all.X.cols, c, nullptr);
        }
        case TrainerVariant::CleanOnly: {
            if (part.clean.size() == 0)
                throw std::invalid_argument("train_baseline: clean subset empty");
            Pool cp{&part.clean, true};
            Pool pp{nullptr, false};
            return train_core(cp, pp, part.clean.X.cols, cfg, nullptr);
        }
        case TrainerVariant::PrivateOnly: {
            if (part.priv.size() == 0)
                throw std::invalid_argument("train_baseline: private subset empty");
            Pool cp{&part.priv, true};  // single adversary on the noised attributes
            Pool pp{nullptr, false};
            return train_core(cp, pp, part.priv.X.cols, cfg, nullptr);
        }
        case TrainerVariant::CleanPlusPrivate: {
            // Same two-head trainer as FairSp with the raw noised attributes
            // standing in for the corrected ones.
            if (part.clean.size() == 0)
                throw std::invalid_argument("train_baseline: clean subset empty");
            return train_fairsp(part.clean, part.priv, cfg);
        }
    }
    throw std::invalid_argument("train_baseline: bad variant");
}

nn::Matrix embed(const FairSpModel& model, const nn::Matrix& x) {
    return nn::forward(model.encoder.params, model.encoder.spec, x);
}

std::pair<std::vector<double>, std::vector<int>> predict(const FairSpModel& model,
                                                         const nn::Matrix& x) {
    const nn::Matrix emb = embed(model, x);
    const nn::Matrix out = nn::forward(model.label_head.params, model.label_head.spec, emb);
    std::vector<double> probs;
    std::vector<int> labels;
    probs.reserve(x.rows);
    labels.reserve(x.rows);
    for (std::size_t i = 0; i < out.rows; ++i) {
        probs.push_back(out(i, 0));
        labels.push_back(out(i, 0) >= 0.5 ? 1 : 0);
    }
    return {std::move(probs), std::move(labels)};
}

double adversary_objective_value(const FairSpModel& model, const data::EncodedDataset& clean,
                                 const data::EncodedDataset& corrected, double alpha) {
    // The diagnostic estimates the inner sup over discriminators from below.
    // The constant f = 1/2 is always an admissible discriminator and scores
    // exactly -ln 4, so each head's contribution is floored there: a lagging
    // trained head never reports a value below what the trivial one attains.
    const double kConstHalf = -std::log(4.0);
    double r = 0.0;
    if (clean.size()) {
        const nn::Matrix emb = embed(model, clean.X);
        const nn::Matrix f =
            nn::forward(model.clean_adv.params, model.clean_adv.spec, emb);
        r += std::max(gan_objective(f, clean.a), kConstHalf);
    }
    if (corrected.size() && alpha > 0.0) {
        const nn::Matrix emb = embed(model, corrected.X);
        const nn::Matrix f =
            nn::forward(model.private_adv.params, model.private_adv.spec, emb);
        r += alpha * std::max(gan_objective(f, corrected.a), kConstHalf);
    }
    return r;
}

double refit_adversary_objective(const nn::Matrix& embeddings, const std::vector<int>& groups,
                                 const DebiasConfig& cfg, std::uint64_t seed) {
    if (embeddings.rows != groups.size() || embeddings.rows < 4)
        throw std::invalid_argument("refit_adversary_objective: bad inputs");

    std::vector<std::size_t> idx(embeddings.rows);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(mix_seed(seed, 11));
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t half = idx.size() / 2;

    DebiasConfig hc = cfg;
    hc.embed_dim = embeddings.cols;
    nn::Mlp head = nn::Mlp::create(head_spec(hc), mix_seed(seed, 12), cfg.rho, cfg.eps_num);

    std::vector<std::size_t> order(idx.begin(), idx.begin() + half);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            nn::Matrix xb = select_rows(embeddings, order, start, end);
            std::vector<int> gb;
            for (std::size_t r = start; r < end; ++r) gb.push_back(groups[order[r]]);
            adversary_update(head, xb, gb);
        }
    }

    std::vector<std::size_t> eval(idx.begin() + half, idx.end());
    nn::Matrix xe = select_rows(embeddings, eval, 0, eval.size());
    std::vector<int> ge;
    for (std::size_t s : eval) ge.push_back(groups[s]);
    const nn::Matrix f = nn::forward(head.params, head.spec, xe);
    // the constant-half discriminator (-ln 4 exactly) is always admissible
    return std::max(gan_objective(f, ge), -std::log(4.0));
}

double embedding_group_gap(const FairSpModel& model, const data::EncodedDataset& dataset,
                           std::uint64_t seed) {
    std::size_t n[2] = {0, 0};
    for (int g : dataset.a_true) ++n[g];
    if (n[0] < 30 || n[1] < 30)
        throw std::invalid_argument("embedding_group_gap: need >= 30 samples per group");
    const nn::Matrix emb = embed(model, dataset.X);
    const double r_star =
        refit_adversary_objective(emb, dataset.a_true, model.config, seed);
    return (r_star + std::log(4.0)) / 2.0;
}

}  // namespace fairsp::debias
