#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fairsp/data.hpp"
#include "fairsp/nn.hpp"

namespace fairsp::debias {

enum class TrainerVariant { FairSp, Vanilla, RemoveS, CleanOnly, PrivateOnly, CleanPlusPrivate };

std::string variant_name(TrainerVariant v);
TrainerVariant variant_from_name(const std::string& name);

struct DebiasConfig {
    double alpha = 1.0;  // weight of the private-adversary loss
    double beta = 1.0;   // weight of the adversarial term
    std::size_t epochs = 50;
    std::size_t batch_size = 128;
    std::size_t adversary_steps_per_batch = 1;
    std::size_t embed_dim = 64;
    std::vector<std::size_t> head_hidden{32};
    nn::Activation activation = nn::Activation::Relu;
    double rho = 0.95;
    double eps_num = 1e-6;
    std::uint64_t seed = 0;

    void validate() const;
};

struct FairSpModel {
    nn::Mlp encoder;       // [d, embed_dim], embedding output
    nn::Mlp label_head;    // [embed_dim, 32, 1] sigmoid
    nn::Mlp clean_adv;     // same shape as label head
    nn::Mlp private_adv;
    DebiasConfig config;
};

// Semi-private adversarial training on the clean subset (clean-attribute
// adversary) and the corrected subset (private-attribute adversary). The
// label loss is averaged over the union. `corrected` may be empty when the
// clean ratio is 1.
FairSpModel train_fairsp(const data::EncodedDataset& clean,
                         const data::EncodedDataset& corrected, const DebiasConfig& cfg);

// Baselines. For Vanilla the caller is expected to have appended the observed
// attribute column to X already (data::append_attribute_column); RemoveS and
// the adversarial baselines consume X as-is.
FairSpModel train_baseline(TrainerVariant variant, const data::SemiPrivatePartition& part,
                           const DebiasConfig& cfg);

std::pair<std::vector<double>, std::vector<int>> predict(const FairSpModel& model,
                                                         const nn::Matrix& x);

nn::Matrix embed(const FairSpModel& model, const nn::Matrix& x);

// GAN-form adversary objective
//   R = E[log f_c | A_c=1] + E[log(1-f_c) | A_c=0]
//     + alpha * (same for f_p over the corrected attributes),
// evaluated with the model's current adversary heads. Bounded below by
// -(1 + alpha) ln 4 at the minimax optimum.
double adversary_objective_value(const FairSpModel& model, const data::EncodedDataset& clean,
                                 const data::EncodedDataset& corrected, double alpha);

// Best-response variant: trains a fresh discriminator on the embeddings and
// returns the single-head GAN objective it attains on `eval` rows. Used by
// the embedding-divergence diagnostic and as an independent check of the
// minimax bound.
double refit_adversary_objective(const nn::Matrix& embeddings, const std::vector<int>& groups,
                                 const DebiasConfig& cfg, std::uint64_t seed);

// Jensen-Shannon divergence estimate between group-conditional embedding
// distributions via JSD ~= (R* + ln 4) / 2 with R* refit on held-out rows.
double embedding_group_gap(const FairSpModel& model, const data::EncodedDataset& dataset,
                           std::uint64_t seed);

// Per-batch trace of the adversary objective during training, for the
// minimax-bound diagnostic.
struct TrainTrace {
    std::vector<double> adversary_objective;  // one entry per epoch
};

FairSpModel train_fairsp_traced(const data::EncodedDataset& clean,
                                const data::EncodedDataset& corrected,
                                const DebiasConfig& cfg, TrainTrace* trace);

}  // namespace fairsp::debias
