#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <vector>

#include "fairsp/data.hpp"
#include "fairsp/nn.hpp"

namespace fairsp::correction {

/// Row-stochastic 2x2 estimate of p(A_p = r | A_c = m).
struct CorruptionMatrix {
    std::array<std::array<double, 2>, 2> c{};

    static CorruptionMatrix identity();
    void validate() const;  // entries in [0,1], rows sum to 1 +- 1e-9
};

struct TrainConfig {
    std::size_t epochs = 50;
    std::size_t batch_size = 128;
    std::vector<std::size_t> hidden{64};
    double rho = 0.95;
    double eps_num = 1e-6;
    std::uint64_t seed = 0;
};

// p-hat(A_p = {0,1} | X) for one feature row.
using PosteriorFn = std::function<std::array<double, 2>(const double*, std::size_t)>;

// Softmax attribute predictor trained on the NOISED attributes of D_p.
// Throws if the private attributes are single-class.
nn::Mlp train_noisy_attr_predictor(const data::EncodedDataset& priv, const TrainConfig& cfg);

// Group-averaged estimate: C_mr = mean over clean samples with A_c = m of
// p-hat(A_p = r | X). Throws if a clean group is empty.
CorruptionMatrix estimate_corruption_matrix(const PosteriorFn& posterior,
                                            const data::EncodedDataset& clean);
CorruptionMatrix estimate_corruption_matrix(const nn::Mlp& g,
                                            const data::EncodedDataset& clean);

// Trains g' against clean attributes on D_c plus the forward-corrected output
// C^T g'(X) against noised attributes on D_p. Rejects a degenerate C row.
nn::Mlp train_corrector(const data::EncodedDataset& clean, const data::EncodedDataset& priv,
                        const CorruptionMatrix& c_hat, const TrainConfig& cfg);

// Hard labels: argmax of g'(X), ties resolved to 0.
std::vector<int> correct_attributes(const nn::Mlp& g_prime, const nn::Matrix& x);

// D_p with a replaced by the corrected attributes; X, Y, a_true untouched.
data::EncodedDataset apply_correction(const nn::Mlp& g_prime,
                                      const data::EncodedDataset& priv);

struct CorrectionResult {
    nn::Mlp g;
    nn::Mlp g_prime;
    CorruptionMatrix c_hat;
    data::EncodedDataset corrected;
    // fraction of corrected attributes that match a_true, for diagnostics
    double recovery_accuracy = 0.0;
};

// Runs the whole learn-to-correct pipeline in order: g, C-hat, g', A_p'.
CorrectionResult run_correction(const data::EncodedDataset& clean,
                                const data::EncodedDataset& priv, const TrainConfig& cfg);

// Plain softmax classifier training, shared by g, g' and test utilities.
nn::Mlp train_softmax_classifier(const nn::Matrix& x, const std::vector<int>& labels,
                                 const TrainConfig& cfg);

}  // namespace fairsp::correction
