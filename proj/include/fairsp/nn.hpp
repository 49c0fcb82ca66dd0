#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace fairsp::nn {

/// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    const double* row(std::size_t r) const { return data.data() + r * cols; }
    double* row(std::size_t r) { return data.data() + r * cols; }

    bool all_finite() const;
};

enum class Activation { Relu, Tanh };

// Embedding: last layer uses the hidden activation, no probability head.
// Used for the shared encoder whose output feeds downstream heads.
enum class Output { SigmoidBinary, Softmax, Embedding };

struct MlpSpec {
    std::vector<std::size_t> layer_sizes;  // input -> hidden... -> output
    Activation hidden_activation = Activation::Relu;
    Output output = Output::SigmoidBinary;

    void validate() const;  // throws std::invalid_argument
    std::size_t input_width() const { return layer_sizes.front(); }
    std::size_t output_width() const { return layer_sizes.back(); }
    std::size_t num_layers() const { return layer_sizes.size() - 1; }
};

struct MlpParams {
    std::vector<Matrix> weights;              // weights[l]: (in x out)
    std::vector<std::vector<double>> biases;  // biases[l]: out

    bool all_finite() const;
};

// Gradients mirror parameter shapes exactly.
using GradSet = MlpParams;

struct AdadeltaState {
    double rho = 0.95;
    double eps_num = 1e-6;
    MlpParams acc_grad_sq;
    MlpParams acc_update_sq;

    static AdadeltaState init(const MlpParams& params, double rho = 0.95, double eps = 1e-6);
};

// Zero-mean normal weights with std sqrt(2 / fan_in), zero biases.
MlpParams init_params(const MlpSpec& spec, std::uint64_t seed);

struct ForwardCache {
    // activations[0] is the input batch, activations.back() the network output.
    std::vector<Matrix> activations;
};

Matrix forward(const MlpParams& params, const MlpSpec& spec, const Matrix& x,
               ForwardCache* cache = nullptr);

// Mean cross-entropy over the batch. Binary targets for a width-1 sigmoid
// output, class indices for softmax. Probabilities clamped to [1e-12, 1-1e-12].
double cross_entropy(const Matrix& output, const std::vector<int>& targets);

// Sum of w[i] * per-sample cross-entropy. Gradients below match.
double cross_entropy_weighted(const Matrix& output, const std::vector<int>& targets,
                              const std::vector<double>& weights);

// d(mean CE)/d(output), suitable as the upstream gradient for backward().
Matrix cross_entropy_grad(const Matrix& output, const std::vector<int>& targets);
Matrix cross_entropy_grad_weighted(const Matrix& output, const std::vector<int>& targets,
                                   const std::vector<double>& weights);

// Backpropagate the loss gradient at the (post-activation) output through the
// network. Optionally also yields the gradient w.r.t. the input batch, which
// is how head gradients flow back into a shared encoder.
GradSet backward(const MlpParams& params, const MlpSpec& spec, const ForwardCache& cache,
                 const Matrix& output_grad, Matrix* input_grad = nullptr);

// Multiply every gradient entry by -coefficient. Realizes the encoder's
// ascent on the adversary losses; adversary head gradients are never passed
// through this.
GradSet reverse_gradient(GradSet grads, double coefficient);

void accumulate(GradSet& into, const GradSet& other);

// In-place Adadelta update. Throws on non-finite gradients.
void adadelta_step(MlpParams& params, const GradSet& grads, AdadeltaState& state);

/// Spec + params + optimizer state bundled for convenience.
struct Mlp {
    MlpSpec spec;
    MlpParams params;
    AdadeltaState opt;

    static Mlp create(MlpSpec spec, std::uint64_t seed, double rho = 0.95, double eps = 1e-6);
    Matrix operator()(const Matrix& x) const { return forward(params, spec, x); }
};

}  // namespace fairsp::nn
