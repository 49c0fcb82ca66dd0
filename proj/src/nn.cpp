#include "fairsp/nn.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace fairsp::nn {

namespace {

constexpr double kProbClamp = 1e-12;

double clamp_prob(double p) {
    return std::min(1.0 - kProbClamp, std::max(kProbClamp, p));
}

double sigmoid(double z) {
    return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

void check_targets(const Matrix& output, const std::vector<int>& targets) {
    if (output.rows != targets.size())
        throw std::invalid_argument("cross_entropy: output rows != target length");
    if (output.rows == 0)
        throw std::invalid_argument("cross_entropy: empty batch");
    const int num_classes = output.cols == 1 ? 2 : static_cast<int>(output.cols);
    for (int t : targets)
        if (t < 0 || t >= num_classes)
            throw std::invalid_argument("cross_entropy: target out of range");
}

}  // namespace

bool Matrix::all_finite() const {
    return std::all_of(data.begin(), data.end(), [](double v) { return std::isfinite(v); });
}

bool MlpParams::all_finite() const {
    for (const auto& w : weights)
        if (!w.all_finite()) return false;
    for (const auto& b : biases)
        for (double v : b)
            if (!std::isfinite(v)) return false;
    return true;
}

void MlpSpec::validate() const {
    if (layer_sizes.size() < 2)
        throw std::invalid_argument("MlpSpec: need at least 2 layers");
    for (std::size_t s : layer_sizes)
        if (s == 0) throw std::invalid_argument("MlpSpec: layer size 0");
    if (output == Output::SigmoidBinary && layer_sizes.back() != 1)
        throw std::invalid_argument("MlpSpec: sigmoid_binary needs output width 1");
    if (output == Output::Softmax && layer_sizes.back() < 2)
        throw std::invalid_argument("MlpSpec: softmax needs output width >= 2");
}

MlpParams init_params(const MlpSpec& spec, std::uint64_t seed) {
    spec.validate();
    std::mt19937_64 rng(seed);
    MlpParams p;
    for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l) {
        const std::size_t fan_in = spec.layer_sizes[l];
        const std::size_t fan_out = spec.layer_sizes[l + 1];
        std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / double(fan_in)));
        Matrix w(fan_in, fan_out);
        for (double& v : w.data) v = dist(rng);
        p.weights.push_back(std::move(w));
        p.biases.emplace_back(fan_out, 0.0);
    }
    return p;
}

AdadeltaState AdadeltaState::init(const MlpParams& params, double rho, double eps) {
    AdadeltaState s;
    s.rho = rho;
    s.eps_num = eps;
    for (const auto& w : params.weights) {
        s.acc_grad_sq.weights.emplace_back(w.rows, w.cols, 0.0);
        s.acc_update_sq.weights.emplace_back(w.rows, w.cols, 0.0);
    }
    for (const auto& b : params.biases) {
        s.acc_grad_sq.biases.emplace_back(b.size(), 0.0);
        s.acc_update_sq.biases.emplace_back(b.size(), 0.0);
    }
    return s;
}

Matrix forward(const MlpParams& params, const MlpSpec& spec, const Matrix& x,
               ForwardCache* cache) {
    spec.validate();
    if (x.cols != spec.input_width())
        throw std::invalid_argument("forward: input width mismatch");
    if (cache) {
        cache->activations.clear();
        cache->activations.push_back(x);
    }
    Matrix a = x;
    const std::size_t L = spec.num_layers();
    for (std::size_t l = 0; l < L; ++l) {
        const Matrix& w = params.weights[l];
        const auto& b = params.biases[l];
        Matrix z(a.rows, w.cols);
        for (std::size_t r = 0; r < a.rows; ++r) {
            for (std::size_t c = 0; c < w.cols; ++c) {
                double acc = b[c];
                for (std::size_t k = 0; k < w.rows; ++k) acc += a(r, k) * w(k, c);
                z(r, c) = acc;
            }
        }
        const bool last = (l + 1 == L);
        if (!last || spec.output == Output::Embedding) {
            for (double& v : z.data) {
                v = spec.hidden_activation == Activation::Relu ? std::max(0.0, v)
                                                               : std::tanh(v);
            }
        } else if (spec.output == Output::SigmoidBinary) {
            for (double& v : z.data) v = sigmoid(v);
        } else {  // Softmax
            for (std::size_t r = 0; r < z.rows; ++r) {
                double m = z(r, 0);
                for (std::size_t c = 1; c < z.cols; ++c) m = std::max(m, z(r, c));
                double sum = 0.0;
                for (std::size_t c = 0; c < z.cols; ++c) {
                    z(r, c) = std::exp(z(r, c) - m);
                    sum += z(r, c);
                }
                for (std::size_t c = 0; c < z.cols; ++c) z(r, c) /= sum;
            }
        }
        a = std::move(z);
        if (cache) cache->activations.push_back(a);
    }
    return a;
}

double cross_entropy(const Matrix& output, const std::vector<int>& targets) {
    std::vector<double> w(targets.size(), 1.0 / double(targets.size()));
    return cross_entropy_weighted(output, targets, w);
}

double cross_entropy_weighted(const Matrix& output, const std::vector<int>& targets,
                              const std::vector<double>& weights) {
    check_targets(output, targets);
    if (weights.size() != targets.size())
        throw std::invalid_argument("cross_entropy: weight length mismatch");
    double loss = 0.0;
    for (std::size_t r = 0; r < output.rows; ++r) {
        double p;
        if (output.cols == 1) {
            p = clamp_prob(output(r, 0));
            if (targets[r] == 0) p = 1.0 - p;
        } else {
            p = clamp_prob(output(r, std::size_t(targets[r])));
        }
        loss -= weights[r] * std::log(p);
    }
    return loss;
}

Matrix cross_entropy_grad(const Matrix& output, const std::vector<int>& targets) {
    std::vector<double> w(targets.size(), 1.0 / double(targets.size()));
    return cross_entropy_grad_weighted(output, targets, w);
}

Matrix cross_entropy_grad_weighted(const Matrix& output, const std::vector<int>& targets,
                                   const std::vector<double>& weights) {
    check_targets(output, targets);
    if (weights.size() != targets.size())
        throw std::invalid_argument("cross_entropy: weight length mismatch");
    Matrix g(output.rows, output.cols, 0.0);
    for (std::size_t r = 0; r < output.rows; ++r) {
        if (output.cols == 1) {
            const double p = clamp_prob(output(r, 0));
            // d/dp of -(y log p + (1-y) log(1-p))
            g(r, 0) = weights[r] * (targets[r] == 1 ? -1.0 / p : 1.0 / (1.0 - p));
        } else {
            const std::size_t t = std::size_t(targets[r]);
            g(r, t) = -weights[r] / clamp_prob(output(r, t));
        }
    }
    return g;
}

GradSet backward(const MlpParams& params, const MlpSpec& spec, const ForwardCache& cache,
                 const Matrix& output_grad, Matrix* input_grad) {
    const std::size_t L = spec.num_layers();
    if (cache.activations.size() != L + 1)
        throw std::invalid_argument("backward: missing or stale forward cache");
    const Matrix& out = cache.activations.back();
    if (output_grad.rows != out.rows || output_grad.cols != out.cols)
        throw std::invalid_argument("backward: output gradient shape mismatch");

    GradSet grads;
    grads.weights.resize(L);
    grads.biases.resize(L);

    // delta starts as dL/dz at the output layer.
    Matrix delta(out.rows, out.cols);
    if (spec.output == Output::SigmoidBinary) {
        for (std::size_t i = 0; i < delta.data.size(); ++i) {
            const double p = out.data[i];
            delta.data[i] = output_grad.data[i] * p * (1.0 - p);
        }
    } else if (spec.output == Output::Softmax) {
        for (std::size_t r = 0; r < out.rows; ++r) {
            double dot = 0.0;
            for (std::size_t c = 0; c < out.cols; ++c) dot += output_grad(r, c) * out(r, c);
            for (std::size_t c = 0; c < out.cols; ++c)
                delta(r, c) = out(r, c) * (output_grad(r, c) - dot);
        }
    } else {  // Embedding: hidden activation at the output layer
        for (std::size_t i = 0; i < delta.data.size(); ++i) {
            const double a = out.data[i];
            const double da = spec.hidden_activation == Activation::Relu
                                  ? (a > 0.0 ? 1.0 : 0.0)
                                  : 1.0 - a * a;
            delta.data[i] = output_grad.data[i] * da;
        }
    }

    for (std::size_t l = L; l-- > 0;) {
        const Matrix& a_prev = cache.activations[l];
        const Matrix& w = params.weights[l];
        Matrix gw(w.rows, w.cols, 0.0);
        std::vector<double> gb(w.cols, 0.0);
        for (std::size_t r = 0; r < delta.rows; ++r) {
            for (std::size_t c = 0; c < delta.cols; ++c) {
                const double d = delta(r, c);
                gb[c] += d;
                for (std::size_t k = 0; k < w.rows; ++k) gw(k, c) += a_prev(r, k) * d;
            }
        }
        grads.weights[l] = std::move(gw);
        grads.biases[l] = std::move(gb);

        if (l == 0 && !input_grad) break;

        // propagate: dL/da_prev = delta . W^T, then through the activation
        Matrix prev_delta(delta.rows, w.rows, 0.0);
        for (std::size_t r = 0; r < delta.rows; ++r)
            for (std::size_t k = 0; k < w.rows; ++k) {
                double acc = 0.0;
                for (std::size_t c = 0; c < w.cols; ++c) acc += delta(r, c) * w(k, c);
                prev_delta(r, k) = acc;
            }
        if (l == 0) {
            *input_grad = std::move(prev_delta);
            break;
        }
        for (std::size_t i = 0; i < prev_delta.data.size(); ++i) {
            const double a = a_prev.data[i];
            const double da = spec.hidden_activation == Activation::Relu
                                  ? (a > 0.0 ? 1.0 : 0.0)
                                  : 1.0 - a * a;
            prev_delta.data[i] *= da;
        }
        delta = std::move(prev_delta);
    }
    return grads;
}

GradSet reverse_gradient(GradSet grads, double coefficient) {
    if (coefficient < 0.0)
        throw std::invalid_argument("reverse_gradient: coefficient must be >= 0");
    for (auto& w : grads.weights)
        for (double& v : w.data) v *= -coefficient;
    for (auto& b : grads.biases)
        for (double& v : b) v *= -coefficient;
    return grads;
}

void accumulate(GradSet& into, const GradSet& other) {
    for (std::size_t l = 0; l < into.weights.size(); ++l) {
        for (std::size_t i = 0; i < into.weights[l].data.size(); ++i)
            into.weights[l].data[i] += other.weights[l].data[i];
        for (std::size_t i = 0; i < into.biases[l].size(); ++i)
            into.biases[l][i] += other.biases[l][i];
    }
}

namespace {

void adadelta_tensor(std::vector<double>& p, const std::vector<double>& g,
                     std::vector<double>& acc_g, std::vector<double>& acc_u, double rho,
                     double eps) {
    for (std::size_t i = 0; i < p.size(); ++i) {
        acc_g[i] = rho * acc_g[i] + (1.0 - rho) * g[i] * g[i];
        const double delta = -std::sqrt(acc_u[i] + eps) / std::sqrt(acc_g[i] + eps) * g[i];
        acc_u[i] = rho * acc_u[i] + (1.0 - rho) * delta * delta;
        p[i] += delta;
    }
}

}  // namespace

void adadelta_step(MlpParams& params, const GradSet& grads, AdadeltaState& state) {
    if (!grads.all_finite())
        throw std::runtime_error("adadelta_step: non-finite gradient, batch rejected");
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        adadelta_tensor(params.weights[l].data, grads.weights[l].data,
                        state.acc_grad_sq.weights[l].data, state.acc_update_sq.weights[l].data,
                        state.rho, state.eps_num);
        adadelta_tensor(params.biases[l], grads.biases[l], state.acc_grad_sq.biases[l],
                        state.acc_update_sq.biases[l], state.rho, state.eps_num);
    }
}

Mlp Mlp::create(MlpSpec spec, std::uint64_t seed, double rho, double eps) {
    Mlp m;
    m.spec = std::move(spec);
    m.params = init_params(m.spec, seed);
    m.opt = AdadeltaState::init(m.params, rho, eps);
    return m;
}

}  // namespace fairsp::nn
