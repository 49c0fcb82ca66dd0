#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "fairsp/nn.hpp"

using namespace fairsp;

namespace {

// Independent central-difference gradient of the CE loss w.r.t. every
// parameter, used as the oracle for backward().
struct FdResult {
    double max_rel_err = 0.0;
};

double loss_of(const nn::MlpParams& params, const nn::MlpSpec& spec, const nn::Matrix& x,
               const std::vector<int>& targets) {
    return nn::cross_entropy(nn::forward(params, spec, x), targets);
}

FdResult finite_difference_check(const nn::MlpSpec& spec, std::uint64_t seed) {
    nn::MlpParams params = nn::init_params(spec, seed);
    std::mt19937_64 rng(seed ^ 0xabcdef);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<int> label(0, spec.output == nn::Output::Softmax
                                                    ? int(spec.output_width()) - 1
                                                    : 1);
    const std::size_t batch = 5;
    nn::Matrix x(batch, spec.input_width());
    for (double& v : x.data) v = normal(rng);
    std::vector<int> targets;
    for (std::size_t i = 0; i < batch; ++i) targets.push_back(label(rng));

    nn::ForwardCache cache;
    const nn::Matrix out = nn::forward(params, spec, x, &cache);
    const nn::Matrix og = nn::cross_entropy_grad(out, targets);
    const nn::GradSet grads = nn::backward(params, spec, cache, og);

    const double h = 1e-5;
    FdResult res;
    auto check = [&](double& p, double analytic) {
        const double orig = p;
        p = orig + h;
        const double lp = loss_of(params, spec, x, targets);
        p = orig - h;
        const double lm = loss_of(params, spec, x, targets);
        p = orig;
        const double fd = (lp - lm) / (2.0 * h);
        const double rel = std::abs(analytic - fd) / std::max(1e-4, std::abs(fd));
        res.max_rel_err = std::max(res.max_rel_err, rel);
    };
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
        for (std::size_t i = 0; i < params.weights[l].data.size(); ++i)
            check(params.weights[l].data[i], grads.weights[l].data[i]);
        for (std::size_t i = 0; i < params.biases[l].size(); ++i)
            check(params.biases[l][i], grads.biases[l][i]);
    }
    return res;
}

}  // namespace

TEST_CASE("init_params is deterministic per seed") {
    nn::MlpSpec spec{{2, 1}};
    const auto a = nn::init_params(spec, 5);
    const auto b = nn::init_params(spec, 5);
    CHECK(a.weights[0].data == b.weights[0].data);
    CHECK(a.biases[0] == b.biases[0]);
    const auto c = nn::init_params(spec, 6);
    CHECK(a.weights[0].data != c.weights[0].data);
}

TEST_CASE("init_params shapes") {
    nn::MlpSpec spec{{4, 8, 1}};
    const auto p = nn::init_params(spec, 0);
    REQUIRE(p.weights.size() == 2);
    CHECK(p.weights[0].rows == 4);
    CHECK(p.weights[0].cols == 8);
    CHECK(p.weights[1].rows == 8);
    CHECK(p.weights[1].cols == 1);
    CHECK(p.biases[0].size() == 8);
    CHECK(p.biases[1].size() == 1);
    for (double b : p.biases[0]) CHECK(b == 0.0);
}

TEST_CASE("init_params magnitude follows the fan-in scaled normal law") {
    // E|w| = sigma * sqrt(2/pi), Var|w| = sigma^2 (1 - 2/pi), per layer
    nn::MlpSpec spec{{2, 3, 1}};
    const auto p = nn::init_params(spec, 7);
    double sum = 0.0, expected = 0.0, var = 0.0;
    std::size_t count = 0;
    const double sigmas[2] = {std::sqrt(2.0 / 2.0), std::sqrt(2.0 / 3.0)};
    for (std::size_t l = 0; l < 2; ++l) {
        for (double v : p.weights[l].data) {
            sum += std::abs(v);
            expected += sigmas[l] * std::sqrt(2.0 / M_PI);
            var += sigmas[l] * sigmas[l] * (1.0 - 2.0 / M_PI);
            ++count;
        }
    }
    const double mean_abs = sum / double(count);
    const double expected_mean = expected / double(count);
    const double sigma_mean = std::sqrt(var) / double(count);
    CHECK(std::abs(mean_abs - expected_mean) < 3.0 * sigma_mean);
}

TEST_CASE("init_params rejects invalid specs") {
    CHECK_THROWS_AS(nn::init_params(nn::MlpSpec{{2, 0, 1}}, 0), std::invalid_argument);
    CHECK_THROWS_AS(nn::init_params(nn::MlpSpec{{3}}, 0), std::invalid_argument);
}

TEST_CASE("forward: zero net gives sigmoid(0) = 0.5") {
    nn::MlpSpec spec{{3, 4, 1}};
    nn::MlpParams p = nn::init_params(spec, 0);
    for (auto& w : p.weights) std::fill(w.data.begin(), w.data.end(), 0.0);
    nn::Matrix x(2, 3, 1.0);
    const auto out = nn::forward(p, spec, x);
    CHECK(out(0, 0) == doctest::Approx(0.5));
    CHECK(out(1, 0) == doctest::Approx(0.5));
}

TEST_CASE("forward: identity-like single layer at input 0") {
    nn::MlpSpec spec{{1, 1}};
    nn::MlpParams p;
    p.weights.emplace_back(1, 1, 1.0);
    p.biases.emplace_back(1, 0.0);
    nn::Matrix x(1, 1, 0.0);
    CHECK(nn::forward(p, spec, x)(0, 0) == doctest::Approx(0.5));
}

TEST_CASE("forward: softmax rows sum to 1") {
    nn::MlpSpec spec{{5, 7, 3}, nn::Activation::Tanh, nn::Output::Softmax};
    const auto p = nn::init_params(spec, 11);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> normal(0.0, 2.0);
    nn::Matrix x(20, 5);
    for (double& v : x.data) v = normal(rng);
    const auto out = nn::forward(p, spec, x);
    for (std::size_t r = 0; r < out.rows; ++r) {
        double s = 0.0;
        for (std::size_t c = 0; c < out.cols; ++c) {
            s += out(r, c);
            CHECK(out(r, c) > 0.0);
        }
        CHECK(std::abs(s - 1.0) < 1e-9);
    }
}

TEST_CASE("forward rejects shape mismatch") {
    nn::MlpSpec spec{{3, 1}};
    const auto p = nn::init_params(spec, 0);
    CHECK_THROWS_AS(nn::forward(p, spec, nn::Matrix(2, 4)), std::invalid_argument);
}

TEST_CASE("cross_entropy hand values") {
    nn::Matrix out(1, 1);
    out(0, 0) = 0.5;
    CHECK(nn::cross_entropy(out, {1}) == doctest::Approx(std::log(2.0)).epsilon(1e-9));

    out(0, 0) = 1.0;  // clamped internally
    CHECK(nn::cross_entropy(out, {1}) == doctest::Approx(0.0).epsilon(1e-9));

    nn::Matrix batch(2, 1);
    batch(0, 0) = 0.8;
    batch(1, 0) = 0.2;
    CHECK(nn::cross_entropy(batch, {1, 0}) ==
          doctest::Approx(-std::log(0.8)).epsilon(1e-9));  // 0.22314...
    CHECK(nn::cross_entropy(batch, {1, 0}) == doctest::Approx(0.223143551).epsilon(1e-6));
}

TEST_CASE("cross_entropy rejects mismatched lengths") {
    nn::Matrix out(2, 1, 0.5);
    CHECK_THROWS_AS(nn::cross_entropy(out, {1}), std::invalid_argument);
}

TEST_CASE("backward: zero upstream gradient yields zero grads") {
    nn::MlpSpec spec{{3, 4, 1}};
    const auto p = nn::init_params(spec, 2);
    nn::Matrix x(3, 3, 0.7);
    nn::ForwardCache cache;
    const auto out = nn::forward(p, spec, x, &cache);
    const auto grads = nn::backward(p, spec, cache, nn::Matrix(out.rows, out.cols, 0.0));
    for (const auto& w : grads.weights)
        for (double v : w.data) CHECK(v == 0.0);
}

TEST_CASE("backward: single-layer sigmoid matches (p - y) x") {
    nn::MlpSpec spec{{2, 1}};
    nn::MlpParams p;
    p.weights.emplace_back(2, 1);
    p.weights[0](0, 0) = 0.3;
    p.weights[0](1, 0) = -0.5;
    p.biases.emplace_back(1, 0.1);
    nn::Matrix x(1, 2);
    x(0, 0) = 1.5;
    x(0, 1) = -0.4;
    const int y = 1;

    nn::ForwardCache cache;
    const auto out = nn::forward(p, spec, x, &cache);
    const auto og = nn::cross_entropy_grad(out, {y});
    const auto grads = nn::backward(p, spec, cache, og);

    const double prob = out(0, 0);
    CHECK(grads.weights[0](0, 0) == doctest::Approx((prob - y) * x(0, 0)).epsilon(1e-9));
    CHECK(grads.weights[0](1, 0) == doctest::Approx((prob - y) * x(0, 1)).epsilon(1e-9));
    CHECK(grads.biases[0][0] == doctest::Approx(prob - y).epsilon(1e-9));
}

TEST_CASE("backward matches central finite differences") {
    const auto res =
        finite_difference_check({{3, 4, 2}, nn::Activation::Tanh, nn::Output::Softmax}, 42);
    CHECK(res.max_rel_err < 1e-4);
    const auto res2 =
        finite_difference_check({{3, 4, 1}, nn::Activation::Relu, nn::Output::SigmoidBinary},
                                43);
    CHECK(res2.max_rel_err < 1e-4);
}

TEST_CASE("backward requires a forward cache") {
    nn::MlpSpec spec{{2, 1}};
    const auto p = nn::init_params(spec, 0);
    nn::ForwardCache stale;
    CHECK_THROWS_AS(nn::backward(p, spec, stale, nn::Matrix(1, 1)), std::invalid_argument);
}

TEST_CASE("reverse_gradient scaling") {
    nn::GradSet g;
    g.weights.emplace_back(1, 2);
    g.weights[0](0, 0) = 1.0;
    g.weights[0](0, 1) = -2.0;
    g.biases.emplace_back(2, 0.5);

    const auto zero = nn::reverse_gradient(g, 0.0);
    CHECK(zero.weights[0](0, 0) == 0.0);
    CHECK(zero.weights[0](0, 1) == 0.0);

    const auto neg = nn::reverse_gradient(g, 1.0);
    CHECK(neg.weights[0](0, 0) == -1.0);
    CHECK(neg.weights[0](0, 1) == 2.0);

    const auto scaled = nn::reverse_gradient(g, 0.8);
    CHECK(scaled.weights[0](0, 0) == doctest::Approx(-0.8));
    CHECK(scaled.weights[0](0, 1) == doctest::Approx(1.6));

    // double reversal with coefficient 1 is the exact identity
    const auto twice = nn::reverse_gradient(nn::reverse_gradient(g, 1.0), 1.0);
    CHECK(twice.weights[0].data == g.weights[0].data);
    CHECK(twice.biases[0] == g.biases[0]);

    CHECK_THROWS_AS(nn::reverse_gradient(g, -0.5), std::invalid_argument);
}

TEST_CASE("adadelta: zero gradient leaves params unchanged") {
    nn::MlpSpec spec{{2, 1}};
    auto p = nn::init_params(spec, 1);
    const auto before = p;
    auto state = nn::AdadeltaState::init(p);
    nn::GradSet g;
    g.weights.emplace_back(2, 1, 0.0);
    g.biases.emplace_back(1, 0.0);
    nn::adadelta_step(p, g, state);
    CHECK(p.weights[0].data == before.weights[0].data);
    CHECK(state.acc_grad_sq.weights[0](0, 0) == 0.0);
}

TEST_CASE("adadelta: first step magnitude") {
    // g=1, rho=0.95, eps=1e-6: delta = -sqrt(1e-6)/sqrt(0.05 + 1e-6)
    nn::MlpParams p;
    p.weights.emplace_back(1, 1, 0.0);
    p.biases.emplace_back(0);
    auto state = nn::AdadeltaState::init(p);
    nn::GradSet g;
    g.weights.emplace_back(1, 1, 1.0);
    g.biases.emplace_back(0);
    nn::adadelta_step(p, g, state);
    CHECK(p.weights[0](0, 0) == doctest::Approx(-0.00447213).epsilon(1e-4));
}

TEST_CASE("adadelta: minimizes w^2 from w=1") {
    nn::MlpParams p;
    p.weights.emplace_back(1, 1, 1.0);
    p.biases.emplace_back(0);
    auto state = nn::AdadeltaState::init(p);
    double prev = 1.0;
    for (int step = 0; step < 100; ++step) {
        nn::GradSet g;
        g.weights.emplace_back(1, 1, 2.0 * p.weights[0](0, 0));
        g.biases.emplace_back(0);
        nn::adadelta_step(p, g, state);
        if (step >= 1) CHECK(std::abs(p.weights[0](0, 0)) < prev);
        prev = std::abs(p.weights[0](0, 0));
    }
}

TEST_CASE("adadelta rejects non-finite gradients") {
    nn::MlpParams p;
    p.weights.emplace_back(1, 1, 0.0);
    p.biases.emplace_back(0);
    auto state = nn::AdadeltaState::init(p);
    nn::GradSet g;
    g.weights.emplace_back(1, 1, std::numeric_limits<double>::quiet_NaN());
    g.biases.emplace_back(0);
    CHECK_THROWS_AS(nn::adadelta_step(p, g, state), std::runtime_error);
}
