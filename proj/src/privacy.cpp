#include "fairsp/privacy.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace fairsp::privacy {

void PrivacyBudget::validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon))
        throw std::invalid_argument("PrivacyBudget: epsilon must be finite and positive");
}

double flip_prob(const PrivacyBudget& budget) {
    budget.validate();
    return 1.0 / (std::exp(budget.epsilon) + 1.0);
}

std::pair<std::vector<int>, NoiseReport> randomize(const std::vector<int>& a,
                                                   const PrivacyBudget& budget,
                                                   std::uint64_t seed) {
    const double p = flip_prob(budget);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    NoiseReport report;
    report.flip_prob = p;
    report.total = a.size();

    std::vector<int> noised;
    noised.reserve(a.size());
    for (int v : a) {
        if (v != 0 && v != 1)
            throw std::invalid_argument("randomize: non-binary sensitive attribute");
        if (unif(rng) < p) {
            noised.push_back(1 - v);
            ++report.flipped_count;
        } else {
            noised.push_back(v);
        }
    }
    return {std::move(noised), report};
}

double verify_ldp_ratio(const PrivacyBudget& budget) {
    const double p = flip_prob(budget);
    const double ratio = (1.0 - p) / p;
    const double expected = std::exp(budget.epsilon);
    if (std::abs(ratio - expected) > 1e-12 * expected)
        throw std::runtime_error("verify_ldp_ratio: likelihood ratio deviates from e^eps");
    return ratio;
}

}  // namespace fairsp::privacy
