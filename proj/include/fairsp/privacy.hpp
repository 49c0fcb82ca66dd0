#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace fairsp::privacy {

struct PrivacyBudget {
    double epsilon;

    void validate() const;  // throws on nonpositive / non-finite epsilon
};

struct NoiseReport {
    double flip_prob = 0.0;
    std::size_t flipped_count = 0;
    std::size_t total = 0;
};

// Randomized-response flip probability p = 1 / (e^eps + 1), in (0, 0.5).
double flip_prob(const PrivacyBudget& budget);

// Independently flips each binary entry with probability flip_prob(eps).
// Deterministic per seed. The caller keeps ground truth separately.
std::pair<std::vector<int>, NoiseReport> randomize(const std::vector<int>& a,
                                                   const PrivacyBudget& budget,
                                                   std::uint64_t seed);

// Max likelihood ratio of the mechanism over outputs and input pairs,
// (1 - p) / p. Throws if it deviates from e^eps by more than 1e-12 relative.
double verify_ldp_ratio(const PrivacyBudget& budget);

}  // namespace fairsp::privacy
