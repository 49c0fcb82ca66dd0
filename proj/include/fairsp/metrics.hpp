#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace fairsp::metrics {

struct FairnessReport {
    double accuracy = 0.0;
    double f1 = 0.0;
    double delta_dp = 0.0;
    double delta_eo = 0.0;
    // counts[a][y]
    std::array<std::array<std::size_t, 2>, 2> group_counts{};
};

double accuracy(const std::vector<int>& y_hat, const std::vector<int>& y);

// F1 of the positive class; 0 when precision + recall is 0.
double f1_binary(const std::vector<int>& y_hat, const std::vector<int>& y);

// |P(Yhat=1 | A=1) - P(Yhat=1 | A=0)|. Throws if a group is absent.
double delta_dp(const std::vector<int>& y_hat, const std::vector<int>& a);

// |TPR(A=1) - TPR(A=0)| over the Y=1 subset. Throws if a group has no positives.
double delta_eo(const std::vector<int>& y_hat, const std::vector<int>& y,
                const std::vector<int>& a);

FairnessReport evaluate(const std::vector<int>& y_hat, const std::vector<int>& y,
                        const std::vector<int>& a_true);

}  // namespace fairsp::metrics
