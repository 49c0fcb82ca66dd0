#include "fairsp/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace fairsp::metrics {

namespace {

void check_lengths(std::size_t a, std::size_t b) {
    if (a != b) throw std::invalid_argument("metrics: length mismatch");
    if (a == 0) throw std::invalid_argument("metrics: empty input");
}

}  // namespace

double accuracy(const std::vector<int>& y_hat, const std::vector<int>& y) {
    check_lengths(y_hat.size(), y.size());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (y_hat[i] == y[i]) ++hits;
    return double(hits) / double(y.size());
}

double f1_binary(const std::vector<int>& y_hat, const std::vector<int>& y) {
    check_lengths(y_hat.size(), y.size());
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y_hat[i] == 1 && y[i] == 1) ++tp;
        if (y_hat[i] == 1 && y[i] == 0) ++fp;
        if (y_hat[i] == 0 && y[i] == 1) ++fn;
    }
    if (tp == 0) return 0.0;
    const double p = double(tp) / double(tp + fp);
    const double r = double(tp) / double(tp + fn);
    return 2.0 * p * r / (p + r);
}

double delta_dp(const std::vector<int>& y_hat, const std::vector<int>& a) {
    check_lengths(y_hat.size(), a.size());
    std::size_t n[2] = {0, 0}, pos[2] = {0, 0};
    for (std::size_t i = 0; i < a.size(); ++i) {
        ++n[a[i]];
        if (y_hat[i] == 1) ++pos[a[i]];
    }
    if (n[0] == 0 || n[1] == 0)
        throw std::invalid_argument("delta_dp: a group is absent");
    return std::abs(double(pos[1]) / double(n[1]) - double(pos[0]) / double(n[0]));
}

double delta_eo(const std::vector<int>& y_hat, const std::vector<int>& y,
                const std::vector<int>& a) {
    check_lengths(y_hat.size(), y.size());
    check_lengths(y_hat.size(), a.size());
    std::size_t n[2] = {0, 0}, tp[2] = {0, 0};
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (y[i] != 1) continue;
        ++n[a[i]];
        if (y_hat[i] == 1) ++tp[a[i]];
    }
    if (n[0] == 0 || n[1] == 0)
        throw std::invalid_argument("delta_eo: a group has no positives");
    return std::abs(double(tp[1]) / double(n[1]) - double(tp[0]) / double(n[0]));
}

FairnessReport evaluate(const std::vector<int>& y_hat, const std::vector<int>& y,
                        const std::vector<int>& a_true) {
    FairnessReport r;
    r.accuracy = accuracy(y_hat, y);
    r.f1 = f1_binary(y_hat, y);
    r.delta_dp = delta_dp(y_hat, a_true);
    r.delta_eo = delta_eo(y_hat, y, a_true);
    for (std::size_t i = 0; i < y.size(); ++i) ++r.group_counts[a_true[i]][y[i]];
    return r;
}

}  // namespace fairsp::metrics
