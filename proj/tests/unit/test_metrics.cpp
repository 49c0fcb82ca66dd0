#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <vector>

#include "fairsp/metrics.hpp"

using namespace fairsp;

TEST_CASE("accuracy hand values") {
    CHECK(metrics::accuracy({1, 0, 1, 1}, {1, 0, 0, 1}) == doctest::Approx(0.75));
    CHECK(metrics::accuracy({0, 0}, {0, 0}) == doctest::Approx(1.0));
    CHECK_THROWS(metrics::accuracy({1}, {1, 0}));
    CHECK_THROWS(metrics::accuracy({}, {}));
}

TEST_CASE("f1 hand values and degenerate cases") {
    // tp=2 fp=1 fn=1 -> precision 2/3, recall 2/3, f1 = 2/3
    CHECK(metrics::f1_binary({1, 1, 1, 0, 0}, {1, 1, 0, 1, 0}) ==
          doctest::Approx(2.0 / 3.0).epsilon(1e-9));
    // no predicted and no true positives -> 0 by convention
    CHECK(metrics::f1_binary({0, 0}, {0, 0}) == 0.0);
    CHECK(metrics::f1_binary({0, 0}, {1, 1}) == 0.0);
    CHECK(metrics::f1_binary({1, 1}, {1, 1}) == doctest::Approx(1.0));
}

TEST_CASE("delta_dp hand values") {
    // group a=0: rate 1/2; group a=1: rate 1 -> 0.5
    CHECK(metrics::delta_dp({1, 0, 1, 1}, {0, 0, 1, 1}) == doctest::Approx(0.5));
    // equal rates -> 0
    CHECK(metrics::delta_dp({1, 0, 1, 0}, {0, 0, 1, 1}) == doctest::Approx(0.0));
    CHECK_THROWS(metrics::delta_dp({1, 0}, {1, 1}));  // group 0 absent
}

TEST_CASE("delta_eo hand values") {
    // positives: a=0 -> TPR 1/2, a=1 -> TPR 1
    CHECK(metrics::delta_eo({1, 0, 1, 0}, {1, 1, 1, 0}, {0, 0, 1, 1}) ==
          doctest::Approx(0.5));
    CHECK(metrics::delta_eo({1, 1}, {1, 1}, {0, 1}) == doctest::Approx(0.0));
    // no positives in group 1
    CHECK_THROWS(metrics::delta_eo({1, 0}, {1, 0}, {0, 1}));
}

TEST_CASE("metrics are invariant to joint permutation") {
    std::mt19937_64 rng(4);
    std::vector<int> y_hat, y, a;
    for (int i = 0; i < 200; ++i) {
        y_hat.push_back(int(rng() % 2));
        y.push_back(int(rng() % 2));
        a.push_back(int(rng() % 2));
    }
    // ensure the throw conditions can't fire
    y[0] = 1; a[0] = 0; y[1] = 1; a[1] = 1;

    const auto base = metrics::evaluate(y_hat, y, a);
    std::vector<std::size_t> perm(y.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> y_hat2, y2, a2;
    for (auto i : perm) {
        y_hat2.push_back(y_hat[i]);
        y2.push_back(y[i]);
        a2.push_back(a[i]);
    }
    const auto perm_report = metrics::evaluate(y_hat2, y2, a2);
    CHECK(perm_report.accuracy == doctest::Approx(base.accuracy).epsilon(1e-12));
    CHECK(perm_report.f1 == doctest::Approx(base.f1).epsilon(1e-12));
    CHECK(perm_report.delta_dp == doctest::Approx(base.delta_dp).epsilon(1e-12));
    CHECK(perm_report.delta_eo == doctest::Approx(base.delta_eo).epsilon(1e-12));

    // gap metrics are symmetric in the group labels
    std::vector<int> a_swapped;
    for (int v : a) a_swapped.push_back(1 - v);
    CHECK(metrics::delta_dp(y_hat, a_swapped) ==
          doctest::Approx(base.delta_dp).epsilon(1e-12));
    CHECK(metrics::delta_eo(y_hat, y, a_swapped) ==
          doctest::Approx(base.delta_eo).epsilon(1e-12));
}

TEST_CASE("evaluate fills group counts") {
    const auto r = metrics::evaluate({1, 0, 1, 0}, {1, 1, 1, 0}, {0, 0, 1, 1});
    CHECK(r.group_counts[0][1] == 2);
    CHECK(r.group_counts[1][1] == 1);
    CHECK(r.group_counts[1][0] == 1);
}
