#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "notesampler/common.hpp"
#include "notesampler/metrics.hpp"

using namespace notesampler;

namespace {

ScoredSet make_set(const std::vector<int>& labels, const std::vector<double>& scores) {
    ScoredSet set;
    for (size_t i = 0; i < labels.size(); ++i)
        set.push_back({"r" + std::to_string(i), labels[i], scores[i]});
    return set;
}

// O(n_pos * n_neg) reference: wins + half-ties over all pairs.
double brute_force_auc(const ScoredSet& set) {
    double wins = 0.0;
    size_t pairs = 0;
    for (const auto& p : set) {
        if (p.label != 1) continue;
        for (const auto& n : set) {
            if (n.label != 0) continue;
            ++pairs;
            if (p.score > n.score) wins += 1.0;
            else if (p.score == n.score) wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

ScoredSet random_set(Rng& rng, size_t max_n, bool tie_heavy) {
    for (;;) {
        size_t n = 2 + rng.next_below(max_n - 1);
        ScoredSet set;
        bool has_pos = false, has_neg = false;
        for (size_t i = 0; i < n; ++i) {
            int label = rng.next_bool(0.5) ? 1 : 0;
            double score = tie_heavy
                               ? static_cast<double>(rng.next_below(4)) / 3.0
                               : rng.next_double();
            set.push_back({"r" + std::to_string(i), label, score});
            (label ? has_pos : has_neg) = true;
        }
        if (has_pos && has_neg) return set;
    }
}

}  // namespace

TEST_CASE("auc_roc matches the textbook example") {
    ScoredSet set = make_set({1, 1, 0, 0}, {0.8, 0.35, 0.4, 0.1});
    CHECK(auc_roc(set) == doctest::Approx(0.75).epsilon(1e-15));

    // All ties -> exactly 0.5.
    CHECK(auc_roc(make_set({1, 0, 1, 0}, {0.3, 0.3, 0.3, 0.3})) == 0.5);
    // Perfect separation.
    CHECK(auc_roc(make_set({0, 1}, {0.2, 0.9})) == 1.0);
    CHECK(auc_roc(make_set({0, 1}, {0.9, 0.2})) == 0.0);
}

TEST_CASE("auc_roc equals brute force on random sets") {
    Rng rng(21);
    for (int trial = 0; trial < 1000; ++trial) {
        ScoredSet set = random_set(rng, 50, trial % 2 == 1);
        CHECK(auc_roc(set) == doctest::Approx(brute_force_auc(set)).epsilon(1e-12));
    }
}

TEST_CASE("auc_roc is invariant under monotone transforms") {
    Rng rng(22);
    for (int trial = 0; trial < 200; ++trial) {
        ScoredSet set = random_set(rng, 30, false);
        ScoredSet cubed = set;
        for (auto& p : cubed) p.score = p.score * p.score * p.score;
        CHECK(auc_roc(set) == doctest::Approx(auc_roc(cubed)).epsilon(1e-12));
    }
}

TEST_CASE("auc_roc rejects single-class input") {
    CHECK_THROWS_WITH_AS(auc_roc(make_set({1, 1}, {0.1, 0.2})), "AUC undefined",
                         std::runtime_error);
    CHECK_THROWS_WITH_AS(auc_roc(make_set({0}, {0.1})), "AUC undefined",
                         std::runtime_error);
    CHECK_THROWS_WITH_AS(auc_roc({}), "AUC undefined", std::runtime_error);
}

TEST_CASE("percentile_sorted interpolates linearly") {
    std::vector<double> v = {1.0, 2.0, 3.0, 4.0};
    CHECK(percentile_sorted(v, 0.5) == doctest::Approx(2.5).epsilon(1e-15));
    CHECK(percentile_sorted(v, 0.0) == 1.0);
    CHECK(percentile_sorted(v, 1.0) == 4.0);
    CHECK(percentile_sorted(v, 0.25) == doctest::Approx(1.75).epsilon(1e-15));
    CHECK(percentile_sorted({7.0}, 0.3) == 7.0);
}

TEST_CASE("bootstrap_ci is deterministic and order-invariant") {
    Rng rng(23);
    ScoredSet set = random_set(rng, 40, false);

    BootstrapCi a = bootstrap_ci(set, 200, 0.05, 77);
    BootstrapCi b = bootstrap_ci(set, 200, 0.05, 77);
    CHECK(a.low == b.low);
    CHECK(a.high == b.high);

    BootstrapCi c = bootstrap_ci(set, 200, 0.05, 78);
    CHECK((a.low != c.low || a.high != c.high));

    CHECK(a.low <= a.high);
    // 95% CI from 200 resamples of a 40-record set brackets the estimate.
    double point = auc_roc(set);
    CHECK(a.low <= point);
    CHECK(a.high >= point);
}

TEST_CASE("bootstrap_ci contains the point estimate across instances") {
    Rng rng(24);
    for (int trial = 0; trial < 25; ++trial) {
        ScoredSet set = random_set(rng, 60, trial % 3 == 0);
        double point = auc_roc(set);
        BootstrapCi ci = bootstrap_ci(set, 300, 0.05, trial);
        CHECK(ci.low <= point + 1e-12);
        CHECK(ci.high >= point - 1e-12);
    }
}

TEST_CASE("bootstrap_ci validates its arguments") {
    ScoredSet set = make_set({1, 0, 1, 0}, {0.9, 0.1, 0.8, 0.2});
    CHECK_THROWS_WITH_AS(bootstrap_ci(set, 99, 0.05, 1),
                         "insufficient bootstrap iterations", std::runtime_error);
    CHECK_NOTHROW(bootstrap_ci(set, 100, 0.05, 1));
    CHECK_THROWS_AS(bootstrap_ci(set, 200, 0.0, 1), SchemaError);
    CHECK_THROWS_AS(bootstrap_ci(set, 200, 1.0, 1), SchemaError);
}

TEST_CASE("degenerate scores give a degenerate interval") {
    // Every resample of an all-tied set has AUC exactly 0.5.
    ScoredSet tied = make_set({1, 0, 1, 0, 1, 0}, {0.4, 0.4, 0.4, 0.4, 0.4, 0.4});
    BootstrapCi ci = bootstrap_ci(tied, 150, 0.05, 5);
    CHECK(ci.low == 0.5);
    CHECK(ci.high == 0.5);
}

TEST_CASE("make_report wires the salted bootstrap seed") {
    Rng rng(25);
    ScoredSet set = random_set(rng, 50, false);
    EvalReport r = make_report("cfg_a", set, 250, 0.1, 1234, 0xfeedULL);

    CHECK(r.config_id == "cfg_a");
    CHECK(r.auc == doctest::Approx(auc_roc(set)).epsilon(1e-15));
    CHECK(r.seed == 1234);  // unsalted seed is what gets reported
    CHECK(r.split_hash == 0xfeedULL);
    CHECK(r.bootstrap_iters == 250);

    size_t n_pos = 0, n_neg = 0;
    for (const auto& p : set) (p.label ? n_pos : n_neg) += 1;
    CHECK(r.n_pos == n_pos);
    CHECK(r.n_neg == n_neg);

    BootstrapCi want = bootstrap_ci(set, 250, 0.1, ci_seed(1234));
    CHECK(r.ci_low == want.low);
    CHECK(r.ci_high == want.high);

    // The salt actually changes the stream.
    CHECK(ci_seed(1234) != 1234);
    CHECK(ci_seed(1234) == ci_seed(1234));
}

TEST_CASE("compare subtracts AUCs and guards the split") {
    ScoredSet set_a = make_set({1, 0, 1, 0}, {0.9, 0.1, 0.8, 0.2});
    ScoredSet set_b = make_set({1, 0, 1, 0}, {0.6, 0.4, 0.3, 0.7});
    EvalReport a = make_report("a", set_a, 100, 0.05, 1, 42);
    EvalReport b = make_report("b", set_b, 100, 0.05, 1, 42);
    CHECK(compare(a, b) == doctest::Approx(a.auc - b.auc).epsilon(1e-15));

    EvalReport other = make_report("c", set_b, 100, 0.05, 1, 43);
    CHECK_THROWS_WITH_AS(compare(a, other), "mismatched split hashes",
                         std::runtime_error);
}
