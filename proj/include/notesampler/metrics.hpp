#pragma once

// Evaluation: exact rank-based AUC-ROC (ties at half weight) and percentile
// bootstrap confidence intervals with parallelism-invariant seeding.

#include <cstdint>
#include <string>
#include <vector>

#include "notesampler/common.hpp"

namespace notesampler {

struct ScoredPair {
    std::string record_id;
    int label = 0;        // 0 or 1
    double score = 0.0;   // in [0,1]
};

using ScoredSet = std::vector<ScoredPair>;

struct EvalReport {
    std::string config_id;
    double auc = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    size_t n_pos = 0;
    size_t n_neg = 0;
    size_t bootstrap_iters = 0;
    uint64_t seed = 0;
    uint64_t split_hash = 0;  // identifies the test split the scores came from
};

// Mann-Whitney AUC: fraction of (positive, negative) pairs where the positive
// scores higher, ties counting 0.5. Exact via average ranks. Throws
// std::runtime_error "AUC undefined" on single-class input.
double auc_roc(const ScoredSet& set);

// Percentile bootstrap over records: iters valid resamples (single-class
// draws are skipped and not counted), CI = (alpha/2, 1-alpha/2) percentiles
// with linear interpolation. Iteration i draws from Rng::stream(seed, i), so
// the result is independent of evaluation order. Throws std::runtime_error
// "insufficient bootstrap iterations" when iters < 100.
struct BootstrapCi {
    double low = 0.0;
    double high = 0.0;
};
BootstrapCi bootstrap_ci(const ScoredSet& set, size_t iters, double alpha,
                         uint64_t seed);

// Salted stream for the bootstrap so CI draws never collide with training
// draws made from the same evaluation seed.
uint64_t ci_seed(uint64_t eval_seed);

// Point estimate + CI (bootstrap runs on ci_seed(seed)); the report keeps the
// unsalted evaluation seed.
EvalReport make_report(const std::string& config_id, const ScoredSet& set,
                       size_t bootstrap_iters, double alpha, uint64_t seed,
                       uint64_t split_hash);

// auc_a - auc_b. Throws std::runtime_error "mismatched split hashes" when the
// reports come from different test splits.
double compare(const EvalReport& a, const EvalReport& b);

// Percentile with linear interpolation over a sorted sample; q in [0,1].
double percentile_sorted(const std::vector<double>& sorted, double q);

}  // namespace notesampler
