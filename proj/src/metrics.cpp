#include "notesampler/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace notesampler {

namespace {

void count_classes(const ScoredSet& set, size_t& n_pos, size_t& n_neg) {
    n_pos = n_neg = 0;
    for (const auto& p : set) (p.label ? n_pos : n_neg)++;
}

}  // namespace

double auc_roc(const ScoredSet& set) {
    size_t n_pos, n_neg;
    count_classes(set, n_pos, n_neg);
    if (n_pos == 0 || n_neg == 0) throw std::runtime_error("AUC undefined");

    // Mann-Whitney via rank sums with average ranks on ties.
    std::vector<size_t> order(set.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return set[a].score < set[b].score;
    });

    double pos_rank_sum = 0.0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j < order.size() && set[order[j]].score == set[order[i]].score) ++j;
        // 1-based ranks i+1 .. j share the average (i + j + 1) / 2.
        double avg_rank = (static_cast<double>(i) + static_cast<double>(j) + 1.0) / 2.0;
        for (size_t k = i; k < j; ++k)
            if (set[order[k]].label) pos_rank_sum += avg_rank;
        i = j;
    }
    double u = pos_rank_sum -
               static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double percentile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) throw std::runtime_error("percentile of empty sample");
    if (q <= 0.0) return sorted.front();
    if (q >= 1.0) return sorted.back();
    double h = q * static_cast<double>(sorted.size() - 1);
    size_t lo = static_cast<size_t>(h);
    double frac = h - static_cast<double>(lo);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

uint64_t ci_seed(uint64_t eval_seed) {
    return mix64(eval_seed ^ fnv1a64("bootstrap"));
}

BootstrapCi bootstrap_ci(const ScoredSet& set, size_t iters, double alpha,
                         uint64_t seed) {
    if (iters < 100)
        throw std::runtime_error("insufficient bootstrap iterations");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw SchemaError("alpha must be in (0,1)");
    size_t n_pos, n_neg;
    count_classes(set, n_pos, n_neg);
    if (n_pos == 0 || n_neg == 0) throw std::runtime_error("AUC undefined");

    const size_t m = set.size();

    // Resampled AUC only needs per-record multiplicities: sort once by score,
    // then each resample is one pass over the tie groups.
    std::vector<size_t> order(m);
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return set[a].score < set[b].score;
    });

    std::vector<uint32_t> counts(m);
    std::vector<double> aucs;
    aucs.reserve(iters);
    // Single-class resamples are skipped without counting toward iters; the
    // attempt cap only trips on pathologically unbalanced sets.
    const size_t max_attempts = 10 * iters + 1000;
    size_t attempt = 0;
    while (aucs.size() < iters) {
        if (attempt >= max_attempts)
            throw std::runtime_error(
                "bootstrap exceeded attempt cap: resamples keep drawing a single class");
        Rng rng = Rng::stream(seed, attempt);
        ++attempt;

        std::fill(counts.begin(), counts.end(), 0u);
        for (size_t k = 0; k < m; ++k)
            counts[rng.next_below(m)] += 1;

        // One pass over ascending scores: tie group contributes
        // pos_in_group * negs_below + half the in-group pos*neg pairs.
        double u = 0.0;
        double pos_total = 0.0, neg_below = 0.0;
        size_t i = 0;
        while (i < m) {
            size_t j = i;
            double group_pos = 0.0, group_neg = 0.0;
            while (j < m && set[order[j]].score == set[order[i]].score) {
                double c = counts[order[j]];
                if (set[order[j]].label) group_pos += c;
                else group_neg += c;
                ++j;
            }
            u += group_pos * neg_below + 0.5 * group_pos * group_neg;
            pos_total += group_pos;
            neg_below += group_neg;
            i = j;
        }
        if (pos_total == 0.0 || neg_below == 0.0) continue;  // single-class draw
        aucs.push_back(u / (pos_total * neg_below));
    }

    std::sort(aucs.begin(), aucs.end());
    BootstrapCi ci;
    ci.low = percentile_sorted(aucs, alpha / 2.0);
    ci.high = percentile_sorted(aucs, 1.0 - alpha / 2.0);
    return ci;
}

EvalReport make_report(const std::string& config_id, const ScoredSet& set,
                       size_t bootstrap_iters, double alpha, uint64_t seed,
                       uint64_t split_hash) {
    EvalReport report;
    report.config_id = config_id;
    report.auc = auc_roc(set);
    BootstrapCi ci = bootstrap_ci(set, bootstrap_iters, alpha, ci_seed(seed));
    report.ci_low = ci.low;
    report.ci_high = ci.high;
    count_classes(set, report.n_pos, report.n_neg);
    report.bootstrap_iters = bootstrap_iters;
    report.seed = seed;
    report.split_hash = split_hash;
    return report;
}

double compare(const EvalReport& a, const EvalReport& b) {
    if (a.split_hash != b.split_hash)
        throw std::runtime_error("mismatched split hashes");
    return a.auc - b.auc;
}

}  // namespace notesampler
