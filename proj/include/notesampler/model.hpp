#pragma once

// Built-in proxy classifier: hashed n-gram features + L2-regularized
// logistic regression trained by seeded SGD. Stands in for external scorers
// so the search loop runs end-to-end; external scores enter via the
// import boundary instead.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "notesampler/common.hpp"

namespace notesampler {

// Sparse term-frequency vector, entries sorted by index, no zero values.
struct FeatureVec {
    uint32_t dims = 0;
    std::vector<std::pair<uint32_t, double>> entries;
};

struct ModelHyperparams {
    uint32_t dims = 1u << 18;
    std::vector<int> ngram_orders = {1, 2};
    double lr0 = 0.1;
    double t_decay = 0.0;  // 0 -> use the training-set size
    int epochs = 5;
    double lambda = 1e-6;
    uint64_t seed = 42;
};

// Hashes every n-gram of every requested order: FNV-1a-64 over the n-gram's
// tokens joined with the unit separator 0x1F, masked to dims (power of two).
// Pad tokens are dropped before n-gram formation. Values are occurrence
// counts. Throws SchemaError when dims is not a power of two.
FeatureVec featurize(const std::vector<std::string>& tokens, uint32_t dims,
                     const std::vector<int>& ngram_orders,
                     std::string_view pad_token);
// Zero-copy variant for pre-tokenized buffers (token views must outlive the
// call only).
FeatureVec featurize(const std::vector<std::string_view>& tokens, uint32_t dims,
                     const std::vector<int>& ngram_orders,
                     std::string_view pad_token);

struct ProxyModel {
    uint32_t dims = 0;
    double bias = 0.0;
    std::vector<double> weights;  // dense, length dims
    ModelHyperparams hyperparams;

    // sigma(w . fv + bias), clamped strictly inside (0,1).
    double predict(const FeatureVec& fv) const;
};

// Per-sample objective: binary cross-entropy at (fv, y) plus lambda*||w||^2.
// grad_w is sparse: the data term on fv's indices plus 2*lambda*w on every
// index where either fv or w is nonzero. grad_b carries sigma(z) - y.
struct LossGrad {
    double loss = 0.0;
    std::vector<std::pair<uint32_t, double>> grad_w;
    double grad_b = 0.0;
};
LossGrad loss_and_grad(const ProxyModel& model, const FeatureVec& fv, int y);

// Seeded SGD: per-epoch reshuffle, lr_t = lr0 / (1 + t/T_decay) with a global
// step counter, sparse data-gradient steps, full L2 decay folded in at epoch
// boundaries. Deterministic in (inputs, hyperparams, seed). Throws
// std::runtime_error "degenerate training set" when fewer than one sample of
// each class is present.
ProxyModel train(const std::vector<FeatureVec>& features,
                 const std::vector<int>& labels,
                 const ModelHyperparams& hp, uint64_t seed);

// JSON round trip: {"dims","bias","weights_nonzero":[[index,value],...],
// "hyperparams":{...}}; weights_nonzero sorted by index.
void save_model_json(const ProxyModel& model, const std::string& path);
ProxyModel load_model_json(const std::string& path);

double sigmoid(double z);

}  // namespace notesampler
