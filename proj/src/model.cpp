#include "notesampler/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

namespace notesampler {

using ordered_json = nlohmann::ordered_json;

namespace {

constexpr unsigned char kNgramSeparator = 0x1F;  // unit separator
constexpr double kLogFloor = 1e-12;
// Largest double strictly below 1; predict() clamps into
// [DBL_MIN, kBelowOne] so callers always get a value in the open interval.
constexpr double kBelowOne = 0.99999999999999989;

template <typename TokenRange>
FeatureVec featurize_impl(const TokenRange& tokens, uint32_t dims,
                          const std::vector<int>& ngram_orders,
                          std::string_view pad_token) {
    if (dims == 0 || (dims & (dims - 1)) != 0)
        throw SchemaError("feature dims must be a power of two");

    std::vector<std::string_view> content;
    content.reserve(tokens.size());
    for (const auto& t : tokens) {
        std::string_view v(t);
        if (v != pad_token) content.push_back(v);
    }

    std::vector<uint32_t> indices;
    for (int order : ngram_orders) {
        if (order <= 0) throw SchemaError("ngram orders must be positive");
        const size_t ord = static_cast<size_t>(order);
        if (content.size() < ord) continue;
        indices.reserve(indices.size() + content.size() - ord + 1);
        for (size_t i = 0; i + ord <= content.size(); ++i) {
            Fnv1a64 h;
            for (size_t j = 0; j < ord; ++j) {
                if (j) h.update_byte(kNgramSeparator);
                h.update(content[i + j]);
            }
            indices.push_back(static_cast<uint32_t>(h.digest() & (dims - 1)));
        }
    }
    std::sort(indices.begin(), indices.end());

    FeatureVec fv;
    fv.dims = dims;
    for (size_t i = 0; i < indices.size();) {
        size_t j = i;
        while (j < indices.size() && indices[j] == indices[i]) ++j;
        fv.entries.emplace_back(indices[i], static_cast<double>(j - i));
        i = j;
    }
    return fv;
}

double dot_with(const std::vector<double>& weights, const FeatureVec& fv) {
    double z = 0.0;
    for (const auto& [i, v] : fv.entries) z += weights[i] * v;
    return z;
}

void check_dims(const ProxyModel& model, const FeatureVec& fv) {
    if (fv.dims != model.dims)
        throw std::runtime_error("feature dims " + std::to_string(fv.dims) +
                                 " do not match model dims " +
                                 std::to_string(model.dims));
}

}  // namespace

FeatureVec featurize(const std::vector<std::string>& tokens, uint32_t dims,
                     const std::vector<int>& ngram_orders,
                     std::string_view pad_token) {
    return featurize_impl(tokens, dims, ngram_orders, pad_token);
}

FeatureVec featurize(const std::vector<std::string_view>& tokens, uint32_t dims,
                     const std::vector<int>& ngram_orders,
                     std::string_view pad_token) {
    return featurize_impl(tokens, dims, ngram_orders, pad_token);
}

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

double ProxyModel::predict(const FeatureVec& fv) const {
    check_dims(*this, fv);
    double p = sigmoid(dot_with(weights, fv) + bias);
    return std::min(std::max(p, std::numeric_limits<double>::min()), kBelowOne);
}

LossGrad loss_and_grad(const ProxyModel& model, const FeatureVec& fv, int y) {
    check_dims(model, fv);
    const double lambda = model.hyperparams.lambda;
    const double z = dot_with(model.weights, fv) + model.bias;
    const double p = sigmoid(z);

    double reg = 0.0;
    for (double w : model.weights) reg += w * w;

    LossGrad out;
    out.loss = -(y ? std::log(std::max(p, kLogFloor))
                   : std::log(std::max(1.0 - p, kLogFloor))) +
               lambda * reg;
    out.grad_b = p - static_cast<double>(y);

    // Data term on the feature's indices, regularizer term on every index
    // with nonzero weight; merge sparsely.
    std::vector<std::pair<uint32_t, double>> grad;
    grad.reserve(fv.entries.size());
    for (const auto& [i, v] : fv.entries)
        grad.emplace_back(i, (p - static_cast<double>(y)) * v);
    for (uint32_t i = 0; i < model.dims; ++i)
        if (model.weights[i] != 0.0) grad.emplace_back(i, 2.0 * lambda * model.weights[i]);
    std::sort(grad.begin(), grad.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [i, g] : grad) {
        if (!out.grad_w.empty() && out.grad_w.back().first == i)
            out.grad_w.back().second += g;
        else
            out.grad_w.emplace_back(i, g);
    }
    return out;
}

ProxyModel train(const std::vector<FeatureVec>& features,
                 const std::vector<int>& labels,
                 const ModelHyperparams& hp, uint64_t seed) {
    if (features.size() != labels.size())
        throw std::runtime_error("features/labels size mismatch");
    size_t n_pos = 0, n_neg = 0;
    for (int y : labels) (y ? n_pos : n_neg)++;
    if (n_pos == 0 || n_neg == 0)
        throw std::runtime_error("degenerate training set");
    if (hp.dims == 0 || (hp.dims & (hp.dims - 1)) != 0)
        throw SchemaError("feature dims must be a power of two");
    for (const auto& fv : features)
        if (fv.dims != hp.dims)
            throw std::runtime_error("feature dims do not match model dims");
    if (hp.epochs <= 0) throw SchemaError("epochs must be positive");
    if (!(hp.lr0 > 0.0)) throw SchemaError("lr0 must be positive");

    ProxyModel model;
    model.dims = hp.dims;
    model.weights.assign(hp.dims, 0.0);
    model.hyperparams = hp;
    model.hyperparams.seed = seed;
    const double t_decay =
        hp.t_decay > 0.0 ? hp.t_decay : static_cast<double>(features.size());
    model.hyperparams.t_decay = t_decay;

    std::vector<size_t> order(features.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    Rng rng(seed);
    size_t step = 0;
    for (int epoch = 0; epoch < hp.epochs; ++epoch) {
        rng.shuffle(order);
        double epoch_lr = 0.0;
        for (size_t idx : order) {
            const FeatureVec& fv = features[idx];
            const double lr =
                hp.lr0 / (1.0 + static_cast<double>(step) / t_decay);
            ++step;
            epoch_lr += lr;
            const double p = sigmoid(dot_with(model.weights, fv) + model.bias);
            const double g = p - static_cast<double>(labels[idx]);
            for (const auto& [i, v] : fv.entries) model.weights[i] -= lr * g * v;
            model.bias -= lr * g;
        }
        // L2 decay folded in once per epoch using the accumulated rate
        // (documented approximation of per-step shrinkage; bias exempt).
        const double factor = std::max(0.0, 1.0 - 2.0 * hp.lambda * epoch_lr);
        if (factor != 1.0)
            for (double& w : model.weights) w *= factor;
    }

    for (double w : model.weights)
        if (!std::isfinite(w))
            throw std::runtime_error("training diverged: non-finite weights");
    if (!std::isfinite(model.bias))
        throw std::runtime_error("training diverged: non-finite bias");
    return model;
}

void save_model_json(const ProxyModel& model, const std::string& path) {
    ordered_json obj;
    obj["dims"] = model.dims;
    obj["bias"] = model.bias;
    ordered_json wnz = ordered_json::array();
    for (uint32_t i = 0; i < model.dims; ++i)
        if (model.weights[i] != 0.0)
            wnz.push_back(ordered_json::array({i, model.weights[i]}));
    obj["weights_nonzero"] = std::move(wnz);
    ordered_json hyper;
    hyper["dims"] = model.hyperparams.dims;
    hyper["ngram_orders"] = model.hyperparams.ngram_orders;
    hyper["lr0"] = model.hyperparams.lr0;
    hyper["t_decay"] = model.hyperparams.t_decay;
    hyper["epochs"] = model.hyperparams.epochs;
    hyper["lambda"] = model.hyperparams.lambda;
    hyper["seed"] = model.hyperparams.seed;
    obj["hyperparams"] = std::move(hyper);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write model file: " + path);
    out << obj.dump(2) << '\n';
    if (!out) throw std::runtime_error("write failed: " + path);
}

ProxyModel load_model_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SchemaError("cannot open model file: " + path);
    ordered_json obj;
    try {
        in >> obj;
    } catch (const ordered_json::parse_error& e) {
        throw SchemaError("invalid model JSON: " + std::string(e.what()));
    }
    try {
        ProxyModel model;
        model.dims = obj.at("dims").get<uint32_t>();
        if (model.dims == 0 || (model.dims & (model.dims - 1)) != 0)
            throw SchemaError("feature dims must be a power of two");
        model.bias = obj.at("bias").get<double>();
        model.weights.assign(model.dims, 0.0);
        for (const auto& pair : obj.at("weights_nonzero")) {
            uint32_t i = pair.at(0).get<uint32_t>();
            if (i >= model.dims)
                throw SchemaError("weight index out of range: " + std::to_string(i));
            model.weights[i] = pair.at(1).get<double>();
        }
        const auto& hyper = obj.at("hyperparams");
        ModelHyperparams hp;
        hp.dims = hyper.at("dims").get<uint32_t>();
        if (hp.dims != model.dims)
            throw SchemaError("hyperparams dims disagree with model dims");
        hp.ngram_orders = hyper.at("ngram_orders").get<std::vector<int>>();
        hp.lr0 = hyper.at("lr0").get<double>();
        hp.t_decay = hyper.at("t_decay").get<double>();
        hp.epochs = hyper.at("epochs").get<int>();
        hp.lambda = hyper.at("lambda").get<double>();
        hp.seed = hyper.at("seed").get<uint64_t>();
        model.hyperparams = hp;
        return model;
    } catch (const ordered_json::exception& e) {
        throw SchemaError("invalid model JSON: " + std::string(e.what()));
    }
}

}  // namespace notesampler
