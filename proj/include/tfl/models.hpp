#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "tfl/params.hpp"
#include "tfl/rng.hpp"

namespace tfl {

enum class ModelKind {
    kLinearRegression,   // affine map trained with MSE
    kSoftmaxClassifier,  // affine logits trained with cross-entropy
    kMlp1,               // one hidden layer; loss follows the task
};

enum class Activation {
    kRelu,
    kTanh,
};

struct ModelSpec {
    ModelKind kind = ModelKind::kLinearRegression;
    std::size_t input_dim = 1;
    std::size_t output_dim = 1;
    std::size_t hidden_dim = 0;              // mlp1 only
    Activation activation = Activation::kRelu;  // mlp1 only
};

enum class Task {
    kClassification,  // integer class ids, accuracy metric
    kRegression,      // real targets, mse metric
    kBinary,          // two classes, roc-auc metric
};

// Mini-batch view: feature rows and matching target rows (targets have 1 column
// holding the class id for classification/binary, output_dim columns for regression).
struct Batch {
    const std::vector<std::vector<double>>* features = nullptr;
    const std::vector<std::vector<double>>* targets = nullptr;
    const std::vector<std::size_t>* indices = nullptr;  // nullptr = whole dataset
    Task task = Task::kClassification;

    std::size_t size() const { return indices ? indices->size() : features->size(); }
    std::size_t row(std::size_t i) const { return indices ? (*indices)[i] : i; }
};

struct LocalTrainConfig {
    std::size_t epochs = 1;
    std::size_t batch_size = 32;
    double eta_theta = 0.01;
    double prox_mu = 0.0;  // FedProx proximal strength; 0 disables the term
    std::uint64_t seed = 0;
};

struct LocalTrainResult {
    ParameterVector params;
    double train_loss = 0.0;  // mean mini-batch loss over the last epoch
};

namespace detail {

inline bool classification_task(Task t) { return t != Task::kRegression; }

inline void check_spec(const ModelSpec& spec) {
    if (spec.input_dim == 0 || spec.output_dim == 0)
        throw std::invalid_argument("model: input_dim and output_dim must be positive");
    if (spec.kind == ModelKind::kMlp1 && spec.hidden_dim == 0)
        throw std::invalid_argument("model: mlp1 needs hidden_dim >= 1");
    if (spec.kind == ModelKind::kSoftmaxClassifier && spec.output_dim < 2)
        throw std::invalid_argument("model: softmax classifier needs >= 2 classes");
}

inline Task loss_task(const ModelSpec& spec, const Batch& batch) {
    switch (spec.kind) {
        case ModelKind::kLinearRegression:
            if (classification_task(batch.task))
                throw std::invalid_argument("model: linear_regression expects a regression task");
            return Task::kRegression;
        case ModelKind::kSoftmaxClassifier:
            if (!classification_task(batch.task))
                throw std::invalid_argument("model: softmax_classifier expects a classification task");
            return batch.task;
        case ModelKind::kMlp1:
            return batch.task;
    }
    throw std::logic_error("model: unknown kind");
}

inline double act(Activation a, double z) {
    return a == Activation::kRelu ? (z > 0.0 ? z : 0.0) : std::tanh(z);
}

inline double act_grad(Activation a, double z) {
    if (a == Activation::kRelu) return z > 0.0 ? 1.0 : 0.0;
    const double t = std::tanh(z);
    return 1.0 - t * t;
}

}  // namespace detail

// Uniform init in [-s, s] with s = 1/sqrt(fan_in) per layer.
// Layer order: w0, b0 for affine models; w0, b0, w1, b1 for mlp1. Weights are row-major [out][in].
inline ParameterVector init_params(const ModelSpec& spec, std::uint64_t seed) {
    detail::check_spec(spec);
    Rng rng(seed);
    ParameterVector p;
    auto add_layer = [&](const std::string& name, std::size_t size, double scale) {
        p.layers.push_back(LayerSpan{name, p.values.size(), size});
        for (std::size_t i = 0; i < size; ++i) p.values.push_back(rng.uniform(-scale, scale));
    };
    if (spec.kind == ModelKind::kMlp1) {
        const double s0 = 1.0 / std::sqrt(static_cast<double>(spec.input_dim));
        const double s1 = 1.0 / std::sqrt(static_cast<double>(spec.hidden_dim));
        add_layer("w0", spec.hidden_dim * spec.input_dim, s0);
        add_layer("b0", spec.hidden_dim, s0);
        add_layer("w1", spec.output_dim * spec.hidden_dim, s1);
        add_layer("b1", spec.output_dim, s1);
    } else {
        const double s0 = 1.0 / std::sqrt(static_cast<double>(spec.input_dim));
        add_layer("w0", spec.output_dim * spec.input_dim, s0);
        add_layer("b0", spec.output_dim, s0);
    }
    return p;
}

inline std::size_t param_count(const ModelSpec& spec) {
    if (spec.kind == ModelKind::kMlp1)
        return spec.hidden_dim * (spec.input_dim + 1) + spec.output_dim * (spec.hidden_dim + 1);
    return spec.output_dim * (spec.input_dim + 1);
}

// Model outputs for one sample: logits for classifiers, predictions for regression.
// For mlp1, out-param z0 receives hidden pre-activations when non-null (backprop reuse).
inline void forward(const ModelSpec& spec, const ParameterVector& p,
                    const std::vector<double>& x, std::vector<double>& out,
                    std::vector<double>* z0 = nullptr) {
    if (x.size() != spec.input_dim)
        throw std::invalid_argument("model: feature dimension mismatch");
    if (spec.kind == ModelKind::kMlp1) {
        const std::size_t h = spec.hidden_dim, in = spec.input_dim, o = spec.output_dim;
        const double* w0 = p.values.data() + p.layer("w0").offset;
        const double* b0 = p.values.data() + p.layer("b0").offset;
        const double* w1 = p.values.data() + p.layer("w1").offset;
        const double* b1 = p.values.data() + p.layer("b1").offset;
        std::vector<double> pre(h);
        for (std::size_t j = 0; j < h; ++j) {
            double z = b0[j];
            for (std::size_t i = 0; i < in; ++i) z += w0[j * in + i] * x[i];
            pre[j] = z;
        }
        out.assign(o, 0.0);
        for (std::size_t j = 0; j < o; ++j) {
            double z = b1[j];
            for (std::size_t i = 0; i < h; ++i) z += w1[j * h + i] * detail::act(spec.activation, pre[i]);
            out[j] = z;
        }
        if (z0) *z0 = std::move(pre);
    } else {
        const std::size_t in = spec.input_dim, o = spec.output_dim;
        const double* w0 = p.values.data() + p.layer("w0").offset;
        const double* b0 = p.values.data() + p.layer("b0").offset;
        out.assign(o, 0.0);
        for (std::size_t j = 0; j < o; ++j) {
            double z = b0[j];
            for (std::size_t i = 0; i < in; ++i) z += w0[j * in + i] * x[i];
            out[j] = z;
        }
    }
}

// Class probabilities via max-shifted softmax over the model's logits.
inline std::vector<double> predict_proba(const ModelSpec& spec, const ParameterVector& p,
                                         const std::vector<double>& x) {
    std::vector<double> z;
    forward(spec, p, x, z);
    const double m = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (auto& v : z) {
        v = std::exp(v - m);
        sum += v;
    }
    for (auto& v : z) v /= sum;
    return z;
}

namespace detail {

// Cross-entropy of one sample given logits, stabilized by log-sum-exp.
inline double ce_sample(const std::vector<double>& z, std::size_t label) {
    if (label >= z.size()) throw std::invalid_argument("model: class label out of range");
    const double m = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - m);
    return m + std::log(sum) - z[label];
}

inline std::size_t class_id(const Batch& batch, std::size_t row) {
    const auto& t = (*batch.targets)[row];
    if (t.size() != 1) throw std::invalid_argument("model: classification targets must have 1 column");
    const double v = t[0];
    if (v < 0.0 || v != std::floor(v))
        throw std::invalid_argument("model: class label must be a nonnegative integer");
    return static_cast<std::size_t>(v);
}

}  // namespace detail

// Mean loss over the batch: MSE (mean over samples and outputs, no 1/2 factor) for
// regression, cross-entropy for classification.
inline double loss(const ModelSpec& spec, const ParameterVector& p, const Batch& batch) {
    detail::check_spec(spec);
    if (batch.size() == 0) throw std::invalid_argument("model: empty batch");
    const Task task = detail::loss_task(spec, batch);
    const std::size_t n = batch.size();
    double total = 0.0;
    std::vector<double> out;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t r = batch.row(i);
        forward(spec, p, (*batch.features)[r], out);
        if (task == Task::kRegression) {
            const auto& y = (*batch.targets)[r];
            if (y.size() != spec.output_dim)
                throw std::invalid_argument("model: target dimension mismatch");
            for (std::size_t j = 0; j < out.size(); ++j) {
                const double d = out[j] - y[j];
                total += d * d;
            }
        } else {
            total += detail::ce_sample(out, detail::class_id(batch, r));
        }
    }
    if (task == Task::kRegression)
        return total / (static_cast<double>(n) * static_cast<double>(spec.output_dim));
    return total / static_cast<double>(n);
}

// Analytic gradient of loss() w.r.t. every parameter, same flat layout as p.
inline ParameterVector gradient(const ModelSpec& spec, const ParameterVector& p,
                                const Batch& batch) {
    detail::check_spec(spec);
    if (batch.size() == 0) throw std::invalid_argument("model: empty batch");
    const Task task = detail::loss_task(spec, batch);
    const std::size_t n = batch.size();
    ParameterVector g;
    g.layers = p.layers;
    g.values.assign(p.values.size(), 0.0);

    const std::size_t in = spec.input_dim, o = spec.output_dim;
    std::vector<double> out, z0, gz(o);
    for (std::size_t s = 0; s < n; ++s) {
        const std::size_t r = batch.row(s);
        const auto& x = (*batch.features)[r];
        forward(spec, p, x, out, spec.kind == ModelKind::kMlp1 ? &z0 : nullptr);

        // d(loss)/d(output j) for this sample, including the 1/n (and 1/o for MSE) factors.
        if (task == Task::kRegression) {
            const auto& y = (*batch.targets)[r];
            if (y.size() != o) throw std::invalid_argument("model: target dimension mismatch");
            const double scale = 2.0 / (static_cast<double>(n) * static_cast<double>(o));
            for (std::size_t j = 0; j < o; ++j) gz[j] = scale * (out[j] - y[j]);
        } else {
            const std::size_t label = detail::class_id(batch, r);
            const double m = *std::max_element(out.begin(), out.end());
            double sum = 0.0;
            for (double v : out) sum += std::exp(v - m);
            for (std::size_t j = 0; j < o; ++j)
                gz[j] = (std::exp(out[j] - m) / sum - (j == label ? 1.0 : 0.0)) /
                        static_cast<double>(n);
        }

        if (spec.kind == ModelKind::kMlp1) {
            const std::size_t h = spec.hidden_dim;
            const double* w1 = p.values.data() + p.layer("w1").offset;
            double* gw0 = g.values.data() + g.layer("w0").offset;
            double* gb0 = g.values.data() + g.layer("b0").offset;
            double* gw1 = g.values.data() + g.layer("w1").offset;
            double* gb1 = g.values.data() + g.layer("b1").offset;
            for (std::size_t j = 0; j < o; ++j) {
                gb1[j] += gz[j];
                for (std::size_t i = 0; i < h; ++i)
                    gw1[j * h + i] += gz[j] * detail::act(spec.activation, z0[i]);
            }
            for (std::size_t i = 0; i < h; ++i) {
                double gh = 0.0;
                for (std::size_t j = 0; j < o; ++j) gh += w1[j * h + i] * gz[j];
                const double gzi = gh * detail::act_grad(spec.activation, z0[i]);
                gb0[i] += gzi;
                for (std::size_t d = 0; d < in; ++d) gw0[i * in + d] += gzi * x[d];
            }
        } else {
            double* gw0 = g.values.data() + g.layer("w0").offset;
            double* gb0 = g.values.data() + g.layer("b0").offset;
            for (std::size_t j = 0; j < o; ++j) {
                gb0[j] += gz[j];
                for (std::size_t d = 0; d < in; ++d) gw0[j * in + d] += gz[j] * x[d];
            }
        }
    }
    return g;
}

// Seeded mini-batch SGD: cfg.epochs passes of a fresh shuffled order, optional FedProx
// proximal pull toward anchor (prox_mu > 0). Returns trained params and the mean
// pre-step mini-batch loss over the last epoch (full-data loss when epochs == 0).
inline LocalTrainResult local_train(const ModelSpec& spec, const ParameterVector& start,
                                    const std::vector<std::vector<double>>& features,
                                    const std::vector<std::vector<double>>& targets, Task task,
                                    const LocalTrainConfig& cfg,
                                    const ParameterVector* anchor = nullptr) {
    detail::check_spec(spec);
    if (features.empty()) throw std::invalid_argument("local_train: empty dataset");
    if (features.size() != targets.size())
        throw std::invalid_argument("local_train: features/targets size mismatch");
    if (cfg.batch_size == 0) throw std::invalid_argument("local_train: batch_size must be >= 1");
    if (cfg.prox_mu > 0.0 && anchor == nullptr)
        throw std::invalid_argument("local_train: prox_mu > 0 needs an anchor");
    if (anchor && !anchor->same_layout(start))
        throw std::invalid_argument("local_train: anchor layout mismatch");

    LocalTrainResult result{start, 0.0};
    if (cfg.epochs == 0) {
        Batch all{&features, &targets, nullptr, task};
        result.train_loss = loss(spec, start, all);
        return result;
    }

    Rng rng(cfg.seed);
    std::vector<std::size_t> order(features.size());
    std::iota(order.begin(), order.end(), 0);
    double epoch_loss = 0.0;
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
        rng.shuffle(order);
        epoch_loss = 0.0;
        std::size_t steps = 0;
        for (std::size_t off = 0; off < order.size(); off += cfg.batch_size) {
            const std::size_t len = std::min(cfg.batch_size, order.size() - off);
            std::vector<std::size_t> idx(order.begin() + off, order.begin() + off + len);
            Batch batch{&features, &targets, &idx, task};
            epoch_loss += loss(spec, result.params, batch);
            ++steps;
            ParameterVector g = gradient(spec, result.params, batch);
            if (cfg.prox_mu > 0.0)
                for (std::size_t i = 0; i < g.values.size(); ++i)
                    g.values[i] += cfg.prox_mu * (result.params.values[i] - anchor->values[i]);
            for (std::size_t i = 0; i < g.values.size(); ++i)
                result.params.values[i] -= cfg.eta_theta * g.values[i];
        }
        epoch_loss /= static_cast<double>(steps);
    }
    result.train_loss = epoch_loss;
    return result;
}

}  // namespace tfl
