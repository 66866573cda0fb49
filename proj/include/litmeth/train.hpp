#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "litmeth/annotate.hpp"
#include "litmeth/corpus.hpp"
#include "litmeth/error.hpp"
#include "litmeth/model.hpp"
#include "litmeth/rng.hpp"
#include "litmeth/tokenizer.hpp"

namespace litmeth {

struct TrainConfig {
    double learning_rate = 1e-5;  // the fine-tuning maximum learning rate
    std::size_t epochs = 10;
    std::size_t batch_size = 8;
    std::uint64_t seed = 42;
    double weight_decay = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double threshold = 0.5;
    double split_ratio = 0.8;

    void validate() const {
        if (learning_rate <= 0.0) throw ConfigError("train config: learning_rate must be positive");
        if (epochs < 1) throw ConfigError("train config: epochs must be at least 1");
        if (batch_size < 1) throw ConfigError("train config: batch_size must be at least 1");
        if (split_ratio <= 0.0 || split_ratio >= 1.0)
            throw ConfigError("train config: split_ratio must lie in (0, 1)");
        if (threshold <= 0.0 || threshold >= 1.0)
            throw ConfigError("train config: threshold must lie in (0, 1)");
        if (weight_decay < 0.0) throw ConfigError("train config: weight_decay must be nonnegative");
        if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
            throw ConfigError("train config: betas must lie in [0, 1)");
        if (eps <= 0.0) throw ConfigError("train config: eps must be positive");
    }
};

// Deterministic shuffled split: floor(n * ratio) indices to train, the
// rest to test; disjoint and exhaustive.
inline std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::size_t n, double ratio, std::uint64_t seed) {
    if (n < 2) throw InvalidInputError("split: need at least 2 examples");
    if (ratio <= 0.0 || ratio >= 1.0) throw InvalidInputError("split: ratio must lie in (0, 1)");
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    Rng rng(seed);
    rng.shuffle(order);
    auto train_count = static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratio));
    std::vector<std::size_t> train(order.begin(), order.begin() + train_count);
    std::vector<std::size_t> test(order.begin() + train_count, order.end());
    return {std::move(train), std::move(test)};
}

template <typename T>
std::pair<std::vector<T>, std::vector<T>> split(const std::vector<T>& items, double ratio,
                                                std::uint64_t seed) {
    auto [train_idx, test_idx] = split_indices(items.size(), ratio, seed);
    std::pair<std::vector<T>, std::vector<T>> out;
    out.first.reserve(train_idx.size());
    out.second.reserve(test_idx.size());
    for (auto i : train_idx) out.first.push_back(items[i]);
    for (auto i : test_idx) out.second.push_back(items[i]);
    return out;
}

// Mean element-wise BCE over raw logits in the numerically stable form
// max(x,0) - x*y + log(1 + exp(-|x|)); finite for all finite inputs.
inline double bce_with_logits(std::span<const double> logits, std::span<const double> targets) {
    if (logits.size() != targets.size())
        throw DimensionError("bce_with_logits: " + std::to_string(logits.size()) + " logits vs " +
                             std::to_string(targets.size()) + " targets");
    if (logits.empty()) throw InvalidInputError("bce_with_logits: empty input");
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        double x = logits[i], y = targets[i];
        sum += std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x)));
    }
    return sum / static_cast<double>(logits.size());
}

struct OptimizerState {
    ModelParams first_moment;
    ModelParams second_moment;
    std::uint64_t step = 0;

    static OptimizerState zeros(const ModelConfig& config) {
        OptimizerState s;
        s.first_moment = ModelParams::zeros(config);
        s.second_moment = ModelParams::zeros(config);
        return s;
    }
};

namespace detail {

inline void adamw_update(Tensor2D& theta, const Tensor2D& grad, Tensor2D& m, Tensor2D& v,
                         std::uint64_t t, const TrainConfig& config) {
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(t));
    for (std::size_t i = 0; i < theta.data.size(); ++i) {
        double g = grad.data[i];
        if (!std::isfinite(g)) throw NumericError("adamw_step: non-finite gradient");
        m.data[i] = config.beta1 * m.data[i] + (1.0 - config.beta1) * g;
        v.data[i] = config.beta2 * v.data[i] + (1.0 - config.beta2) * g * g;
        double m_hat = m.data[i] / bc1;
        double v_hat = v.data[i] / bc2;
        // decoupled weight decay: applied to the parameter, not the gradient
        theta.data[i] -= config.learning_rate *
                         (m_hat / (std::sqrt(v_hat) + config.eps) +
                          config.weight_decay * theta.data[i]);
    }
}

}  // namespace detail

// One AdamW step over every parameter tensor, decoupled weight decay.
// Params, grads and moments share the traversal order of for_each_tensor.
inline void adamw_step(ModelParams& params, const ModelParams& grads, OptimizerState& state,
                       const TrainConfig& config) {
    ++state.step;
    const std::uint64_t t = state.step;

    std::vector<std::pair<std::string, Tensor2D*>> thetas;
    std::vector<const Tensor2D*> gs;
    std::vector<Tensor2D*> ms, vs;
    params.for_each_tensor([&](const std::string& n, Tensor2D& t2) { thetas.emplace_back(n, &t2); });
    grads.for_each_tensor([&](const std::string&, const Tensor2D& t2) { gs.push_back(&t2); });
    state.first_moment.for_each_tensor([&](const std::string&, Tensor2D& t2) { ms.push_back(&t2); });
    state.second_moment.for_each_tensor([&](const std::string&, Tensor2D& t2) { vs.push_back(&t2); });
    if (gs.size() != thetas.size() || ms.size() != thetas.size() || vs.size() != thetas.size())
        throw DimensionError("adamw_step: parameter, gradient and state layouts disagree");

    for (std::size_t i = 0; i < thetas.size(); ++i) {
        auto& [name, theta] = thetas[i];
        if (gs[i]->rows != theta->rows || gs[i]->cols != theta->cols)
            throw DimensionError("adamw_step: gradient shape " + gs[i]->shape_str() +
                                 " vs parameter shape " + theta->shape_str() + " for '" + name +
                                 "'");
        detail::adamw_update(*theta, *gs[i], *ms[i], *vs[i], t, config);
    }
}

struct CurveRow {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
};

inline std::string curve_to_csv(const std::vector<CurveRow>& rows) {
    std::string out = "epoch,train_loss,val_loss\n";
    char buf[96];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "%zu,%.6f,%.6f\n", row.epoch, row.train_loss,
                      row.val_loss);
        out += buf;
    }
    return out;
}

// Mean BCE over every (example, label) cell of a set, eval mode.
inline double evaluate_mean_loss(const std::vector<BatchExample>& examples,
                                 const ModelParams& params, const ModelConfig& config) {
    if (examples.empty()) throw InvalidInputError("evaluate_mean_loss: empty set");
    double sum = 0.0;
    for (const auto& example : examples) {
        std::vector<double> logits = encoder_forward(example.ids, example.mask, params, config);
        for (std::size_t j = 0; j < logits.size(); ++j) {
            double x = logits[j], y = example.targets[j];
            sum += std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x)));
        }
    }
    return sum / (static_cast<double>(examples.size()) * static_cast<double>(config.num_labels));
}

struct TrainResult {
    ModelParams params;      // best epoch by validation loss
    ModelConfig config;
    std::vector<CurveRow> curve;
    std::size_t best_epoch = 0;
};

// Seeded epoch loop: shuffle, minibatch forward/backward/AdamW, then a
// train and validation loss evaluation per epoch. The checkpointed
// parameters are the ones with minimum validation loss.
inline TrainResult train_loop(const std::vector<BatchExample>& train_set,
                              const std::vector<BatchExample>& val_set,
                              const ModelConfig& model_config, const TrainConfig& train_config) {
    model_config.validate();
    train_config.validate();
    if (train_set.empty()) throw InvalidInputError("train_loop: empty training split");
    if (val_set.empty()) throw InvalidInputError("train_loop: empty validation split");

    Rng init_rng(fanout_seed(train_config.seed, "init"));
    ModelParams params = init_params(model_config, init_rng);
    OptimizerState state = OptimizerState::zeros(model_config);
    Rng dropout_rng(fanout_seed(train_config.seed, "dropout"));

    TrainResult result;
    result.config = model_config;
    double best_val = std::numeric_limits<double>::infinity();

    std::vector<std::size_t> order(train_set.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    for (std::size_t epoch = 1; epoch <= train_config.epochs; ++epoch) {
        Rng shuffle_rng(fanout_seed(train_config.seed, "shuffle", epoch));
        shuffle_rng.shuffle(order);

        for (std::size_t start = 0; start < order.size(); start += train_config.batch_size) {
            std::size_t end = std::min(start + train_config.batch_size, order.size());
            std::vector<BatchExample> batch;
            batch.reserve(end - start);
            for (std::size_t i = start; i < end; ++i) batch.push_back(train_set[order[i]]);
            BackwardResult back;
            try {
                back = backward(batch, params, model_config, true, &dropout_rng);
            } catch (const NumericError& e) {
                throw NumericError("epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(start / train_config.batch_size) + ": " +
                                   e.what());
            }
            if (!std::isfinite(back.mean_loss))
                throw NumericError("epoch " + std::to_string(epoch) + ", batch " +
                                   std::to_string(start / train_config.batch_size) +
                                   ": non-finite loss");
            adamw_step(params, back.grads, state, train_config);
        }

        CurveRow row;
        row.epoch = epoch;
        row.train_loss = evaluate_mean_loss(train_set, params, model_config);
        row.val_loss = evaluate_mean_loss(val_set, params, model_config);
        result.curve.push_back(row);
        if (row.val_loss < best_val) {
            best_val = row.val_loss;
            result.params = params;
            result.best_epoch = epoch;
        }
    }
    return result;
}

struct Prediction {
    std::size_t label_id = 0;
    double probability = 0.0;
};

// Labels whose sigmoid probability exceeds the threshold.
inline std::vector<Prediction> predict(const ModelParams& params, const ModelConfig& config,
                                       std::string_view txt, const Vocab& vocab,
                                       double threshold) {
    if (threshold <= 0.0 || threshold >= 1.0)
        throw InvalidInputError("predict: threshold must lie in (0, 1)");
    if (vocab.size() != config.vocab_size)
        throw IncompatibleCheckpointError("predict: vocab of " + std::to_string(vocab.size()) +
                                          " tokens does not match checkpoint vocab_size " +
                                          std::to_string(config.vocab_size));
    Encoding enc = encode(txt, vocab, config.max_positions);
    std::vector<double> logits = encoder_forward(enc.ids, enc.attention_mask, params, config);
    std::vector<Prediction> out;
    for (std::size_t j = 0; j < logits.size(); ++j) {
        double p = 1.0 / (1.0 + std::exp(-logits[j]));
        if (p > threshold) out.push_back(Prediction{j, p});
    }
    return out;
}

// Tokenized training examples for a corpus whose targets come from a
// label matrix; rows are matched to documents by pmid.
inline std::vector<BatchExample> make_examples(const std::vector<Document>& docs,
                                               const LabelMatrix& matrix, const Vocab& vocab,
                                               std::size_t max_len, bool include_fulltext) {
    std::unordered_map<std::string, std::size_t> row_of;
    for (std::size_t r = 0; r < matrix.row_ids.size(); ++r) row_of.emplace(matrix.row_ids[r], r);

    std::vector<BatchExample> examples;
    examples.reserve(docs.size());
    for (const auto& doc : docs) {
        auto it = row_of.find(doc.pmid);
        if (it == row_of.end())
            throw InvalidInputError("make_examples: pmid " + doc.pmid +
                                    " has no row in the label matrix");
        Encoding enc = encode(training_text(doc, include_fulltext), vocab, max_len);
        BatchExample example;
        example.ids = std::move(enc.ids);
        example.mask = std::move(enc.attention_mask);
        example.targets.assign(matrix.num_labels, 0.0);
        for (auto cell = matrix.cells.lower_bound({it->second, 0});
             cell != matrix.cells.end() && cell->first == it->second; ++cell)
            example.targets[cell->second] = 1.0;
        examples.push_back(std::move(example));
    }
    return examples;
}

}  // namespace litmeth
