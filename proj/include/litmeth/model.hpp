#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "litmeth/error.hpp"
#include "litmeth/rng.hpp"
#include "litmeth/tensor.hpp"

namespace litmeth {

inline constexpr double kMaskBias = -1e9;
inline constexpr double kLayerNormEps = 1e-5;

struct ModelConfig {
    std::size_t d_model = 64;
    std::size_t num_heads = 4;
    std::size_t num_layers = 2;
    std::size_t d_ff = 256;
    std::size_t vocab_size = 0;
    std::size_t max_positions = 512;
    std::size_t num_labels = 0;
    double dropout_rate = 0.0;

    std::size_t head_dim() const { return d_model / num_heads; }  // d_k = d_v

    void validate() const {
        if (d_model == 0 || num_heads == 0 || num_layers == 0 || d_ff == 0)
            throw ConfigError("model config: dimensions must be positive");
        if (d_model % num_heads != 0)
            throw ConfigError("model config: d_model (" + std::to_string(d_model) +
                              ") must be divisible by heads (" + std::to_string(num_heads) + ")");
        if (vocab_size == 0) throw ConfigError("model config: vocab_size must be positive");
        if (num_labels == 0) throw ConfigError("model config: num_labels must be positive");
        if (max_positions == 0) throw ConfigError("model config: max_positions must be positive");
        if (dropout_rate < 0.0 || dropout_rate >= 1.0)
            throw ConfigError("model config: dropout_rate must lie in [0, 1)");
    }

    bool operator==(const ModelConfig&) const = default;
};

struct LayerParams {
    Tensor2D wq, wk, wv;  // [d_model x d_model], columns partitioned per head
    Tensor2D wo;          // [h*d_v x d_model]
    Tensor2D ff_w1;       // [d_model x d_ff]
    Tensor2D ff_b1;       // [1 x d_ff]
    Tensor2D ff_w2;       // [d_ff x d_model]
    Tensor2D ff_b2;       // [1 x d_model]
    Tensor2D ln1_gamma, ln1_beta;  // [1 x d_model]
    Tensor2D ln2_gamma, ln2_beta;

    bool operator==(const LayerParams&) const = default;
};

struct ModelParams {
    Tensor2D token_embedding;     // [vocab_size x d_model]
    Tensor2D position_embedding;  // [max_positions x d_model]
    std::vector<LayerParams> layers;
    Tensor2D pre_classifier;  // [d_model x d_model]
    Tensor2D classifier;      // [d_model x num_labels]

    bool operator==(const ModelParams&) const = default;

    static ModelParams zeros(const ModelConfig& config) {
        ModelParams p;
        p.token_embedding = Tensor2D(config.vocab_size, config.d_model);
        p.position_embedding = Tensor2D(config.max_positions, config.d_model);
        p.layers.resize(config.num_layers);
        for (auto& layer : p.layers) {
            layer.wq = Tensor2D(config.d_model, config.d_model);
            layer.wk = Tensor2D(config.d_model, config.d_model);
            layer.wv = Tensor2D(config.d_model, config.d_model);
            layer.wo = Tensor2D(config.d_model, config.d_model);
            layer.ff_w1 = Tensor2D(config.d_model, config.d_ff);
            layer.ff_b1 = Tensor2D(1, config.d_ff);
            layer.ff_w2 = Tensor2D(config.d_ff, config.d_model);
            layer.ff_b2 = Tensor2D(1, config.d_model);
            layer.ln1_gamma = Tensor2D(1, config.d_model);
            layer.ln1_beta = Tensor2D(1, config.d_model);
            layer.ln2_gamma = Tensor2D(1, config.d_model);
            layer.ln2_beta = Tensor2D(1, config.d_model);
        }
        p.pre_classifier = Tensor2D(config.d_model, config.d_model);
        p.classifier = Tensor2D(config.d_model, config.num_labels);
        return p;
    }

    template <typename Self, typename F>
    static void visit(Self& self, F&& f) {
        f("token_embedding", self.token_embedding);
        f("position_embedding", self.position_embedding);
        for (std::size_t i = 0; i < self.layers.size(); ++i) {
            auto& layer = self.layers[i];
            std::string prefix = "layer" + std::to_string(i) + ".";
            f(prefix + "wq", layer.wq);
            f(prefix + "wk", layer.wk);
            f(prefix + "wv", layer.wv);
            f(prefix + "wo", layer.wo);
            f(prefix + "ff_w1", layer.ff_w1);
            f(prefix + "ff_b1", layer.ff_b1);
            f(prefix + "ff_w2", layer.ff_w2);
            f(prefix + "ff_b2", layer.ff_b2);
            f(prefix + "ln1_gamma", layer.ln1_gamma);
            f(prefix + "ln1_beta", layer.ln1_beta);
            f(prefix + "ln2_gamma", layer.ln2_gamma);
            f(prefix + "ln2_beta", layer.ln2_beta);
        }
        f("pre_classifier", self.pre_classifier);
        f("classifier", self.classifier);
    }

    template <typename F>
    void for_each_tensor(F&& f) {
        visit(*this, std::forward<F>(f));
    }
    template <typename F>
    void for_each_tensor(F&& f) const {
        visit(*this, std::forward<F>(f));
    }
};

// Truncated normal (std 0.02) weights, zero biases, identity layer norms.
inline ModelParams init_params(const ModelConfig& config, Rng& rng) {
    config.validate();
    ModelParams p = ModelParams::zeros(config);
    auto fill_normal = [&](Tensor2D& t) {
        for (double& v : t.data) v = rng.next_truncated_normal(0.02);
    };
    fill_normal(p.token_embedding);
    fill_normal(p.position_embedding);
    for (auto& layer : p.layers) {
        fill_normal(layer.wq);
        fill_normal(layer.wk);
        fill_normal(layer.wv);
        fill_normal(layer.wo);
        fill_normal(layer.ff_w1);
        fill_normal(layer.ff_w2);
        layer.ln1_gamma.fill(1.0);
        layer.ln2_gamma.fill(1.0);
    }
    fill_normal(p.pre_classifier);
    fill_normal(p.classifier);
    return p;
}

// --- building blocks ---

inline std::tuple<Tensor2D, Tensor2D, Tensor2D> project_qkv(const Tensor2D& x, const Tensor2D& wq,
                                                            const Tensor2D& wk,
                                                            const Tensor2D& wv) {
    return {matmul(x, wq), matmul(x, wk), matmul(x, wv)};
}

// Row-stochastic attention weights softmax(Q K^T / sqrt(d_k) + bias).
// Masked key positions receive a large negative bias, so their weight
// underflows to exactly zero.
inline Tensor2D attention_weights(const Tensor2D& q, const Tensor2D& k,
                                  std::span<const std::uint8_t> mask) {
    if (q.cols != k.cols)
        throw DimensionError("attention: query dim " + q.shape_str() + " vs key dim " +
                             k.shape_str());
    if (mask.size() != k.rows)
        throw DimensionError("attention: mask length " + std::to_string(mask.size()) +
                             " does not cover " + std::to_string(k.rows) + " key rows");
    bool any_unmasked = false;
    for (auto m : mask) any_unmasked |= (m != 0);
    if (!any_unmasked)
        throw DegenerateMaskError("attention: every key position is masked");

    double scale = 1.0 / std::sqrt(static_cast<double>(q.cols));
    Tensor2D scores = matmul_transpose_b(q, k);
    for (std::size_t i = 0; i < scores.rows; ++i) {
        double* row = scores.row(i);
        double max_score = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < scores.cols; ++j) {
            row[j] = row[j] * scale + (mask[j] ? 0.0 : kMaskBias);
            max_score = std::max(max_score, row[j]);
        }
        double sum = 0.0;
        for (std::size_t j = 0; j < scores.cols; ++j) {
            row[j] = std::exp(row[j] - max_score);
            sum += row[j];
        }
        for (std::size_t j = 0; j < scores.cols; ++j) row[j] /= sum;
    }
    return scores;
}

inline Tensor2D scaled_dot_attention(const Tensor2D& q, const Tensor2D& k, const Tensor2D& v,
                                     std::span<const std::uint8_t> mask) {
    if (k.rows != v.rows)
        throw DimensionError("attention: keys " + k.shape_str() + " vs values " + v.shape_str());
    return matmul(attention_weights(q, k, mask), v);
}

namespace detail {

inline Tensor2D slice_cols(const Tensor2D& t, std::size_t first, std::size_t count) {
    Tensor2D out(t.rows, count);
    for (std::size_t r = 0; r < t.rows; ++r) {
        const double* src = t.row(r) + first;
        double* dst = out.row(r);
        for (std::size_t c = 0; c < count; ++c) dst[c] = src[c];
    }
    return out;
}

inline void add_into_cols(Tensor2D& dst, const Tensor2D& src, std::size_t first) {
    for (std::size_t r = 0; r < src.rows; ++r) {
        double* d = dst.row(r) + first;
        const double* s = src.row(r);
        for (std::size_t c = 0; c < src.cols; ++c) d[c] += s[c];
    }
}

struct LayerNormCache {
    Tensor2D normalized;          // x-hat
    std::vector<double> inv_std;  // per row
};

inline Tensor2D layer_norm(const Tensor2D& x, const Tensor2D& gamma, const Tensor2D& beta,
                           LayerNormCache* cache) {
    Tensor2D out(x.rows, x.cols);
    if (cache) {
        cache->normalized = Tensor2D(x.rows, x.cols);
        cache->inv_std.assign(x.rows, 0.0);
    }
    const double n = static_cast<double>(x.cols);
    for (std::size_t r = 0; r < x.rows; ++r) {
        const double* in = x.row(r);
        double mean = 0.0;
        for (std::size_t c = 0; c < x.cols; ++c) mean += in[c];
        mean /= n;
        double var = 0.0;
        for (std::size_t c = 0; c < x.cols; ++c) {
            double d = in[c] - mean;
            var += d * d;
        }
        var /= n;
        double inv_std = 1.0 / std::sqrt(var + kLayerNormEps);
        double* o = out.row(r);
        for (std::size_t c = 0; c < x.cols; ++c) {
            double norm = (in[c] - mean) * inv_std;
            if (cache) cache->normalized.at(r, c) = norm;
            o[c] = norm * gamma.data[c] + beta.data[c];
        }
        if (cache) cache->inv_std[r] = inv_std;
    }
    return out;
}

// Returns the gradient w.r.t. the layer-norm input and accumulates the
// scale/offset gradients.
inline Tensor2D layer_norm_backward(const Tensor2D& dy, const LayerNormCache& cache,
                                    const Tensor2D& gamma, Tensor2D& dgamma, Tensor2D& dbeta) {
    const std::size_t rows = dy.rows, cols = dy.cols;
    Tensor2D dx(rows, cols);
    const double n = static_cast<double>(cols);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* g = dy.row(r);
        const double* xh = cache.normalized.row(r);
        double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
        for (std::size_t c = 0; c < cols; ++c) {
            double dxhat = g[c] * gamma.data[c];
            sum_dxhat += dxhat;
            sum_dxhat_xhat += dxhat * xh[c];
            dgamma.data[c] += g[c] * xh[c];
            dbeta.data[c] += g[c];
        }
        double* out = dx.row(r);
        double inv_std = cache.inv_std[r];
        for (std::size_t c = 0; c < cols; ++c) {
            double dxhat = g[c] * gamma.data[c];
            out[c] = inv_std * (dxhat - sum_dxhat / n - xh[c] * sum_dxhat_xhat / n);
        }
    }
    return dx;
}

inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

inline double gelu_grad(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    return cdf + x * pdf;
}

// Inverted dropout scale factors: 1/keep with probability keep, else 0.
inline Tensor2D dropout_mask(std::size_t rows, std::size_t cols, double rate, Rng& rng) {
    Tensor2D mask(rows, cols);
    double keep = 1.0 - rate;
    for (double& v : mask.data) v = (rng.next_double() < keep) ? 1.0 / keep : 0.0;
    return mask;
}

inline void apply_mask(Tensor2D& t, const Tensor2D& mask) {
    for (std::size_t i = 0; i < t.data.size(); ++i) t.data[i] *= mask.data[i];
}

}  // namespace detail

struct LayerCache {
    Tensor2D x_in;
    Tensor2D q, k, v;
    std::vector<Tensor2D> attn_weights;  // per head
    Tensor2D concat;
    Tensor2D attn_dropout;  // empty when dropout is off
    detail::LayerNormCache ln1;
    Tensor2D ln1_out;
    Tensor2D ff_z1;
    Tensor2D ff_a1;
    Tensor2D ff_dropout;
    detail::LayerNormCache ln2;
};

struct ForwardCache {
    std::vector<std::int32_t> ids;       // trailing pads trimmed
    std::vector<std::uint8_t> mask;
    std::vector<LayerCache> layers;
    Tensor2D pooled;   // first-token vector [1 x d_model]
    Tensor2D pre_z;    // pre-classifier pre-activation
    Tensor2D pre_a;    // after ReLU (and dropout in train mode)
    Tensor2D pre_dropout;
    std::vector<double> logits;
};

// Concat(head_1..head_h) * W^O over column-partitioned projections.
inline Tensor2D multi_head(const Tensor2D& x, const LayerParams& layer,
                           std::span<const std::uint8_t> mask, std::size_t num_heads,
                           std::vector<Tensor2D>* weights_out = nullptr, Tensor2D* q_out = nullptr,
                           Tensor2D* k_out = nullptr, Tensor2D* v_out = nullptr,
                           Tensor2D* concat_out = nullptr) {
    auto [q, k, v] = project_qkv(x, layer.wq, layer.wk, layer.wv);
    const std::size_t head_dim = x.cols / num_heads;
    Tensor2D concat(x.rows, x.cols);
    for (std::size_t h = 0; h < num_heads; ++h) {
        std::size_t first = h * head_dim;
        Tensor2D qh = detail::slice_cols(q, first, head_dim);
        Tensor2D kh = detail::slice_cols(k, first, head_dim);
        Tensor2D vh = detail::slice_cols(v, first, head_dim);
        Tensor2D weights = attention_weights(qh, kh, mask);
        Tensor2D head = matmul(weights, vh);
        for (std::size_t r = 0; r < head.rows; ++r)
            for (std::size_t c = 0; c < head_dim; ++c) concat.at(r, first + c) = head.at(r, c);
        if (weights_out) weights_out->push_back(std::move(weights));
    }
    Tensor2D out = matmul(concat, layer.wo);
    if (q_out) *q_out = std::move(q);
    if (k_out) *k_out = std::move(k);
    if (v_out) *v_out = std::move(v);
    if (concat_out) *concat_out = std::move(concat);
    return out;
}

// Full encoder pass: embeddings, num_layers post-norm blocks, first-token
// pooling, ReLU pre-classifier, linear head. Returns raw logits (no
// sigmoid). Trailing [PAD] positions are dropped up front; they carry no
// gradient and cannot change the result, so logits are invariant under
// extra padding.
inline std::vector<double> encoder_forward(std::span<const std::int32_t> ids,
                                           std::span<const std::uint8_t> mask,
                                           const ModelParams& params, const ModelConfig& config,
                                           bool train_mode = false, Rng* dropout_rng = nullptr,
                                           ForwardCache* cache = nullptr) {
    if (ids.size() != mask.size())
        throw DimensionError("encoder_forward: ids length " + std::to_string(ids.size()) +
                             " vs mask length " + std::to_string(mask.size()));
    std::size_t seq_len = ids.size();
    while (seq_len > 0 && mask[seq_len - 1] == 0) --seq_len;
    if (seq_len == 0) throw DegenerateMaskError("encoder_forward: every position is masked");
    if (seq_len > config.max_positions)
        throw InvalidInputError("encoder_forward: sequence length " + std::to_string(seq_len) +
                                " exceeds max_positions " + std::to_string(config.max_positions));

    const bool use_dropout = train_mode && config.dropout_rate > 0.0 && dropout_rng != nullptr;

    Tensor2D x(seq_len, config.d_model);
    for (std::size_t t = 0; t < seq_len; ++t) {
        auto id = ids[t];
        if (id < 0 || static_cast<std::size_t>(id) >= config.vocab_size)
            throw InvalidInputError("encoder_forward: token id " + std::to_string(id) +
                                    " outside vocab of " + std::to_string(config.vocab_size));
        const double* tok = params.token_embedding.row(static_cast<std::size_t>(id));
        const double* pos = params.position_embedding.row(t);
        double* dst = x.row(t);
        for (std::size_t c = 0; c < config.d_model; ++c) dst[c] = tok[c] + pos[c];
    }

    if (cache) {
        cache->ids.assign(ids.begin(), ids.begin() + seq_len);
        cache->mask.assign(mask.begin(), mask.begin() + seq_len);
        cache->layers.clear();
        cache->layers.reserve(config.num_layers);
    }
    std::span<const std::uint8_t> live_mask =
        cache ? std::span<const std::uint8_t>(cache->mask) : mask.subspan(0, seq_len);

    for (std::size_t l = 0; l < config.num_layers; ++l) {
        const LayerParams& layer = params.layers[l];
        LayerCache lc;
        LayerCache* lcp = cache ? &lc : nullptr;
        if (lcp) lcp->x_in = x;

        Tensor2D attn = multi_head(x, layer, live_mask, config.num_heads,
                                   lcp ? &lcp->attn_weights : nullptr, lcp ? &lcp->q : nullptr,
                                   lcp ? &lcp->k : nullptr, lcp ? &lcp->v : nullptr,
                                   lcp ? &lcp->concat : nullptr);
        if (use_dropout) {
            Tensor2D m = detail::dropout_mask(attn.rows, attn.cols, config.dropout_rate, *dropout_rng);
            detail::apply_mask(attn, m);
            if (lcp) lcp->attn_dropout = std::move(m);
        }
        Tensor2D sum1 = add(x, attn);
        Tensor2D norm1 =
            detail::layer_norm(sum1, layer.ln1_gamma, layer.ln1_beta, lcp ? &lcp->ln1 : nullptr);
        if (lcp) lcp->ln1_out = norm1;

        Tensor2D z1 = matmul(norm1, layer.ff_w1);
        for (std::size_t r = 0; r < z1.rows; ++r)
            for (std::size_t c = 0; c < z1.cols; ++c) z1.at(r, c) += layer.ff_b1.data[c];
        Tensor2D a1(z1.rows, z1.cols);
        for (std::size_t i = 0; i < z1.data.size(); ++i) a1.data[i] = detail::gelu(z1.data[i]);
        if (lcp) {
            lcp->ff_z1 = z1;
            lcp->ff_a1 = a1;
        }
        Tensor2D ff = matmul(a1, layer.ff_w2);
        for (std::size_t r = 0; r < ff.rows; ++r)
            for (std::size_t c = 0; c < ff.cols; ++c) ff.at(r, c) += layer.ff_b2.data[c];
        if (use_dropout) {
            Tensor2D m = detail::dropout_mask(ff.rows, ff.cols, config.dropout_rate, *dropout_rng);
            detail::apply_mask(ff, m);
            if (lcp) lcp->ff_dropout = std::move(m);
        }
        Tensor2D sum2 = add(norm1, ff);
        x = detail::layer_norm(sum2, layer.ln2_gamma, layer.ln2_beta, lcp ? &lcp->ln2 : nullptr);

        if (cache) {
            if (!x.all_finite())
                throw NumericError("encoder layer " + std::to_string(l) +
                                   " produced non-finite values");
            cache->layers.push_back(std::move(lc));
        }
    }

    Tensor2D pooled(1, config.d_model);
    for (std::size_t c = 0; c < config.d_model; ++c) pooled.data[c] = x.at(0, c);
    Tensor2D pre_z = matmul(pooled, params.pre_classifier);
    Tensor2D pre_a(1, config.d_model);
    for (std::size_t c = 0; c < config.d_model; ++c)
        pre_a.data[c] = pre_z.data[c] > 0.0 ? pre_z.data[c] : 0.0;
    Tensor2D pre_dropout;
    if (use_dropout) {
        pre_dropout = detail::dropout_mask(1, config.d_model, config.dropout_rate, *dropout_rng);
        detail::apply_mask(pre_a, pre_dropout);
    }
    Tensor2D logits_row = matmul(pre_a, params.classifier);

    std::vector<double> logits(logits_row.data.begin(), logits_row.data.end());
    if (cache) {
        cache->pooled = std::move(pooled);
        cache->pre_z = std::move(pre_z);
        cache->pre_a = std::move(pre_a);
        cache->pre_dropout = std::move(pre_dropout);
        cache->logits = logits;
        for (double v : logits)
            if (!std::isfinite(v)) throw NumericError("classifier produced non-finite logits");
    }
    return logits;
}

namespace detail {

// Backpropagates one example's dlogits into grads; dX flows through the
// cached intermediates of the forward pass.
inline void backward_example(const ForwardCache& cache, const ModelParams& params,
                             const ModelConfig& config, const std::vector<double>& dlogits,
                             ModelParams& grads) {
    const std::size_t seq_len = cache.ids.size();
    const std::size_t head_dim = config.head_dim();
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(head_dim));

    Tensor2D dlogits_row(1, config.num_labels, dlogits);
    axpy(1.0, matmul_transpose_a(cache.pre_a, dlogits_row), grads.classifier);
    Tensor2D d_pre_a = matmul_transpose_b(dlogits_row, params.classifier);
    if (cache.pre_dropout.size() > 0) apply_mask(d_pre_a, cache.pre_dropout);
    Tensor2D d_pre_z = d_pre_a;
    for (std::size_t c = 0; c < config.d_model; ++c)
        if (cache.pre_z.data[c] <= 0.0) d_pre_z.data[c] = 0.0;
    axpy(1.0, matmul_transpose_a(cache.pooled, d_pre_z), grads.pre_classifier);
    Tensor2D d_pooled = matmul_transpose_b(d_pre_z, params.pre_classifier);

    Tensor2D dx(seq_len, config.d_model);
    for (std::size_t c = 0; c < config.d_model; ++c) dx.at(0, c) = d_pooled.data[c];

    for (std::size_t l = config.num_layers; l-- > 0;) {
        const LayerParams& layer = params.layers[l];
        const LayerCache& lc = cache.layers[l];
        LayerParams& glayer = grads.layers[l];

        // x_out = LN2(norm1 + ff)
        Tensor2D d_sum2 =
            layer_norm_backward(dx, lc.ln2, layer.ln2_gamma, glayer.ln2_gamma, glayer.ln2_beta);
        Tensor2D d_ff = d_sum2;
        if (lc.ff_dropout.size() > 0) apply_mask(d_ff, lc.ff_dropout);
        Tensor2D d_norm1 = d_sum2;  // skip connection

        // ff = gelu(norm1 * w1 + b1) * w2 + b2
        axpy(1.0, matmul_transpose_a(lc.ff_a1, d_ff), glayer.ff_w2);
        for (std::size_t r = 0; r < d_ff.rows; ++r)
            for (std::size_t c = 0; c < d_ff.cols; ++c) glayer.ff_b2.data[c] += d_ff.at(r, c);
        Tensor2D d_a1 = matmul_transpose_b(d_ff, layer.ff_w2);
        for (std::size_t i = 0; i < d_a1.data.size(); ++i)
            d_a1.data[i] *= gelu_grad(lc.ff_z1.data[i]);
        axpy(1.0, matmul_transpose_a(lc.ln1_out, d_a1), glayer.ff_w1);
        for (std::size_t r = 0; r < d_a1.rows; ++r)
            for (std::size_t c = 0; c < d_a1.cols; ++c) glayer.ff_b1.data[c] += d_a1.at(r, c);
        axpy(1.0, matmul_transpose_b(d_a1, layer.ff_w1), d_norm1);

        // norm1 = LN1(x_in + attn)
        Tensor2D d_sum1 =
            layer_norm_backward(d_norm1, lc.ln1, layer.ln1_gamma, glayer.ln1_gamma, glayer.ln1_beta);
        Tensor2D d_attn = d_sum1;
        if (lc.attn_dropout.size() > 0) apply_mask(d_attn, lc.attn_dropout);
        dx = d_sum1;  // gradient w.r.t. x_in via the skip connection

        // attn = concat(heads) * wo
        axpy(1.0, matmul_transpose_a(lc.concat, d_attn), glayer.wo);
        Tensor2D d_concat = matmul_transpose_b(d_attn, layer.wo);

        Tensor2D dq(seq_len, config.d_model);
        Tensor2D dk(seq_len, config.d_model);
        Tensor2D dv(seq_len, config.d_model);
        for (std::size_t h = 0; h < config.num_heads; ++h) {
            std::size_t first = h * head_dim;
            Tensor2D d_head = slice_cols(d_concat, first, head_dim);
            Tensor2D qh = slice_cols(lc.q, first, head_dim);
            Tensor2D kh = slice_cols(lc.k, first, head_dim);
            Tensor2D vh = slice_cols(lc.v, first, head_dim);
            const Tensor2D& weights = lc.attn_weights[h];

            Tensor2D d_weights = matmul_transpose_b(d_head, vh);
            Tensor2D d_vh = matmul_transpose_a(weights, d_head);

            // softmax backward, row-wise
            Tensor2D d_scores(seq_len, seq_len);
            for (std::size_t r = 0; r < seq_len; ++r) {
                const double* p = weights.row(r);
                const double* dp = d_weights.row(r);
                double dot = 0.0;
                for (std::size_t c = 0; c < seq_len; ++c) dot += p[c] * dp[c];
                double* ds = d_scores.row(r);
                for (std::size_t c = 0; c < seq_len; ++c) ds[c] = p[c] * (dp[c] - dot);
            }

            Tensor2D d_qh = matmul(d_scores, kh);
            Tensor2D d_kh = matmul_transpose_a(d_scores, qh);
            for (double& v : d_qh.data) v *= inv_sqrt_dk;
            for (double& v : d_kh.data) v *= inv_sqrt_dk;

            add_into_cols(dq, d_qh, first);
            add_into_cols(dk, d_kh, first);
            add_into_cols(dv, d_vh, first);
        }

        axpy(1.0, matmul_transpose_a(lc.x_in, dq), glayer.wq);
        axpy(1.0, matmul_transpose_a(lc.x_in, dk), glayer.wk);
        axpy(1.0, matmul_transpose_a(lc.x_in, dv), glayer.wv);
        axpy(1.0, matmul_transpose_b(dq, layer.wq), dx);
        axpy(1.0, matmul_transpose_b(dk, layer.wk), dx);
        axpy(1.0, matmul_transpose_b(dv, layer.wv), dx);
    }

    for (std::size_t t = 0; t < seq_len; ++t) {
        double* tok = grads.token_embedding.row(static_cast<std::size_t>(cache.ids[t]));
        double* pos = grads.position_embedding.row(t);
        const double* g = dx.row(t);
        for (std::size_t c = 0; c < config.d_model; ++c) {
            tok[c] += g[c];
            pos[c] += g[c];
        }
    }
}

}  // namespace detail

struct BatchExample {
    std::vector<std::int32_t> ids;
    std::vector<std::uint8_t> mask;
    std::vector<double> targets;  // one {0,1} value per label
};

struct BackwardResult {
    ModelParams grads;
    double mean_loss = 0.0;
};

// Exact reverse-mode gradients of the mean BCE-with-logits loss over a
// batch, with respect to every parameter tensor.
inline BackwardResult backward(const std::vector<BatchExample>& batch, const ModelParams& params,
                               const ModelConfig& config, bool train_mode = false,
                               Rng* dropout_rng = nullptr) {
    if (batch.empty()) throw InvalidInputError("backward: empty batch");
    BackwardResult result;
    result.grads = ModelParams::zeros(config);
    const double denom = static_cast<double>(batch.size()) * static_cast<double>(config.num_labels);

    for (const auto& example : batch) {
        if (example.targets.size() != config.num_labels)
            throw DimensionError("backward: " + std::to_string(example.targets.size()) +
                                 " targets for " + std::to_string(config.num_labels) + " labels");
        ForwardCache cache;
        std::vector<double> logits = encoder_forward(example.ids, example.mask, params, config,
                                                     train_mode, dropout_rng, &cache);
        std::vector<double> dlogits(config.num_labels);
        for (std::size_t j = 0; j < config.num_labels; ++j) {
            double x = logits[j], y = example.targets[j];
            result.mean_loss +=
                (std::max(x, 0.0) - x * y + std::log1p(std::exp(-std::abs(x)))) / denom;
            double sigmoid = 1.0 / (1.0 + std::exp(-x));
            dlogits[j] = (sigmoid - y) / denom;
        }
        detail::backward_example(cache, params, config, dlogits, result.grads);
    }

    bool finite = true;
    result.grads.for_each_tensor([&](const std::string&, const Tensor2D& t) {
        finite = finite && t.all_finite();
    });
    if (!finite || !std::isfinite(result.mean_loss))
        throw NumericError("backward produced non-finite gradients");
    return result;
}

}  // namespace litmeth
