#include "cqr/net.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "cqr/errors.hpp"

namespace cqr {

void NetConfig::validate() const {
    if (hidden_units < 1) throw UsageError("NetConfig: hidden_units must be >= 1");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw UsageError("NetConfig: dropout_rate must be in [0, 1)");
    if (learning_rate <= 0.0) throw UsageError("NetConfig: learning_rate must be > 0");
    if (epochs < 1) throw UsageError("NetConfig: epochs must be >= 1");
    if (batch_size < 1) throw UsageError("NetConfig: batch_size must be >= 1");
    if (mc_samples < 1) throw UsageError("NetConfig: mc_samples must be >= 1");
}

Network init_network(std::size_t input_dim, const QuantileGrid& grid,
                     const NetConfig& config) {
    if (input_dim < 1) throw UsageError("init_network: input_dim must be >= 1");
    config.validate();

    Network net;
    net.input_dim = input_dim;
    net.hidden = config.hidden_units;
    net.grid = grid;
    net.config = config;
    net.w1.resize(net.hidden * input_dim);
    net.b1.assign(net.hidden, 0.0);
    net.w2.resize(net.outputs() * net.hidden);
    net.b2.assign(net.outputs(), 0.0);

    Rng rng(derive_seed(config.seed, "init"));
    // He init: std sqrt(2 / fan_in) for the relu layer, sqrt(1 / fan_in) after
    double s1 = std::sqrt(2.0 / static_cast<double>(input_dim));
    for (double& w : net.w1) w = s1 * rng.gaussian();
    double s2 = std::sqrt(1.0 / static_cast<double>(net.hidden));
    for (double& w : net.w2) w = s2 * rng.gaussian();
    return net;
}

namespace {

struct ForwardCache {
    std::vector<double> hidden;       // post-relu, post-mask activations
    std::vector<double> pre_relu;     // pre-activation of the hidden layer
    std::vector<double> out;
};

void forward_cached(const Network& net, std::span<const double> x,
                    std::span<const double> mask, ForwardCache& cache) {
    if (x.size() != net.input_dim)
        throw UsageError("forward: expected " + std::to_string(net.input_dim) +
                         " features, got " + std::to_string(x.size()));
    const std::size_t h = net.hidden, d = net.input_dim, m = net.outputs();
    cache.pre_relu.assign(h, 0.0);
    cache.hidden.assign(h, 0.0);
    cache.out.assign(m, 0.0);
    for (std::size_t i = 0; i < h; ++i) {
        double z = net.b1[i];
        const double* w = net.w1.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) z += w[j] * x[j];
        cache.pre_relu[i] = z;
        double a = z > 0.0 ? z : 0.0;
        if (!mask.empty()) a *= mask[i];
        cache.hidden[i] = a;
    }
    for (std::size_t k = 0; k < m; ++k) {
        double z = net.b2[k];
        const double* w = net.w2.data() + k * h;
        for (std::size_t i = 0; i < h; ++i) z += w[i] * cache.hidden[i];
        cache.out[k] = z;
    }
}

std::vector<double> draw_mask(std::size_t hidden, double rate, Rng& rng) {
    std::vector<double> mask(hidden);
    double keep_scale = 1.0 / (1.0 - rate);
    for (double& v : mask) v = rng.bernoulli(rate) ? 0.0 : keep_scale;
    return mask;
}

} // namespace

std::vector<double> forward(const Network& net, std::span<const double> x,
                            bool dropout_active, Rng& rng) {
    ForwardCache cache;
    std::vector<double> mask;
    if (dropout_active && net.config.dropout_rate > 0.0)
        mask = draw_mask(net.hidden, net.config.dropout_rate, rng);
    forward_cached(net, x, mask, cache);
    return std::move(cache.out);
}

double pinball_loss(std::span<const double> pred, double y,
                    const QuantileGrid& grid) {
    if (pred.size() != grid.size())
        throw UsageError("pinball_loss: prediction length does not match grid");
    double loss = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        double u = y - pred[k];
        double tau = grid.level(k);
        loss += u * (tau - (u < 0.0 ? 1.0 : 0.0));
    }
    return loss / static_cast<double>(grid.size());
}

double loss_and_gradients(const Network& net, std::span<const double> x, double y,
                          std::span<const double> dropout_mask, Gradients& grads) {
    const std::size_t h = net.hidden, d = net.input_dim, m = net.outputs();
    ForwardCache cache;
    forward_cached(net, x, dropout_mask, cache);

    grads.w1.assign(net.w1.size(), 0.0);
    grads.b1.assign(net.b1.size(), 0.0);
    grads.w2.assign(net.w2.size(), 0.0);
    grads.b2.assign(net.b2.size(), 0.0);

    double loss = 0.0;
    const double inv_m = 1.0 / static_cast<double>(m);
    std::vector<double> dhidden(h, 0.0);
    for (std::size_t k = 0; k < m; ++k) {
        double u = y - cache.out[k];
        double tau = net.grid.level(k);
        double indicator = u < 0.0 ? 1.0 : 0.0;
        loss += u * (tau - indicator) * inv_m;
        // d loss / d out_k
        double g = (indicator - tau) * inv_m;
        grads.b2[k] = g;
        double* gw = grads.w2.data() + k * h;
        const double* w = net.w2.data() + k * h;
        for (std::size_t i = 0; i < h; ++i) {
            gw[i] = g * cache.hidden[i];
            dhidden[i] += g * w[i];
        }
    }
    for (std::size_t i = 0; i < h; ++i) {
        double scale = dropout_mask.empty() ? 1.0 : dropout_mask[i];
        double dz = cache.pre_relu[i] > 0.0 ? dhidden[i] * scale : 0.0;
        grads.b1[i] = dz;
        double* gw = grads.w1.data() + i * d;
        for (std::size_t j = 0; j < d; ++j) gw[j] = dz * x[j];
    }
    return loss;
}

namespace {

struct AdamState {
    double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    std::vector<double> m, v;
    std::size_t t = 0;

    explicit AdamState(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

    void update(std::span<double> params, std::span<const double> grads,
                double lr) {
        ++t;
        double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (std::size_t i = 0; i < params.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * grads[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * grads[i] * grads[i];
            params[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
        }
    }
};

void accumulate(std::vector<double>& acc, const std::vector<double>& g) {
    for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += g[i];
}

} // namespace

Network train(const Dataset& data, const QuantileGrid& grid,
              const NetConfig& config) {
    config.validate();
    if (data.n == 0) throw UsageError("train: empty training split");
    if (!data.has_targets()) throw UsageError("train: dataset has no targets");

    Network net = init_network(data.d, grid, config);
    AdamState adam_w1(net.w1.size()), adam_b1(net.b1.size());
    AdamState adam_w2(net.w2.size()), adam_b2(net.b2.size());

    std::vector<std::size_t> order(data.n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng dropout_rng(derive_seed(config.seed, "dropout"));
    Gradients grads, batch_grads;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        Rng shuffle_rng(derive_seed(config.seed, "shuffle", epoch));
        for (std::size_t i = data.n; i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.below(i)]);

        for (std::size_t start = 0; start < data.n; start += config.batch_size) {
            std::size_t end = std::min(start + config.batch_size, data.n);
            std::size_t bs = end - start;
            batch_grads.w1.assign(net.w1.size(), 0.0);
            batch_grads.b1.assign(net.b1.size(), 0.0);
            batch_grads.w2.assign(net.w2.size(), 0.0);
            batch_grads.b2.assign(net.b2.size(), 0.0);

            double batch_loss = 0.0;
            for (std::size_t i = start; i < end; ++i) {
                std::size_t row = order[i];
                std::vector<double> mask;
                if (config.dropout_rate > 0.0)
                    mask = draw_mask(net.hidden, config.dropout_rate, dropout_rng);
                batch_loss += loss_and_gradients(net, data.row(row),
                                                 data.targets[row], mask, grads);
                accumulate(batch_grads.w1, grads.w1);
                accumulate(batch_grads.b1, grads.b1);
                accumulate(batch_grads.w2, grads.w2);
                accumulate(batch_grads.b2, grads.b2);
            }
            if (!std::isfinite(batch_loss))
                throw NumericError(
                    "train: non-finite loss at epoch " + std::to_string(epoch) +
                    " (learning-rate or data pathology)");

            double inv_bs = 1.0 / static_cast<double>(bs);
            for (auto* g : {&batch_grads.w1, &batch_grads.b1, &batch_grads.w2,
                            &batch_grads.b2})
                for (double& v : *g) v *= inv_bs;

            adam_w1.update(net.w1, batch_grads.w1, config.learning_rate);
            adam_b1.update(net.b1, batch_grads.b1, config.learning_rate);
            adam_w2.update(net.w2, batch_grads.w2, config.learning_rate);
            adam_b2.update(net.b2, batch_grads.b2, config.learning_rate);
        }
    }
    return net;
}

QuantileEstimates mc_predict(const Network& net, std::span<const double> x,
                             std::size_t mc_samples, std::uint64_t seed) {
    if (mc_samples < 1) throw UsageError("mc_predict: mc_samples must be >= 1");

    QuantileEstimates est;
    ForwardCache cache;
    if (net.config.dropout_rate == 0.0) {
        // every pass is the same deterministic map
        forward_cached(net, x, {}, cache);
        est.values = std::move(cache.out);
    } else {
        est.values.assign(net.outputs(), 0.0);
        std::vector<double> mask;
        for (std::size_t pass = 0; pass < mc_samples; ++pass) {
            Rng rng(derive_seed(seed, "mc", pass));
            mask = draw_mask(net.hidden, net.config.dropout_rate, rng);
            forward_cached(net, x, mask, cache);
            for (std::size_t k = 0; k < est.values.size(); ++k)
                est.values[k] += cache.out[k];
        }
        double inv = 1.0 / static_cast<double>(mc_samples);
        for (double& v : est.values) v *= inv;
    }
    std::sort(est.values.begin(), est.values.end());
    return est;
}

} // namespace cqr
