#ifndef CQR_NET_HPP
#define CQR_NET_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cqr/dataset.hpp"
#include "cqr/grid.hpp"
#include "cqr/rng.hpp"

namespace cqr {

struct NetConfig {
    std::size_t hidden_units = 32;
    double dropout_rate = 0.2;
    double learning_rate = 0.01;
    std::size_t epochs = 10;
    std::size_t batch_size = 64;
    std::size_t mc_samples = 1000;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Per-subject vector of predicted quantile values, one per grid level,
/// monotone after the MC-mean re-sort.
struct QuantileEstimates {
    std::vector<double> values; // grid.size() entries, non-decreasing
};

/// Single-hidden-layer quantile-regression network: affine -> relu ->
/// (dropout) -> affine, one output per quantile level.
struct Network {
    std::size_t input_dim = 0;
    std::size_t hidden = 0;
    std::vector<double> w1; // hidden x input_dim, row-major
    std::vector<double> b1; // hidden
    std::vector<double> w2; // outputs x hidden, row-major
    std::vector<double> b2; // outputs
    QuantileGrid grid;
    NetConfig config;

    std::size_t outputs() const { return grid.size(); }
    std::size_t num_params() const {
        return w1.size() + b1.size() + w2.size() + b2.size();
    }
};

/// Gradients of the pinball objective w.r.t. every parameter, same layout
/// as the corresponding Network fields.
struct Gradients {
    std::vector<double> w1, b1, w2, b2;
};

/// He-style initialization, deterministic from config.seed; biases zero.
Network init_network(std::size_t input_dim, const QuantileGrid& grid,
                     const NetConfig& config);

/// One forward pass. With dropout_active the hidden layer is masked with
/// inverted-dropout scaling using draws from rng; otherwise deterministic.
std::vector<double> forward(const Network& net, std::span<const double> x,
                            bool dropout_active, Rng& rng);

/// Mean pinball loss over the grid: sum_k rho_{tau_k}(y - pred_k) / K.
double pinball_loss(std::span<const double> pred, double y,
                    const QuantileGrid& grid);

/// Loss and analytic parameter gradients for a single example, optionally
/// under a fixed dropout mask (scale factors per hidden unit; empty = none).
double loss_and_gradients(const Network& net, std::span<const double> x, double y,
                          std::span<const double> dropout_mask, Gradients& grads);

/// Trains with Adam (beta1=0.9, beta2=0.999, eps=1e-8) over seeded-shuffled
/// mini-batches, dropout active. Throws NumericError on divergent loss.
Network train(const Dataset& data, const QuantileGrid& grid,
              const NetConfig& config);

/// Mean over mc_samples stochastic forward passes, then monotone re-sort.
/// Each pass draws from a stream derived from (seed, pass index), so the
/// result is independent of evaluation order.
QuantileEstimates mc_predict(const Network& net, std::span<const double> x,
                             std::size_t mc_samples, std::uint64_t seed);

} // namespace cqr

#endif
