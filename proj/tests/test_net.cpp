#include <doctest.h>

#include <cmath>
#include <numeric>
#include <vector>

#include "cqr/dataset.hpp"
#include "cqr/errors.hpp"
#include "cqr/net.hpp"

using namespace cqr;

namespace {

NetConfig small_config() {
    NetConfig config;
    config.hidden_units = 8;
    config.mc_samples = 10;
    config.seed = 42;
    return config;
}

// independent loss oracle for cross-checks
double pinball_oracle(std::span<const double> pred, double y,
                      const QuantileGrid& grid) {
    double total = 0.0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
        double u = y - pred[k];
        double tau = grid.level(k);
        total += u >= 0.0 ? tau * u : (tau - 1.0) * u;
    }
    return total / static_cast<double>(grid.size());
}

} // namespace

TEST_CASE("init_network is deterministic per seed") {
    QuantileGrid grid;
    NetConfig config = small_config();
    Network a = init_network(3, grid, config);
    Network b = init_network(3, grid, config);
    CHECK(a.w1 == b.w1);
    CHECK(a.w2 == b.w2);
    CHECK(a.b1 == std::vector<double>(8, 0.0));
    CHECK(a.b2 == std::vector<double>(101, 0.0));

    config.seed = 43;
    Network c = init_network(3, grid, config);
    CHECK(a.w1 != c.w1);

    CHECK_THROWS_AS(init_network(0, grid, config), UsageError);
}

TEST_CASE("forward basics") {
    QuantileGrid grid;
    NetConfig config = small_config();
    Network net = init_network(2, grid, config);

    SUBCASE("zero input with zero biases gives zero output") {
        std::vector<double> x = {0.0, 0.0};
        Rng rng(1);
        auto out = forward(net, x, false, rng);
        for (double v : out) CHECK(v == 0.0);
    }

    SUBCASE("dimension mismatch is rejected") {
        std::vector<double> x = {1.0};
        Rng rng(1);
        CHECK_THROWS_AS(forward(net, x, false, rng), UsageError);
    }

    SUBCASE("dropout_rate 0 makes dropout_active a no-op") {
        net.config.dropout_rate = 0.0;
        std::vector<double> x = {0.4, -0.7};
        Rng rng1(5), rng2(5);
        CHECK(forward(net, x, true, rng1) == forward(net, x, false, rng2));
    }

    SUBCASE("same rng state gives identical stochastic passes") {
        std::vector<double> x = {0.4, -0.7};
        Rng rng1(5), rng2(5);
        CHECK(forward(net, x, true, rng1) == forward(net, x, true, rng2));
    }
}

TEST_CASE("pinball loss values") {
    QuantileGrid grid;
    const std::size_t m = grid.size();
    double y = 1.0;

    SUBCASE("zero residual everywhere gives zero loss") {
        std::vector<double> pred(m, y);
        CHECK(pinball_loss(pred, y, grid) == 0.0);
    }

    SUBCASE("single-level contributions match the pinball definition") {
        // residual u = 2 only at tau = 0.5: contribution 1.0 / 101
        std::vector<double> pred(m, y);
        pred[50] = y - 2.0;
        CHECK(pinball_loss(pred, y, grid) == doctest::Approx(1.0 / 101.0));

        // tau = 0.9, u = 1 -> 0.9 ; u = -1 -> 0.1
        pred.assign(m, y);
        pred[90] = y - 1.0;
        CHECK(pinball_loss(pred, y, grid) == doctest::Approx(0.9 / 101.0));
        pred[90] = y + 1.0;
        CHECK(pinball_loss(pred, y, grid) == doctest::Approx(0.1 / 101.0));
    }

    SUBCASE("matches the independent oracle and stays nonnegative") {
        Rng rng(8);
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<double> pred(m);
            for (double& v : pred) v = 4.0 * rng.gaussian();
            double target = 2.0 * rng.gaussian();
            double loss = pinball_loss(pred, target, grid);
            CHECK(loss == doctest::Approx(pinball_oracle(pred, target, grid))
                              .epsilon(1e-12));
            CHECK(loss >= 0.0);
        }
    }
}

TEST_CASE("analytic gradients match central finite differences") {
    QuantileGrid grid;
    NetConfig config = small_config();
    Network net = init_network(3, grid, config);

    Rng rng(99);
    // piecewise-linear objective: central differences are exact away from
    // pinball and relu kinks, so only kink proximity needs filtering
    const double h = 1e-4;
    int checked_points = 0;
    while (checked_points < 5) {
        std::vector<double> x = {rng.gaussian(), rng.gaussian(), rng.gaussian()};
        Rng fwd_rng(0);
        auto out = forward(net, x, false, fwd_rng);
        double y = out[50] + 3.0 + rng.uniform01();
        bool near_kink = false;
        for (double v : out)
            if (std::fabs(y - v) < 1e-3) near_kink = true;
        for (std::size_t i = 0; i < net.hidden; ++i) {
            double z = net.b1[i];
            for (std::size_t j = 0; j < x.size(); ++j)
                z += net.w1[i * x.size() + j] * x[j];
            if (std::fabs(z) <= 1e-2) near_kink = true;
        }
        if (near_kink) continue;
        ++checked_points;

        Gradients grads;
        loss_and_gradients(net, x, y, {}, grads);

        auto check_block = [&](std::vector<double>& params,
                               const std::vector<double>& analytic) {
            for (std::size_t i = 0; i < params.size(); i += 7) {
                double saved = params[i];
                params[i] = saved + h;
                Rng r1(0);
                double up = pinball_loss(forward(net, x, false, r1), y, grid);
                params[i] = saved - h;
                Rng r2(0);
                double down = pinball_loss(forward(net, x, false, r2), y, grid);
                params[i] = saved;
                double numeric = (up - down) / (2.0 * h);
                double scale = std::max({std::fabs(numeric), std::fabs(analytic[i]),
                                         1e-6});
                CHECK(std::fabs(numeric - analytic[i]) / scale < 1e-5);
            }
        };
        check_block(net.w1, grads.w1);
        check_block(net.b1, grads.b1);
        check_block(net.w2, grads.w2);
        check_block(net.b2, grads.b2);
    }
}

TEST_CASE("gradients respect a fixed dropout mask") {
    QuantileGrid grid;
    NetConfig config = small_config();
    Network net = init_network(2, grid, config);
    std::vector<double> mask = {0.0, 1.25, 1.25, 0.0, 1.25, 1.25, 0.0, 1.25};
    std::vector<double> x = {0.3, -0.9};
    double y = 5.0;

    Gradients grads;
    loss_and_gradients(net, x, y, mask, grads);
    // dropped units get no gradient
    for (std::size_t i : {0u, 3u, 6u}) {
        CHECK(grads.b1[i] == 0.0);
        CHECK(grads.w1[i * 2] == 0.0);
        CHECK(grads.w1[i * 2 + 1] == 0.0);
    }
}

TEST_CASE("training is deterministic and learns a noiseless linear task") {
    // y = 10 x exactly; the trained median must beat the constant mean predictor
    const std::size_t n = 2000;
    Dataset data;
    data.n = n;
    data.d = 1;
    data.feature_names = {"x"};
    data.target_name = "y";
    Rng rng(4);
    for (std::size_t i = 0; i < n; ++i) {
        double x = 2.0 * rng.uniform01() - 1.0;
        data.features.push_back(x);
        data.targets.push_back(10.0 * x);
    }

    QuantileGrid grid;
    NetConfig config;
    config.hidden_units = 16;
    config.epochs = 10;
    config.mc_samples = 50;
    config.seed = 11;

    Network net = train(data, grid, config);
    Network net2 = train(data, grid, config);
    CHECK(net.w1 == net2.w1);
    CHECK(net.b1 == net2.b1);
    CHECK(net.w2 == net2.w2);
    CHECK(net.b2 == net2.b2);

    double target_mean =
        std::accumulate(data.targets.begin(), data.targets.end(), 0.0) /
        static_cast<double>(n);
    double model_mad = 0.0, constant_mad = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto est = mc_predict(net, data.row(i), config.mc_samples, 21 + i);
        model_mad += std::fabs(est.values[50] - data.targets[i]);
        constant_mad += std::fabs(target_mean - data.targets[i]);
    }
    CHECK(model_mad < constant_mad);
}

TEST_CASE("train rejects bad input") {
    QuantileGrid grid;
    NetConfig config = small_config();
    Dataset empty;
    CHECK_THROWS_AS(train(empty, grid, config), UsageError);
}

TEST_CASE("mc_predict properties") {
    QuantileGrid grid;
    NetConfig config = small_config();
    Network net = init_network(2, grid, config);

    SUBCASE("dropout_rate 0 equals one deterministic pass") {
        net.config.dropout_rate = 0.0;
        std::vector<double> x = {0.2, 0.8};
        Rng rng(0);
        auto deterministic = forward(net, x, false, rng);
        std::sort(deterministic.begin(), deterministic.end());
        CHECK(mc_predict(net, x, 1, 5).values == deterministic);
        CHECK(mc_predict(net, x, 64, 5).values == deterministic);
    }

    SUBCASE("outputs are non-decreasing for many random inputs") {
        Rng rng(17);
        for (int trial = 0; trial < 1000; ++trial) {
            std::vector<double> x = {rng.gaussian(), rng.gaussian()};
            auto est = mc_predict(net, x, 8, static_cast<std::uint64_t>(trial));
            CHECK(std::is_sorted(est.values.begin(), est.values.end()));
        }
    }

    SUBCASE("mc_samples below 1 is rejected") {
        std::vector<double> x = {0.0, 0.0};
        CHECK_THROWS_AS(mc_predict(net, x, 0, 1), UsageError);
    }

    SUBCASE("same seed gives identical estimates") {
        std::vector<double> x = {0.1, -0.2};
        CHECK(mc_predict(net, x, 16, 9).values == mc_predict(net, x, 16, 9).values);
    }
}

TEST_CASE("config validation") {
    NetConfig config;
    config.dropout_rate = 1.0;
    CHECK_THROWS_AS(config.validate(), UsageError);
    config = NetConfig{};
    config.learning_rate = 0.0;
    CHECK_THROWS_AS(config.validate(), UsageError);
    config = NetConfig{};
    config.epochs = 0;
    CHECK_THROWS_AS(config.validate(), UsageError);
    // reference-regime defaults
    config = NetConfig{};
    CHECK(config.hidden_units == 32);
    CHECK(config.epochs == 10);
    CHECK(config.learning_rate == 0.01);
    CHECK(config.batch_size == 64);
    CHECK(config.dropout_rate == 0.2);
    CHECK(config.mc_samples == 1000);
}
