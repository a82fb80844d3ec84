#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "cqr/errors.hpp"
#include "cqr/mathutil.hpp"
#include "cqr/rng.hpp"
#include "cqr/scoring.hpp"

using namespace cqr;

namespace {

CalibratedQuantiles make_cq(std::vector<double> values) {
    CalibratedQuantiles cq;
    cq.values = std::move(values);
    std::sort(cq.values.begin(), cq.values.end());
    return cq;
}

std::vector<double> arithmetic_values() {
    std::vector<double> v(101);
    std::iota(v.begin(), v.end(), 1.0); // 1..101
    return v;
}

} // namespace

TEST_CASE("point estimate") {
    CHECK(point_estimate(make_cq(std::vector<double>(101, 7.5))) == 7.5);
    CHECK(point_estimate(make_cq(arithmetic_values())) == doctest::Approx(51.0));

    // symmetric around m
    std::vector<double> sym(101);
    for (int k = 0; k <= 100; ++k) sym[k] = 3.0 + (k - 50) * 0.1;
    CHECK(point_estimate(make_cq(sym)) == doctest::Approx(3.0));
}

TEST_CASE("gap") {
    auto cq = make_cq(std::vector<double>(101, 55.0));
    CHECK(gap(cq, 50.0) == 5.0);
    CHECK(gap(cq, 55.0) == 0.0);
    CHECK(gap(cq, 60.0) == -(60.0 - point_estimate(cq)));
}

TEST_CASE("deviation score") {
    auto values = arithmetic_values(); // 1..101

    SUBCASE("clamped extremes") {
        auto cq = make_cq(values);
        CHECK(deviation_score(cq, 0.5).value == 50);   // below all
        CHECK(deviation_score(cq, 200.0).value == -50); // above all
    }

    SUBCASE("median position gives zero") {
        auto cq = make_cq(values);
        // y = 51: values 1..50 strictly below -> score 0
        CHECK(deviation_score(cq, 51.0).value == 0);
    }

    SUBCASE("ties count as not strictly below") {
        auto cq = make_cq(values);
        CHECK(deviation_score(cq, 1.0).value == 50);
        CHECK(deviation_score(cq, 2.0).value == 49);
    }

    SUBCASE("sign correctness over random cases") {
        Rng rng(3);
        for (int trial = 0; trial < 1000; ++trial) {
            std::vector<double> v(101);
            for (double& x : v) x = 10.0 * rng.gaussian();
            auto cq = make_cq(v);
            double y = 10.0 * rng.gaussian();
            int score = deviation_score(cq, y).value;
            long above = std::count_if(cq.values.begin(), cq.values.end(),
                                       [&](double q) { return q > y; });
            long strictly_below =
                std::count_if(cq.values.begin(), cq.values.end(),
                              [&](double q) { return q < y; });
            CHECK(std::abs(score) <= 50);
            if (score > 0) CHECK(above > 50);
            CHECK((score > 0) == (strictly_below < 50));
        }
    }
}

TEST_CASE("picp") {
    std::vector<std::pair<double, double>> intervals;
    std::vector<double> ys;
    for (int i = 0; i < 10; ++i) {
        intervals.emplace_back(0.0, 1.0);
        ys.push_back(i == 0 ? 2.0 : 0.5); // 9 of 10 inside
    }
    CHECK(picp(intervals, ys) == doctest::Approx(0.9));

    std::vector<std::pair<double, double>> unbounded(
        5, {-std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity()});
    std::vector<double> any = {1, -2, 3, 1e9, -1e9};
    CHECK(picp(unbounded, any) == 1.0);

    CHECK_THROWS_AS(picp({}, {}), UsageError);
}

TEST_CASE("picp permutation invariance") {
    Rng rng(5);
    std::vector<std::pair<double, double>> intervals;
    std::vector<double> ys;
    for (int i = 0; i < 200; ++i) {
        double c = rng.gaussian();
        intervals.emplace_back(c - 1.0, c + 1.0);
        ys.push_back(c + 2.0 * rng.gaussian());
    }
    double base = picp(intervals, ys);
    std::vector<std::size_t> perm(ys.size());
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    for (std::size_t i = perm.size(); i > 1; --i)
        std::swap(perm[i - 1], perm[rng.below(i)]);
    std::vector<std::pair<double, double>> pi;
    std::vector<double> py;
    for (std::size_t i : perm) {
        pi.push_back(intervals[i]);
        py.push_back(ys[i]);
    }
    CHECK(picp(pi, py) == base);
}

TEST_CASE("mad") {
    std::vector<double> preds = {1, 2, 3};
    CHECK(mad(preds, preds) == 0.0);

    std::vector<double> a = {1, -3};
    std::vector<double> zeros = {0, 0};
    CHECK(mad(a, zeros) == 2.0);

    // translation invariance
    Rng rng(9);
    std::vector<double> p(50), y(50), ps(50), yc(50);
    double c = 17.5;
    for (std::size_t i = 0; i < 50; ++i) {
        p[i] = rng.gaussian();
        y[i] = rng.gaussian();
        ps[i] = p[i] + c;
        yc[i] = y[i] + c;
    }
    CHECK(mad(p, y) == doctest::Approx(mad(ps, yc)).epsilon(1e-12));

    CHECK_THROWS_AS(mad({}, {}), UsageError);
}

TEST_CASE("picp_curve") {
    QuantileGrid grid;

    auto estimates_at = [&](double mu, double sigma) {
        QuantileEstimates est;
        est.values.resize(grid.size());
        for (std::size_t k = 0; k < grid.size(); ++k) {
            double tau = std::clamp(grid.level(k), 1e-6, 1.0 - 1e-6);
            est.values[k] = mu + sigma * inv_normal_cdf(tau);
        }
        return est;
    };

    SUBCASE("single covered point gives a curve of ones") {
        std::vector<QuantileEstimates> preds = {estimates_at(0.0, 1.0)};
        std::vector<double> ys = {0.0};
        CalibrationTable table;
        table.n = 100;
        for (std::size_t k = 1; k <= grid.num_calibrated_pairs(); ++k) {
            CalibrationEntry e;
            e.pair_index = k;
            e.alpha = 2.0 * grid.level(k);
            e.qhat = 0.0;
            table.entries.push_back(e);
        }
        PicpCurve curve = picp_curve(preds, table, grid, ys);
        REQUIRE(curve.nominal.size() == 49);
        for (double v : curve.raw) CHECK(v == 1.0);
        for (double v : curve.conformal) CHECK(v == 1.0);
    }

    SUBCASE("conformal repairs an under-dispersed model") {
        // predictions claim sigma 0.5 but data has sigma 1: raw undercovers,
        // conformal must lift coverage at every level where raw falls short
        Rng rng(21);
        std::vector<QuantileEstimates> cal_preds, test_preds;
        std::vector<double> cal_ys, test_ys;
        for (int i = 0; i < 500; ++i) {
            cal_preds.push_back(estimates_at(0.0, 0.5));
            cal_ys.push_back(rng.gaussian());
        }
        for (int i = 0; i < 1500; ++i) {
            test_preds.push_back(estimates_at(0.0, 0.5));
            test_ys.push_back(rng.gaussian());
        }
        CalibrationTable table = build_table(cal_preds, cal_ys, grid);
        PicpCurve curve = picp_curve(test_preds, table, grid, test_ys);
        for (std::size_t i = 0; i < curve.nominal.size(); ++i) {
            if (curve.raw[i] < curve.nominal[i] - 0.02)
                CHECK(curve.conformal[i] >= curve.raw[i]);
        }
        // spot-check the 90% level: raw should be well short, conformal close
        for (std::size_t i = 0; i < curve.nominal.size(); ++i) {
            if (std::fabs(curve.nominal[i] - 0.9) < 1e-9) {
                CHECK(curve.raw[i] < 0.8);
                CHECK(curve.conformal[i] > 0.85);
            }
        }
    }

    SUBCASE("empty test set is rejected") {
        CalibrationTable table;
        CHECK_THROWS_AS(picp_curve({}, table, grid, {}), UsageError);
    }
}
