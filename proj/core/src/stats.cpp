#include "cqr/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cqr/errors.hpp"
#include "cqr/mathutil.hpp"

namespace cqr {

std::vector<double> midranks(std::span<const double> values) {
    if (values.empty()) throw UsageError("midranks: empty input");
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });

    std::vector<double> ranks(n);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
        double midrank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = midrank;
        i = j + 1;
    }
    return ranks;
}

RankTestResult mann_whitney(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw UsageError("mann_whitney: empty group");

    RankTestResult result;
    result.n1 = a.size();
    result.n2 = b.size();
    const double n1 = static_cast<double>(a.size());
    const double n2 = static_cast<double>(b.size());
    const double n = n1 + n2;

    std::vector<double> pooled(a.begin(), a.end());
    pooled.insert(pooled.end(), b.begin(), b.end());
    auto ranks = midranks(pooled);

    double rank_sum_a = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) rank_sum_a += ranks[i];
    result.u_statistic = rank_sum_a - n1 * (n1 + 1.0) / 2.0;

    // tie correction: sum of t^3 - t over tie blocks of the pooled sample
    std::vector<double> sorted(pooled);
    std::sort(sorted.begin(), sorted.end());
    double tie_sum = 0.0;
    std::size_t i = 0;
    while (i < sorted.size()) {
        std::size_t j = i;
        while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
        double t = static_cast<double>(j - i + 1);
        tie_sum += t * t * t - t;
        i = j + 1;
    }
    result.tie_correction = tie_sum;

    double mean_u = n1 * n2 / 2.0;
    double variance =
        n1 * n2 / 12.0 * ((n + 1.0) - tie_sum / (n * (n - 1.0)));
    if (variance <= 0.0) {
        result.degenerate = true;
        result.p_value = 1.0;
        return result;
    }

    double diff = result.u_statistic - mean_u;
    // continuity correction shrinks |diff| by 0.5
    double corrected = diff > 0.0 ? diff - 0.5 : (diff < 0.0 ? diff + 0.5 : 0.0);
    double z = corrected / std::sqrt(variance);
    result.p_value = std::min(1.0, 2.0 * normal_cdf(-std::fabs(z)));
    return result;
}

} // namespace cqr
