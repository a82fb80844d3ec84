#ifndef CQR_STATS_HPP
#define CQR_STATS_HPP

#include <cstddef>
#include <span>
#include <vector>

namespace cqr {

struct RankTestResult {
    double u_statistic = 0.0; // group-1 statistic
    double p_value = 1.0;     // two-sided, normal approximation
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    double tie_correction = 0.0; // sum of (t^3 - t) over tie blocks
    bool degenerate = false;     // all pooled values identical
};

/// Ranks 1..N; tied values receive the mean rank of their block.
std::vector<double> midranks(std::span<const double> values);

/// Mann-Whitney U from midrank sums, two-sided p via normal approximation
/// with continuity correction and tie-corrected variance.
RankTestResult mann_whitney(std::span<const double> a, std::span<const double> b);

} // namespace cqr

#endif
