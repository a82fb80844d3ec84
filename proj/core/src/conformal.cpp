#include "cqr/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "cqr/errors.hpp"

namespace cqr {

const CalibrationEntry& CalibrationTable::entry(std::size_t pair_index) const {
    for (const auto& e : entries)
        if (e.pair_index == pair_index) return e;
    throw UsageError("CalibrationTable: no entry for pair index " +
                     std::to_string(pair_index));
}

double conformity_score(double lower, double upper, double y) {
    if (lower > upper) throw UsageError("conformity_score: lower > upper");
    return std::max(lower - y, y - upper);
}

double calibration_constant(std::span<const double> scores, double alpha) {
    if (scores.empty()) throw UsageError("calibration_constant: empty score list");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw UsageError("calibration_constant: alpha must be in (0, 1)");
    const std::size_t n = scores.size();
    // order-statistic index ceil((n+1)(1-alpha)), 1-based
    double raw = static_cast<double>(n + 1) * (1.0 - alpha);
    auto index = static_cast<std::size_t>(std::ceil(raw - 1e-9));
    if (index > n) return std::numeric_limits<double>::infinity();
    std::vector<double> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end());
    return sorted[index - 1];
}

CalibrationTable build_table(std::span<const QuantileEstimates> cal_predictions,
                             std::span<const double> cal_targets,
                             const QuantileGrid& grid) {
    if (cal_predictions.empty()) throw UsageError("build_table: empty calibration set");
    if (cal_predictions.size() != cal_targets.size())
        throw UsageError("build_table: predictions and targets not aligned");

    CalibrationTable table;
    table.n = cal_predictions.size();
    const std::size_t last = grid.size() - 1;
    std::vector<double> scores(table.n);
    for (std::size_t k = 1; k <= grid.num_calibrated_pairs(); ++k) {
        CalibrationEntry entry;
        entry.pair_index = k;
        entry.alpha = 2.0 * grid.level(k);
        for (std::size_t i = 0; i < table.n; ++i) {
            const auto& v = cal_predictions[i].values;
            if (v.size() != grid.size())
                throw UsageError("build_table: prediction length does not match grid");
            scores[i] = conformity_score(v[k], v[last - k], cal_targets[i]);
        }
        entry.qhat = calibration_constant(scores, entry.alpha);
        entry.unbounded = std::isinf(entry.qhat);
        auto [lo, hi] = coverage_bound(table.n, entry.alpha);
        entry.coverage_lower = lo;
        entry.coverage_upper = hi;
        table.entries.push_back(entry);
    }
    return table;
}

CalibratedQuantiles conformalize(const QuantileEstimates& est,
                                 const CalibrationTable& table,
                                 const QuantileGrid& grid) {
    if (est.values.size() != grid.size())
        throw UsageError("conformalize: estimate length does not match grid");
    if (table.entries.size() != grid.num_calibrated_pairs())
        throw UsageError("conformalize: table built on a different grid");

    const std::size_t last = grid.size() - 1;
    CalibratedQuantiles out;
    out.values = est.values; // endpoint and median levels pass through
    out.pair_lower.assign(grid.num_calibrated_pairs() + 1, 0.0);
    out.pair_upper.assign(grid.num_calibrated_pairs() + 1, 0.0);
    for (const auto& entry : table.entries) {
        std::size_t k = entry.pair_index;
        double lower = est.values[k] - entry.qhat;
        double upper = est.values[last - k] + entry.qhat;
        out.values[k] = lower;
        out.values[last - k] = upper;
        out.pair_lower[k] = lower;
        out.pair_upper[k] = upper;
    }
    std::sort(out.values.begin(), out.values.end());
    return out;
}

std::pair<double, double> coverage_bound(std::size_t n, double alpha) {
    if (n < 1) throw UsageError("coverage_bound: n must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw UsageError("coverage_bound: alpha must be in (0, 1)");
    return {1.0 - alpha, 1.0 - alpha + 1.0 / (1.0 + static_cast<double>(n))};
}

} // namespace cqr
