#ifndef CQR_CONFORMAL_HPP
#define CQR_CONFORMAL_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "cqr/grid.hpp"
#include "cqr/net.hpp"

namespace cqr {

/// Calibration constant for one symmetric quantile pair (tau_k, tau_{100-k}).
struct CalibrationEntry {
    std::size_t pair_index = 0; // k, 1..49 on the canonical grid
    double alpha = 0.0;         // nominal miscoverage 2 * tau_k
    double qhat = 0.0;          // +inf when the order-statistic index exceeds n
    bool unbounded = false;
    double coverage_lower = 0.0; // guaranteed coverage in (lower, upper]
    double coverage_upper = 0.0;
};

struct CalibrationTable {
    std::size_t n = 0; // calibration-set size
    std::vector<CalibrationEntry> entries;

    const CalibrationEntry& entry(std::size_t pair_index) const;
};

/// Calibrated per-subject quantiles. `values` is the monotone re-sorted
/// vector; `pair_lower` / `pair_upper` keep the un-sorted interval ends
/// [est_k - qhat_k, est_{100-k} + qhat_k] indexed by pair, which is the
/// object the coverage guarantee applies to.
struct CalibratedQuantiles {
    std::vector<double> values;
    std::vector<double> pair_lower; // indexed by pair_index; 0 for unpaired
    std::vector<double> pair_upper;

    double lower(std::size_t pair_index) const { return pair_lower[pair_index]; }
    double upper(std::size_t pair_index) const { return pair_upper[pair_index]; }
};

/// s(lower, upper, y) = max(lower - y, y - upper); negative iff y is
/// strictly inside the interval.
double conformity_score(double lower, double upper, double y);

/// The ceil((n+1)(1-alpha))-th smallest score; +inf when that index
/// exceeds n (the calibrated interval becomes unbounded).
double calibration_constant(std::span<const double> scores, double alpha);

CalibrationTable build_table(std::span<const QuantileEstimates> cal_predictions,
                             std::span<const double> cal_targets,
                             const QuantileGrid& grid);

CalibratedQuantiles conformalize(const QuantileEstimates& est,
                                 const CalibrationTable& table,
                                 const QuantileGrid& grid);

/// Coverage guarantee (1 - alpha, 1 - alpha + 1/(1+n)] for an exchangeable
/// test point.
std::pair<double, double> coverage_bound(std::size_t n, double alpha);

} // namespace cqr

#endif
