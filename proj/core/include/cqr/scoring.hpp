#ifndef CQR_SCORING_HPP
#define CQR_SCORING_HPP

#include <cstddef>
#include <span>
#include <vector>

#include "cqr/conformal.hpp"

namespace cqr {

/// Signed probability-of-accelerated-deviation score in [-50, 50]. Positive
/// means the target sits below the calibrated median (predicted > true).
struct DeviationScore {
    int value = 0;
};

/// Empirical coverage per calibrated nominal level, raw vs conformalized.
struct PicpCurve {
    std::vector<double> nominal;    // 1 - alpha_k per calibrated pair
    std::vector<double> raw;        // coverage of the uncalibrated pair
    std::vector<double> conformal;  // coverage of the calibrated pair
    std::size_t samples = 0;
};

/// Arithmetic mean of the calibrated quantile values (non-finite entries
/// from unbounded intervals are excluded).
double point_estimate(const CalibratedQuantiles& cq);

/// point_estimate(cq) - y.
double gap(const CalibratedQuantiles& cq, double y);

/// score = 50 - #{calibrated quantiles strictly below y}, clamped to
/// [-50, 50]; ties count as not-below.
DeviationScore deviation_score(const CalibratedQuantiles& cq, double y);

/// Fraction of targets with lower_i <= y_i <= upper_i.
double picp(std::span<const std::pair<double, double>> intervals,
            std::span<const double> ys);

/// Mean absolute deviation.
double mad(std::span<const double> preds, std::span<const double> ys);

PicpCurve picp_curve(std::span<const QuantileEstimates> test_predictions,
                     const CalibrationTable& table, const QuantileGrid& grid,
                     std::span<const double> ys);

} // namespace cqr

#endif
