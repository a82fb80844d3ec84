#include "cqr/scoring.hpp"

#include <algorithm>
#include <cmath>

#include "cqr/errors.hpp"

namespace cqr {

double point_estimate(const CalibratedQuantiles& cq) {
    double sum = 0.0;
    std::size_t count = 0;
    for (double v : cq.values) {
        if (!std::isfinite(v)) continue;
        sum += v;
        ++count;
    }
    if (count == 0) throw NumericError("point_estimate: no finite quantile values");
    return sum / static_cast<double>(count);
}

double gap(const CalibratedQuantiles& cq, double y) {
    return point_estimate(cq) - y;
}

DeviationScore deviation_score(const CalibratedQuantiles& cq, double y) {
    long below = 0;
    for (double v : cq.values)
        if (v < y) ++below;
    below = std::min<long>(below, 100);
    long score = 50 - below;
    score = std::clamp<long>(score, -50, 50);
    return DeviationScore{static_cast<int>(score)};
}

double picp(std::span<const std::pair<double, double>> intervals,
            std::span<const double> ys) {
    if (intervals.empty() || intervals.size() != ys.size())
        throw UsageError("picp: intervals and targets must be aligned and non-empty");
    std::size_t covered = 0;
    for (std::size_t i = 0; i < ys.size(); ++i)
        if (intervals[i].first <= ys[i] && ys[i] <= intervals[i].second) ++covered;
    return static_cast<double>(covered) / static_cast<double>(ys.size());
}

double mad(std::span<const double> preds, std::span<const double> ys) {
    if (preds.empty() || preds.size() != ys.size())
        throw UsageError("mad: predictions and targets must be aligned and non-empty");
    double sum = 0.0;
    for (std::size_t i = 0; i < ys.size(); ++i) sum += std::fabs(preds[i] - ys[i]);
    return sum / static_cast<double>(ys.size());
}

PicpCurve picp_curve(std::span<const QuantileEstimates> test_predictions,
                     const CalibrationTable& table, const QuantileGrid& grid,
                     std::span<const double> ys) {
    if (test_predictions.empty() || test_predictions.size() != ys.size())
        throw UsageError("picp_curve: empty or misaligned test set");

    PicpCurve curve;
    curve.samples = ys.size();
    const std::size_t last = grid.size() - 1;
    // iterate outermost pair first so nominal level decreases along the curve
    for (const auto& entry : table.entries) {
        std::size_t k = entry.pair_index;
        std::size_t raw_cov = 0, conf_cov = 0;
        for (std::size_t i = 0; i < ys.size(); ++i) {
            const auto& v = test_predictions[i].values;
            if (v[k] <= ys[i] && ys[i] <= v[last - k]) ++raw_cov;
            double lo = v[k] - entry.qhat;
            double hi = v[last - k] + entry.qhat;
            if (lo <= ys[i] && ys[i] <= hi) ++conf_cov;
        }
        curve.nominal.push_back(1.0 - entry.alpha);
        curve.raw.push_back(static_cast<double>(raw_cov) /
                            static_cast<double>(ys.size()));
        curve.conformal.push_back(static_cast<double>(conf_cov) /
                                  static_cast<double>(ys.size()));
    }
    return curve;
}

} // namespace cqr
