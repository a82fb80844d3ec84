#ifndef CQR_GRID_HPP
#define CQR_GRID_HPP

#include <cmath>
#include <cstddef>
#include <vector>

#include "cqr/errors.hpp"

namespace cqr {

/// Ordered set of nominal quantile levels emitted by the network and
/// corrected by the calibrator. The canonical grid is tau_k = k/100,
/// k = 0..100: strictly increasing and symmetric around 0.5.
class QuantileGrid {
public:
    static constexpr std::size_t kSize = 101;

    QuantileGrid() {
        levels_.resize(kSize);
        for (std::size_t k = 0; k < kSize; ++k)
            levels_[k] = static_cast<double>(k) / 100.0;
    }

    explicit QuantileGrid(std::vector<double> levels) : levels_(std::move(levels)) {
        validate();
    }

    std::size_t size() const { return levels_.size(); }
    double level(std::size_t k) const { return levels_[k]; }
    const std::vector<double>& levels() const { return levels_; }

    /// Number of symmetric pairs strictly inside (0, 1): (tau_k, tau_{n-1-k})
    /// for k = 1..49 on the canonical grid. Endpoint levels are unpaired.
    std::size_t num_calibrated_pairs() const { return (size() - 1) / 2 - 1; }

private:
    void validate() const {
        if (levels_.size() != kSize)
            throw UsageError("QuantileGrid: expected exactly 101 levels");
        for (std::size_t k = 0; k < levels_.size(); ++k) {
            if (levels_[k] < 0.0 || levels_[k] > 1.0)
                throw UsageError("QuantileGrid: level outside [0, 1]");
            if (k > 0 && levels_[k] <= levels_[k - 1])
                throw UsageError("QuantileGrid: levels must be strictly increasing");
            double mirror = levels_[levels_.size() - 1 - k];
            if (std::fabs(levels_[k] + mirror - 1.0) > 1e-12)
                throw UsageError("QuantileGrid: levels must be symmetric around 0.5");
        }
    }

    std::vector<double> levels_;
};

} // namespace cqr

#endif
