#ifndef CQR_DATASET_HPP
#define CQR_DATASET_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cqr/errors.hpp"

namespace cqr {

/// Feature matrix (row-major) + target vector + optional per-row group label.
struct Dataset {
    std::size_t n = 0;
    std::size_t d = 0;
    std::vector<double> features;           // n * d, row-major
    std::vector<double> targets;            // n (may be empty for unlabeled data)
    std::vector<std::string> groups;        // n or empty
    std::vector<std::string> feature_names; // d
    std::string target_name;
    std::string group_name;

    bool has_targets() const { return !targets.empty(); }
    bool has_groups() const { return !groups.empty(); }

    std::span<const double> row(std::size_t i) const {
        return {features.data() + i * d, d};
    }

    /// Dataset restricted to the given row indices, in the given order.
    Dataset subset(std::span<const std::size_t> idx) const;
};

/// Column means / population standard deviations fitted on the training
/// split, plus the indices of columns kept after zero-variance removal.
struct ScalerParams {
    std::vector<std::size_t> kept;  // indices into the original columns
    std::vector<double> mean;       // per kept column
    std::vector<double> stddev;     // per kept column, population convention
};

/// Disjoint covering index sets for train / calibration / test.
struct SplitPlan {
    std::uint64_t seed = 0;
    std::vector<std::size_t> train;
    std::vector<std::size_t> calibration;
    std::vector<std::size_t> test;
};

Dataset load_csv(const std::string& path, const std::string& target_column,
                 const std::string& group_column = "");
void write_csv(const Dataset& data, const std::string& path);

ScalerParams fit_scaler(const Dataset& train);
Dataset apply_scaler(const ScalerParams& params, const Dataset& data);

SplitPlan split(std::size_t n, std::size_t cal_size, double test_fraction,
                std::uint64_t seed);

std::vector<std::vector<std::size_t>> kfold(std::size_t n, std::size_t k,
                                            std::uint64_t seed);
/// One fold per distinct group label, each label wholly in one held-out fold.
std::vector<std::vector<std::size_t>> grouped_folds(
    std::span<const std::string> groups);

/// Synthetic regression task with analytically known conditional quantiles:
/// x0 ~ U[0,1], y | x ~ N(mu(x0), sigma(x0)^2), mu(x) = 10x, sigma(x) = 0.5+x.
/// Extra columns (nuisance_dims) are inert U[0,1] noise.
struct SyntheticOracle {
    double mu_slope = 10.0;
    double sigma_intercept = 0.5;
    double sigma_slope = 1.0;

    double mu(double x) const { return mu_slope * x; }
    double sigma(double x) const { return sigma_intercept + sigma_slope * x; }
    double true_quantile(double x, double tau) const;
};

Dataset synth_heteroscedastic(std::size_t n, std::uint64_t seed,
                              std::size_t nuisance_dims = 0);

} // namespace cqr

#endif
