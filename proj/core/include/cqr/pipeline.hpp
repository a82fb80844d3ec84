#ifndef CQR_PIPELINE_HPP
#define CQR_PIPELINE_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "cqr/model_io.hpp"
#include "cqr/scoring.hpp"

namespace cqr {

struct TrainOptions {
    NetConfig net;
    std::size_t cal_size = 1000;
};

/// Full training pipeline: split off the calibration set, fit the scaler on
/// the training rows only, train the network, predict the calibration rows
/// with MC dropout and build the calibration table.
Model train_model(const Dataset& data, const QuantileGrid& grid,
                  const TrainOptions& options);

struct Prediction {
    QuantileEstimates raw;
    CalibratedQuantiles calibrated;
    double point = 0.0;
    std::optional<double> gap;
    std::optional<int> score;
};

/// Predicts one subject. mc_seed and subject_index select the per-subject
/// MC sampling stream, so batch order does not affect results.
Prediction predict_row(const Model& model, std::span<const double> features,
                       std::optional<double> target, std::uint64_t mc_seed,
                       std::size_t subject_index);

std::vector<Prediction> predict_all(const Model& model, const Dataset& data,
                                    std::uint64_t mc_seed);

struct EvalReport {
    double mad_value = 0.0;
    double mean_gap = 0.0;
    PicpCurve curve;
    std::vector<std::size_t> score_histogram; // 101 bins for scores -50..50
    std::size_t samples = 0;
};

EvalReport evaluate_model(const Model& model, const Dataset& test,
                          std::uint64_t mc_seed);

/// One row per calibrated nominal level plus a summary block; delimited text.
void write_eval_report(std::ostream& out, const EvalReport& report,
                       const CalibrationTable& table);

struct CvReport {
    std::vector<double> fold_mads;
    double mean = 0.0;
    double sd = 0.0; // sample standard deviation across folds
};

CvReport cross_validate(const Dataset& data, const QuantileGrid& grid,
                        const TrainOptions& options, std::size_t k,
                        std::uint64_t seed);

CvReport grouped_cross_validate(const Dataset& data, const QuantileGrid& grid,
                                const TrainOptions& options, std::uint64_t seed);

} // namespace cqr

#endif
