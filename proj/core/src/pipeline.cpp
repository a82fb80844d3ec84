#include "cqr/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "cqr/errors.hpp"
#include "cqr/mathutil.hpp"

namespace cqr {

Model train_model(const Dataset& data, const QuantileGrid& grid,
                  const TrainOptions& options) {
    if (!data.has_targets()) throw UsageError("train_model: dataset has no targets");
    if (options.cal_size >= data.n)
        throw UsageError("train_model: calibration size must be smaller than the dataset");

    SplitPlan plan = split(data.n, options.cal_size, 0.0, options.net.seed);
    Dataset train_rows = data.subset(plan.train);
    Dataset cal_rows = data.subset(plan.calibration);

    Model model;
    model.target_name = data.target_name;
    model.feature_names = data.feature_names;
    model.scaler = fit_scaler(train_rows);

    Dataset scaled_train = apply_scaler(model.scaler, train_rows);
    Dataset scaled_cal = apply_scaler(model.scaler, cal_rows);
    model.net = train(scaled_train, grid, options.net);

    std::vector<QuantileEstimates> cal_predictions;
    cal_predictions.reserve(scaled_cal.n);
    for (std::size_t i = 0; i < scaled_cal.n; ++i)
        cal_predictions.push_back(
            mc_predict(model.net, scaled_cal.row(i), options.net.mc_samples,
                       derive_seed(options.net.seed, "mc-cal", i)));
    model.table = build_table(cal_predictions, scaled_cal.targets, grid);
    return model;
}

namespace {

std::vector<double> scale_row(const Model& model, std::span<const double> features) {
    const auto& s = model.scaler;
    std::vector<double> scaled(s.kept.size());
    for (std::size_t c = 0; c < s.kept.size(); ++c) {
        if (s.kept[c] >= features.size())
            throw UsageError("predict: feature row shorter than the model expects");
        scaled[c] = (features[s.kept[c]] - s.mean[c]) / s.stddev[c];
    }
    return scaled;
}

} // namespace

Prediction predict_row(const Model& model, std::span<const double> features,
                       std::optional<double> target, std::uint64_t mc_seed,
                       std::size_t subject_index) {
    auto scaled = scale_row(model, features);
    Prediction pred;
    pred.raw = mc_predict(model.net, scaled, model.net.config.mc_samples,
                          derive_seed(mc_seed, "mc-subject", subject_index));
    if (model.calibrated()) {
        pred.calibrated = conformalize(pred.raw, model.table, model.net.grid);
    } else {
        pred.calibrated.values = pred.raw.values;
        const std::size_t pairs = model.net.grid.num_calibrated_pairs();
        const std::size_t last = model.net.grid.size() - 1;
        pred.calibrated.pair_lower.assign(pairs + 1, 0.0);
        pred.calibrated.pair_upper.assign(pairs + 1, 0.0);
        for (std::size_t k = 1; k <= pairs; ++k) {
            pred.calibrated.pair_lower[k] = pred.raw.values[k];
            pred.calibrated.pair_upper[k] = pred.raw.values[last - k];
        }
    }
    pred.point = point_estimate(pred.calibrated);
    if (target) {
        pred.gap = pred.point - *target;
        pred.score = deviation_score(pred.calibrated, *target).value;
    }
    return pred;
}

std::vector<Prediction> predict_all(const Model& model, const Dataset& data,
                                    std::uint64_t mc_seed) {
    std::vector<Prediction> out;
    out.reserve(data.n);
    for (std::size_t i = 0; i < data.n; ++i) {
        std::optional<double> y;
        if (data.has_targets()) y = data.targets[i];
        out.push_back(predict_row(model, data.row(i), y, mc_seed, i));
    }
    return out;
}

EvalReport evaluate_model(const Model& model, const Dataset& test,
                          std::uint64_t mc_seed) {
    if (test.n == 0) throw UsageError("evaluate_model: empty test set");
    if (!test.has_targets()) throw UsageError("evaluate_model: test set has no targets");
    if (!model.calibrated()) throw UsageError("evaluate_model: model is not calibrated");

    auto predictions = predict_all(model, test, mc_seed);

    EvalReport report;
    report.samples = test.n;
    report.score_histogram.assign(101, 0);
    std::vector<double> points(test.n);
    std::vector<QuantileEstimates> raw_ests;
    raw_ests.reserve(test.n);
    double gap_sum = 0.0;
    for (std::size_t i = 0; i < test.n; ++i) {
        points[i] = predictions[i].point;
        gap_sum += *predictions[i].gap;
        report.score_histogram[static_cast<std::size_t>(*predictions[i].score + 50)]++;
        raw_ests.push_back(std::move(predictions[i].raw));
    }
    report.mad_value = mad(points, test.targets);
    report.mean_gap = gap_sum / static_cast<double>(test.n);
    report.curve = picp_curve(raw_ests, model.table, model.net.grid, test.targets);
    return report;
}

void write_eval_report(std::ostream& out, const EvalReport& report,
                       const CalibrationTable& table) {
    out << "# picp per calibrated level\n";
    out << "nominal\traw_picp\tconformal_picp\tbound_lower\tbound_upper\tn\n";
    for (std::size_t i = 0; i < report.curve.nominal.size(); ++i) {
        const auto& entry = table.entries[i];
        out << report.curve.nominal[i] << '\t' << report.curve.raw[i] << '\t'
            << report.curve.conformal[i] << '\t' << entry.coverage_lower << '\t'
            << entry.coverage_upper << '\t' << report.curve.samples;
        if (entry.unbounded) out << "\tunbounded";
        out << '\n';
    }
    out << "# summary\n";
    out << "mad\t" << report.mad_value << '\n';
    out << "mean_gap\t" << report.mean_gap << '\n';
    out << "samples\t" << report.samples << '\n';
    out << "# score histogram\n";
    out << "score\tcount\n";
    for (std::size_t i = 0; i < report.score_histogram.size(); ++i)
        out << (static_cast<int>(i) - 50) << '\t' << report.score_histogram[i] << '\n';
}

namespace {

CvReport run_folds(const Dataset& data, const QuantileGrid& grid,
                   const TrainOptions& options,
                   const std::vector<std::vector<std::size_t>>& folds,
                   std::uint64_t seed) {
    CvReport report;
    std::vector<char> in_fold(data.n, 0);
    for (std::size_t f = 0; f < folds.size(); ++f) {
        std::fill(in_fold.begin(), in_fold.end(), 0);
        for (std::size_t i : folds[f]) in_fold[i] = 1;
        std::vector<std::size_t> train_idx;
        train_idx.reserve(data.n - folds[f].size());
        for (std::size_t i = 0; i < data.n; ++i)
            if (!in_fold[i]) train_idx.push_back(i);

        Dataset train_rows = data.subset(train_idx);
        Dataset test_rows = data.subset(folds[f]);

        TrainOptions fold_options = options;
        fold_options.net.seed = derive_seed(seed, "fold", f);
        Model model = train_model(train_rows, grid, fold_options);

        auto predictions =
            predict_all(model, test_rows, derive_seed(seed, "fold-mc", f));
        std::vector<double> points(test_rows.n);
        for (std::size_t i = 0; i < test_rows.n; ++i) points[i] = predictions[i].point;
        report.fold_mads.push_back(mad(points, test_rows.targets));
    }

    report.mean = mean(report.fold_mads);
    double ss = 0.0;
    for (double m : report.fold_mads) ss += (m - report.mean) * (m - report.mean);
    report.sd = report.fold_mads.size() > 1
                    ? std::sqrt(ss / static_cast<double>(report.fold_mads.size() - 1))
                    : 0.0;
    return report;
}

} // namespace

CvReport cross_validate(const Dataset& data, const QuantileGrid& grid,
                        const TrainOptions& options, std::size_t k,
                        std::uint64_t seed) {
    return run_folds(data, grid, options, kfold(data.n, k, seed), seed);
}

CvReport grouped_cross_validate(const Dataset& data, const QuantileGrid& grid,
                                const TrainOptions& options, std::uint64_t seed) {
    if (!data.has_groups())
        throw UsageError("grouped_cross_validate: dataset has no group column");
    return run_folds(data, grid, options, grouped_folds(data.groups), seed);
}

} // namespace cqr
