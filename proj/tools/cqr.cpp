// cqr: conformalized quantile regression pipeline.
// Subcommands: gen, train, predict, evaluate, compare.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cqr/conformal.hpp"
#include "cqr/dataset.hpp"
#include "cqr/errors.hpp"
#include "cqr/mathutil.hpp"
#include "cqr/model_io.hpp"
#include "cqr/net.hpp"
#include "cqr/pipeline.hpp"
#include "cqr/scoring.hpp"
#include "cqr/stats.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

// exit codes: 0 ok, 2 usage, 3 data, 4 numeric
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumeric = 4;

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class Manifest {
public:
    Manifest(std::string command) : command_(std::move(command)) {
        start_ = std::chrono::steady_clock::now();
    }

    void set(const std::string& key, const std::string& value) {
        entries_.emplace_back(key, value);
    }
    void set(const std::string& key, double value) { set(key, fmt_double(value)); }
    void set(const std::string& key, std::uint64_t value) {
        set(key, std::to_string(value));
    }

    void write(const std::string& output_path) const {
        auto elapsed = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - start_)
                           .count();
        std::ofstream out(output_path + ".manifest");
        if (!out)
            throw cqr::DataError("cannot write manifest: " + output_path + ".manifest");
        out << "command " << command_ << '\n';
        out << "version " << kVersion << '\n';
        for (const auto& [k, v] : entries_) out << k << ' ' << v << '\n';
        out << "output " << output_path << '\n';
        out << "wall_time_seconds " << fmt_double(elapsed) << '\n';
    }

private:
    std::string command_;
    std::vector<std::pair<std::string, std::string>> entries_;
    std::chrono::steady_clock::time_point start_;
};

bool csv_has_column(const std::string& path, const std::string& column) {
    std::ifstream in(path);
    if (!in) throw cqr::DataError("cannot open file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw cqr::DataError("empty file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
        if (cell == column) return true;
    return false;
}

/// Reorders a data row into the model's feature order by column name.
struct ColumnMap {
    std::vector<std::size_t> source; // model feature index -> data column index

    static ColumnMap build(const cqr::Model& model, const cqr::Dataset& data) {
        ColumnMap map;
        for (const auto& name : model.feature_names) {
            auto it = std::find(data.feature_names.begin(), data.feature_names.end(),
                                name);
            if (it == data.feature_names.end())
                throw cqr::DataError("input data is missing model feature column '" +
                                     name + "'");
            map.source.push_back(
                static_cast<std::size_t>(it - data.feature_names.begin()));
        }
        return map;
    }

    std::vector<double> extract(const cqr::Dataset& data, std::size_t row) const {
        std::vector<double> out(source.size());
        for (std::size_t j = 0; j < source.size(); ++j)
            out[j] = data.features[row * data.d + source[j]];
        return out;
    }
};

struct NetFlags {
    std::size_t hidden = 32;
    double dropout = 0.2;
    double lr = 0.01;
    std::size_t epochs = 10;
    std::size_t batch = 64;
    std::size_t mc = 1000;
    std::size_t cal = 1000;
    std::uint64_t seed = 0;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--hidden", hidden, "Hidden units")->capture_default_str();
        cmd->add_option("--dropout", dropout, "Dropout rate")->capture_default_str();
        cmd->add_option("--lr", lr, "Learning rate")->capture_default_str();
        cmd->add_option("--epochs", epochs, "Training epochs")->capture_default_str();
        cmd->add_option("--batch", batch, "Mini-batch size")->capture_default_str();
        cmd->add_option("--mc", mc, "MC dropout samples")->capture_default_str();
        cmd->add_option("--cal", cal, "Calibration set size")->capture_default_str();
        cmd->add_option("--seed", seed, "Master RNG seed")->capture_default_str();
    }

    cqr::TrainOptions to_options() const {
        cqr::TrainOptions options;
        options.net.hidden_units = hidden;
        options.net.dropout_rate = dropout;
        options.net.learning_rate = lr;
        options.net.epochs = epochs;
        options.net.batch_size = batch;
        options.net.mc_samples = mc;
        options.net.seed = seed;
        options.cal_size = cal;
        return options;
    }

    void record(Manifest& manifest) const {
        manifest.set("hidden_units", hidden);
        manifest.set("dropout_rate", dropout);
        manifest.set("learning_rate", lr);
        manifest.set("epochs", epochs);
        manifest.set("batch_size", batch);
        manifest.set("mc_samples", mc);
        manifest.set("cal_size", cal);
        manifest.set("seed", seed);
    }
};

int run_gen(std::size_t n, std::uint64_t seed, std::size_t nuisance,
            const std::string& out) {
    Manifest manifest("gen");
    manifest.set("n", n);
    manifest.set("seed", seed);
    manifest.set("nuisance", nuisance);

    cqr::Dataset data = cqr::synth_heteroscedastic(n, seed, nuisance);
    cqr::write_csv(data, out);

    cqr::SyntheticOracle oracle;
    std::ofstream sidecar(out + ".oracle");
    if (!sidecar) throw cqr::DataError("cannot write oracle sidecar: " + out + ".oracle");
    sidecar << "family gaussian-heteroscedastic\n";
    sidecar << "mu 10*x\n";
    sidecar << "sigma 0.5+x\n";
    sidecar << "mu_slope " << fmt_double(oracle.mu_slope) << '\n';
    sidecar << "sigma_intercept " << fmt_double(oracle.sigma_intercept) << '\n';
    sidecar << "sigma_slope " << fmt_double(oracle.sigma_slope) << '\n';
    sidecar << "seed " << seed << '\n';

    manifest.write(out);
    std::cout << "wrote " << data.n << " rows to " << out << '\n';
    return 0;
}

int run_train(const std::string& data_path, const std::string& target,
              const std::string& group, const NetFlags& flags,
              const std::string& out) {
    Manifest manifest("train");
    manifest.set("data", data_path);
    manifest.set("target", target);
    flags.record(manifest);

    cqr::Dataset data = cqr::load_csv(data_path, target, group);
    cqr::QuantileGrid grid;
    cqr::Model model = cqr::train_model(data, grid, flags.to_options());
    cqr::save_model(model, out);
    manifest.write(out);
    std::cout << "trained on " << (data.n - flags.cal) << " rows, calibrated on "
              << flags.cal << "; model written to " << out << '\n';
    return 0;
}

int run_predict(const std::string& model_path, const std::string& data_path,
                std::uint64_t mc_seed, const std::string& out) {
    Manifest manifest("predict");
    manifest.set("model", model_path);
    manifest.set("data", data_path);
    manifest.set("mc_seed", mc_seed);

    cqr::Model model = cqr::load_model(model_path);
    bool has_target = csv_has_column(data_path, model.target_name);
    cqr::Dataset data =
        cqr::load_csv(data_path, has_target ? model.target_name : "");
    auto columns = ColumnMap::build(model, data);

    std::ofstream table(out);
    if (!table) throw cqr::DataError("cannot write predictions: " + out);
    table << "row\tpoint\tgap\tscore";
    for (std::size_t k = 0; k < model.net.grid.size(); ++k)
        table << "\tq" << fmt_double(model.net.grid.level(k));
    table << '\n';

    for (std::size_t i = 0; i < data.n; ++i) {
        std::optional<double> y;
        if (has_target) y = data.targets[i];
        auto features = columns.extract(data, i);
        auto pred = cqr::predict_row(model, features, y, mc_seed, i);
        table << i << '\t' << fmt_double(pred.point) << '\t';
        if (pred.gap) table << fmt_double(*pred.gap);
        table << '\t';
        if (pred.score) table << *pred.score;
        for (double v : pred.calibrated.values) table << '\t' << fmt_double(v);
        table << '\n';
    }
    manifest.write(out);
    std::cout << "predictions for " << data.n << " rows written to " << out << '\n';
    return 0;
}

int run_evaluate(const std::string& model_path, const std::string& data_path,
                 const std::string& target, const std::string& group,
                 std::size_t kfold_k, bool group_cv, const NetFlags& flags,
                 std::uint64_t mc_seed, const std::string& out) {
    Manifest manifest("evaluate");
    manifest.set("data", data_path);

    std::ofstream report_out(out);
    if (!report_out) throw cqr::DataError("cannot write report: " + out);

    cqr::QuantileGrid grid;
    if (kfold_k > 0 || group_cv) {
        if (target.empty())
            throw cqr::UsageError("evaluate: --target is required for CV modes");
        manifest.set("mode", group_cv ? std::string("group-cv")
                                      : "kfold-" + std::to_string(kfold_k));
        flags.record(manifest);
        cqr::Dataset data = cqr::load_csv(data_path, target, group);
        cqr::CvReport cv =
            kfold_k > 0
                ? cqr::cross_validate(data, grid, flags.to_options(), kfold_k,
                                      flags.seed)
                : cqr::grouped_cross_validate(data, grid, flags.to_options(),
                                              flags.seed);
        report_out << "# cross validation\n";
        report_out << "fold\tmad\n";
        for (std::size_t f = 0; f < cv.fold_mads.size(); ++f)
            report_out << f << '\t' << cv.fold_mads[f] << '\n';
        char summary[64];
        std::snprintf(summary, sizeof(summary), "%.2f (%.2f)", cv.mean, cv.sd);
        report_out << "# summary\n";
        report_out << "mad_mean_sd\t" << summary << '\n';
        std::cout << "MAD " << summary << " over " << cv.fold_mads.size()
                  << " folds; report written to " << out << '\n';
    } else {
        if (model_path.empty())
            throw cqr::UsageError("evaluate: --model is required unless --kfold or "
                                  "--group-cv is given");
        manifest.set("mode", "holdout");
        manifest.set("model", model_path);
        manifest.set("mc_seed", mc_seed);
        cqr::Model model = cqr::load_model(model_path);
        cqr::Dataset data = cqr::load_csv(data_path, model.target_name);
        auto columns = ColumnMap::build(model, data);
        // reorder columns into model order
        cqr::Dataset aligned;
        aligned.n = data.n;
        aligned.d = model.feature_names.size();
        aligned.feature_names = model.feature_names;
        aligned.target_name = data.target_name;
        aligned.targets = data.targets;
        aligned.features.reserve(aligned.n * aligned.d);
        for (std::size_t i = 0; i < data.n; ++i) {
            auto row = columns.extract(data, i);
            aligned.features.insert(aligned.features.end(), row.begin(), row.end());
        }
        cqr::EvalReport report = cqr::evaluate_model(model, aligned, mc_seed);
        cqr::write_eval_report(report_out, report, model.table);
        std::cout << "MAD " << report.mad_value << " over " << report.samples
                  << " rows; report written to " << out << '\n';
    }
    manifest.write(out);
    return 0;
}

int run_compare(const std::string& scores_path, const std::string& score_column,
                const std::string& group_column, const std::string& reference,
                const std::string& out) {
    Manifest manifest("compare");
    manifest.set("scores", scores_path);
    manifest.set("score_column", score_column);
    manifest.set("group_column", group_column);
    manifest.set("reference", reference);

    cqr::Dataset data = cqr::load_csv(scores_path, score_column, group_column);
    if (!data.has_groups())
        throw cqr::DataError("compare: group column '" + group_column + "' is empty");

    std::map<std::string, std::vector<double>> by_group;
    for (std::size_t i = 0; i < data.n; ++i)
        by_group[data.groups[i]].push_back(data.targets[i]);
    if (by_group.find(reference) == by_group.end())
        throw cqr::DataError("compare: reference group '" + reference + "' not found");
    if (by_group.size() < 2)
        throw cqr::UsageError("compare: need at least two groups");

    auto median = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        std::size_t n = v.size();
        return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };

    std::ofstream table(out);
    if (!table) throw cqr::DataError("cannot write report: " + out);
    table << "group\treference\tn1\tn2\tU\tp\tmedian_group\tmedian_reference\tflag\n";
    const auto& ref_scores = by_group.at(reference);
    for (const auto& [name, scores] : by_group) {
        if (name == reference) continue;
        cqr::RankTestResult r = cqr::mann_whitney(scores, ref_scores);
        table << name << '\t' << reference << '\t' << r.n1 << '\t' << r.n2 << '\t'
              << fmt_double(r.u_statistic) << '\t' << fmt_double(r.p_value) << '\t'
              << fmt_double(median(scores)) << '\t' << fmt_double(median(ref_scores))
              << '\t' << (r.degenerate ? "degenerate" : "-") << '\n';
    }
    manifest.write(out);
    std::cout << "comparison report written to " << out << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conformalized quantile regression toolkit"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    app.set_config("--config", "", "Key-value config file (flags take precedence)");

    // gen
    auto* gen = app.add_subcommand("gen", "Generate a synthetic dataset");
    std::size_t gen_n = 0;
    std::uint64_t gen_seed = 0;
    std::size_t gen_nuisance = 0;
    std::string gen_out;
    gen->add_option("--n", gen_n, "Number of rows")->required()
        ->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_seed, "RNG seed")->capture_default_str();
    gen->add_option("--nuisance", gen_nuisance, "Inert noise columns")
        ->capture_default_str();
    gen->add_option("--out", gen_out, "Output CSV path")->required();

    // train
    auto* train = app.add_subcommand("train", "Train and calibrate a model");
    std::string train_data, train_target, train_group, train_out;
    NetFlags train_flags;
    train->add_option("--data", train_data, "Training CSV")->required();
    train->add_option("--target", train_target, "Target column name")->required();
    train->add_option("--group", train_group, "Optional group column name");
    train_flags.add_to(train);
    train->add_option("--out", train_out, "Output model path")->required();

    // predict
    auto* predict = app.add_subcommand("predict", "Predict with a trained model");
    std::string pred_model, pred_data, pred_out;
    std::uint64_t pred_seed = 0;
    predict->add_option("--model", pred_model, "Model file")->required();
    predict->add_option("--data", pred_data, "Input CSV")->required();
    predict->add_option("--mc-seed", pred_seed, "MC sampling seed")
        ->capture_default_str();
    predict->add_option("--out", pred_out, "Output table path")->required();

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "Evaluate a model or run CV");
    std::string eval_model, eval_data, eval_target, eval_group, eval_out;
    std::size_t eval_kfold = 0;
    bool eval_group_cv = false;
    std::uint64_t eval_mc_seed = 0;
    NetFlags eval_flags;
    evaluate->add_option("--model", eval_model, "Model file (hold-out mode)");
    evaluate->add_option("--data", eval_data, "Evaluation CSV")->required();
    evaluate->add_option("--target", eval_target, "Target column (CV modes)");
    evaluate->add_option("--group", eval_group, "Group column (for --group-cv)");
    evaluate->add_option("--kfold", eval_kfold, "Retrain with k-fold CV");
    evaluate->add_flag("--group-cv", eval_group_cv, "Leave-one-group-out CV");
    evaluate->add_option("--mc-seed", eval_mc_seed, "MC sampling seed")
        ->capture_default_str();
    eval_flags.add_to(evaluate);
    evaluate->add_option("--out", eval_out, "Output report path")->required();

    // compare
    auto* compare = app.add_subcommand("compare", "Mann-Whitney group comparison");
    std::string cmp_scores, cmp_score_col = "score", cmp_group_col = "group";
    std::string cmp_reference, cmp_out;
    compare->add_option("--scores", cmp_scores, "Scores CSV")->required();
    compare->add_option("--score-column", cmp_score_col, "Score column")
        ->capture_default_str();
    compare->add_option("--group-column", cmp_group_col, "Group column")
        ->capture_default_str();
    compare->add_option("--reference", cmp_reference, "Reference group name")
        ->required();
    compare->add_option("--out", cmp_out, "Output report path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (*gen) return run_gen(gen_n, gen_seed, gen_nuisance, gen_out);
        if (*train)
            return run_train(train_data, train_target, train_group, train_flags,
                             train_out);
        if (*predict) return run_predict(pred_model, pred_data, pred_seed, pred_out);
        if (*evaluate)
            return run_evaluate(eval_model, eval_data, eval_target, eval_group,
                                eval_kfold, eval_group_cv, eval_flags, eval_mc_seed,
                                eval_out);
        if (*compare)
            return run_compare(cmp_scores, cmp_score_col, cmp_group_col,
                               cmp_reference, cmp_out);
    } catch (const cqr::UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const cqr::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kExitData;
    } catch (const cqr::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return kExitNumeric;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
