#include "cqr/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "cqr/mathutil.hpp"
#include "cqr/rng.hpp"

namespace cqr {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

double parse_cell(const std::string& cell, std::size_t row, const std::string& col) {
    const char* first = cell.data();
    const char* last = first + cell.size();
    while (first < last && (*first == ' ' || *first == '\t')) ++first;
    while (last > first && (last[-1] == ' ' || last[-1] == '\t' || last[-1] == '\r'))
        --last;
    double value;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        throw DataError("non-numeric cell '" + cell + "' at row " +
                        std::to_string(row) + ", column '" + col + "'");
    if (!std::isfinite(value))
        throw DataError("non-finite value at row " + std::to_string(row) +
                        ", column '" + col + "'");
    return value;
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

Dataset Dataset::subset(std::span<const std::size_t> idx) const {
    Dataset out;
    out.d = d;
    out.n = idx.size();
    out.feature_names = feature_names;
    out.target_name = target_name;
    out.group_name = group_name;
    out.features.reserve(out.n * d);
    for (std::size_t i : idx) {
        auto r = row(i);
        out.features.insert(out.features.end(), r.begin(), r.end());
        if (has_targets()) out.targets.push_back(targets[i]);
        if (has_groups()) out.groups.push_back(groups[i]);
    }
    return out;
}

Dataset load_csv(const std::string& path, const std::string& target_column,
                 const std::string& group_column) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw DataError("empty file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    auto header = split_line(line);
    std::ptrdiff_t target_idx = -1, group_idx = -1;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j] == target_column) target_idx = static_cast<std::ptrdiff_t>(j);
        if (!group_column.empty() && header[j] == group_column)
            group_idx = static_cast<std::ptrdiff_t>(j);
    }
    if (!target_column.empty() && target_idx < 0)
        throw DataError("target column '" + target_column + "' not found in " + path);
    if (!group_column.empty() && group_idx < 0)
        throw DataError("group column '" + group_column + "' not found in " + path);

    Dataset data;
    data.target_name = target_column;
    data.group_name = group_column;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (static_cast<std::ptrdiff_t>(j) == target_idx ||
            static_cast<std::ptrdiff_t>(j) == group_idx)
            continue;
        data.feature_names.push_back(header[j]);
    }
    data.d = data.feature_names.size();

    std::size_t row_no = 0; // data rows, header excluded
    while (std::getline(in, line)) {
        ++row_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (cells.size() != header.size())
            throw DataError("ragged row " + std::to_string(row_no) + ": expected " +
                            std::to_string(header.size()) + " cells, got " +
                            std::to_string(cells.size()));
        for (std::size_t j = 0; j < cells.size(); ++j) {
            if (static_cast<std::ptrdiff_t>(j) == group_idx) {
                data.groups.push_back(cells[j]);
            } else if (static_cast<std::ptrdiff_t>(j) == target_idx) {
                data.targets.push_back(parse_cell(cells[j], row_no, header[j]));
            } else {
                data.features.push_back(parse_cell(cells[j], row_no, header[j]));
            }
        }
        ++data.n;
    }
    if (data.n == 0) throw DataError("no data rows in " + path);
    return data;
}

void write_csv(const Dataset& data, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write file: " + path);
    for (std::size_t j = 0; j < data.feature_names.size(); ++j) {
        if (j > 0) out << ',';
        out << data.feature_names[j];
    }
    if (data.has_targets()) out << ',' << data.target_name;
    if (data.has_groups()) out << ',' << data.group_name;
    out << '\n';
    for (std::size_t i = 0; i < data.n; ++i) {
        for (std::size_t j = 0; j < data.d; ++j) {
            if (j > 0) out << ',';
            out << format_double(data.features[i * data.d + j]);
        }
        if (data.has_targets()) out << ',' << format_double(data.targets[i]);
        if (data.has_groups()) out << ',' << data.groups[i];
        out << '\n';
    }
}

ScalerParams fit_scaler(const Dataset& train) {
    if (train.n == 0) throw UsageError("fit_scaler: empty training split");
    constexpr double kZeroVariance = 1e-12;
    ScalerParams params;
    for (std::size_t j = 0; j < train.d; ++j) {
        double m = 0.0;
        for (std::size_t i = 0; i < train.n; ++i) m += train.features[i * train.d + j];
        m /= static_cast<double>(train.n);
        double var = 0.0;
        for (std::size_t i = 0; i < train.n; ++i) {
            double c = train.features[i * train.d + j] - m;
            var += c * c;
        }
        var /= static_cast<double>(train.n); // population convention
        if (var < kZeroVariance) continue;   // zero-variance column dropped
        params.kept.push_back(j);
        params.mean.push_back(m);
        params.stddev.push_back(std::sqrt(var));
    }
    if (params.kept.empty())
        throw DataError("fit_scaler: all columns have zero variance");
    return params;
}

Dataset apply_scaler(const ScalerParams& params, const Dataset& data) {
    Dataset out;
    out.n = data.n;
    out.d = params.kept.size();
    out.targets = data.targets;
    out.groups = data.groups;
    out.target_name = data.target_name;
    out.group_name = data.group_name;
    out.features.resize(out.n * out.d);
    for (std::size_t c = 0; c < params.kept.size(); ++c) {
        std::size_t j = params.kept[c];
        if (j >= data.d) throw UsageError("apply_scaler: column index out of range");
        out.feature_names.push_back(data.feature_names.empty()
                                        ? "f" + std::to_string(j)
                                        : data.feature_names[j]);
        for (std::size_t i = 0; i < out.n; ++i)
            out.features[i * out.d + c] =
                (data.features[i * data.d + j] - params.mean[c]) / params.stddev[c];
    }
    return out;
}

SplitPlan split(std::size_t n, std::size_t cal_size, double test_fraction,
                std::uint64_t seed) {
    if (test_fraction < 0.0 || test_fraction >= 1.0)
        throw UsageError("split: test_fraction must be in [0, 1)");
    std::size_t test_size =
        static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(n)));
    if (cal_size + test_size >= n)
        throw UsageError("split: need cal_size + test rows < n (n=" +
                         std::to_string(n) + ", cal=" + std::to_string(cal_size) +
                         ", test=" + std::to_string(test_size) + ")");

    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(derive_seed(seed, "split"));
    for (std::size_t i = n; i > 1; --i)
        std::swap(idx[i - 1], idx[rng.below(i)]);

    SplitPlan plan;
    plan.seed = seed;
    plan.calibration.assign(idx.begin(), idx.begin() + cal_size);
    plan.test.assign(idx.begin() + cal_size, idx.begin() + cal_size + test_size);
    plan.train.assign(idx.begin() + cal_size + test_size, idx.end());
    return plan;
}

std::vector<std::vector<std::size_t>> kfold(std::size_t n, std::size_t k,
                                            std::uint64_t seed) {
    if (k < 1 || k > n) throw UsageError("kfold: need 1 <= k <= n");
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(derive_seed(seed, "kfold"));
    for (std::size_t i = n; i > 1; --i)
        std::swap(idx[i - 1], idx[rng.below(i)]);

    std::vector<std::vector<std::size_t>> folds(k);
    for (std::size_t i = 0; i < n; ++i) folds[i % k].push_back(idx[i]);
    for (auto& f : folds) std::sort(f.begin(), f.end());
    return folds;
}

std::vector<std::vector<std::size_t>> grouped_folds(
    std::span<const std::string> groups) {
    if (groups.empty()) throw UsageError("grouped_folds: no group labels");
    std::map<std::string, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < groups.size(); ++i) by_label[groups[i]].push_back(i);
    if (by_label.size() < 2)
        throw UsageError("grouped_folds: need at least 2 distinct groups");
    std::vector<std::vector<std::size_t>> folds;
    for (auto& [label, idx] : by_label) folds.push_back(std::move(idx));
    return folds;
}

double SyntheticOracle::true_quantile(double x, double tau) const {
    return mu(x) + sigma(x) * inv_normal_cdf(tau);
}

Dataset synth_heteroscedastic(std::size_t n, std::uint64_t seed,
                              std::size_t nuisance_dims) {
    if (n < 1) throw UsageError("synth_heteroscedastic: need n >= 1");
    SyntheticOracle oracle;
    Dataset data;
    data.n = n;
    data.d = 1 + nuisance_dims;
    data.target_name = "y";
    data.feature_names.push_back("x");
    for (std::size_t j = 0; j < nuisance_dims; ++j)
        data.feature_names.push_back("noise" + std::to_string(j));
    data.features.resize(n * data.d);
    data.targets.resize(n);
    Rng rng(derive_seed(seed, "synth"));
    for (std::size_t i = 0; i < n; ++i) {
        double x = rng.uniform01();
        data.features[i * data.d] = x;
        for (std::size_t j = 0; j < nuisance_dims; ++j)
            data.features[i * data.d + 1 + j] = rng.uniform01();
        data.targets[i] = oracle.mu(x) + oracle.sigma(x) * rng.gaussian();
    }
    return data;
}

} // namespace cqr
