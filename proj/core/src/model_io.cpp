#include "cqr/model_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "cqr/errors.hpp"

namespace cqr {

namespace {

std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_vector(std::ostream& out, const std::string& key,
                  const std::vector<double>& values) {
    out << key;
    for (double v : values) out << ' ' << fmt(v);
    out << '\n';
}

class TokenReader {
public:
    explicit TokenReader(std::istream& in) : in_(in) {}

    std::string next() {
        std::string token;
        if (!(in_ >> token)) throw DataError("model document: unexpected end of input");
        return token;
    }

    void expect(const std::string& key) {
        std::string token = next();
        if (token != key)
            throw DataError("model document: expected '" + key + "', got '" + token + "'");
    }

    double number() {
        std::string token = next();
        if (token == "inf") return std::numeric_limits<double>::infinity();
        if (token == "-inf") return -std::numeric_limits<double>::infinity();
        double v;
        auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
        if (ec != std::errc() || ptr != token.data() + token.size())
            throw DataError("model document: bad number '" + token + "'");
        return v;
    }

    std::size_t count() {
        double v = number();
        if (v < 0 || v != std::floor(v))
            throw DataError("model document: expected a count");
        return static_cast<std::size_t>(v);
    }

    std::uint64_t u64() {
        std::string token = next();
        std::uint64_t v;
        auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
        if (ec != std::errc() || ptr != token.data() + token.size())
            throw DataError("model document: bad integer '" + token + "'");
        return v;
    }

    std::vector<double> numbers(std::size_t n) {
        std::vector<double> out(n);
        for (auto& v : out) v = number();
        return out;
    }

    std::string rest_of_line() {
        std::string line;
        std::getline(in_, line);
        if (!line.empty() && line.front() == ' ') line.erase(0, 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
    }

private:
    std::istream& in_;
};

} // namespace

void save_model(const Model& model, std::ostream& out) {
    const auto& net = model.net;
    const auto& cfg = net.config;
    out << "format " << kModelFormat << '\n';
    out << "config.hidden_units " << cfg.hidden_units << '\n';
    out << "config.dropout_rate " << fmt(cfg.dropout_rate) << '\n';
    out << "config.learning_rate " << fmt(cfg.learning_rate) << '\n';
    out << "config.epochs " << cfg.epochs << '\n';
    out << "config.batch_size " << cfg.batch_size << '\n';
    out << "config.mc_samples " << cfg.mc_samples << '\n';
    out << "config.seed " << cfg.seed << '\n';

    out << "grid.size " << net.grid.size() << '\n';
    write_vector(out, "grid.levels", net.grid.levels());

    out << "data.target_name " << model.target_name << '\n';
    out << "data.num_features " << model.feature_names.size() << '\n';
    for (std::size_t i = 0; i < model.feature_names.size(); ++i)
        out << "data.feature_name " << i << ' ' << model.feature_names[i] << '\n';

    out << "scaler.kept.size " << model.scaler.kept.size() << '\n';
    out << "scaler.kept";
    for (std::size_t j : model.scaler.kept) out << ' ' << j;
    out << '\n';
    write_vector(out, "scaler.mean", model.scaler.mean);
    write_vector(out, "scaler.stddev", model.scaler.stddev);

    out << "net.input_dim " << net.input_dim << '\n';
    out << "net.w1.shape " << net.hidden << ' ' << net.input_dim << '\n';
    write_vector(out, "net.w1", net.w1);
    write_vector(out, "net.b1", net.b1);
    out << "net.w2.shape " << net.outputs() << ' ' << net.hidden << '\n';
    write_vector(out, "net.w2", net.w2);
    write_vector(out, "net.b2", net.b2);

    out << "calibration.n " << model.table.n << '\n';
    out << "calibration.entries " << model.table.entries.size() << '\n';
    for (const auto& e : model.table.entries)
        out << "calibration.entry " << e.pair_index << ' ' << fmt(e.alpha) << ' '
            << fmt(e.qhat) << ' ' << (e.unbounded ? 1 : 0) << ' '
            << fmt(e.coverage_lower) << ' ' << fmt(e.coverage_upper) << '\n';
    out << "end\n";
}

void save_model(const Model& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write model file: " + path);
    save_model(model, out);
}

Model load_model(std::istream& in) {
    TokenReader reader(in);
    reader.expect("format");
    std::string version = reader.next();
    if (version != kModelFormat)
        throw DataError("unsupported model format '" + version + "'");

    Model model;
    auto& net = model.net;
    auto& cfg = net.config;
    reader.expect("config.hidden_units");
    cfg.hidden_units = reader.count();
    reader.expect("config.dropout_rate");
    cfg.dropout_rate = reader.number();
    reader.expect("config.learning_rate");
    cfg.learning_rate = reader.number();
    reader.expect("config.epochs");
    cfg.epochs = reader.count();
    reader.expect("config.batch_size");
    cfg.batch_size = reader.count();
    reader.expect("config.mc_samples");
    cfg.mc_samples = reader.count();
    reader.expect("config.seed");
    cfg.seed = reader.u64();

    reader.expect("grid.size");
    std::size_t grid_size = reader.count();
    reader.expect("grid.levels");
    net.grid = QuantileGrid(reader.numbers(grid_size));

    reader.expect("data.target_name");
    model.target_name = reader.next();
    reader.expect("data.num_features");
    std::size_t num_features = reader.count();
    for (std::size_t i = 0; i < num_features; ++i) {
        reader.expect("data.feature_name");
        reader.count();
        model.feature_names.push_back(reader.rest_of_line());
    }

    reader.expect("scaler.kept.size");
    std::size_t kept = reader.count();
    reader.expect("scaler.kept");
    for (std::size_t i = 0; i < kept; ++i) model.scaler.kept.push_back(reader.count());
    reader.expect("scaler.mean");
    model.scaler.mean = reader.numbers(kept);
    reader.expect("scaler.stddev");
    model.scaler.stddev = reader.numbers(kept);

    reader.expect("net.input_dim");
    net.input_dim = reader.count();
    net.hidden = cfg.hidden_units;
    reader.expect("net.w1.shape");
    std::size_t r1 = reader.count(), c1 = reader.count();
    if (r1 != net.hidden || c1 != net.input_dim)
        throw DataError("model document: w1 shape mismatch");
    reader.expect("net.w1");
    net.w1 = reader.numbers(r1 * c1);
    reader.expect("net.b1");
    net.b1 = reader.numbers(net.hidden);
    reader.expect("net.w2.shape");
    std::size_t r2 = reader.count(), c2 = reader.count();
    if (r2 != net.grid.size() || c2 != net.hidden)
        throw DataError("model document: w2 shape mismatch");
    reader.expect("net.w2");
    net.w2 = reader.numbers(r2 * c2);
    reader.expect("net.b2");
    net.b2 = reader.numbers(r2);

    reader.expect("calibration.n");
    model.table.n = reader.count();
    reader.expect("calibration.entries");
    std::size_t entries = reader.count();
    for (std::size_t i = 0; i < entries; ++i) {
        reader.expect("calibration.entry");
        CalibrationEntry e;
        e.pair_index = reader.count();
        e.alpha = reader.number();
        e.qhat = reader.number();
        e.unbounded = reader.count() != 0;
        e.coverage_lower = reader.number();
        e.coverage_upper = reader.number();
        model.table.entries.push_back(e);
    }
    reader.expect("end");
    return model;
}

Model load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open model file: " + path);
    return load_model(in);
}

} // namespace cqr
