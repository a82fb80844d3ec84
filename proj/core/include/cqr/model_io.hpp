#ifndef CQR_MODEL_IO_HPP
#define CQR_MODEL_IO_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "cqr/conformal.hpp"
#include "cqr/dataset.hpp"
#include "cqr/net.hpp"

namespace cqr {

inline constexpr const char* kModelFormat = "cqr-v1";

/// Fitted network + scaler + calibration table, as persisted in the
/// "cqr-v1" model document.
struct Model {
    Network net;
    ScalerParams scaler;
    CalibrationTable table; // entries empty until calibrated
    std::string target_name;
    std::vector<std::string> feature_names; // original (pre-scaler) columns

    bool calibrated() const { return !table.entries.empty(); }
};

void save_model(const Model& model, std::ostream& out);
void save_model(const Model& model, const std::string& path);
Model load_model(std::istream& in);
Model load_model(const std::string& path);

} // namespace cqr

#endif
