#pragma once

#include <string>
#include <vector>

#include "ftreg/dataset.hpp"
#include "ftreg/function_train.hpp"

namespace ftreg {

/// A fitted model together with the normalization applied to its training
/// data, so predictions can be reported in original units.
struct SavedModel {
    FunctionTrain ft;
    bool normalized = false;
    std::vector<ColumnStats> x_stats; // size d
    ColumnStats y_stats;

    double predict(std::span<const double> raw_x) const;
    double predict(std::span<const double> raw_x, EvalWorkspace& ws) const;
};

/// Versioned line-oriented text format. Floats are written with shortest
/// round-trip decimal representation, so save/load round-trips bit-exactly.
std::string model_to_text(const SavedModel& m);
SavedModel model_from_text(const std::string& text);

void save_model(const SavedModel& m, const std::string& path);
SavedModel load_model(const std::string& path);

/// Writes content to path via a temporary file plus rename.
void write_file_atomic(const std::string& path, const std::string& content);

} // namespace ftreg
