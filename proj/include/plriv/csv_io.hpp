#pragma once

#include "plriv/estimator.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace plriv {

/// Names of the CSV columns holding each model variable.
struct ColumnMapping {
    std::string y;
    std::string z;
    std::vector<std::string> x;
    std::vector<std::string> w;
};

struct LoadedCsv {
    Dataset data;
    /// Rows dropped because a mapped cell was missing or non-numeric.
    std::size_t dropped_rows = 0;
};

/// Reads a UTF-8 comma-separated file with a header row. Rows with unusable
/// mapped cells are dropped and counted; unmapped columns are ignored.
LoadedCsv load_csv(const std::string& path, const ColumnMapping& mapping);

LoadedCsv load_csv_stream(std::istream& is, const ColumnMapping& mapping);

/// Writes a dataset back out under the given column names (lossless digits).
void write_dataset_csv(std::ostream& os, const Dataset& data,
                       const ColumnMapping& mapping);

}  // namespace plriv
