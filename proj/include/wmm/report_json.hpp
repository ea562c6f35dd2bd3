#pragma once

#include <string>

#include "wmm/estimator.hpp"

namespace wmm {

// Fixed-key JSON report written by the CLI and read back for
// post-estimation rendering. Key order is stable so identical runs
// produce byte-identical files.
std::string report_to_json(const EstimateReport& report);
EstimateReport report_from_json(const std::string& text);

// Raw sample dump: comma-delimited, one row per realization, columns =
// leaves then edges then row weight.
std::string samples_to_csv(const EstimateReport& report);

// Writes via a temp file + rename so readers never see partial output.
void write_file_atomic(const std::string& path, const std::string& content);

} // namespace wmm
