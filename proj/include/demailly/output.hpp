#ifndef DEMAILLY_OUTPUT_HPP
#define DEMAILLY_OUTPUT_HPP

#include <string>
#include <vector>

#include "demailly/continuation.hpp"

namespace demailly {

/// records.csv column order is fixed; numbers carry 17 significant digits so
/// float64 values round-trip exactly.
std::string records_to_csv(const std::vector<DiagnosticsRecord>& records);

std::string outcome_to_text(const PathOutcome& outcome);

/// Writes records.csv and outcome.txt into dir (created if missing) and
/// returns the process exit code for the outcome: 0 Success, 2 Destabilized,
/// 3 Stalled. Throws IoError on filesystem failure.
int write_outputs(const std::vector<DiagnosticsRecord>& records, const PathOutcome& outcome,
                  const std::string& dir);

int exit_code_for(PathStatus status);

} // namespace demailly

#endif
