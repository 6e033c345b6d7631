#pragma once

#include <filesystem>

#include "mlbn/simulate.hpp"

namespace mlbn {

/// Sidecar next to a CSV body: "samples.csv" -> "samples.meta.json".
std::filesystem::path sidecar_path(const std::filesystem::path& csv);

/// Writes the CSV body (header X1..Xn, 17 significant digits) and, when the set
/// carries metadata or provenance, the JSON sidecar. Empty sets are rejected.
void save_samples(const SampleSet& samples, const std::filesystem::path& csv);

/// Reads a CSV body and its sidecar if present. Throws parse_error with the
/// offending line number on malformed input.
SampleSet load_samples(const std::filesystem::path& csv);

}  // namespace mlbn
