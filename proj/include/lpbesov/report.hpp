#pragma once

// JSON (canonical) and CSV (projection) serialization of analysis results.
// Non-finite numbers never reach the JSON: they are emitted as the string
// "divergent", and every seminorm carries an explicit status tag.

#include <filesystem>
#include <ostream>
#include <span>
#include <string>

#include <json.hpp>

#include "lpbesov/besov.hpp"
#include "lpbesov/calculus.hpp"

namespace lpbesov {

using Json = nlohmann::ordered_json;

Json finite_or_tag(double value);
Json q_to_json(double q);

Json to_json(const BesovParams& params);
Json to_json(const SeminormResult& seminorm);
Json to_json(const DyadicResult& dyadic);
Json to_json(const BandComponents& bands);
Json to_json(const FilteredNorm& norm);
Json to_json(const LemmaBound& bound);
Json to_json(const EquivalenceReport& report);

// One column per level, one row per vertex.
void write_bands_csv(std::ostream& out, const BandComponents& bands);
// One row per report.
void write_equivalence_csv(std::ostream& out, std::span<const EquivalenceReport> reports);

// Writes to a sibling temporary file, then renames over the target.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace lpbesov
