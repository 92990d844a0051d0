#pragma once

#include "loadscale/series.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace loadscale {

/// Column names for the long-format consumption CSV.
struct CsvSchema {
	std::string id_column = "customer_id";
	std::string timestamp_column = "timestamp";
	std::string kwh_column = "kwh";
};

struct LoadCsvResult {
	Dataset dataset;
	/// Customers dropped because they miss timestamps on the common axis.
	std::vector<std::string> rejected_ids;
};

/// Reads `customer_id,timestamp,kwh` rows into a Dataset at the file's native
/// interval. Customers with gaps are dropped and listed in `rejected_ids`.
/// Throws DataError (with the 1-based line number where applicable) on
/// malformed rows, negative kWh, decreasing timestamps, inconsistent
/// intervals, or an empty file.
[[nodiscard]] LoadCsvResult parse_load_csv(const std::filesystem::path &path, const CsvSchema &schema = {});
[[nodiscard]] LoadCsvResult parse_load_csv(std::istream &in, const CsvSchema &schema = {});

/// Writes the dataset in the same long format `parse_load_csv` reads.
/// Values use shortest round-trip formatting so a reparse is bit-exact.
void write_load_csv(std::ostream &out, const Dataset &dataset);
void write_load_csv(const std::filesystem::path &path, const Dataset &dataset);

/// Parses `YYYY-MM-DD[T| ]HH:MM[:SS][Z|+HH:MM|-HH:MM]` into minutes since the
/// Unix epoch (UTC). Seconds must be zero.
[[nodiscard]] std::int64_t parse_iso8601_minutes(std::string_view text);
/// Formats epoch minutes as `YYYY-MM-DDTHH:MM:SSZ`.
[[nodiscard]] std::string format_iso8601(std::int64_t epoch_minutes);

/// Shortest decimal text that parses back to exactly `value`.
[[nodiscard]] std::string format_number(double value);
/// Strict full-string double parse; throws DataError on failure.
[[nodiscard]] double parse_number(std::string_view text);

/// Splits one CSV line on commas (no quoting; the formats here never need it).
[[nodiscard]] std::vector<std::string_view> split_csv_line(std::string_view line);

} // namespace loadscale
