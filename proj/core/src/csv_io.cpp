#include "loadscale/csv_io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <chrono>
#include <fstream>
#include <map>
#include <numeric>
#include <ostream>
#include <istream>

namespace loadscale {

namespace {

std::string_view trim(std::string_view s) {
	while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
		s.remove_prefix(1);
	}
	while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
		s.remove_suffix(1);
	}
	return s;
}

int parse_fixed_int(std::string_view text, std::size_t pos, std::size_t len) {
	if (pos + len > text.size()) {
		throw DataError("truncated timestamp: " + std::string(text));
	}
	int value = 0;
	const char *first = text.data() + pos;
	const auto [ptr, ec] = std::from_chars(first, first + len, value);
	if (ec != std::errc() || ptr != first + len) {
		throw DataError("bad timestamp field in: " + std::string(text));
	}
	return value;
}

std::size_t column_index(const std::vector<std::string_view> &header, const std::string &name) {
	for (std::size_t i = 0; i < header.size(); ++i) {
		if (trim(header[i]) == name) {
			return i;
		}
	}
	throw DataError("CSV header is missing column '" + name + "'");
}

struct RawCustomer {
	std::vector<std::int64_t> minutes;
	std::vector<double> kwh;
};

} // namespace

std::vector<std::string_view> split_csv_line(std::string_view line) {
	std::vector<std::string_view> fields;
	std::size_t begin = 0;
	while (true) {
		const std::size_t comma = line.find(',', begin);
		if (comma == std::string_view::npos) {
			fields.push_back(trim(line.substr(begin)));
			break;
		}
		fields.push_back(trim(line.substr(begin, comma - begin)));
		begin = comma + 1;
	}
	return fields;
}

std::int64_t parse_iso8601_minutes(std::string_view text) {
	text = trim(text);
	if (text.size() < 16 || text[4] != '-' || text[7] != '-' || (text[10] != 'T' && text[10] != ' ') ||
	    text[13] != ':') {
		throw DataError("timestamp is not ISO-8601: " + std::string(text));
	}
	const int year = parse_fixed_int(text, 0, 4);
	const int month = parse_fixed_int(text, 5, 2);
	const int day = parse_fixed_int(text, 8, 2);
	const int hour = parse_fixed_int(text, 11, 2);
	const int minute = parse_fixed_int(text, 14, 2);
	std::size_t pos = 16;
	if (pos < text.size() && text[pos] == ':') {
		if (parse_fixed_int(text, pos + 1, 2) != 0) {
			throw DataError("timestamps must fall on whole minutes: " + std::string(text));
		}
		pos += 3;
	}
	int offset_minutes = 0;
	if (pos < text.size()) {
		const char zone = text[pos];
		if (zone == 'Z' && pos + 1 == text.size()) {
			// UTC
		} else if ((zone == '+' || zone == '-') && pos + 6 == text.size() && text[pos + 3] == ':') {
			const int oh = parse_fixed_int(text, pos + 1, 2);
			const int om = parse_fixed_int(text, pos + 4, 2);
			offset_minutes = (zone == '+' ? 1 : -1) * (oh * 60 + om);
		} else {
			throw DataError("unrecognised timestamp suffix: " + std::string(text));
		}
	}
	const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{static_cast<unsigned>(month)},
	                                      std::chrono::day{static_cast<unsigned>(day)}};
	if (!ymd.ok() || hour > 23 || minute > 59) {
		throw DataError("invalid calendar time: " + std::string(text));
	}
	const auto days = std::chrono::sys_days{ymd}.time_since_epoch().count();
	return static_cast<std::int64_t>(days) * 1440 + hour * 60 + minute - offset_minutes;
}

std::string format_iso8601(std::int64_t epoch_minutes) {
	std::int64_t days = epoch_minutes / 1440;
	std::int64_t rem = epoch_minutes % 1440;
	if (rem < 0) {
		rem += 1440;
		--days;
	}
	const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{days}}};
	char buf[32];
	const int n = std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:00Z", static_cast<int>(ymd.year()),
	                            static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
	                            static_cast<int>(rem / 60), static_cast<int>(rem % 60));
	return std::string(buf, static_cast<std::size_t>(n));
}

std::string format_number(double value) {
	char buf[64];
	const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
	return std::string(buf, ptr);
}

double parse_number(std::string_view text) {
	text = trim(text);
	double value = 0.0;
	const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
	if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
		throw DataError("not a number: '" + std::string(text) + "'");
	}
	return value;
}

LoadCsvResult parse_load_csv(std::istream &in, const CsvSchema &schema) {
	std::string line;
	std::size_t line_no = 0;
	bool have_header = false;
	while (!have_header && std::getline(in, line)) {
		++line_no;
		const auto t = trim(line);
		have_header = !t.empty() && t.front() != '#';
	}
	if (!have_header) {
		throw DataError("empty CSV file");
	}
	const std::string header_line = line;
	const auto header = split_csv_line(header_line);
	const std::size_t id_col = column_index(header, schema.id_column);
	const std::size_t ts_col = column_index(header, schema.timestamp_column);
	const std::size_t kwh_col = column_index(header, schema.kwh_column);
	const std::size_t needed = std::max({id_col, ts_col, kwh_col}) + 1;

	// Ordered map keeps customer order deterministic (sorted by id).
	std::map<std::string, RawCustomer> raw;
	std::size_t rows = 0;
	while (std::getline(in, line)) {
		++line_no;
		if (const auto t = trim(line); t.empty() || t.front() == '#') {
			continue;
		}
		const auto fields = split_csv_line(line);
		const std::string where = "line " + std::to_string(line_no) + ": ";
		if (fields.size() < needed) {
			throw DataError(where + "expected at least " + std::to_string(needed) + " fields");
		}
		std::int64_t minute = 0;
		double kwh = 0.0;
		try {
			minute = parse_iso8601_minutes(fields[ts_col]);
			kwh = parse_number(fields[kwh_col]);
		} catch (const DataError &e) {
			throw DataError(where + e.what());
		}
		if (!std::isfinite(kwh)) {
			throw DataError(where + "non-finite kwh");
		}
		if (kwh < 0.0) {
			throw DataError(where + "negative kwh " + std::string(fields[kwh_col]));
		}
		const std::string id(fields[id_col]);
		if (id.empty()) {
			throw DataError(where + "empty customer id");
		}
		auto &cust = raw[id];
		if (!cust.minutes.empty() && minute <= cust.minutes.back()) {
			throw DataError(where + "timestamps for customer " + id + " are not strictly increasing");
		}
		cust.minutes.push_back(minute);
		cust.kwh.push_back(kwh);
		++rows;
	}
	if (rows == 0) {
		throw DataError("CSV file has a header but no data rows");
	}

	std::int64_t interval = 0;
	for (const auto &[id, c] : raw) {
		for (std::size_t i = 1; i < c.minutes.size(); ++i) {
			const std::int64_t d = c.minutes[i] - c.minutes[i - 1];
			interval = interval == 0 ? d : std::min(interval, d);
		}
	}
	if (interval == 0) {
		interval = 60;
	}
	if (interval > 60 ? interval % 60 != 0 : 60 % interval != 0) {
		throw DataError("inconsistent interval: " + std::to_string(interval) + " minutes");
	}
	std::int64_t first = raw.begin()->second.minutes.front();
	std::int64_t last = raw.begin()->second.minutes.back();
	for (const auto &[id, c] : raw) {
		for (std::size_t i = 1; i < c.minutes.size(); ++i) {
			if ((c.minutes[i] - c.minutes[i - 1]) % interval != 0) {
				throw DataError("inconsistent interval for customer " + id);
			}
		}
		first = std::min(first, c.minutes.front());
		last = std::max(last, c.minutes.back());
	}
	if ((last - first) % interval != 0) {
		throw DataError("inconsistent interval: customer grids are offset from each other");
	}
	const auto axis_len = static_cast<std::size_t>((last - first) / interval + 1);

	LoadCsvResult result;
	std::vector<CustomerRecord> records;
	for (auto &[id, c] : raw) {
		if (c.minutes.size() != axis_len || c.minutes.front() != first) {
			result.rejected_ids.push_back(id);
			continue;
		}
		records.push_back(make_customer(id, LoadSeries(std::move(c.kwh), static_cast<int>(interval), first)));
	}
	if (records.empty()) {
		throw DataError("no customer covers the full common time axis");
	}
	result.dataset = Dataset(std::move(records));
	return result;
}

LoadCsvResult parse_load_csv(const std::filesystem::path &path, const CsvSchema &schema) {
	std::ifstream in(path);
	if (!in) {
		throw DataError("cannot open " + path.string());
	}
	return parse_load_csv(in, schema);
}

void write_load_csv(std::ostream &out, const Dataset &dataset) {
	out << "customer_id,timestamp,kwh\n";
	for (const auto &c : dataset.customers()) {
		const auto &s = c.series;
		for (std::size_t i = 0; i < s.size(); ++i) {
			out << c.id << ',' << format_iso8601(s.timestamp_minute(i)) << ',' << format_number(s[i]) << '\n';
		}
	}
}

void write_load_csv(const std::filesystem::path &path, const Dataset &dataset) {
	std::ofstream out(path);
	if (!out) {
		throw DataError("cannot write " + path.string());
	}
	write_load_csv(out, dataset);
}

} // namespace loadscale
