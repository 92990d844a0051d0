#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace loadscale {

/// Raised when input data violates a precondition (bad values, ragged
/// series, misaligned customers).
class DataError : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

/// Consumption samples (kWh per interval) on a regular grid.
///
/// `start_minute` is minutes since the Unix epoch (UTC). Values are
/// finite and non-negative; the constructor enforces this.
class LoadSeries {
public:
	LoadSeries() = default;
	explicit LoadSeries(std::vector<double> values, int interval_minutes = 60, std::int64_t start_minute = 0);

	[[nodiscard]] const std::vector<double> &values() const noexcept { return values_; }
	[[nodiscard]] std::span<const double> view() const noexcept { return values_; }
	[[nodiscard]] std::size_t size() const noexcept { return values_.size(); }
	[[nodiscard]] bool empty() const noexcept { return values_.empty(); }
	[[nodiscard]] double operator[](std::size_t i) const { return values_[i]; }
	[[nodiscard]] int interval_minutes() const noexcept { return interval_; }
	[[nodiscard]] std::int64_t start_minute() const noexcept { return start_; }
	[[nodiscard]] std::int64_t timestamp_minute(std::size_t i) const noexcept {
		return start_ + static_cast<std::int64_t>(i) * interval_;
	}
	[[nodiscard]] bool is_hourly() const noexcept { return interval_ == 60; }

	/// Copy of samples [first, first + count) as a new series.
	[[nodiscard]] LoadSeries slice(std::size_t first, std::size_t count) const;

private:
	std::vector<double> values_;
	int interval_ = 60;
	std::int64_t start_ = 0;
};

/// Sums sub-hourly samples into hourly totals. Accepts 15, 30 and 60 minute
/// series; the length must cover whole hours. Summation is left-to-right
/// within each hour, so total energy is conserved bit-for-bit when the
/// per-hour partial sums are re-added in order.
[[nodiscard]] LoadSeries resample_hourly(const LoadSeries &series);

/// Arithmetic mean of an hourly series (W_n for a single customer).
[[nodiscard]] double mean_consumption(const LoadSeries &series);

struct CustomerRecord {
	std::string id;
	LoadSeries series;
	double mean_w = 0.0; ///< mean hourly consumption of the hourly-resampled series
};

/// Builds a record, computing mean_w from the hourly-resampled series.
[[nodiscard]] CustomerRecord make_customer(std::string id, LoadSeries series);

/// Customers aligned on a shared time axis. Immutable once built.
class Dataset {
public:
	Dataset() = default;
	explicit Dataset(std::vector<CustomerRecord> customers);

	[[nodiscard]] const std::vector<CustomerRecord> &customers() const noexcept { return customers_; }
	[[nodiscard]] std::size_t size() const noexcept { return customers_.size(); }
	[[nodiscard]] const CustomerRecord &operator[](std::size_t i) const { return customers_[i]; }
	[[nodiscard]] std::size_t length() const noexcept;
	[[nodiscard]] int interval_minutes() const noexcept;
	[[nodiscard]] std::int64_t start_minute() const noexcept;
	/// Index of the customer with this id; throws DataError if absent.
	[[nodiscard]] std::size_t index_of(const std::string &id) const;

private:
	std::vector<CustomerRecord> customers_;
	std::unordered_map<std::string, std::size_t> index_;
};

/// Resamples every customer to hourly resolution.
[[nodiscard]] Dataset to_hourly(const Dataset &dataset);

} // namespace loadscale
