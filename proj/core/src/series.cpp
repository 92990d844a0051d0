#include "loadscale/series.hpp"

#include <cmath>
#include <numeric>

namespace loadscale {

LoadSeries::LoadSeries(std::vector<double> values, int interval_minutes, std::int64_t start_minute)
    : values_(std::move(values)), interval_(interval_minutes), start_(start_minute) {
	if (values_.empty()) {
		throw DataError("load series must contain at least one sample");
	}
	if (interval_ <= 0) {
		throw DataError("load series interval must be positive");
	}
	if (interval_ < 60 && 60 % interval_ != 0) {
		throw DataError("sub-hourly interval must divide 60 minutes, got " + std::to_string(interval_));
	}
	for (std::size_t i = 0; i < values_.size(); ++i) {
		const double v = values_[i];
		if (!std::isfinite(v) || v < 0.0) {
			throw DataError("load series sample " + std::to_string(i) + " is negative or non-finite");
		}
	}
}

LoadSeries LoadSeries::slice(std::size_t first, std::size_t count) const {
	if (first + count > values_.size() || count == 0) {
		throw DataError("slice out of range");
	}
	std::vector<double> out(values_.begin() + static_cast<std::ptrdiff_t>(first),
	                        values_.begin() + static_cast<std::ptrdiff_t>(first + count));
	return LoadSeries(std::move(out), interval_, timestamp_minute(first));
}

LoadSeries resample_hourly(const LoadSeries &series) {
	const int interval = series.interval_minutes();
	if (interval == 60) {
		return series;
	}
	if (interval != 15 && interval != 30) {
		throw DataError("resample_hourly supports 15, 30 or 60 minute data, got " + std::to_string(interval));
	}
	const std::size_t per_hour = static_cast<std::size_t>(60 / interval);
	if (series.size() % per_hour != 0) {
		throw DataError("series length " + std::to_string(series.size()) + " does not cover whole hours");
	}
	std::vector<double> hourly(series.size() / per_hour, 0.0);
	const auto &v = series.values();
	for (std::size_t h = 0; h < hourly.size(); ++h) {
		double sum = 0.0;
		for (std::size_t k = 0; k < per_hour; ++k) {
			sum += v[h * per_hour + k];
		}
		hourly[h] = sum;
	}
	return LoadSeries(std::move(hourly), 60, series.start_minute());
}

double mean_consumption(const LoadSeries &series) {
	if (series.empty()) {
		throw DataError("mean of an empty series");
	}
	const auto &v = series.values();
	return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

CustomerRecord make_customer(std::string id, LoadSeries series) {
	const double w = mean_consumption(resample_hourly(series));
	return CustomerRecord{std::move(id), std::move(series), w};
}

Dataset::Dataset(std::vector<CustomerRecord> customers) : customers_(std::move(customers)) {
	if (customers_.empty()) {
		return;
	}
	const auto &ref = customers_.front().series;
	for (const auto &c : customers_) {
		if (c.series.size() != ref.size() || c.series.interval_minutes() != ref.interval_minutes() ||
		    c.series.start_minute() != ref.start_minute()) {
			throw DataError("customer " + c.id + " is not aligned with the dataset time axis");
		}
	}
	index_.reserve(customers_.size());
	for (std::size_t i = 0; i < customers_.size(); ++i) {
		if (!index_.emplace(customers_[i].id, i).second) {
			throw DataError("duplicate customer id: " + customers_[i].id);
		}
	}
}

std::size_t Dataset::length() const noexcept {
	return customers_.empty() ? 0 : customers_.front().series.size();
}

int Dataset::interval_minutes() const noexcept {
	return customers_.empty() ? 60 : customers_.front().series.interval_minutes();
}

std::int64_t Dataset::start_minute() const noexcept {
	return customers_.empty() ? 0 : customers_.front().series.start_minute();
}

std::size_t Dataset::index_of(const std::string &id) const {
	const auto it = index_.find(id);
	if (it == index_.end()) {
		throw DataError("unknown customer id: " + id);
	}
	return it->second;
}

Dataset to_hourly(const Dataset &dataset) {
	std::vector<CustomerRecord> out;
	out.reserve(dataset.size());
	for (const auto &c : dataset.customers()) {
		out.push_back(CustomerRecord{c.id, resample_hourly(c.series), c.mean_w});
	}
	return Dataset(std::move(out));
}

} // namespace loadscale
