#include "loadscale/metrics.hpp"

#include <cmath>
#include <string>

namespace loadscale {

namespace {

constexpr double kMaxSkippedFraction = 0.10;

void check_lengths(std::span<const double> actual, std::span<const double> predicted) {
	if (actual.size() != predicted.size()) {
		throw MetricError("actual and predicted lengths differ (" + std::to_string(actual.size()) + " vs " +
		                  std::to_string(predicted.size()) + ")");
	}
	if (actual.empty()) {
		throw MetricError("metrics need at least one sample");
	}
}

} // namespace

MapeResult mape(std::span<const double> actual, std::span<const double> predicted) {
	check_lengths(actual, predicted);
	double sum = 0.0;
	std::size_t used = 0;
	MapeResult result;
	for (std::size_t t = 0; t < actual.size(); ++t) {
		if (actual[t] > 0.0) {
			sum += std::abs(actual[t] - predicted[t]) / actual[t];
			++used;
		} else {
			++result.skipped_zero_targets;
		}
	}
	if (used == 0) {
		throw MetricError("MAPE undefined: every target is zero");
	}
	result.percent = 100.0 * sum / static_cast<double>(used);
	return result;
}

double mse(std::span<const double> actual, std::span<const double> predicted) {
	check_lengths(actual, predicted);
	double sum = 0.0;
	for (std::size_t t = 0; t < actual.size(); ++t) {
		const double r = actual[t] - predicted[t];
		sum += r * r;
	}
	return sum / static_cast<double>(actual.size());
}

double cv(std::span<const double> actual, std::span<const double> predicted) {
	check_lengths(actual, predicted);
	double total = 0.0;
	for (const double x : actual) {
		total += x;
	}
	const double mean = total / static_cast<double>(actual.size());
	if (!(mean > 0.0)) {
		throw MetricError("CV undefined: mean of actual values is not positive");
	}
	return 100.0 * std::sqrt(mse(actual, predicted)) / mean;
}

MetricReport evaluate(std::span<const double> actual, std::span<const double> predicted) {
	MetricReport report;
	const auto m = mape(actual, predicted);
	if (static_cast<double>(m.skipped_zero_targets) > kMaxSkippedFraction * static_cast<double>(actual.size())) {
		throw MetricError("MAPE not comparable: " + std::to_string(m.skipped_zero_targets) + " of " +
		                  std::to_string(actual.size()) + " targets are zero");
	}
	report.mape = m.percent;
	report.skipped_zero_targets = m.skipped_zero_targets;
	report.cv = cv(actual, predicted);
	report.mse = mse(actual, predicted);
	return report;
}

} // namespace loadscale
