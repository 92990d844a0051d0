#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>

namespace loadscale {

class MetricError : public std::invalid_argument {
public:
	using std::invalid_argument::invalid_argument;
};

struct MapeResult {
	double percent = 0.0;
	std::size_t skipped_zero_targets = 0;
};

/// 100 / T' * sum |x - x_hat| / x over the T' targets with x > 0. Zero targets
/// are skipped and counted; all-zero targets are an error.
[[nodiscard]] MapeResult mape(std::span<const double> actual, std::span<const double> predicted);

/// 100 * RMSE / mean(actual). Requires mean(actual) > 0.
[[nodiscard]] double cv(std::span<const double> actual, std::span<const double> predicted);

/// Mean squared residual.
[[nodiscard]] double mse(std::span<const double> actual, std::span<const double> predicted);

struct MetricReport {
	double mape = 0.0; ///< percent
	double cv = 0.0;   ///< percent
	double mse = 0.0;  ///< kWh^2
	std::size_t skipped_zero_targets = 0;
};

/// All three metrics. Rejects runs where more than 10% of MAPE targets were
/// skipped, since such a MAPE is not comparable across groups.
[[nodiscard]] MetricReport evaluate(std::span<const double> actual, std::span<const double> predicted);

} // namespace loadscale
