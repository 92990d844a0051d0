#pragma once

#include "loadscale/ffnn.hpp"
#include "loadscale/series.hpp"

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace loadscale {

/// Orders of the seasonal AR model
/// x(t) = sum_k theta_k x(t-k) + sum_k phi_k x(t - s k) + eps(t).
struct SarSpec {
	int ar_order = 1;          ///< p, 1..3
	int seasonal_ar_order = 1; ///< P
	int season = 24;           ///< s, hours

	void validate() const;
	/// Smallest history fit_sar accepts: s P + p + 24.
	[[nodiscard]] std::size_t min_history() const;
	[[nodiscard]] std::size_t max_lag() const;
};

/// Fitted coefficients. The model runs on mean-centred data: predictions are
/// center + the AR recursion applied to (x - center).
struct SarModel {
	SarSpec spec;
	std::vector<double> theta;
	std::vector<double> phi;
	double center = 0.0;
	double resid_var = 0.0;
	bool center_only = false; ///< singular regression fallback (all coefficients zero)
};

/// Conditional least squares on the mean-centred window.
[[nodiscard]] SarModel fit_sar(std::span<const double> history, const SarSpec &spec);
[[nodiscard]] inline SarModel fit_sar(const LoadSeries &history, const SarSpec &spec) {
	return fit_sar(history.view(), spec);
}

/// h-step recursive forecast; element j is the forecast for len(history) + j.
[[nodiscard]] std::vector<double> predict_sar(const SarModel &model, std::span<const double> history, std::size_t h);

/// Seasonal naive: forecast(t + j) = x(t + j - s). With cycles > 1 it averages
/// the last `cycles` same-phase values (seasonal mean). Horizons beyond one
/// season reuse earlier forecasts.
[[nodiscard]] std::vector<double> seasonal_naive(std::span<const double> history, std::size_t season, std::size_t h,
                                                 std::size_t cycles = 1);

struct SeasonalNaiveSpec {
	int season = 24;
	int cycles = 1;
};

/// A forecaster recipe for rolling evaluation.
struct ForecasterSpec {
	std::string name;
	std::variant<SeasonalNaiveSpec, SarSpec, FfnnSpec> kind = SeasonalNaiveSpec{};
	int refit_every = 1; ///< refit cadence in steps; 1 = adaptive (every forecast)

	[[nodiscard]] std::size_t min_window() const;
};

/// Predictions and targets aligned by index. Target i sits at series index
/// `first_target + i`; its prediction used data strictly before `first_target
/// + i - horizon + 1`.
struct ForecastRun {
	std::size_t horizon = 1;
	std::size_t window = 0;
	std::size_t first_target = 0;
	std::vector<double> predictions;
	std::vector<double> targets;
};

/// For every origin t in [start, len - h], fit on series[t - window, t) and
/// record the h-step prediction for t + h - 1.
[[nodiscard]] ForecastRun rolling_forecast(const LoadSeries &series, const ForecasterSpec &forecaster,
                                           std::size_t horizon, std::size_t window, std::size_t start);

/// Runs for every horizon in 1..max_horizon sharing one fit per origin.
/// Element h-1 is identical to rolling_forecast(series, forecaster, h, ...).
[[nodiscard]] std::vector<ForecastRun> rolling_forecast_horizons(const LoadSeries &series,
                                                                 const ForecasterSpec &forecaster,
                                                                 std::size_t max_horizon, std::size_t window,
                                                                 std::size_t start);

/// `group_id,timestamp,horizon,actual,predicted` rows for one run.
void write_forecast_rows(std::ostream &out, const std::string &group_id, const LoadSeries &series,
                         const ForecastRun &run);

} // namespace loadscale
