#include "loadscale/forecast.hpp"

#include "loadscale/csv_io.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <numeric>
#include <optional>
#include <ostream>

namespace loadscale {

void SarSpec::validate() const {
	if (ar_order < 1 || ar_order > 3) {
		throw std::invalid_argument("SAR ar_order must be in 1..3 (higher orders overfit)");
	}
	if (seasonal_ar_order < 1) {
		throw std::invalid_argument("SAR seasonal_ar_order must be >= 1");
	}
	if (season < 2) {
		throw std::invalid_argument("SAR season must be >= 2");
	}
}

std::size_t SarSpec::max_lag() const {
	return static_cast<std::size_t>(std::max(ar_order, season * seasonal_ar_order));
}

std::size_t SarSpec::min_history() const {
	return static_cast<std::size_t>(season * seasonal_ar_order + ar_order + 24);
}

SarModel fit_sar(std::span<const double> history, const SarSpec &spec) {
	spec.validate();
	if (history.size() < spec.min_history()) {
		throw ForecastError("fit_sar needs at least " + std::to_string(spec.min_history()) + " samples, got " +
		                    std::to_string(history.size()));
	}
	const std::size_t n = history.size();
	const auto p = static_cast<std::size_t>(spec.ar_order);
	const auto big_p = static_cast<std::size_t>(spec.seasonal_ar_order);
	const auto s = static_cast<std::size_t>(spec.season);
	const std::size_t lag = spec.max_lag();
	const std::size_t rows = n - lag;
	const std::size_t cols = p + big_p;

	SarModel model;
	model.spec = spec;
	model.center = std::accumulate(history.begin(), history.end(), 0.0) / static_cast<double>(n);
	model.theta.assign(p, 0.0);
	model.phi.assign(big_p, 0.0);

	Eigen::MatrixXd design(rows, cols);
	Eigen::VectorXd target(rows);
	for (std::size_t r = 0; r < rows; ++r) {
		const std::size_t t = lag + r;
		target(static_cast<Eigen::Index>(r)) = history[t] - model.center;
		for (std::size_t k = 1; k <= p; ++k) {
			design(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k - 1)) = history[t - k] - model.center;
		}
		for (std::size_t k = 1; k <= big_p; ++k) {
			design(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(p + k - 1)) =
			    history[t - s * k] - model.center;
		}
	}

	const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
	if (qr.rank() < static_cast<Eigen::Index>(cols)) {
		model.center_only = true;
		model.resid_var = target.squaredNorm() / static_cast<double>(rows);
		return model;
	}
	const Eigen::VectorXd coef = qr.solve(target);
	for (std::size_t k = 0; k < p; ++k) {
		model.theta[k] = coef(static_cast<Eigen::Index>(k));
	}
	for (std::size_t k = 0; k < big_p; ++k) {
		model.phi[k] = coef(static_cast<Eigen::Index>(p + k));
	}
	model.resid_var = (target - design * coef).squaredNorm() / static_cast<double>(rows);
	return model;
}

std::vector<double> predict_sar(const SarModel &model, std::span<const double> history, std::size_t h) {
	const std::size_t lag = model.spec.max_lag();
	if (model.center_only) {
		return std::vector<double>(h, model.center);
	}
	if (history.size() < lag) {
		throw ForecastError("predict_sar needs at least " + std::to_string(lag) + " history samples");
	}
	const auto s = static_cast<std::size_t>(model.spec.season);
	// Centred tail of the history followed by the forecasts as they are produced.
	std::vector<double> buf(lag + h);
	for (std::size_t i = 0; i < lag; ++i) {
		buf[i] = history[history.size() - lag + i] - model.center;
	}
	std::vector<double> out(h);
	for (std::size_t j = 0; j < h; ++j) {
		const std::size_t t = lag + j;
		double y = 0.0;
		for (std::size_t k = 1; k <= model.theta.size(); ++k) {
			y += model.theta[k - 1] * buf[t - k];
		}
		for (std::size_t k = 1; k <= model.phi.size(); ++k) {
			y += model.phi[k - 1] * buf[t - s * k];
		}
		buf[t] = y;
		out[j] = y + model.center;
	}
	return out;
}

std::vector<double> seasonal_naive(std::span<const double> history, std::size_t season, std::size_t h,
                                   std::size_t cycles) {
	if (season < 1 || cycles < 1) {
		throw std::invalid_argument("seasonal_naive needs season >= 1 and cycles >= 1");
	}
	if (history.size() < season * cycles) {
		throw ForecastError("seasonal_naive needs " + std::to_string(season * cycles) + " history samples, got " +
		                    std::to_string(history.size()));
	}
	const std::size_t n = history.size();
	std::vector<double> out(h);
	auto value_at = [&](std::size_t idx) { return idx < n ? history[idx] : out[idx - n]; };
	for (std::size_t j = 0; j < h; ++j) {
		double sum = 0.0;
		for (std::size_t c = 1; c <= cycles; ++c) {
			sum += value_at(n + j - c * season);
		}
		out[j] = cycles == 1 ? sum : sum / static_cast<double>(cycles);
	}
	return out;
}

std::size_t ForecasterSpec::min_window() const {
	return std::visit(
	    [](const auto &k) -> std::size_t {
		    using T = std::decay_t<decltype(k)>;
		    if constexpr (std::is_same_v<T, SeasonalNaiveSpec>) {
			    return static_cast<std::size_t>(k.season * k.cycles);
		    } else {
			    return k.min_history();
		    }
	    },
	    kind);
}

namespace {

// A fitted forecaster that can produce h-step forecasts from any history.
class FittedForecaster {
public:
	explicit FittedForecaster(const ForecasterSpec &spec) : spec_(spec) {}

	void fit(std::span<const double> window) {
		std::visit(
		    [&](const auto &k) {
			    using T = std::decay_t<decltype(k)>;
			    if constexpr (std::is_same_v<T, SarSpec>) {
				    sar_ = fit_sar(window, k);
			    } else if constexpr (std::is_same_v<T, FfnnSpec>) {
				    ffnn_ = fit_ffnn(window, k);
			    }
		    },
		    spec_.kind);
	}

	[[nodiscard]] std::vector<double> predict(std::span<const double> window, std::size_t h) const {
		return std::visit(
		    [&](const auto &k) -> std::vector<double> {
			    using T = std::decay_t<decltype(k)>;
			    if constexpr (std::is_same_v<T, SarSpec>) {
				    return predict_sar(*sar_, window, h);
			    } else if constexpr (std::is_same_v<T, FfnnSpec>) {
				    return predict_ffnn(*ffnn_, window, h);
			    } else {
				    return seasonal_naive(window, static_cast<std::size_t>(k.season), h,
				                          static_cast<std::size_t>(k.cycles));
			    }
		    },
		    spec_.kind);
	}

private:
	const ForecasterSpec &spec_;
	std::optional<SarModel> sar_;
	std::optional<FfnnModel> ffnn_;
};

} // namespace

std::vector<ForecastRun> rolling_forecast_horizons(const LoadSeries &series, const ForecasterSpec &forecaster,
                                                   std::size_t max_horizon, std::size_t window, std::size_t start) {
	if (max_horizon < 1) {
		throw std::invalid_argument("forecast horizon must be >= 1");
	}
	if (forecaster.refit_every < 1) {
		throw std::invalid_argument("refit_every must be >= 1");
	}
	if (window < forecaster.min_window()) {
		throw ForecastError("training window of " + std::to_string(window) + " is too small for forecaster '" +
		                    forecaster.name + "' (needs " + std::to_string(forecaster.min_window()) + ")");
	}
	if (start < window) {
		throw std::invalid_argument("rolling start must be >= window");
	}
	const std::size_t len = series.size();
	if (len < start + max_horizon) {
		throw std::invalid_argument("series too short for the requested start and horizon");
	}
	std::vector<ForecastRun> runs(max_horizon);
	for (std::size_t h = 1; h <= max_horizon; ++h) {
		auto &run = runs[h - 1];
		run.horizon = h;
		run.window = window;
		run.first_target = start + h - 1;
		run.predictions.reserve(len - start - h + 1);
		run.targets.reserve(len - start - h + 1);
	}
	const auto values = series.view();
	FittedForecaster model(forecaster);
	const auto refit = static_cast<std::size_t>(forecaster.refit_every);
	for (std::size_t t = start; t < len; ++t) {
		const auto train = values.subspan(t - window, window);
		if ((t - start) % refit == 0) {
			model.fit(train);
		}
		const std::size_t reach = std::min(max_horizon, len - t);
		const auto pred = model.predict(train, reach);
		for (std::size_t h = 1; h <= reach; ++h) {
			runs[h - 1].predictions.push_back(pred[h - 1]);
			runs[h - 1].targets.push_back(values[t + h - 1]);
		}
	}
	return runs;
}

ForecastRun rolling_forecast(const LoadSeries &series, const ForecasterSpec &forecaster, std::size_t horizon,
                             std::size_t window, std::size_t start) {
	if (horizon < 1) {
		throw std::invalid_argument("forecast horizon must be >= 1");
	}
	auto runs = rolling_forecast_horizons(series, forecaster, horizon, window, start);
	return std::move(runs.back());
}

void write_forecast_rows(std::ostream &out, const std::string &group_id, const LoadSeries &series,
                         const ForecastRun &run) {
	for (std::size_t i = 0; i < run.targets.size(); ++i) {
		out << group_id << ',' << format_iso8601(series.timestamp_minute(run.first_target + i)) << ',' << run.horizon
		    << ',' << format_number(run.targets[i]) << ',' << format_number(run.predictions[i]) << '\n';
	}
}

} // namespace loadscale
