#include "loadscale/ffnn.hpp"

#include "loadscale/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace loadscale {

namespace {

double logistic(double z) {
	return 1.0 / (1.0 + std::exp(-z));
}

// Lagged inputs for predicting index t of `values` (values[t] itself unused).
void gather_inputs(std::span<const double> values, std::size_t t, const FfnnSpec &spec, double scale_min,
                   double scale_range, std::span<double> out) {
	const auto lags = static_cast<std::size_t>(spec.input_lags);
	for (std::size_t k = 1; k <= lags; ++k) {
		out[k - 1] = (values[t - k] - scale_min) / scale_range;
	}
	if (spec.include_seasonal_lag) {
		out[lags] = (values[t - static_cast<std::size_t>(spec.season)] - scale_min) / scale_range;
	}
}

} // namespace

void FfnnSpec::validate() const {
	if (input_lags < 1) {
		throw std::invalid_argument("FFNN input_lags must be >= 1");
	}
	if (hidden_units < 1) {
		throw std::invalid_argument("FFNN hidden_units must be >= 1");
	}
	if (include_seasonal_lag && season < 1) {
		throw std::invalid_argument("FFNN season must be >= 1");
	}
	if (epochs < 0 || !(learning_rate > 0.0)) {
		throw std::invalid_argument("FFNN needs epochs >= 0 and learning_rate > 0");
	}
}

std::size_t FfnnSpec::input_count() const {
	return static_cast<std::size_t>(input_lags) + (include_seasonal_lag ? 1 : 0);
}

std::size_t FfnnSpec::max_lag() const {
	return static_cast<std::size_t>(include_seasonal_lag ? std::max(input_lags, season) : input_lags);
}

std::size_t FfnnSpec::min_history() const {
	return static_cast<std::size_t>(input_lags + (include_seasonal_lag ? season : 0) + 24);
}

FfnnWeights init_ffnn_weights(std::size_t inputs, std::size_t hidden, std::uint64_t seed) {
	FfnnWeights w;
	w.inputs = inputs;
	w.hidden = hidden;
	w.params.assign(FfnnWeights::param_count(inputs, hidden), 0.0);
	Rng rng = make_rng(seed, 0);
	std::normal_distribution<double> in_dist(0.0, 1.0 / std::sqrt(static_cast<double>(inputs)));
	std::normal_distribution<double> out_dist(0.0, 1.0 / std::sqrt(static_cast<double>(hidden)));
	for (std::size_t i = 0; i < hidden * inputs; ++i) {
		w.params[i] = in_dist(rng);
	}
	const std::size_t out_w = hidden * inputs + hidden;
	for (std::size_t j = 0; j < hidden; ++j) {
		w.params[out_w + j] = out_dist(rng);
	}
	return w;
}

double ffnn_forward(const FfnnWeights &w, std::span<const double> input) {
	const std::size_t bias1 = w.hidden * w.inputs;
	const std::size_t out_w = bias1 + w.hidden;
	const std::size_t bias2 = out_w + w.hidden;
	double y = w.params[bias2];
	for (std::size_t j = 0; j < w.hidden; ++j) {
		double z = w.params[bias1 + j];
		for (std::size_t i = 0; i < w.inputs; ++i) {
			z += w.params[j * w.inputs + i] * input[i];
		}
		y += w.params[out_w + j] * logistic(z);
	}
	return y;
}

double ffnn_loss_and_gradient(const FfnnWeights &w, const FfnnTrainingSet &data, std::vector<double> &gradient) {
	const std::size_t bias1 = w.hidden * w.inputs;
	const std::size_t out_w = bias1 + w.hidden;
	const std::size_t bias2 = out_w + w.hidden;
	gradient.assign(w.params.size(), 0.0);
	std::vector<double> act(w.hidden);
	double loss = 0.0;
	const std::size_t m = data.rows();
	const double inv_m = 1.0 / static_cast<double>(m);
	for (std::size_t r = 0; r < m; ++r) {
		const double *x = data.inputs.data() + r * data.width;
		double y = w.params[bias2];
		for (std::size_t j = 0; j < w.hidden; ++j) {
			double z = w.params[bias1 + j];
			for (std::size_t i = 0; i < w.inputs; ++i) {
				z += w.params[j * w.inputs + i] * x[i];
			}
			act[j] = logistic(z);
			y += w.params[out_w + j] * act[j];
		}
		const double err = y - data.targets[r];
		loss += err * err;
		const double dy = 2.0 * err * inv_m;
		gradient[bias2] += dy;
		for (std::size_t j = 0; j < w.hidden; ++j) {
			gradient[out_w + j] += dy * act[j];
			const double dz = dy * w.params[out_w + j] * act[j] * (1.0 - act[j]);
			gradient[bias1 + j] += dz;
			for (std::size_t i = 0; i < w.inputs; ++i) {
				gradient[j * w.inputs + i] += dz * x[i];
			}
		}
	}
	return loss * inv_m;
}

FfnnTrainingSet make_ffnn_training_set(std::span<const double> history, const FfnnSpec &spec, double scale_min,
                                       double scale_range) {
	FfnnTrainingSet set;
	set.width = spec.input_count();
	const std::size_t lag = spec.max_lag();
	const std::size_t rows = history.size() - lag;
	set.inputs.resize(rows * set.width);
	set.targets.resize(rows);
	for (std::size_t r = 0; r < rows; ++r) {
		const std::size_t t = lag + r;
		gather_inputs(history, t, spec, scale_min, scale_range,
		              std::span<double>(set.inputs.data() + r * set.width, set.width));
		set.targets[r] = (history[t] - scale_min) / scale_range;
	}
	return set;
}

FfnnModel fit_ffnn(std::span<const double> history, const FfnnSpec &spec) {
	spec.validate();
	if (history.size() < spec.min_history()) {
		throw ForecastError("fit_ffnn needs at least " + std::to_string(spec.min_history()) + " samples, got " +
		                    std::to_string(history.size()));
	}
	FfnnModel model;
	model.spec = spec;
	const auto [lo, hi] = std::minmax_element(history.begin(), history.end());
	model.scale_min = *lo;
	model.scale_range = *hi > *lo ? *hi - *lo : 1.0;
	const auto data = make_ffnn_training_set(history, spec, model.scale_min, model.scale_range);
	model.weights = init_ffnn_weights(spec.input_count(), static_cast<std::size_t>(spec.hidden_units), spec.seed);

	// Full-batch Adam.
	constexpr double beta1 = 0.9;
	constexpr double beta2 = 0.999;
	constexpr double eps = 1e-8;
	auto &params = model.weights.params;
	std::vector<double> grad;
	std::vector<double> m1(params.size(), 0.0);
	std::vector<double> m2(params.size(), 0.0);
	double b1_pow = 1.0;
	double b2_pow = 1.0;
	double loss = 0.0;
	for (int epoch = 0; epoch < spec.epochs; ++epoch) {
		loss = ffnn_loss_and_gradient(model.weights, data, grad);
		if (!std::isfinite(loss)) {
			throw ForecastError("FFNN training diverged (non-finite loss) at epoch " + std::to_string(epoch));
		}
		b1_pow *= beta1;
		b2_pow *= beta2;
		for (std::size_t i = 0; i < params.size(); ++i) {
			m1[i] = beta1 * m1[i] + (1.0 - beta1) * grad[i];
			m2[i] = beta2 * m2[i] + (1.0 - beta2) * grad[i] * grad[i];
			const double mhat = m1[i] / (1.0 - b1_pow);
			const double vhat = m2[i] / (1.0 - b2_pow);
			params[i] -= spec.learning_rate * mhat / (std::sqrt(vhat) + eps);
		}
	}
	model.final_loss = ffnn_loss_and_gradient(model.weights, data, grad);
	if (!std::isfinite(model.final_loss)) {
		throw ForecastError("FFNN training diverged (non-finite loss) at epoch " + std::to_string(spec.epochs));
	}
	return model;
}

std::vector<double> predict_ffnn(const FfnnModel &model, std::span<const double> history, std::size_t h) {
	const std::size_t lag = model.spec.max_lag();
	if (history.size() < lag) {
		throw ForecastError("predict_ffnn needs at least " + std::to_string(lag) + " history samples");
	}
	std::vector<double> buf(history.end() - static_cast<std::ptrdiff_t>(lag), history.end());
	buf.reserve(lag + h);
	std::vector<double> input(model.spec.input_count());
	std::vector<double> out(h);
	for (std::size_t j = 0; j < h; ++j) {
		gather_inputs(buf, buf.size(), model.spec, model.scale_min, model.scale_range, input);
		const double scaled = ffnn_forward(model.weights, input);
		out[j] = model.scale_min + scaled * model.scale_range;
		buf.push_back(out[j]);
	}
	return out;
}

} // namespace loadscale
