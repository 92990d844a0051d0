#pragma once

#include "loadscale/series.hpp"

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace loadscale {

class ForecastError : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

/// Single-hidden-layer network with logistic hidden units and a linear
/// output. Inputs are the last `input_lags` values plus (optionally) the value
/// one season back.
struct FfnnSpec {
	int input_lags = 3;
	bool include_seasonal_lag = true;
	int season = 24;
	int hidden_units = 24;
	int epochs = 500;
	double learning_rate = 0.01;
	std::uint64_t seed = 1;

	void validate() const;
	[[nodiscard]] std::size_t input_count() const;
	[[nodiscard]] std::size_t max_lag() const;
	/// input_lags + s + 24 (s counted only with the seasonal lag).
	[[nodiscard]] std::size_t min_history() const;
};

/// Flat parameter vector layout: hidden weights (hidden x inputs, row-major),
/// hidden biases, output weights, output bias.
struct FfnnWeights {
	std::size_t inputs = 0;
	std::size_t hidden = 0;
	std::vector<double> params;

	[[nodiscard]] static std::size_t param_count(std::size_t inputs, std::size_t hidden) {
		return hidden * inputs + 2 * hidden + 1;
	}
};

struct FfnnModel {
	FfnnSpec spec;
	FfnnWeights weights;
	double scale_min = 0.0;   ///< min-max scaling of the training window
	double scale_range = 1.0; ///< 1 when the window is constant
	double final_loss = 0.0;
};

/// Scaled training pairs: row i of `inputs` (input_count wide) maps to target[i].
struct FfnnTrainingSet {
	std::vector<double> inputs;
	std::vector<double> targets;
	std::size_t width = 0;
	[[nodiscard]] std::size_t rows() const noexcept { return targets.size(); }
};

[[nodiscard]] FfnnWeights init_ffnn_weights(std::size_t inputs, std::size_t hidden, std::uint64_t seed);

/// Mean squared error over the set and its gradient w.r.t. every parameter.
[[nodiscard]] double ffnn_loss_and_gradient(const FfnnWeights &w, const FfnnTrainingSet &data,
                                            std::vector<double> &gradient);
[[nodiscard]] double ffnn_forward(const FfnnWeights &w, std::span<const double> input);

/// Builds the scaled training set for a window (also used by the gradient check).
[[nodiscard]] FfnnTrainingSet make_ffnn_training_set(std::span<const double> history, const FfnnSpec &spec,
                                                     double scale_min, double scale_range);

[[nodiscard]] FfnnModel fit_ffnn(std::span<const double> history, const FfnnSpec &spec);
[[nodiscard]] inline FfnnModel fit_ffnn(const LoadSeries &history, const FfnnSpec &spec) {
	return fit_ffnn(history.view(), spec);
}
/// Recursive h-step forecast.
[[nodiscard]] std::vector<double> predict_ffnn(const FfnnModel &model, std::span<const double> history,
                                               std::size_t h);

} // namespace loadscale
