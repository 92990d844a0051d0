#pragma once

#include <cstddef>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace loadscale {

enum class Metric { Mape, Cv };

[[nodiscard]] std::string_view to_string(Metric m) noexcept;
[[nodiscard]] Metric parse_metric(std::string_view text);

/// One point of the aggregation-error curve: a group's mean load and its
/// forecast error in percent.
struct ErrorPoint {
	std::string group_id;
	std::size_t group_size = 0;
	double w = 0.0;   ///< W_A, kWh
	double err = 0.0; ///< MAPE or CV, percent
	Metric metric = Metric::Mape;
	std::size_t horizon = 1;
};

/// err(W) = sqrt(alpha0 / W^p + alpha1). For CV the same fields hold beta0
/// and beta1.
struct ScalingFit {
	double alpha0 = 0.0;
	double alpha1 = 0.0;
	double p_exp = 1.0;
	Metric metric = Metric::Mape;
	std::size_t horizon = 1;
	double sse = 0.0; ///< sum of squared residuals in the err^2 domain
	std::optional<std::pair<double, double>> ci_sqrt_alpha1;

	[[nodiscard]] double sqrt_alpha0() const { return std::sqrt(alpha0); }
	[[nodiscard]] double sqrt_alpha1() const { return std::sqrt(alpha1); }
	/// Builds a fit from the tabulated form (sqrt alpha0, sqrt alpha1, p).
	[[nodiscard]] static ScalingFit from_roots(double sqrt_alpha0, double sqrt_alpha1, double p,
	                                           Metric metric = Metric::Mape);
};

class FitError : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

struct FitOptions {
	std::optional<double> fixed_p;
	double p_min = 0.1;
	double p_max = 2.0;
	double p_tolerance = 1e-10;
};

/// Least squares on sum (err_i^2 - alpha0 / W_i^p - alpha1)^2 with alpha0,
/// alpha1 >= 0. For fixed p the problem is a two-variable non-negative
/// linear least squares solved in closed form; p itself is profiled by a
/// coarse grid followed by golden-section refinement. A flat curve (alpha0 =
/// 0 at the optimum) leaves p unidentified and reports p = 1.
[[nodiscard]] ScalingFit fit_scaling_law(const std::vector<ErrorPoint> &points, const FitOptions &options = {});

/// Aggregation level where the reducible and irreducible terms are equal,
/// (alpha0 / alpha1)^(1/p). Throws FitError if either coefficient is zero.
[[nodiscard]] double critical_load(const ScalingFit &fit);

enum class Regime { Scaling, Transition, Saturation };
[[nodiscard]] std::string_view to_string(Regime r) noexcept;

[[nodiscard]] Regime classify_regime(double w, const ScalingFit &fit, double factor = 10.0);

[[nodiscard]] double predict_error(const ScalingFit &fit, double w);

struct BootstrapOptions {
	std::size_t replicates = 1000;
	double level = 0.95;
	std::uint64_t seed = 0;
	unsigned threads = 1;
	FitOptions fit;
};

/// Percentile interval on sqrt(alpha1) from size-stratified resamples of the
/// points, each refit with fit_scaling_law. Replicate r draws from a stream
/// derived from (seed, r), so the interval is independent of `threads`.
[[nodiscard]] std::pair<double, double> bootstrap_ci(const std::vector<ErrorPoint> &points,
                                                     const BootstrapOptions &options);

/// Empirical err quantiles for one group size; `w` is the mean W_A of the size.
struct SizeQuantiles {
	std::size_t group_size = 0;
	double w = 0.0;
	std::vector<double> values; ///< one per requested quantile
};

/// Per-size quantiles of err (linear interpolation between order statistics).
/// Needs at least 5 points per size.
[[nodiscard]] std::vector<SizeQuantiles> quantile_curves(const std::vector<ErrorPoint> &points,
                                                         const std::vector<double> &quantiles);

/// The track for quantile index `q` as fit-ready points.
[[nodiscard]] std::vector<ErrorPoint> quantile_track(const std::vector<SizeQuantiles> &curves, std::size_t q,
                                                     Metric metric, std::size_t horizon);

/// Type-7 sample quantile of an already sorted range.
[[nodiscard]] double sorted_quantile(const std::vector<double> &sorted, double q);

} // namespace loadscale
