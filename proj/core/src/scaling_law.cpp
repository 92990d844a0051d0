#include "loadscale/scaling_law.hpp"

#include "loadscale/parallel.hpp"
#include "loadscale/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace loadscale {

std::string_view to_string(Metric m) noexcept {
	return m == Metric::Mape ? "MAPE" : "CV";
}

Metric parse_metric(std::string_view text) {
	if (text == "MAPE" || text == "mape") {
		return Metric::Mape;
	}
	if (text == "CV" || text == "cv") {
		return Metric::Cv;
	}
	throw std::invalid_argument("unknown metric '" + std::string(text) + "'");
}

std::string_view to_string(Regime r) noexcept {
	switch (r) {
	case Regime::Scaling:
		return "scaling";
	case Regime::Transition:
		return "transition";
	case Regime::Saturation:
		return "saturation";
	}
	return "?";
}

ScalingFit ScalingFit::from_roots(double sqrt_alpha0, double sqrt_alpha1, double p, Metric metric) {
	ScalingFit fit;
	fit.alpha0 = sqrt_alpha0 * sqrt_alpha0;
	fit.alpha1 = sqrt_alpha1 * sqrt_alpha1;
	fit.p_exp = p;
	fit.metric = metric;
	return fit;
}

namespace {

struct InnerSolution {
	double alpha0 = 0.0;
	double alpha1 = 0.0;
	double sse = 0.0;
};

double sse_of(const std::vector<double> &u, const std::vector<double> &y, double a, double b) {
	double s = 0.0;
	for (std::size_t i = 0; i < u.size(); ++i) {
		const double r = y[i] - a * u[i] - b;
		s += r * r;
	}
	return s;
}

// min sum (y - a u - b)^2 subject to a, b >= 0.
InnerSolution solve_inner(const std::vector<double> &w, const std::vector<double> &y, double p) {
	const std::size_t n = w.size();
	std::vector<double> u(n);
	for (std::size_t i = 0; i < n; ++i) {
		u[i] = std::pow(w[i], -p);
	}
	const double u_mean = std::accumulate(u.begin(), u.end(), 0.0) / static_cast<double>(n);
	const double y_mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
	double suu = 0.0;
	double suy = 0.0;
	double uu = 0.0;
	double uy = 0.0;
	for (std::size_t i = 0; i < n; ++i) {
		suu += (u[i] - u_mean) * (u[i] - u_mean);
		suy += (u[i] - u_mean) * (y[i] - y_mean);
		uu += u[i] * u[i];
		uy += u[i] * y[i];
	}
	if (suu > 0.0) {
		const double a = suy / suu;
		const double b = y_mean - a * u_mean;
		if (a >= 0.0 && b >= 0.0) {
			return {a, b, sse_of(u, y, a, b)};
		}
	}
	// Optimum lies on the boundary of the feasible quadrant.
	InnerSolution best{0.0, std::max(y_mean, 0.0), 0.0};
	best.sse = sse_of(u, y, best.alpha0, best.alpha1);
	const double a_only = uu > 0.0 ? std::max(uy / uu, 0.0) : 0.0;
	const double sse_a = sse_of(u, y, a_only, 0.0);
	if (sse_a < best.sse) {
		best = {a_only, 0.0, sse_a};
	}
	return best;
}

void validate_points(const std::vector<ErrorPoint> &points) {
	if (points.size() < 3) {
		throw FitError("scaling-law fit needs at least 3 points, got " + std::to_string(points.size()));
	}
	for (const auto &pt : points) {
		if (!(pt.w > 0.0) || !std::isfinite(pt.w)) {
			throw FitError("error point " + pt.group_id + " has non-positive mean load");
		}
		if (!(pt.err >= 0.0) || !std::isfinite(pt.err)) {
			throw FitError("error point " + pt.group_id + " has a negative or non-finite error");
		}
		if (pt.metric != points.front().metric || pt.horizon != points.front().horizon) {
			throw FitError("cannot fit points that mix metrics or horizons");
		}
	}
}

} // namespace

ScalingFit fit_scaling_law(const std::vector<ErrorPoint> &points, const FitOptions &options) {
	validate_points(points);
	std::vector<double> w(points.size());
	std::vector<double> y(points.size());
	for (std::size_t i = 0; i < points.size(); ++i) {
		w[i] = points[i].w;
		y[i] = points[i].err * points[i].err;
	}

	ScalingFit fit;
	fit.metric = points.front().metric;
	fit.horizon = points.front().horizon;
	auto finish = [&](double p) {
		const auto inner = solve_inner(w, y, p);
		fit.alpha0 = inner.alpha0;
		fit.alpha1 = inner.alpha1;
		fit.p_exp = p;
		fit.sse = inner.sse;
		return fit;
	};

	if (options.fixed_p) {
		if (!(*options.fixed_p > 0.0)) {
			throw FitError("fixed exponent must be positive");
		}
		return finish(*options.fixed_p);
	}

	const auto [w_lo, w_hi] = std::minmax_element(w.begin(), w.end());
	if (*w_hi < 10.0 * *w_lo) {
		throw FitError("mean loads span less than one decade; the exponent is not identifiable (fix p instead)");
	}

	auto objective = [&](double p) { return solve_inner(w, y, p).sse; };

	// Coarse grid brackets the global minimum, golden section refines it.
	constexpr double grid_step = 0.05;
	const auto steps = static_cast<std::size_t>(std::ceil((options.p_max - options.p_min) / grid_step));
	std::vector<double> grid(steps + 1);
	for (std::size_t i = 0; i <= steps; ++i) {
		grid[i] = std::min(options.p_min + grid_step * static_cast<double>(i), options.p_max);
	}
	std::size_t best = 0;
	double best_val = objective(grid[0]);
	for (std::size_t i = 1; i < grid.size(); ++i) {
		const double v = objective(grid[i]);
		if (v < best_val) {
			best_val = v;
			best = i;
		}
	}
	double lo = grid[best == 0 ? 0 : best - 1];
	double hi = grid[std::min(best + 1, grid.size() - 1)];
	const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
	double c = hi - inv_phi * (hi - lo);
	double d = lo + inv_phi * (hi - lo);
	double fc = objective(c);
	double fd = objective(d);
	while (hi - lo > options.p_tolerance) {
		if (fc <= fd) {
			hi = d;
			d = c;
			fd = fc;
			c = hi - inv_phi * (hi - lo);
			fc = objective(c);
		} else {
			lo = c;
			c = d;
			fc = fd;
			d = lo + inv_phi * (hi - lo);
			fd = objective(d);
		}
	}
	double p = 0.5 * (lo + hi);
	if (best_val < objective(p)) {
		p = grid[best];
	}
	finish(p);

	// Without a reducible term the exponent has no effect on the objective.
	const double y_max = *std::max_element(y.begin(), y.end());
	if (fit.alpha0 * std::pow(*w_lo, -p) <= 1e-12 * y_max) {
		finish(1.0);
	}
	return fit;
}

double critical_load(const ScalingFit &fit) {
	if (!(fit.alpha1 > 0.0)) {
		throw FitError("ideal aggregation (alpha1 = 0): no finite critical load");
	}
	if (!(fit.alpha0 > 0.0)) {
		throw FitError("no reducible error (alpha0 = 0): critical load undefined");
	}
	return std::pow(fit.alpha0 / fit.alpha1, 1.0 / fit.p_exp);
}

Regime classify_regime(double w, const ScalingFit &fit, double factor) {
	if (!(w > 0.0)) {
		throw std::invalid_argument("classify_regime needs w > 0");
	}
	const double reducible = fit.alpha0 / std::pow(w, fit.p_exp);
	if (reducible > factor * fit.alpha1) {
		return Regime::Scaling;
	}
	if (reducible < fit.alpha1 / factor) {
		return Regime::Saturation;
	}
	return Regime::Transition;
}

double predict_error(const ScalingFit &fit, double w) {
	if (!(w > 0.0)) {
		throw std::invalid_argument("predict_error needs w > 0");
	}
	return std::sqrt(fit.alpha0 / std::pow(w, fit.p_exp) + fit.alpha1);
}

double sorted_quantile(const std::vector<double> &sorted, double q) {
	if (sorted.empty()) {
		throw std::invalid_argument("quantile of an empty sample");
	}
	if (!(q >= 0.0 && q <= 1.0)) {
		throw std::invalid_argument("quantile level must be in [0, 1]");
	}
	const double pos = q * static_cast<double>(sorted.size() - 1);
	const auto lo = static_cast<std::size_t>(std::floor(pos));
	const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
	const double frac = pos - static_cast<double>(lo);
	return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::pair<double, double> bootstrap_ci(const std::vector<ErrorPoint> &points, const BootstrapOptions &options) {
	if (options.replicates < 100) {
		throw std::invalid_argument("bootstrap needs at least 100 replicates");
	}
	if (!(options.level > 0.0 && options.level < 1.0)) {
		throw std::invalid_argument("bootstrap level must be in (0, 1)");
	}
	validate_points(points);
	std::map<std::size_t, std::vector<std::size_t>> strata;
	for (std::size_t i = 0; i < points.size(); ++i) {
		strata[points[i].group_size].push_back(i);
	}

	std::vector<double> estimates(options.replicates, 0.0);
	std::vector<char> failed(options.replicates, 0);
	parallel_for(options.replicates, options.threads, [&](std::size_t r) {
		Rng rng = make_rng(options.seed, r);
		std::vector<ErrorPoint> sample;
		sample.reserve(points.size());
		for (const auto &[size, members] : strata) {
			std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
			for (std::size_t k = 0; k < members.size(); ++k) {
				sample.push_back(points[members[pick(rng)]]);
			}
		}
		try {
			estimates[r] = fit_scaling_law(sample, options.fit).sqrt_alpha1();
		} catch (const FitError &) {
			failed[r] = 1;
		}
	});

	std::vector<double> ok;
	ok.reserve(options.replicates);
	for (std::size_t r = 0; r < options.replicates; ++r) {
		if (!failed[r]) {
			ok.push_back(estimates[r]);
		}
	}
	const std::size_t failures = options.replicates - ok.size();
	if (static_cast<double>(failures) > 0.05 * static_cast<double>(options.replicates)) {
		throw FitError("bootstrap refits failed in " + std::to_string(failures) + " of " +
		               std::to_string(options.replicates) + " resamples");
	}
	std::sort(ok.begin(), ok.end());
	const double tail = (1.0 - options.level) / 2.0;
	return {sorted_quantile(ok, tail), sorted_quantile(ok, 1.0 - tail)};
}

std::vector<SizeQuantiles> quantile_curves(const std::vector<ErrorPoint> &points, const std::vector<double> &quantiles) {
	std::map<std::size_t, std::vector<const ErrorPoint *>> by_size;
	for (const auto &pt : points) {
		by_size[pt.group_size].push_back(&pt);
	}
	std::vector<SizeQuantiles> out;
	for (const auto &[size, members] : by_size) {
		if (members.size() < 5) {
			throw FitError("quantile curves need at least 5 replicates per size; size " + std::to_string(size) +
			               " has " + std::to_string(members.size()));
		}
		std::vector<double> errs;
		double w_sum = 0.0;
		for (const auto *pt : members) {
			errs.push_back(pt->err);
			w_sum += pt->w;
		}
		std::sort(errs.begin(), errs.end());
		SizeQuantiles sq;
		sq.group_size = size;
		sq.w = w_sum / static_cast<double>(members.size());
		for (const double q : quantiles) {
			sq.values.push_back(sorted_quantile(errs, q));
		}
		out.push_back(std::move(sq));
	}
	return out;
}

std::vector<ErrorPoint> quantile_track(const std::vector<SizeQuantiles> &curves, std::size_t q, Metric metric,
                                       std::size_t horizon) {
	std::vector<ErrorPoint> track;
	for (const auto &c : curves) {
		if (q >= c.values.size()) {
			throw std::out_of_range("quantile index out of range");
		}
		track.push_back(ErrorPoint{"q_s" + std::to_string(c.group_size), c.group_size, c.w, c.values[q], metric, horizon});
	}
	return track;
}

} // namespace loadscale
