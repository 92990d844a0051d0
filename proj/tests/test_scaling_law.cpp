#include "doctest.h"

#include "test_support.hpp"

#include "loadscale/scaling_law.hpp"

#include <cmath>
#include <random>

using namespace loadscale;
using loadscale::testing::scaling_curve;

namespace {

std::vector<ErrorPoint> points_from(const std::vector<std::pair<double, double>> &curve, Metric metric = Metric::Mape) {
	std::vector<ErrorPoint> pts;
	for (std::size_t i = 0; i < curve.size(); ++i) {
		pts.push_back(ErrorPoint{"g" + std::to_string(i), i + 1, curve[i].first, curve[i].second, metric, 1});
	}
	return pts;
}

// `replicates` noisy points per load level; multiplicative N(1, noise) errors.
std::vector<ErrorPoint> noisy_points(double sa0, double sa1, double p, double noise, std::size_t levels,
                                     std::size_t replicates, std::uint64_t seed, double w_max = 1e5) {
	std::mt19937_64 rng(seed);
	std::normal_distribution<double> z(0.0, 1.0);
	std::vector<ErrorPoint> pts;
	const auto curve = scaling_curve(sa0, sa1, p, 1.0, w_max, levels);
	for (std::size_t i = 0; i < curve.size(); ++i) {
		for (std::size_t r = 0; r < replicates; ++r) {
			pts.push_back(ErrorPoint{"s" + std::to_string(i) + "_r" + std::to_string(r), i + 1, curve[i].first,
			                         curve[i].second * (1.0 + noise * z(rng)), Metric::Mape, 1});
		}
	}
	return pts;
}

bool rel_close(double got, double want, double tol) {
	return want == 0.0 ? std::abs(got) <= tol : std::abs(got - want) <= tol * std::abs(want);
}

} // namespace

TEST_CASE("noiseless round trip recovers the generating parameters") {
	const auto fit = fit_scaling_law(points_from(scaling_curve(45.0, 1.5, 0.9, 1.0, 1e5, 20)));
	CHECK(rel_close(fit.sqrt_alpha0(), 45.0, 1e-6));
	CHECK(rel_close(fit.sqrt_alpha1(), 1.5, 1e-6));
	CHECK(rel_close(fit.p_exp, 0.9, 1e-6));
	CHECK(fit.sse < 1e-12);
}

TEST_CASE("round trip over the parameter grid") {
	for (double sa0 : {10.0, 45.0, 100.0}) {
		for (double sa1 : {0.0, 1.5, 5.0}) {
			for (double p : {0.7, 1.0, 1.3}) {
				CAPTURE(sa0);
				CAPTURE(sa1);
				CAPTURE(p);
				const auto fit = fit_scaling_law(points_from(scaling_curve(sa0, sa1, p, 1.0, 1e5, 20)));
				CHECK(rel_close(fit.sqrt_alpha0(), sa0, 1e-6));
				CHECK(std::abs(fit.sqrt_alpha1() - sa1) <= 1e-6 * std::max(sa1, 1.0));
				CHECK(rel_close(fit.p_exp, p, 1e-6));
			}
		}
	}
}

TEST_CASE("flat curve: saturation only, p tie-broken to 1") {
	std::vector<ErrorPoint> pts;
	for (int i = 0; i < 10; ++i) {
		pts.push_back(ErrorPoint{"g", 1, std::pow(10.0, i * 0.5), 5.0, Metric::Mape, 1});
	}
	const auto fit = fit_scaling_law(pts);
	CHECK(fit.alpha0 == 0.0);
	CHECK(fit.sqrt_alpha1() == doctest::Approx(5.0).epsilon(1e-12));
	CHECK(fit.p_exp == 1.0);
}

TEST_CASE("Table II M1 law with 1% noise fits near the published irreducible error") {
	const auto pts = noisy_points(45.44, 1.522, 0.88, 0.01, 20, 10, 3);
	const auto fit = fit_scaling_law(pts);
	CHECK(fit.sqrt_alpha1() >= 1.4);
	CHECK(fit.sqrt_alpha1() <= 1.65);
}

TEST_CASE("fit error paths") {
	auto pts = points_from(scaling_curve(45.0, 1.5, 0.9, 1.0, 1e5, 20));
	CHECK_THROWS_AS((void)fit_scaling_law({pts[0], pts[1]}), FitError);
	CHECK_THROWS_AS((void)fit_scaling_law(points_from(scaling_curve(45.0, 1.5, 0.9, 1.0, 9.0, 5))), FitError);
	// With p fixed, a narrow span is fine.
	const auto narrow = fit_scaling_law(points_from(scaling_curve(45.0, 1.5, 0.9, 1.0, 9.0, 5)), FitOptions{0.9});
	CHECK(narrow.sqrt_alpha0() == doctest::Approx(45.0).epsilon(1e-9));
	pts[3].w = 0.0;
	CHECK_THROWS_AS((void)fit_scaling_law(pts), FitError);
	pts[3].w = 1.0;
	pts[4].metric = Metric::Cv;
	CHECK_THROWS_AS((void)fit_scaling_law(pts), FitError);
}

TEST_CASE("critical load examples") {
	CHECK(critical_load(ScalingFit::from_roots(45.44, 1.522, 0.88)) == doctest::Approx(2250.0).epsilon(0.005));
	CHECK(critical_load(ScalingFit::from_roots(56.76, 4.153, 1.02)) == doctest::Approx(168.0).epsilon(0.005));
	CHECK(critical_load(ScalingFit::from_roots(3.0, 3.0, 1.0)) == doctest::Approx(1.0));
	CHECK_THROWS_AS((void)critical_load(ScalingFit::from_roots(3.0, 0.0, 1.0)), FitError);
	CHECK_THROWS_AS((void)critical_load(ScalingFit::from_roots(0.0, 1.0, 1.0)), FitError);
}

TEST_CASE("regime classification") {
	const auto m1 = ScalingFit::from_roots(45.44, 1.522, 0.88);
	CHECK(classify_regime(1.0, m1) == Regime::Scaling);
	CHECK(classify_regime(1e5, m1) == Regime::Saturation);
	CHECK(classify_regime(critical_load(m1), m1) == Regime::Transition);
	CHECK_THROWS_AS((void)classify_regime(0.0, m1), std::invalid_argument);
}

TEST_CASE("predict_error examples and monotonicity") {
	const auto m1 = ScalingFit::from_roots(45.44, 1.522, 0.88);
	CHECK(predict_error(m1, 1.0) == doctest::Approx(45.5).epsilon(0.005));
	CHECK(predict_error(m1, 4.0) == doctest::Approx(24.7).epsilon(0.005));
	CHECK(predict_error(m1, 1e15) == doctest::Approx(1.522).epsilon(1e-6));
	double prev = predict_error(m1, 0.01);
	for (double w = 0.02; w < 1e7; w *= 1.7) {
		const double e = predict_error(m1, w);
		CHECK(e < prev);
		prev = e;
	}
}

TEST_CASE("scaling the errors scales the roots and keeps p") {
	const auto pts = noisy_points(30.0, 2.0, 0.8, 0.02, 15, 4, 5);
	const auto base = fit_scaling_law(pts);
	auto scaled = pts;
	for (auto &pt : scaled) {
		pt.err *= 3.0;
	}
	const auto fit = fit_scaling_law(scaled);
	CHECK(fit.sqrt_alpha0() == doctest::Approx(3.0 * base.sqrt_alpha0()).epsilon(1e-6));
	CHECK(fit.sqrt_alpha1() == doctest::Approx(3.0 * base.sqrt_alpha1()).epsilon(1e-6));
	CHECK(fit.p_exp == doctest::Approx(base.p_exp).epsilon(1e-6));
}

TEST_CASE("fit objective does not increase as noise shrinks") {
	std::mt19937_64 rng(9);
	std::normal_distribution<double> z(0.0, 1.0);
	const auto curve = scaling_curve(40.0, 2.0, 0.9, 1.0, 1e5, 25);
	std::vector<double> shocks(curve.size());
	for (double &s : shocks) {
		s = z(rng);
	}
	double prev = 1e300;
	for (double noise : {0.08, 0.04, 0.02, 0.01, 0.0}) {
		std::vector<ErrorPoint> pts;
		for (std::size_t i = 0; i < curve.size(); ++i) {
			pts.push_back(ErrorPoint{"g", i, curve[i].first, curve[i].second * (1.0 + noise * shocks[i]), Metric::Mape, 1});
		}
		const double sse = fit_scaling_law(pts).sse;
		CHECK(sse <= prev);
		prev = sse;
	}
}

TEST_CASE("bootstrap intervals") {
	SUBCASE("zero noise gives a degenerate interval") {
		std::vector<ErrorPoint> pts;
		const auto curve = scaling_curve(45.44, 1.522, 0.88, 1.0, 1e5, 12);
		for (std::size_t i = 0; i < curve.size(); ++i) {
			for (int r = 0; r < 3; ++r) {
				pts.push_back(ErrorPoint{"g", i + 1, curve[i].first, curve[i].second, Metric::Mape, 1});
			}
		}
		const auto [lo, hi] = bootstrap_ci(pts, BootstrapOptions{100, 0.95, 1, 1, {}});
		CHECK(hi - lo < 1e-9);
		CHECK(lo == doctest::Approx(1.522).epsilon(1e-6));
	}
	SUBCASE("1% noise, B = 500") {
		// Loads reach well past the critical load so the floor is identified.
		const auto pts = noisy_points(45.44, 1.522, 0.88, 0.01, 20, 50, 4, 1e6);
		const auto fit = fit_scaling_law(pts);
		const auto [lo, hi] = bootstrap_ci(pts, BootstrapOptions{500, 0.95, 7, 2, {}});
		CHECK(lo <= fit.sqrt_alpha1());
		CHECK(fit.sqrt_alpha1() <= hi);
		CHECK(hi - lo < 0.3);
		// Thread count never changes the interval.
		const auto again = bootstrap_ci(pts, BootstrapOptions{500, 0.95, 7, 1, {}});
		CHECK(again.first == lo);
		CHECK(again.second == hi);
	}
	SUBCASE("preconditions") {
		const auto pts = noisy_points(45.44, 1.522, 0.88, 0.01, 5, 2, 4);
		CHECK_THROWS_AS((void)bootstrap_ci(pts, BootstrapOptions{50, 0.95, 1, 1, {}}), std::invalid_argument);
	}
}

TEST_CASE("quantile curves") {
	const auto pts = noisy_points(40.0, 2.0, 0.9, 0.1, 15, 40, 6);
	const auto curves = quantile_curves(pts, {0.25, 0.5, 0.75});
	REQUIRE(curves.size() == 15);
	for (const auto &c : curves) {
		CHECK(c.values[0] <= c.values[1]);
		CHECK(c.values[1] <= c.values[2]);
	}
	// Median of symmetric noise tracks the mean.
	for (const auto &c : curves) {
		double mean = 0.0;
		int count = 0;
		for (const auto &pt : pts) {
			if (pt.group_size == c.group_size) {
				mean += pt.err;
				++count;
			}
		}
		mean /= count;
		CHECK(c.values[1] == doctest::Approx(mean).epsilon(0.05));
	}
	const auto low = fit_scaling_law(quantile_track(curves, 0, Metric::Mape, 1));
	const auto high = fit_scaling_law(quantile_track(curves, 2, Metric::Mape, 1));
	CHECK(std::abs(low.p_exp - high.p_exp) < 0.15);

	const auto sparse = noisy_points(40.0, 2.0, 0.9, 0.1, 5, 4, 6);
	CHECK_THROWS_AS((void)quantile_curves(sparse, {0.5}), FitError);
}

TEST_CASE("sorted_quantile interpolates linearly") {
	const std::vector<double> v{1, 2, 3, 4};
	CHECK(sorted_quantile(v, 0.0) == 1.0);
	CHECK(sorted_quantile(v, 1.0) == 4.0);
	CHECK(sorted_quantile(v, 0.5) == 2.5);
	CHECK_THROWS_AS((void)sorted_quantile(v, 1.5), std::invalid_argument);
}
