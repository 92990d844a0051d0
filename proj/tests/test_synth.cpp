#include "doctest.h"

#include "loadscale/grouping.hpp"
#include "loadscale/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

using namespace loadscale;

namespace {

// Sample variance over time of the column sums of a deviation matrix.
double variance_of_column_sums(const RowMatrix &m) {
	std::vector<double> sums(m.cols(), 0.0);
	for (std::size_t r = 0; r < m.rows(); ++r) {
		for (std::size_t c = 0; c < m.cols(); ++c) {
			sums[c] += m(r, c);
		}
	}
	const double mean = std::accumulate(sums.begin(), sums.end(), 0.0) / static_cast<double>(sums.size());
	double ss = 0.0;
	for (double s : sums) {
		ss += (s - mean) * (s - mean);
	}
	return ss / static_cast<double>(sums.size() - 1);
}

} // namespace

TEST_CASE("gen_profiles with zero variance returns the base shape") {
	ProfileParams params;
	params.profile_var = 0.0;
	const auto m = gen_profiles(1, params, 3);
	const auto base = base_profile(params);
	REQUIRE(m.cols() == 24);
	for (std::size_t h = 0; h < 24; ++h) {
		CHECK(m(0, h) == base[h]);
	}
	// Base shape: mean mu, amplitude 0.4 mu, peak six hours after the zero crossing.
	CHECK(std::accumulate(base.begin(), base.end(), 0.0) / 24.0 == doctest::Approx(params.mean_mu));
	CHECK(base[12] == doctest::Approx(1.4 * params.mean_mu));
	CHECK(base[0] == doctest::Approx(0.6 * params.mean_mu));
}

TEST_CASE("gen_profiles population statistics converge") {
	ProfileParams params;
	params.mean_mu = 1.0;
	params.profile_var = 0.02;
	const auto m = gen_profiles(10000, params, 5);
	double grand = 0.0;
	for (double v : m.data()) {
		grand += v;
	}
	grand /= static_cast<double>(m.data().size());
	CHECK(grand >= 0.99);
	CHECK(grand <= 1.01);

	// Between-customer variance, averaged over hours.
	double var_sum = 0.0;
	for (std::size_t h = 0; h < m.cols(); ++h) {
		double mean = 0.0;
		for (std::size_t n = 0; n < m.rows(); ++n) {
			mean += m(n, h);
		}
		mean /= static_cast<double>(m.rows());
		double ss = 0.0;
		for (std::size_t n = 0; n < m.rows(); ++n) {
			ss += (m(n, h) - mean) * (m(n, h) - mean);
		}
		var_sum += ss / static_cast<double>(m.rows() - 1);
	}
	CHECK(var_sum / static_cast<double>(m.cols()) == doctest::Approx(0.02).epsilon(0.05));
}

TEST_CASE("gen_profiles is deterministic and rejects infeasible variance") {
	ProfileParams params;
	CHECK(gen_profiles(50, params, 17) == gen_profiles(50, params, 17));
	CHECK_FALSE(gen_profiles(50, params, 17) == gen_profiles(50, params, 18));
	params.profile_var = 4.0;
	CHECK_THROWS_AS((void)gen_profiles(200, params, 1), InfeasibleParameters);
	CHECK_THROWS_AS((void)gen_profiles(0, ProfileParams{}, 1), std::invalid_argument);
	ProfileParams bad;
	bad.mean_mu = 0.0;
	CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("DeviationModel derived parameters") {
	DeviationModel fk{FiniteK{4, 0.25, 1.0}};
	CHECK(fk.kappa() == 0.0);
	CHECK(fk.sigma_prime_sq() == 2.0);
	DeviationModel rp{RandomPair{0.1, 0.5, 2.0}};
	CHECK(rp.kappa() == doctest::Approx(0.1 * 0.5 * 4.0 / 2.0));
	CHECK(rp.sigma_prime_sq() == doctest::Approx(4.0 - 0.1));
	CHECK_THROWS_AS((void)(DeviationModel{FiniteK{3, 0.1, 1.0}}.validate()), std::invalid_argument);
	CHECK_THROWS_AS((void)(DeviationModel{FiniteK{4, 0.5, 1.0}}.validate()), std::invalid_argument);
	CHECK_THROWS_AS((void)(DeviationModel{RandomPair{1.5, 0.5, 1.0}}.validate()), std::invalid_argument);
	CHECK_THROWS_AS((void)(DeviationModel{RandomPair{0.5, 0.5, 0.0}}.validate()), std::invalid_argument);
	CHECK_THROWS_AS((void)(DeviationModel{RandomPair{0.5, 1.5, 1.0}}.validate()), std::invalid_argument);
}

TEST_CASE("gen_deviations variance of the sum") {
	SUBCASE("independent case") {
		const auto e = gen_deviations(DeviationModel{FiniteK{0, 0.0, 1.0}}, 10, 10000, 1);
		CHECK(variance_of_column_sums(e) == doctest::Approx(10.0).epsilon(0.05));
	}
	SUBCASE("finite-K ring, K = 4") {
		const auto e = gen_deviations(DeviationModel{FiniteK{4, 0.25, 1.0}}, 5, 10000, 2);
		CHECK(variance_of_column_sums(e) == doctest::Approx(10.0).epsilon(0.05));
	}
	SUBCASE("random pairs, gamma = 1") {
		const auto e = gen_deviations(DeviationModel{RandomPair{1.0, 1.0, 1.0}}, 10, 10000, 3);
		CHECK(variance_of_column_sums(e) == doctest::Approx(55.0).epsilon(0.05));
	}
	SUBCASE("ring needs more customers than neighbours") {
		CHECK_THROWS_AS((void)gen_deviations(DeviationModel{FiniteK{4, 0.25, 1.0}}, 4, 10, 1), std::invalid_argument);
	}
}

TEST_CASE("gen_deviations marginals: mean zero, variance sigma^2") {
	const double sigma = 0.7;
	for (const DeviationModel &model : {DeviationModel{FiniteK{2, 0.2, sigma}}, DeviationModel{RandomPair{0.5, 1.0, sigma}},
	                                    DeviationModel{RandomPair{0.5, 1.0, sigma}, 0.6}}) {
		const std::size_t horizon = 40000;
		const auto e = gen_deviations(model, 6, horizon, 21);
		for (std::size_t r = 0; r < e.rows(); ++r) {
			const auto row = e.row(r);
			const double mean = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(horizon);
			double ss = 0.0;
			for (double v : row) {
				ss += (v - mean) * (v - mean);
			}
			// Persistence 0.6 inflates the standard error of the mean by sqrt((1+phi)/(1-phi)) = 2.
			CHECK(std::abs(mean) < 5.0 * 2.0 * sigma / std::sqrt(static_cast<double>(horizon)));
			CHECK(ss / static_cast<double>(horizon - 1) == doctest::Approx(sigma * sigma).epsilon(0.05));
		}
	}
}

TEST_CASE("persistence gives lag-1 autocorrelation equal to the AR coefficient") {
	const auto e = gen_deviations(DeviationModel{FiniteK{0, 0.0, 1.0}, 0.8}, 1, 50000, 4);
	const auto row = e.row(0);
	double num = 0.0;
	double den = 0.0;
	for (std::size_t t = 0; t < row.size(); ++t) {
		den += row[t] * row[t];
		if (t > 0) {
			num += row[t] * row[t - 1];
		}
	}
	CHECK(num / den == doctest::Approx(0.8).epsilon(0.02));
}

TEST_CASE("deviation streams are counter-based per customer") {
	const DeviationModel model{RandomPair{0.3, 1.0, 0.5}};
	const auto small = gen_deviations(model, 5, 100, 77);
	const auto large = gen_deviations(model, 12, 100, 77);
	for (std::size_t r = 0; r < 5; ++r) {
		for (std::size_t t = 0; t < 100; ++t) {
			CHECK(small(r, t) == large(r, t));
		}
	}
}

TEST_CASE("synth_population shape and determinism") {
	const DeviationModel dev{FiniteK{0, 0.0, 0.2}};
	const auto pop = synth_population(2000, 60, ProfileParams{}, dev, 8);
	CHECK(pop.dataset.size() == 2000);
	CHECK(pop.dataset.length() == 1440);
	CHECK(pop.dataset.start_minute() == kSynthStartMinute);
	CHECK(pop.dataset[0].id == "c0000");
	CHECK(pop.dataset[1999].id == "c1999");

	const auto a = synth_population(30, 4, ProfileParams{}, dev, 9);
	const auto b = synth_population(30, 4, ProfileParams{}, dev, 9);
	for (std::size_t i = 0; i < 30; ++i) {
		CHECK(a.dataset[i].series.values() == b.dataset[i].series.values());
	}
}

TEST_CASE("synth_population noiseless limit is periodic and identical across customers") {
	ProfileParams profile;
	profile.profile_var = 0.0;
	const auto pop = synth_population(5, 3, profile, DeviationModel{FiniteK{0, 0.0, 1e-12}}, 1);
	const auto base = base_profile(profile);
	for (const auto &c : pop.dataset.customers()) {
		for (std::size_t t = 0; t < c.series.size(); ++t) {
			CHECK(c.series[t] == doctest::Approx(base[t % 24]).epsilon(1e-9));
		}
	}
	CHECK(pop.floored_samples == 0);
}

TEST_CASE("synth_population aggregate variance matches kappa N^2 + sigma'^2 N") {
	ProfileParams profile;
	profile.mean_mu = 5.0;
	const DeviationModel dev{RandomPair{1.0, 0.5, 0.5}};
	const std::size_t n = 40;
	const std::size_t days = 300;
	const auto pop = synth_population(n, days, profile, dev, 10);
	REQUIRE(pop.floored_samples == 0);
	std::vector<double> resid(days * 24, 0.0);
	for (std::size_t i = 0; i < n; ++i) {
		const auto p = pop.profiles.row(i);
		const auto &x = pop.dataset[i].series.values();
		for (std::size_t t = 0; t < resid.size(); ++t) {
			resid[t] += x[t] - p[t % 24];
		}
	}
	const double mean = std::accumulate(resid.begin(), resid.end(), 0.0) / static_cast<double>(resid.size());
	double ss = 0.0;
	for (double r : resid) {
		ss += (r - mean) * (r - mean);
	}
	const double expected = dev.kappa() * n * n + dev.sigma_prime_sq() * n;
	CHECK(ss / static_cast<double>(resid.size() - 1) == doctest::Approx(expected).epsilon(0.10));
}

TEST_CASE("synth_population rejects deviations that floor too many samples") {
	CHECK_THROWS_AS((void)synth_population(20, 5, ProfileParams{}, DeviationModel{FiniteK{0, 0.0, 3.0}}, 1),
	                InfeasibleParameters);
	CHECK_THROWS_AS((void)synth_population(0, 5, ProfileParams{}, DeviationModel{}, 1), std::invalid_argument);
}

TEST_CASE("group means respect the linear support floor") {
	const auto pop = synth_population(300, 10, ProfileParams{}, DeviationModel{FiniteK{0, 0.0, 0.2}}, 12);
	double min_mean = 1e300;
	for (const auto &c : pop.dataset.customers()) {
		min_mean = std::min(min_mean, c.mean_w);
	}
	for (const auto &g : sample_groups(pop.dataset, {1, 7, 50, 300}, 5, 3)) {
		CHECK(g.mean_w >= static_cast<double>(g.size) * min_mean);
	}
}

TEST_CASE("per-customer deviation sample mean shrinks like 1/sqrt(horizon)") {
	const DeviationModel model{FiniteK{0, 0.0, 1.0}};
	for (std::size_t horizon : {100u, 10000u}) {
		const auto e = gen_deviations(model, 200, horizon, 31);
		double ss = 0.0;
		for (std::size_t r = 0; r < e.rows(); ++r) {
			const auto row = e.row(r);
			const double m = std::accumulate(row.begin(), row.end(), 0.0) / static_cast<double>(horizon);
			ss += m * m;
		}
		const double rms = std::sqrt(ss / static_cast<double>(e.rows()));
		CHECK(rms == doctest::Approx(1.0 / std::sqrt(static_cast<double>(horizon))).epsilon(0.15));
	}
}
