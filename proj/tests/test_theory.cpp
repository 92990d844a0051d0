#include "doctest.h"

#include "loadscale/theory.hpp"

#include <cmath>
#include <numeric>
#include <random>

using namespace loadscale;

TEST_CASE("variance_of_sum closed forms") {
	CHECK(variance_of_sum(DeviationModel{FiniteK{0, 0.0, 1.0}}, 100) == 100.0);
	CHECK(variance_of_sum(DeviationModel{FiniteK{4, 0.25, 1.0}}, 5) == 10.0);
	CHECK(variance_of_sum(DeviationModel{RandomPair{1.0, 1.0, 1.0}}, 10) == doctest::Approx(55.0));
}

TEST_CASE("variance_of_sum structure: linear for finite K, quadratic excess for random pairs") {
	const DeviationModel fk{FiniteK{2, 0.3, 1.2}};
	const DeviationModel rp{RandomPair{0.3, 0.7, 0.9}};
	for (std::size_t n = 1; n < 60; ++n) {
		CHECK(variance_of_sum(fk, n) == doctest::Approx(static_cast<double>(n) * variance_of_sum(fk, 1)));
		const double excess = variance_of_sum(rp, n) - rp.sigma_prime_sq() * static_cast<double>(n);
		CHECK(excess == doctest::Approx(rp.kappa() * static_cast<double>(n * n)));
	}
}

TEST_CASE("mc_variance agrees with the closed form") {
	for (const DeviationModel &m : {DeviationModel{FiniteK{4, 0.2, 1.0}}, DeviationModel{RandomPair{0.2, 1.0, 1.0}}}) {
		for (std::size_t n : {10u, 100u}) {
			CAPTURE(n);
			CHECK(mc_variance(m, n, 10000, 5) == doctest::Approx(variance_of_sum(m, n)).epsilon(0.05));
		}
	}
	CHECK(mc_variance(DeviationModel{RandomPair{0.2, 1.0, 0.8}}, 1, 10000, 6) == doctest::Approx(0.64).epsilon(0.05));
	CHECK_THROWS_AS((void)mc_variance(DeviationModel{}, 5, 10, 1), std::invalid_argument);
}

TEST_CASE("doubling MC trials halves the estimator variance") {
	const DeviationModel m{FiniteK{0, 0.0, 1.0}};
	auto spread = [&](std::size_t trials) {
		std::vector<double> est;
		for (std::uint64_t rerun = 0; rerun < 200; ++rerun) {
			est.push_back(mc_variance(m, 3, trials, 1000 + rerun * 7919 + trials));
		}
		const double mean = std::accumulate(est.begin(), est.end(), 0.0) / static_cast<double>(est.size());
		double ss = 0.0;
		for (double e : est) {
			ss += (e - mean) * (e - mean);
		}
		return ss / static_cast<double>(est.size() - 1);
	};
	const double ratio = spread(1000) / spread(2000);
	CHECK(ratio > 1.5);
	CHECK(ratio < 2.7);
}

TEST_CASE("population_bias examples") {
	ProfileParams params;
	params.profile_var = 0.02;
	const auto profiles = gen_profiles(50, params, 3);
	std::vector<double> mean(24, 0.0);
	for (std::size_t n = 0; n < 50; ++n) {
		for (std::size_t t = 0; t < 24; ++t) {
			mean[t] += profiles(n, t) / 50.0;
		}
	}
	CHECK(population_bias(profiles, mean) == doctest::Approx(0.0));
	std::vector<double> shifted(mean);
	for (double &v : shifted) {
		v += 0.3;
	}
	CHECK(population_bias(profiles, shifted) == doctest::Approx(0.09));
	CHECK_THROWS_AS((void)population_bias(profiles, std::vector<double>(5, 0.0)), std::invalid_argument);
}

TEST_CASE("sample-mean profile estimate has squared bias VAR(P)/N") {
	// Bias of the mean of N random profiles against the population mean shape.
	ProfileParams params;
	params.profile_var = 0.01;
	const auto base = base_profile(params);
	for (std::size_t n : {1u, 4u, 16u}) {
		double acc = 0.0;
		const int draws = 4000;
		for (int d = 0; d < draws; ++d) {
			acc += population_bias(gen_profiles(n, params, 500 + static_cast<std::uint64_t>(d)), base);
		}
		const double mean_bias = acc / draws;
		CHECK(static_cast<double>(n * n) * mean_bias ==
		      doctest::Approx(static_cast<double>(n) * params.profile_var).epsilon(0.05));
	}
}

TEST_CASE("cv_envelope examples and shape") {
	CHECK(cv_envelope(EnvelopeParams{0.0, 1.0, 1.0}, 100) == doctest::Approx(10.0));
	CHECK(cv_envelope(EnvelopeParams{0.0, 0.49, 2.0}, 1) == doctest::Approx(100.0 * 0.7 / 2.0));
	const EnvelopeParams sat{0.04, 0.5, 1.0};
	CHECK(cv_envelope(sat, 100000000) == doctest::Approx(20.0).epsilon(1e-4));
	double prev = cv_envelope(sat, 1);
	for (std::size_t n = 2; n < 5000; n += 37) {
		const double e = cv_envelope(sat, n);
		CHECK(e <= prev);
		CHECK(e >= 20.0);
		prev = e;
	}
	CHECK_THROWS_AS((void)cv_envelope(EnvelopeParams{0.0, 1.0, 0.0}, 1), std::invalid_argument);
}

TEST_CASE("envelope in terms of load reproduces the p = 1 law") {
	// With every customer at mean mu, W = n mu and CV^2 = 1e4 (delta^2/mu^2 + sigma^2/(mu W)).
	const EnvelopeParams env{0.01, 0.3, 1.05};
	for (std::size_t n : {1u, 10u, 1000u}) {
		const double w = static_cast<double>(n) * env.mu;
		const double beta0 = 1e4 * env.sigma_sq / env.mu;
		const double beta1 = 1e4 * env.delta_sq / (env.mu * env.mu);
		CHECK(cv_envelope(env, n) == doctest::Approx(std::sqrt(beta0 / w + beta1)));
	}
}

TEST_CASE("mc_cv_check") {
	CvCheckConfig cfg;
	cfg.profile.profile_var = 0.01;
	cfg.deviation = DeviationModel{FiniteK{0, 0.0, 0.1}};
	SUBCASE("uncorrelated deviations stay below the envelope") {
		for (std::size_t n : {1u, 10u, 100u}) {
			const auto r = mc_cv_check(cfg, n, 100, 3);
			CAPTURE(n);
			CHECK(r.holds);
			CHECK(r.mean_cv > 0.0);
		}
	}
	SUBCASE("noiseless limit") {
		cfg.profile.profile_var = 0.0;
		cfg.deviation = DeviationModel{FiniteK{0, 0.0, 1e-9}};
		const auto r = mc_cv_check(cfg, 10, 100, 3);
		CHECK(r.mean_cv < 1e-6);
	}
	SUBCASE("random pairs plateau above zero and below the envelope") {
		cfg.deviation = DeviationModel{RandomPair{0.1, 1.0, 0.1}};
		const auto big = mc_cv_check(cfg, 1000, 100, 4);
		const auto env = seasonal_mean_envelope(cfg.profile, cfg.deviation, cfg.cycles);
		const double floor = 100.0 * std::sqrt(env.delta_sq) / env.mu;
		CHECK(big.holds);
		CHECK(big.mean_cv > 0.5 * floor);
		CHECK(big.mean_cv < big.envelope + 3.0 * big.std_error);
	}
	SUBCASE("preconditions") {
		CHECK_THROWS_AS((void)mc_cv_check(cfg, 1, 10, 1), std::invalid_argument);
	}
}
