#include "loadscale/theory.hpp"

#include "loadscale/forecast.hpp"
#include "loadscale/grouping.hpp"
#include "loadscale/metrics.hpp"
#include "loadscale/parallel.hpp"
#include "loadscale/rng.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace loadscale {

double variance_of_sum(const DeviationModel &model, std::size_t n) {
	if (n < 1) {
		throw std::invalid_argument("variance_of_sum needs n >= 1");
	}
	model.validate();
	const auto nd = static_cast<double>(n);
	return model.kappa() * nd * nd + model.sigma_prime_sq() * nd;
}

double mc_variance(const DeviationModel &model, std::size_t n, std::size_t trials, std::uint64_t seed) {
	if (trials < 1000) {
		throw std::invalid_argument("mc_variance needs at least 1000 trials");
	}
	// Welford accumulation of the per-trial sums.
	double mean = 0.0;
	double m2 = 0.0;
	for (std::size_t k = 0; k < trials; ++k) {
		const RowMatrix e = gen_deviations(model, n, 1, mix_seed(seed, k));
		const double s = std::accumulate(e.data().begin(), e.data().end(), 0.0);
		const double delta = s - mean;
		mean += delta / static_cast<double>(k + 1);
		m2 += delta * (s - mean);
	}
	return m2 / static_cast<double>(trials - 1);
}

double population_bias(const RowMatrix &profiles, std::span<const double> estimate) {
	if (profiles.cols() != estimate.size()) {
		throw std::invalid_argument("profile estimate length does not match the profile matrix");
	}
	if (profiles.rows() == 0 || estimate.empty()) {
		throw std::invalid_argument("population_bias needs a non-empty profile matrix");
	}
	const std::size_t t_len = profiles.cols();
	double total = 0.0;
	for (std::size_t t = 0; t < t_len; ++t) {
		double mean = 0.0;
		for (std::size_t n = 0; n < profiles.rows(); ++n) {
			mean += profiles(n, t);
		}
		mean /= static_cast<double>(profiles.rows());
		const double gap = mean - estimate[t];
		total += gap * gap;
	}
	return total / static_cast<double>(t_len);
}

void EnvelopeParams::validate() const {
	if (!(mu > 0.0) || !(delta_sq >= 0.0) || !(sigma_sq >= 0.0)) {
		throw std::invalid_argument("envelope needs mu > 0, delta^2 >= 0 and sigma^2 >= 0");
	}
}

double cv_envelope(const EnvelopeParams &params, std::size_t n) {
	params.validate();
	if (n < 1) {
		throw std::invalid_argument("cv_envelope needs n >= 1");
	}
	const double mu_sq = params.mu * params.mu;
	return 100.0 * std::sqrt(params.delta_sq / mu_sq + params.sigma_sq / (mu_sq * static_cast<double>(n)));
}

EnvelopeParams seasonal_mean_envelope(const ProfileParams &profile, const DeviationModel &deviation,
                                      std::size_t cycles) {
	if (cycles < 1) {
		throw std::invalid_argument("cycles must be >= 1");
	}
	const double inflation = 1.0 + 1.0 / static_cast<double>(cycles);
	return EnvelopeParams{inflation * deviation.kappa(), inflation * deviation.sigma_prime_sq(), profile.mean_mu};
}

CvCheckResult mc_cv_check(const CvCheckConfig &config, std::size_t n, std::size_t trials, std::uint64_t seed,
                          unsigned threads) {
	if (trials < 100) {
		throw std::invalid_argument("mc_cv_check needs at least 100 trials");
	}
	if (n < 1 || config.cycles < 1 || config.eval_days < 1) {
		throw std::invalid_argument("mc_cv_check needs n, cycles and eval_days >= 1");
	}
	const auto t_day = static_cast<std::size_t>(config.profile.t_day);
	const std::size_t window = config.cycles * t_day;
	const std::size_t days = config.cycles + config.eval_days;
	ForecasterSpec naive{"seasonal_naive", SeasonalNaiveSpec{config.profile.t_day, static_cast<int>(config.cycles)}, 1};

	std::vector<double> cvs(trials);
	parallel_for(trials, threads, [&](std::size_t k) {
		const auto pop = synth_population(n, days, config.profile, config.deviation, mix_seed(seed, k));
		std::vector<std::size_t> all(n);
		std::iota(all.begin(), all.end(), std::size_t{0});
		const Group group = make_group(pop.dataset, 0, std::move(all));
		const auto agg = aggregate_series(pop.dataset, group);
		const auto run = rolling_forecast(agg.series, naive, 1, window, window);
		cvs[k] = cv(run.targets, run.predictions);
	});

	CvCheckResult result;
	const auto count = static_cast<double>(trials);
	result.mean_cv = std::accumulate(cvs.begin(), cvs.end(), 0.0) / count;
	double ss = 0.0;
	for (const double c : cvs) {
		ss += (c - result.mean_cv) * (c - result.mean_cv);
	}
	result.std_error = std::sqrt(ss / (count - 1.0) / count);
	result.envelope = cv_envelope(seasonal_mean_envelope(config.profile, config.deviation, config.cycles), n);
	result.holds = result.mean_cv <= result.envelope + 3.0 * result.std_error;
	return result;
}

} // namespace loadscale
