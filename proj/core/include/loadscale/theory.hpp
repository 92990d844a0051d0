#pragma once

#include "loadscale/matrix.hpp"
#include "loadscale/synth.hpp"

#include <cstdint>
#include <span>

namespace loadscale {

/// Closed-form VAR(sum_n e_n(t)) = kappa n^2 + sigma'^2 n.
[[nodiscard]] double variance_of_sum(const DeviationModel &model, std::size_t n);

/// Sample variance of sum_n e_n over `trials` independent draws of the
/// deviation process (membership/topology redrawn every trial).
[[nodiscard]] double mc_variance(const DeviationModel &model, std::size_t n, std::size_t trials, std::uint64_t seed);

/// (1/T) sum_t (mean profile(t) - estimate(t))^2: the per-customer squared
/// population bias of a profile estimate.
[[nodiscard]] double population_bias(const RowMatrix &profiles, std::span<const double> estimate);

/// Coefficients of the expected-CV upper bound.
struct EnvelopeParams {
	double delta_sq = 0.0; ///< squared bias plus kappa, per customer^2
	double sigma_sq = 0.0; ///< additive per-customer variance sigma'^2
	double mu = 1.0;       ///< per-customer mean load floor

	void validate() const;
};

/// 100 sqrt(delta^2 / mu^2 + sigma'^2 / (mu^2 n)), percent.
[[nodiscard]] double cv_envelope(const EnvelopeParams &params, std::size_t n);

/// Envelope coefficients for a seasonal mean over `cycles` past days on the
/// synthetic model (no temporal persistence). The forecaster learns each
/// group's periodic profile exactly, so profile bias is zero, but it carries
/// the average of `cycles` lagged deviation draws, which inflates both the
/// quadratic and the linear coefficient by (1 + 1/cycles).
[[nodiscard]] EnvelopeParams seasonal_mean_envelope(const ProfileParams &profile, const DeviationModel &deviation,
                                                    std::size_t cycles);

struct CvCheckConfig {
	ProfileParams profile;
	DeviationModel deviation;
	std::size_t cycles = 1;    ///< seasonal-naive cycles averaged by the forecaster
	std::size_t eval_days = 7; ///< forecast days per trial after the training cycles
};

struct CvCheckResult {
	double mean_cv = 0.0;
	double std_error = 0.0;
	double envelope = 0.0;
	bool holds = false;
};

/// Simulates `trials` populations of n customers, aggregates them, forecasts
/// with the seasonal-naive baseline and compares mean CV with the envelope.
/// holds = mean CV <= envelope + 3 standard errors.
[[nodiscard]] CvCheckResult mc_cv_check(const CvCheckConfig &config, std::size_t n, std::size_t trials,
                                        std::uint64_t seed, unsigned threads = 1);

} // namespace loadscale
