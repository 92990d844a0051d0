#pragma once

#include "loadscale/matrix.hpp"
#include "loadscale/series.hpp"

#include <cstdint>
#include <stdexcept>
#include <variant>

namespace loadscale {

/// Shape of the daily profiles p_n. Every profile is the deterministic base
/// shape mu * (1 + 0.4 sin(2 pi (h - 6) / t_day)) plus `fourier_terms` random
/// harmonics. Harmonics have zero daily mean, so every customer's profile mean
/// is exactly mean_mu; their coefficient variance is profile_var /
/// fourier_terms, which makes the between-customer variance at every hour
/// equal profile_var.
struct ProfileParams {
	int t_day = 24;
	double mean_mu = 1.05;
	double profile_var = 0.01;
	int fourier_terms = 3;

	void validate() const;
};

/// e_n correlates with its K nearest ring neighbours, covariance rho each.
struct FiniteK {
	int k_neighbors = 0;
	double rho = 0.0;
	double sigma = 1.0;
};

/// Any two customers covary with rho sigma^2 / 2 with probability gamma.
struct RandomPair {
	double gamma = 0.0;
	double rho = 0.0;
	double sigma = 1.0;
};

/// Random deviation process e_n(t). `persistence` is an optional AR(1)
/// coefficient applied to every latent stream; marginal variance stays sigma^2.
struct DeviationModel {
	std::variant<FiniteK, RandomPair> kind = FiniteK{};
	double persistence = 0.0;

	[[nodiscard]] double sigma() const;
	/// Quadratic coefficient of VAR(sum e_n): gamma rho sigma^2 / 2 for
	/// RandomPair, 0 for FiniteK.
	[[nodiscard]] double kappa() const;
	/// Linear coefficient sigma'^2 of VAR(sum e_n).
	[[nodiscard]] double sigma_prime_sq() const;
	[[nodiscard]] bool is_random_pair() const noexcept { return std::holds_alternative<RandomPair>(kind); }
	void validate() const;
};

class InfeasibleParameters : public std::runtime_error {
public:
	using std::runtime_error::runtime_error;
};

/// n x t_day matrix of daily profiles, clipped at zero. Throws
/// InfeasibleParameters when more than 1% of samples needed clipping.
[[nodiscard]] RowMatrix gen_profiles(std::size_t n, const ProfileParams &params, std::uint64_t seed);

/// Deterministic base shape (the n = 1, profile_var = 0 profile).
[[nodiscard]] std::vector<double> base_profile(const ProfileParams &params);

/// n x horizon deviation matrix. Each customer, ring edge and the shared
/// factor draw from their own counter-derived stream.
[[nodiscard]] RowMatrix gen_deviations(const DeviationModel &model, std::size_t n, std::size_t horizon,
                                       std::uint64_t seed);

struct SynthPopulation {
	Dataset dataset;
	RowMatrix profiles;
	std::size_t floored_samples = 0;
};

/// 2010-08-01T00:00Z, the start of every synthetic time axis.
inline constexpr std::int64_t kSynthStartMinute = 21'343'680;

/// x_n(t) = p_n(t mod t_day) + e_n(t), floored at zero. Throws
/// InfeasibleParameters when more than 1% of samples hit the floor.
[[nodiscard]] SynthPopulation synth_population(std::size_t n, std::size_t days, const ProfileParams &profile,
                                               const DeviationModel &deviation, std::uint64_t seed);

} // namespace loadscale
