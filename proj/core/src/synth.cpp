#include "loadscale/synth.hpp"

#include "loadscale/rng.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace loadscale {

namespace {

constexpr double kBaseAmplitude = 0.4;
constexpr double kPeakLagHours = 6.0;
constexpr double kMaxClippedFraction = 0.01;

// Unit-variance AR(1) stream; persistence 0 gives white noise.
void fill_latent(std::span<double> out, double persistence, Rng &rng) {
	std::normal_distribution<double> normal(0.0, 1.0);
	const double innovation = std::sqrt(1.0 - persistence * persistence);
	double state = normal(rng);
	out[0] = state;
	for (std::size_t t = 1; t < out.size(); ++t) {
		state = persistence * state + innovation * normal(rng);
		out[t] = state;
	}
}

std::string customer_id(std::size_t i, std::size_t n) {
	std::string digits = std::to_string(i);
	const std::size_t width = std::to_string(n > 0 ? n - 1 : 0).size();
	return "c" + std::string(width > digits.size() ? width - digits.size() : 0, '0') + digits;
}

} // namespace

void ProfileParams::validate() const {
	if (t_day < 1) {
		throw std::invalid_argument("profile t_day must be >= 1");
	}
	if (!(mean_mu > 0.0)) {
		throw std::invalid_argument("profile mean_mu must be > 0");
	}
	if (!(profile_var >= 0.0)) {
		throw std::invalid_argument("profile_var must be >= 0");
	}
	if (profile_var > 0.0 && (fourier_terms < 1 || 2 * fourier_terms >= t_day)) {
		throw std::invalid_argument("fourier_terms must be in [1, t_day/2) when profile_var > 0");
	}
}

double DeviationModel::sigma() const {
	return std::visit([](const auto &k) { return k.sigma; }, kind);
}

double DeviationModel::kappa() const {
	if (const auto *rp = std::get_if<RandomPair>(&kind)) {
		return rp->gamma * rp->rho * rp->sigma * rp->sigma / 2.0;
	}
	return 0.0;
}

double DeviationModel::sigma_prime_sq() const {
	if (const auto *fk = std::get_if<FiniteK>(&kind)) {
		return fk->sigma * fk->sigma + fk->k_neighbors * fk->rho;
	}
	const double s = sigma();
	return s * s - kappa();
}

void DeviationModel::validate() const {
	if (!(persistence >= 0.0 && persistence < 1.0)) {
		throw std::invalid_argument("deviation persistence must be in [0, 1)");
	}
	std::visit(
	    [](const auto &k) {
		    if (!(k.sigma > 0.0)) {
			    throw std::invalid_argument("deviation sigma must be > 0");
		    }
		    if (!(k.rho >= 0.0 && k.rho <= 1.0)) {
			    throw std::invalid_argument("deviation rho must be in [0, 1]");
		    }
	    },
	    kind);
	if (const auto *fk = std::get_if<FiniteK>(&kind)) {
		if (fk->k_neighbors < 0 || fk->k_neighbors % 2 != 0) {
			throw std::invalid_argument("FiniteK needs an even, non-negative neighbour count (ring topology)");
		}
		if (fk->k_neighbors * fk->rho > fk->sigma * fk->sigma) {
			throw std::invalid_argument("FiniteK needs K * rho <= sigma^2 to keep marginal variance sigma^2");
		}
	} else {
		const auto &rp = std::get<RandomPair>(kind);
		if (!(rp.gamma >= 0.0 && rp.gamma <= 1.0)) {
			throw std::invalid_argument("RandomPair gamma must be in [0, 1]");
		}
	}
	if (sigma_prime_sq() < 0.0) {
		throw std::invalid_argument("derived sigma'^2 is negative");
	}
}

std::vector<double> base_profile(const ProfileParams &params) {
	params.validate();
	const auto t_day = static_cast<std::size_t>(params.t_day);
	std::vector<double> out(t_day);
	for (std::size_t h = 0; h < t_day; ++h) {
		const double angle = 2.0 * std::numbers::pi * (static_cast<double>(h) - kPeakLagHours) / params.t_day;
		out[h] = params.mean_mu * (1.0 + kBaseAmplitude * std::sin(angle));
	}
	return out;
}

RowMatrix gen_profiles(std::size_t n, const ProfileParams &params, std::uint64_t seed) {
	if (n < 1) {
		throw std::invalid_argument("gen_profiles needs n >= 1");
	}
	const auto base = base_profile(params);
	const auto t_day = base.size();
	RowMatrix out(n, t_day);
	const double coef_sd = params.profile_var > 0.0 ? std::sqrt(params.profile_var / params.fourier_terms) : 0.0;
	std::size_t clipped = 0;
	for (std::size_t i = 0; i < n; ++i) {
		auto row = out.row(i);
		std::copy(base.begin(), base.end(), row.begin());
		if (coef_sd > 0.0) {
			Rng rng = make_rng(seed, stream::profile + i);
			std::normal_distribution<double> normal(0.0, coef_sd);
			for (int k = 1; k <= params.fourier_terms; ++k) {
				const double a = normal(rng);
				const double b = normal(rng);
				for (std::size_t h = 0; h < t_day; ++h) {
					const double angle = 2.0 * std::numbers::pi * k * static_cast<double>(h) / params.t_day;
					row[h] += a * std::cos(angle) + b * std::sin(angle);
				}
			}
		}
		for (double &v : row) {
			if (v < 0.0) {
				v = 0.0;
				++clipped;
			}
		}
	}
	if (static_cast<double>(clipped) > kMaxClippedFraction * static_cast<double>(n * t_day)) {
		throw InfeasibleParameters("profile_var too large for mean_mu: " + std::to_string(clipped) +
		                           " profile samples clipped at zero");
	}
	return out;
}

RowMatrix gen_deviations(const DeviationModel &model, std::size_t n, std::size_t horizon, std::uint64_t seed) {
	if (n < 1 || horizon < 1) {
		throw std::invalid_argument("gen_deviations needs n >= 1 and horizon >= 1");
	}
	model.validate();
	RowMatrix out(n, horizon);
	std::vector<double> latent(horizon);
	const double phi = model.persistence;

	if (const auto *fk = std::get_if<FiniteK>(&model.kind)) {
		const auto k = static_cast<std::size_t>(fk->k_neighbors);
		if (k > 0 && k >= n) {
			throw std::invalid_argument("FiniteK ring needs more customers than neighbours (K < n)");
		}
		const double idio_sd = std::sqrt(fk->sigma * fk->sigma - static_cast<double>(k) * fk->rho);
		for (std::size_t i = 0; i < n; ++i) {
			Rng rng = make_rng(seed, stream::idiosyncratic + i);
			fill_latent(latent, phi, rng);
			auto row = out.row(i);
			for (std::size_t t = 0; t < horizon; ++t) {
				row[t] = idio_sd * latent[t];
			}
		}
		// Edge (i, i + d) for d = 1..K/2 adds one shared latent of variance rho to both ends.
		const double edge_sd = std::sqrt(fk->rho);
		for (std::size_t i = 0; i < n && edge_sd > 0.0; ++i) {
			for (std::size_t d = 1; d <= k / 2; ++d) {
				Rng rng = make_rng(seed, stream::edge + i * k + d);
				fill_latent(latent, phi, rng);
				auto a = out.row(i);
				auto b = out.row((i + d) % n);
				for (std::size_t t = 0; t < horizon; ++t) {
					a[t] += edge_sd * latent[t];
					b[t] += edge_sd * latent[t];
				}
			}
		}
		return out;
	}

	const auto &rp = std::get<RandomPair>(model.kind);
	const double sigma_sq = rp.sigma * rp.sigma;
	const double loading_sq = rp.rho * sigma_sq / 2.0;
	const double load_prob = std::sqrt(rp.gamma);
	std::vector<double> factor(horizon);
	{
		Rng rng = make_rng(seed, stream::factor);
		fill_latent(factor, phi, rng);
	}
	const double loading = std::sqrt(loading_sq);
	const double loaded_sd = std::sqrt(sigma_sq - loading_sq);
	for (std::size_t i = 0; i < n; ++i) {
		Rng member_rng = make_rng(seed, stream::membership + i);
		const bool loaded = std::bernoulli_distribution(load_prob)(member_rng);
		Rng rng = make_rng(seed, stream::idiosyncratic + i);
		fill_latent(latent, phi, rng);
		auto row = out.row(i);
		if (loaded) {
			for (std::size_t t = 0; t < horizon; ++t) {
				row[t] = loading * factor[t] + loaded_sd * latent[t];
			}
		} else {
			for (std::size_t t = 0; t < horizon; ++t) {
				row[t] = rp.sigma * latent[t];
			}
		}
	}
	return out;
}

SynthPopulation synth_population(std::size_t n, std::size_t days, const ProfileParams &profile,
                                 const DeviationModel &deviation, std::uint64_t seed) {
	if (n < 1 || days < 1) {
		throw std::invalid_argument("synth_population needs n >= 1 and days >= 1");
	}
	SynthPopulation pop;
	pop.profiles = gen_profiles(n, profile, mix_seed(seed, 1));
	const std::size_t t_day = pop.profiles.cols();
	const std::size_t horizon = days * t_day;
	const RowMatrix dev = gen_deviations(deviation, n, horizon, mix_seed(seed, 2));

	std::vector<CustomerRecord> customers;
	customers.reserve(n);
	for (std::size_t i = 0; i < n; ++i) {
		const auto p = pop.profiles.row(i);
		const auto e = dev.row(i);
		std::vector<double> values(horizon);
		for (std::size_t t = 0; t < horizon; ++t) {
			const double x = p[t % t_day] + e[t];
			if (x < 0.0) {
				++pop.floored_samples;
				values[t] = 0.0;
			} else {
				values[t] = x;
			}
		}
		customers.push_back(make_customer(customer_id(i, n), LoadSeries(std::move(values), 60, kSynthStartMinute)));
	}
	if (static_cast<double>(pop.floored_samples) > kMaxClippedFraction * static_cast<double>(n * horizon)) {
		throw InfeasibleParameters("deviation sigma too large for the profile level: " +
		                           std::to_string(pop.floored_samples) + " samples floored at zero");
	}
	pop.dataset = Dataset(std::move(customers));
	return pop;
}

} // namespace loadscale
