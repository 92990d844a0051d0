#pragma once

// Test-only oracles. Nothing here calls into the library's estimation code.

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace loadscale::testing {

/// Solves (X^T X) b = X^T y by Gaussian elimination with partial pivoting.
/// X is row-major with `cols` columns.
inline std::vector<double> ols_normal_equations(const std::vector<double> &x, const std::vector<double> &y,
                                                std::size_t cols) {
	const std::size_t rows = y.size();
	std::vector<double> a(cols * (cols + 1), 0.0);
	for (std::size_t r = 0; r < rows; ++r) {
		for (std::size_t i = 0; i < cols; ++i) {
			for (std::size_t j = 0; j < cols; ++j) {
				a[i * (cols + 1) + j] += x[r * cols + i] * x[r * cols + j];
			}
			a[i * (cols + 1) + cols] += x[r * cols + i] * y[r];
		}
	}
	for (std::size_t k = 0; k < cols; ++k) {
		std::size_t piv = k;
		for (std::size_t i = k + 1; i < cols; ++i) {
			if (std::abs(a[i * (cols + 1) + k]) > std::abs(a[piv * (cols + 1) + k])) {
				piv = i;
			}
		}
		for (std::size_t j = 0; j <= cols; ++j) {
			std::swap(a[k * (cols + 1) + j], a[piv * (cols + 1) + j]);
		}
		const double d = a[k * (cols + 1) + k];
		if (d == 0.0) {
			throw std::runtime_error("singular normal equations");
		}
		for (std::size_t i = k + 1; i < cols; ++i) {
			const double f = a[i * (cols + 1) + k] / d;
			for (std::size_t j = k; j <= cols; ++j) {
				a[i * (cols + 1) + j] -= f * a[k * (cols + 1) + j];
			}
		}
	}
	std::vector<double> b(cols);
	for (std::size_t k = cols; k-- > 0;) {
		double s = a[k * (cols + 1) + cols];
		for (std::size_t j = k + 1; j < cols; ++j) {
			s -= a[k * (cols + 1) + j] * b[j];
		}
		b[k] = s / a[k * (cols + 1) + k];
	}
	return b;
}

/// Least-squares SAR coefficients on the mean-centred series, computed with
/// the normal equations (theta first, then phi).
inline std::vector<double> sar_oracle(const std::vector<double> &series, int p, int big_p, int s) {
	double mean = 0.0;
	for (double v : series) {
		mean += v;
	}
	mean /= static_cast<double>(series.size());
	const auto lag = static_cast<std::size_t>(std::max(p, s * big_p));
	const auto cols = static_cast<std::size_t>(p + big_p);
	std::vector<double> x;
	std::vector<double> y;
	for (std::size_t t = lag; t < series.size(); ++t) {
		y.push_back(series[t] - mean);
		for (int k = 1; k <= p; ++k) {
			x.push_back(series[t - static_cast<std::size_t>(k)] - mean);
		}
		for (int k = 1; k <= big_p; ++k) {
			x.push_back(series[t - static_cast<std::size_t>(s * k)] - mean);
		}
	}
	return ols_normal_equations(x, y, cols);
}

/// x(t) = level + sum theta_k y(t-k) + sum phi_k y(t-sk) + eps, y = x - level.
inline std::vector<double> simulate_sar(const std::vector<double> &theta, const std::vector<double> &phi, int s,
                                        std::size_t n, double level, double noise_sd, std::uint64_t seed) {
	std::mt19937_64 rng(seed);
	std::normal_distribution<double> eps(0.0, noise_sd);
	const std::size_t burn = 50 * static_cast<std::size_t>(s);
	std::vector<double> y(n + burn, 0.0);
	for (std::size_t t = 0; t < y.size(); ++t) {
		double v = eps(rng);
		for (std::size_t k = 1; k <= theta.size(); ++k) {
			if (t >= k) {
				v += theta[k - 1] * y[t - k];
			}
		}
		for (std::size_t k = 1; k <= phi.size(); ++k) {
			const std::size_t lag = k * static_cast<std::size_t>(s);
			if (t >= lag) {
				v += phi[k - 1] * y[t - lag];
			}
		}
		y[t] = v;
	}
	std::vector<double> out(y.begin() + static_cast<std::ptrdiff_t>(burn), y.end());
	for (double &v : out) {
		v += level;
	}
	return out;
}

/// Lag-1 sample autocorrelation.
inline double lag1_autocorrelation(const std::vector<double> &r) {
	double mean = 0.0;
	for (double v : r) {
		mean += v;
	}
	mean /= static_cast<double>(r.size());
	double num = 0.0;
	double den = 0.0;
	for (std::size_t t = 0; t < r.size(); ++t) {
		den += (r[t] - mean) * (r[t] - mean);
		if (t > 0) {
			num += (r[t] - mean) * (r[t - 1] - mean);
		}
	}
	return num / den;
}

/// err_i = sqrt(alpha0 / w_i^p + alpha1) at `count` log-spaced loads in [lo, hi].
inline std::vector<std::pair<double, double>> scaling_curve(double sqrt_a0, double sqrt_a1, double p, double lo,
                                                            double hi, std::size_t count) {
	std::vector<std::pair<double, double>> out;
	for (std::size_t i = 0; i < count; ++i) {
		const double w = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(count - 1));
		out.emplace_back(w, std::sqrt(sqrt_a0 * sqrt_a0 / std::pow(w, p) + sqrt_a1 * sqrt_a1));
	}
	return out;
}

} // namespace loadscale::testing
