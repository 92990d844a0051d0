#pragma once

#include <cstdint>
#include <random>

namespace loadscale {

/// splitmix64 finaliser; used to derive independent stream seeds from a base
/// seed and a counter so results never depend on thread scheduling.
[[nodiscard]] constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
	std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
	z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
	z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
	return z ^ (z >> 31);
}

/// splitmix64 as a counter-based engine: seeding is free, which matters
/// because every customer, edge and trial gets its own short stream.
class SplitMix64 {
public:
	using result_type = std::uint64_t;

	constexpr explicit SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

	static constexpr result_type min() noexcept { return 0; }
	static constexpr result_type max() noexcept { return ~result_type{0}; }

	constexpr result_type operator()() noexcept {
		std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
		z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
		z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
		return z ^ (z >> 31);
	}

private:
	std::uint64_t state_;
};

using Rng = SplitMix64;

[[nodiscard]] inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
	return Rng(mix_seed(seed, stream));
}

// Stream tags keep the different consumers of one base seed apart.
namespace stream {
inline constexpr std::uint64_t profile = 1ULL << 40;
inline constexpr std::uint64_t idiosyncratic = 2ULL << 40;
inline constexpr std::uint64_t edge = 3ULL << 40;
inline constexpr std::uint64_t factor = 4ULL << 40;
inline constexpr std::uint64_t membership = 5ULL << 40;
} // namespace stream

} // namespace loadscale
