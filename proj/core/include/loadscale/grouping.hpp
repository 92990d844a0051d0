#pragma once

#include "loadscale/series.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace loadscale {

/// A random customer subset A with its mean load W_A.
struct Group {
	std::string id; ///< "s<size>_r<replicate>"
	std::size_t size = 0;
	std::size_t replicate = 0;
	std::vector<std::size_t> members; ///< dataset indices, distinct
	double mean_w = 0.0;              ///< sum of member mean_w
};

struct AggregateSeries {
	Group group;
	LoadSeries series;
};

[[nodiscard]] std::string group_id(std::size_t size, std::size_t replicate);

/// For each size, `replicates` groups drawn uniformly without replacement
/// inside a group and independently across groups. Sequential single RNG
/// stream, so the output is a pure function of (dataset size, sizes,
/// replicates, seed).
[[nodiscard]] std::vector<Group> sample_groups(const Dataset &dataset, const std::vector<std::size_t> &sizes,
                                               std::size_t replicates, std::uint64_t seed);

/// Builds a group from explicit dataset indices (used when reading manifests).
[[nodiscard]] Group make_group(const Dataset &dataset, std::size_t replicate, std::vector<std::size_t> members);

/// x_A(t) = sum over members of x_n(t).
[[nodiscard]] AggregateSeries aggregate_series(const Dataset &dataset, const Group &group);

/// Group manifest CSV: `group_id,size,mean_w,member_ids` with member ids
/// joined by ';'.
void write_group_manifest(std::ostream &out, const Dataset &dataset, const std::vector<Group> &groups);
/// Reads a manifest back, resolving ids against `dataset`.
[[nodiscard]] std::vector<Group> read_group_manifest(std::istream &in, const Dataset &dataset);

} // namespace loadscale
