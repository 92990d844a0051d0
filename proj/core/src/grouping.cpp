#include "loadscale/grouping.hpp"

#include "loadscale/csv_io.hpp"
#include "loadscale/rng.hpp"

#include <istream>
#include <numeric>
#include <ostream>
#include <unordered_set>

namespace loadscale {

std::string group_id(std::size_t size, std::size_t replicate) {
	return "s" + std::to_string(size) + "_r" + std::to_string(replicate);
}

Group make_group(const Dataset &dataset, std::size_t replicate, std::vector<std::size_t> members) {
	std::unordered_set<std::size_t> seen;
	double w = 0.0;
	for (const std::size_t m : members) {
		if (m >= dataset.size()) {
			throw DataError("group member index out of range");
		}
		if (!seen.insert(m).second) {
			throw DataError("group members must be distinct");
		}
		w += dataset[m].mean_w;
	}
	Group g;
	g.size = members.size();
	g.replicate = replicate;
	g.id = group_id(g.size, replicate);
	g.members = std::move(members);
	g.mean_w = w;
	return g;
}

std::vector<Group> sample_groups(const Dataset &dataset, const std::vector<std::size_t> &sizes,
                                 std::size_t replicates, std::uint64_t seed) {
	if (replicates < 1) {
		throw std::invalid_argument("replicates must be >= 1");
	}
	const std::size_t population = dataset.size();
	for (const std::size_t s : sizes) {
		if (s < 1 || s > population) {
			throw std::invalid_argument("group size " + std::to_string(s) + " exceeds population of " +
			                            std::to_string(population));
		}
	}
	Rng rng(mix_seed(seed, 0));
	std::vector<std::size_t> pool(population);
	std::vector<Group> groups;
	groups.reserve(sizes.size() * replicates);
	for (const std::size_t size : sizes) {
		for (std::size_t r = 0; r < replicates; ++r) {
			std::iota(pool.begin(), pool.end(), std::size_t{0});
			// Partial Fisher-Yates: the first `size` slots become the sample.
			for (std::size_t i = 0; i < size; ++i) {
				std::uniform_int_distribution<std::size_t> pick(i, population - 1);
				std::swap(pool[i], pool[pick(rng)]);
			}
			groups.push_back(make_group(dataset, r, {pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(size)}));
		}
	}
	return groups;
}

AggregateSeries aggregate_series(const Dataset &dataset, const Group &group) {
	if (group.members.empty()) {
		throw DataError("cannot aggregate an empty group");
	}
	std::vector<double> sum(dataset.length(), 0.0);
	for (const std::size_t m : group.members) {
		if (m >= dataset.size()) {
			throw DataError("group " + group.id + " references an unknown customer");
		}
		const auto &v = dataset[m].series.values();
		for (std::size_t t = 0; t < sum.size(); ++t) {
			sum[t] += v[t];
		}
	}
	return AggregateSeries{group, LoadSeries(std::move(sum), dataset.interval_minutes(), dataset.start_minute())};
}

void write_group_manifest(std::ostream &out, const Dataset &dataset, const std::vector<Group> &groups) {
	out << "group_id,size,mean_w,member_ids\n";
	for (const auto &g : groups) {
		out << g.id << ',' << g.size << ',' << format_number(g.mean_w) << ',';
		for (std::size_t i = 0; i < g.members.size(); ++i) {
			out << (i ? ";" : "") << dataset[g.members[i]].id;
		}
		out << '\n';
	}
}

std::vector<Group> read_group_manifest(std::istream &in, const Dataset &dataset) {
	std::string line;
	std::vector<Group> groups;
	std::size_t line_no = 0;
	bool header_seen = false;
	while (std::getline(in, line)) {
		++line_no;
		if (line.empty() || line.front() == '#') {
			continue;
		}
		if (!header_seen) {
			header_seen = true;
			continue;
		}
		const auto fields = split_csv_line(line);
		if (fields.size() != 4) {
			throw DataError("group manifest line " + std::to_string(line_no) + ": expected 4 fields");
		}
		std::vector<std::size_t> members;
		std::string_view ids = fields[3];
		while (!ids.empty()) {
			const auto semi = ids.find(';');
			members.push_back(dataset.index_of(std::string(ids.substr(0, semi))));
			ids = semi == std::string_view::npos ? std::string_view{} : ids.substr(semi + 1);
		}
		const std::string id(fields[0]);
		const auto r_pos = id.rfind("_r");
		const std::size_t replicate = r_pos == std::string::npos ? 0 : std::stoul(id.substr(r_pos + 2));
		Group g = make_group(dataset, replicate, std::move(members));
		g.id = id;
		groups.push_back(std::move(g));
	}
	return groups;
}

} // namespace loadscale
