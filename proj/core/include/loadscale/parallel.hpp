#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace loadscale {

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Work items are
/// claimed from a shared counter; callers write results into pre-sized slots
/// indexed by i, so output order never depends on scheduling. The first
/// exception thrown by any task is rethrown after all workers join.
template <class Fn>
void parallel_for(std::size_t count, unsigned threads, Fn &&fn) {
	if (threads <= 1 || count <= 1) {
		for (std::size_t i = 0; i < count; ++i) {
			fn(i);
		}
		return;
	}
	std::atomic<std::size_t> next{0};
	std::exception_ptr failure;
	std::mutex failure_mutex;
	auto worker = [&] {
		while (true) {
			const std::size_t i = next.fetch_add(1);
			if (i >= count) {
				return;
			}
			try {
				fn(i);
			} catch (...) {
				std::lock_guard lock(failure_mutex);
				if (!failure) {
					failure = std::current_exception();
				}
				next.store(count);
			}
		}
	};
	const auto n = static_cast<unsigned>(std::min<std::size_t>(threads, count));
	std::vector<std::jthread> pool;
	pool.reserve(n);
	for (unsigned t = 0; t < n; ++t) {
		pool.emplace_back(worker);
	}
	pool.clear();
	if (failure) {
		std::rethrow_exception(failure);
	}
}

} // namespace loadscale
