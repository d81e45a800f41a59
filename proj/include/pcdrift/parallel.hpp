#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <limits>
#include <thread>
#include <vector>

namespace pcdrift {

/// Runs `fn(block)` for every block in [0, blocks) on up to `workers`
/// threads. Blocks are claimed in ascending order. If any block throws, the
/// exception of the lowest failing block is rethrown after all threads join,
/// so the reported error does not depend on the worker count.
template <class Fn>
void parallel_for_blocks(std::size_t blocks, unsigned workers, Fn&& fn) {
    if (workers <= 1 || blocks <= 1) {
        for (std::size_t b = 0; b < blocks; ++b) fn(b);
        return;
    }
    constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> first_failure{none};
    std::vector<std::exception_ptr> errors(blocks);

    auto work = [&] {
        while (true) {
            const std::size_t b = next.fetch_add(1);
            if (b >= blocks || b > first_failure.load()) return;
            try {
                fn(b);
            } catch (...) {
                errors[b] = std::current_exception();
                std::size_t cur = first_failure.load();
                while (b < cur && !first_failure.compare_exchange_weak(cur, b)) {
                }
            }
        }
    };

    const unsigned n = static_cast<unsigned>(std::min<std::size_t>(workers, blocks));
    {
        std::vector<std::jthread> pool;
        pool.reserve(n);
        for (unsigned i = 0; i < n; ++i) pool.emplace_back(work);
    }
    if (const auto f = first_failure.load(); f != none) std::rethrow_exception(errors[f]);
}

}  // namespace pcdrift
