#pragma once

// Shared aliases, error types and small utilities used across the library.

#include <Eigen/Dense>

#include <atomic>
#include <cstdint>
#include <cstdlib>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace embedcast {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

// Trajectory or iteration left the finite range. `step` is the first bad index.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, Index step)
        : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}
    Index step() const { return step_; }

private:
    Index step_;
};

// Normal equations are rank deficient and no ridge was requested.
class RankDeficiencyError : public std::runtime_error {
public:
    RankDeficiencyError(Index rank, Index expected)
        : std::runtime_error("rank-deficient least squares: rank " + std::to_string(rank) +
                             " < " + std::to_string(expected) + " features; use ridge > 0"),
          rank_(rank) {}
    Index rank() const { return rank_; }

private:
    Index rank_;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Counter-split substream: one generator per (master, stage, member) triple.
// Adding stages or members never perturbs the other streams.
inline std::mt19937_64 make_stream(std::uint64_t master, std::uint64_t stage,
                                   std::uint64_t member = 0) {
    std::uint64_t s = splitmix64(master);
    s = splitmix64(s ^ (0x1000000000000000ULL + stage));
    s = splitmix64(s ^ (0x2000000000000000ULL + member));
    return std::mt19937_64(s);
}

// Runs fn(i) for i in [0, n). Results must be written to disjoint slots so the
// outcome is independent of the thread count.
template <typename Fn>
void parallel_for(Index n, int threads, Fn&& fn) {
    if (threads <= 1 || n < 2) {
        for (Index i = 0; i < n; ++i) fn(i);
        return;
    }
    int nt = std::min<Index>(threads, n);
    std::vector<std::thread> pool;
    pool.reserve(nt);
    std::atomic<Index> next{0};
    for (int t = 0; t < nt; ++t) {
        pool.emplace_back([&] {
            for (Index i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

inline int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("EMBEDCAST_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    return 1;
}

}  // namespace embedcast
