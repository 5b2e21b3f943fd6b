#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string_view>
#include <type_traits>
#include <vector>

#include "steinclt/core/parallel.hpp"

namespace steinclt {

using Rng = std::mt19937_64;

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Independent sub-seed for stream `stream` of master seed `seed`.
inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

/// FNV-1a; stable across platforms, unlike std::hash.
inline constexpr std::uint64_t hash_string(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    return Rng(derive_seed(seed, stream));
}

inline double standard_normal(Rng& rng) {
    // Box-Muller without caching so every draw consumes a fixed amount of the stream.
    constexpr double two_pi = 6.283185307179586476925286766559;
    const double u1 = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

/// Uniform on [0, 1).
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline void fill_normal(Rng& rng, std::span<double> out) {
    for (double& v : out) v = standard_normal(rng);
}

/// Monte Carlo mean with its standard error.
struct Estimate {
    double mean = 0.0;
    double se = 0.0;
    std::size_t n = 0;
};

struct VectorEstimate {
    std::vector<double> mean;
    std::vector<double> se;
    std::size_t n = 0;

    [[nodiscard]] Estimate at(std::size_t k) const { return {mean.at(k), se.at(k), n}; }
    [[nodiscard]] std::size_t width() const { return mean.size(); }
};

/// Per-component running mean / second central moment (Welford), mergeable.
class RunningStats {
public:
    explicit RunningStats(std::size_t width = 1) : mean_(width, 0.0), m2_(width, 0.0) {}

    void push(std::span<const double> x) {
        ++n_;
        const double inv = 1.0 / static_cast<double>(n_);
        for (std::size_t k = 0; k < mean_.size(); ++k) {
            const double delta = x[k] - mean_[k];
            mean_[k] += delta * inv;
            m2_[k] += delta * (x[k] - mean_[k]);
        }
    }

    void merge(const RunningStats& other) {
        if (other.n_ == 0) return;
        if (n_ == 0) {
            *this = other;
            return;
        }
        const double na = static_cast<double>(n_);
        const double nb = static_cast<double>(other.n_);
        const double nt = na + nb;
        for (std::size_t k = 0; k < mean_.size(); ++k) {
            const double delta = other.mean_[k] - mean_[k];
            mean_[k] += delta * nb / nt;
            m2_[k] += other.m2_[k] + delta * delta * na * nb / nt;
        }
        n_ += other.n_;
    }

    [[nodiscard]] VectorEstimate estimate() const {
        VectorEstimate e{mean_, std::vector<double>(mean_.size(), 0.0), n_};
        if (n_ > 1) {
            const double nn = static_cast<double>(n_);
            for (std::size_t k = 0; k < mean_.size(); ++k)
                e.se[k] = std::sqrt(std::max(m2_[k], 0.0) / (nn - 1.0) / nn);
        }
        return e;
    }

    [[nodiscard]] std::size_t count() const { return n_; }

private:
    std::size_t n_ = 0;
    std::vector<double> mean_;
    std::vector<double> m2_;
};

/// Samples per chunk. Chunk c draws from make_rng(seed, c) and chunks are merged in
/// index order, so estimates do not depend on the worker count.
inline constexpr std::size_t kChunkSize = 8192;

/// Monte Carlo over `samples` draws of a `width`-valued kernel.
/// `make_kernel()` is called once per chunk and must return a callable
/// `void(Rng&, std::span<double> out)`; it may own scratch buffers. A factory that
/// accepts a std::size_t receives the chunk index.
template <class KernelFactory>
VectorEstimate monte_carlo(std::size_t width, std::size_t samples, std::uint64_t seed,
                           KernelFactory&& make_kernel) {
    if (samples == 0) throw std::invalid_argument("monte_carlo: samples must be >= 1");
    const std::size_t chunks = (samples + kChunkSize - 1) / kChunkSize;
    std::vector<RunningStats> partial(chunks, RunningStats(width));
    parallel_for(chunks, [&](std::size_t c) {
        Rng rng = make_rng(seed, c);
        auto kernel = [&] {
            if constexpr (std::is_invocable_v<KernelFactory&, std::size_t>)
                return make_kernel(c);
            else
                return make_kernel();
        }();
        std::vector<double> out(width);
        const std::size_t begin = c * kChunkSize;
        const std::size_t end = std::min(samples, begin + kChunkSize);
        for (std::size_t s = begin; s < end; ++s) {
            kernel(rng, std::span<double>(out));
            partial[c].push(out);
        }
    });
    RunningStats total(width);
    for (const auto& p : partial) total.merge(p);
    return total.estimate();
}

template <class KernelFactory>
Estimate monte_carlo_scalar(std::size_t samples, std::uint64_t seed, KernelFactory&& make_kernel) {
    return monte_carlo(1, samples, seed, [&](std::size_t c) {
        auto k = [&] {
            if constexpr (std::is_invocable_v<KernelFactory&, std::size_t>)
                return make_kernel(c);
            else
                return make_kernel();
        }();
        return [k = std::move(k)](Rng& rng, std::span<double> out) mutable { out[0] = k(rng); };
    }).at(0);
}

}  // namespace steinclt
