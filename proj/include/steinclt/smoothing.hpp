#pragma once

// Gaussian smoothing N_eps f(x) = E f(x + eps Z), its derivatives through the
// Hermite-weight representation, the constants c_s = int |phi^{(s)}|, and
// empirical Lipschitz seminorms M_r.

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "steinclt/core/quadrature.hpp"
#include "steinclt/core/random.hpp"
#include "steinclt/hermite.hpp"
#include "steinclt/tensor.hpp"
#include "steinclt/test_function.hpp"

namespace steinclt {

inline constexpr std::size_t kDefaultSmoothSamples = 200'000;
inline constexpr std::size_t kDefaultDerivativeSamples = 500'000;

/// Closed-form c_0..c_3.
inline double constants_c(int s) {
    constexpr double sqrt_2pi = 2.5066282746310005024157652848110;
    switch (s) {
        case 0: return 1.0;
        case 1: return 2.0 / sqrt_2pi;
        case 2: return 4.0 / (sqrt_2pi * std::exp(0.5));
        case 3: return (2.0 + 8.0 * std::exp(-1.5)) / sqrt_2pi;
        default: throw std::out_of_range("constants_c: s must be in 0..3");
    }
}

/// The four smoothing constants as one value.
struct SmoothingConstants {
    std::array<double, 4> c{};

    static SmoothingConstants closed_form() {
        SmoothingConstants k;
        for (int s = 0; s < 4; ++s) k.c[s] = constants_c(s);
        return k;
    }

    double operator[](int s) const { return c.at(static_cast<std::size_t>(s)); }
};

/// int |phi^{(s)}(z)| dz by adaptive Gauss-Kronrod on [-12, 12], with panels split
/// at the roots of He_s where the absolute value has kinks.
inline quad::Result constants_c_quadrature(int s, double abs_tol = 1e-12) {
    if (s < 0 || s > 3) throw std::out_of_range("constants_c_quadrature: s must be in 0..3");
    static const std::array<std::vector<double>, 4> roots = {
        std::vector<double>{}, std::vector<double>{0.0}, std::vector<double>{-1.0, 1.0},
        std::vector<double>{-std::sqrt(3.0), 0.0, std::sqrt(3.0)}};
    return quad::integrate_piecewise([s](double z) { return std::abs(normal_density_derivative(s, z)); }, -12.0,
                                     12.0, roots[s], abs_tol);
}

/// Monte Carlo estimate of N_eps f(x). eps = 0 returns f(x) exactly.
inline Estimate smooth(const TestFunction& f, double eps, std::span<const double> x,
                       std::size_t mc_n = kDefaultSmoothSamples, std::uint64_t seed = 0) {
    if (!(eps >= 0.0)) throw std::invalid_argument("smooth: eps must be >= 0");
    if (static_cast<int>(x.size()) != f.dim()) throw std::invalid_argument("smooth: dimension mismatch");
    if (mc_n < 1) throw std::invalid_argument("smooth: mc_n must be >= 1");
    if (eps == 0.0) return {f(x), 0.0, 1};
    const std::size_t d = x.size();
    return monte_carlo_scalar(mc_n, seed, [&] {
        return [&, z = Vector(d), p = Vector(d)](Rng& rng) mutable {
            fill_normal(rng, z);
            for (std::size_t i = 0; i < d; ++i) p[i] = x[i] + eps * z[i];
            return f(p);
        };
    });
}

/// Per-entry Monte Carlo mean and standard error of a symmetric-tensor quantity.
struct TensorEstimate {
    SymTensor mean;
    SymTensor se;
};

/// grad^s N_eps f(x) = eps^{-s} E[(f(x + eps Z) - f(x)) H_s(Z)], 1 <= s <= 4.
/// Subtracting f(x) leaves the mean unchanged because E H_s(Z) = 0.
inline TensorEstimate smooth_derivative(const TestFunction& f, double eps, std::span<const double> x, int s,
                                        std::size_t mc_n = kDefaultDerivativeSamples, std::uint64_t seed = 0) {
    if (!(eps > 0.0)) throw std::invalid_argument("smooth_derivative: eps must be > 0");
    if (s < 1 || s > kMaxHermiteOrder) throw std::invalid_argument("smooth_derivative: s must be in 1..4");
    if (static_cast<int>(x.size()) != f.dim()) throw std::invalid_argument("smooth_derivative: dimension mismatch");
    const int d = f.dim();
    const SymTensor shape(s, d);
    const std::size_t width = shape.size();
    const double scale = std::pow(eps, -s);
    const double base = f(x);
    auto est = monte_carlo(width, mc_n, seed, [&] {
        return [&, z = Vector(static_cast<std::size_t>(d)), p = Vector(static_cast<std::size_t>(d)),
                table = std::vector<std::array<double, kMaxHermiteOrder + 1>>(static_cast<std::size_t>(d))](
                   Rng& rng, std::span<double> out) mutable {
            fill_normal(rng, z);
            for (int i = 0; i < d; ++i) p[i] = x[i] + eps * z[i];
            const double weight = (f(p) - base) * scale;
            hermite_table(z, table);
            for (std::size_t k = 0; k < width; ++k) out[k] = weight * hermite_entry(shape.canonical_index(k), table);
        };
    });
    TensorEstimate result{shape, shape};
    for (std::size_t k = 0; k < width; ++k) {
        result.mean.canonical_values()[k] = est.mean[k];
        result.se.canonical_values()[k] = est.se[k];
    }
    return result;
}

struct LipschitzOptions {
    std::size_t n_pairs = 1000;
    std::uint64_t seed = 0;
    /// Pairs are drawn independently from N(0, spread^2 I).
    double spread = 2.0;
    InjectiveNormOptions norm{};
};

/// Largest |g(x) - g(y)|_inj / |x - y| over random pairs, where g(x) is either a
/// scalar or a SymTensor. A lower bound of the Lipschitz constant of g.
template <class ValueAt>
double max_lipschitz_quotient(int dim, ValueAt&& value_at, const LipschitzOptions& opt) {
    Rng rng = make_rng(opt.seed, 0x4d72);
    const auto d = static_cast<std::size_t>(dim);
    Vector x(d), y(d);
    double best = 0.0;
    for (std::size_t k = 0; k < opt.n_pairs; ++k) {
        for (std::size_t i = 0; i < d; ++i) x[i] = opt.spread * standard_normal(rng);
        for (std::size_t i = 0; i < d; ++i) y[i] = opt.spread * standard_normal(rng);
        const double gap = distance(x, y);
        if (gap == 0.0) continue;
        auto gx = value_at(std::span<const double>(x));
        auto gy = value_at(std::span<const double>(y));
        double diff = 0.0;
        if constexpr (std::is_same_v<decltype(gx), double>) {
            diff = std::abs(gx - gy);
        } else {
            diff = injective_norm_symmetric(gx - gy, opt.norm);
        }
        best = std::max(best, diff / gap);
    }
    return best;
}

/// Empirical M_r(f) from the derivative oracle of order r - 1, 1 <= r <= 4.
inline double estimate_Mr(const TestFunction& f, int r, std::size_t n_pairs = 1000, std::uint64_t seed = 0) {
    if (r < 1 || r > 4) throw std::invalid_argument("estimate_Mr: r must be in 1..4");
    LipschitzOptions opt;
    opt.n_pairs = n_pairs;
    opt.seed = seed;
    if (r == 1) return max_lipschitz_quotient(f.dim(), [&](std::span<const double> x) { return f(x); }, opt);
    if (!f.has_derivative(r - 1))
        throw std::invalid_argument("estimate_Mr: no derivative oracle of order " + std::to_string(r - 1));
    return max_lipschitz_quotient(f.dim(), [&](std::span<const double> x) { return f.derivative(r - 1, x); }, opt);
}

/// Empirical M_{1+s}(N_eps f), 0 <= s <= 3, from smooth() (s = 0) or
/// smooth_derivative() (s >= 1). Both endpoints of a pair share `mc_seed`, so their
/// Monte Carlo errors are coupled through the same Gaussian draws.
inline double estimate_Mr_smoothed(const TestFunction& f, double eps, int s, std::size_t n_pairs,
                                   std::size_t mc_n, std::uint64_t seed) {
    if (s < 0 || s > 3) throw std::invalid_argument("estimate_Mr_smoothed: s must be in 0..3");
    LipschitzOptions opt;
    opt.n_pairs = n_pairs;
    opt.seed = seed;
    const std::uint64_t mc_seed = derive_seed(seed, 0x5a5a);
    if (s == 0)
        return max_lipschitz_quotient(
            f.dim(), [&](std::span<const double> x) { return smooth(f, eps, x, mc_n, mc_seed).mean; }, opt);
    return max_lipschitz_quotient(
        f.dim(), [&](std::span<const double> x) { return smooth_derivative(f, eps, x, s, mc_n, mc_seed).mean; },
        opt);
}

/// N_eps f as a TestFunction whose values are Monte Carlo estimates with a fixed seed.
inline TestFunction smoothed_function(const TestFunction& f, double eps, std::size_t mc_n, std::uint64_t seed) {
    return TestFunction(f.name() + "_smoothed", f.dim(),
                        [f, eps, mc_n, seed](std::span<const double> x) { return smooth(f, eps, x, mc_n, seed).mean; });
}

}  // namespace steinclt
