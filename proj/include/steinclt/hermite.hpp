#pragma once

#include <array>
#include <cmath>
#include <span>
#include <stdexcept>

#include "steinclt/tensor.hpp"

namespace steinclt {

inline constexpr int kMaxHermiteOrder = 4;

/// Probabilists' Hermite polynomial He_n(x) by the three-term recurrence
/// He_{n+1} = x He_n - n He_{n-1}.
inline double hermite_he(int n, double x) {
    if (n < 0) throw std::invalid_argument("hermite_he: negative order");
    double prev = 1.0;
    if (n == 0) return prev;
    double cur = x;
    for (int k = 1; k < n; ++k) {
        const double next = x * cur - k * prev;
        prev = cur;
        cur = next;
    }
    return cur;
}

/// k-th derivative of the standard normal density: (-1)^k He_k(z) phi(z).
inline double normal_density_derivative(int k, double z) {
    constexpr double inv_sqrt_2pi = 0.39894228040143267793994605993438;
    const double phi = inv_sqrt_2pi * std::exp(-0.5 * z * z);
    return ((k % 2 == 0) ? 1.0 : -1.0) * hermite_he(k, z) * phi;
}

/// Entry of the multivariate Hermite tensor H_s(z) at a sorted multi-index:
/// prod_j He_{m_j}(z_j) where m_j counts occurrences of j. Satisfies
/// grad^s phi_d(z) = (-1)^s H_s(z) phi_d(z).
/// `table[j][n]` must hold He_n(z_j) for n <= kMaxHermiteOrder.
inline double hermite_entry(std::span<const int> sorted_idx,
                            std::span<const std::array<double, kMaxHermiteOrder + 1>> table) {
    double p = 1.0;
    for (std::size_t j = 0; j < sorted_idx.size();) {
        std::size_t run = 1;
        while (j + run < sorted_idx.size() && sorted_idx[j + run] == sorted_idx[j]) ++run;
        p *= table[static_cast<std::size_t>(sorted_idx[j])][run];
        j += run;
    }
    return p;
}

inline void hermite_table(std::span<const double> z, std::span<std::array<double, kMaxHermiteOrder + 1>> table) {
    for (std::size_t j = 0; j < z.size(); ++j) {
        auto& row = table[j];
        row[0] = 1.0;
        row[1] = z[j];
        for (int n = 1; n < kMaxHermiteOrder; ++n) row[n + 1] = z[j] * row[n] - n * row[n - 1];
    }
}

/// H_s(z) as a symmetric tensor, 1 <= s <= 4.
inline SymTensor hermite_tensor(std::span<const double> z, int s) {
    if (s < 1 || s > kMaxHermiteOrder) throw std::invalid_argument("hermite_tensor: order out of range");
    std::vector<std::array<double, kMaxHermiteOrder + 1>> table(z.size());
    hermite_table(z, table);
    return SymTensor::generate(s, static_cast<int>(z.size()),
                               [&](std::span<const int> idx) { return hermite_entry(idx, table); });
}

}  // namespace steinclt
