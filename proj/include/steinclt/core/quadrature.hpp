#pragma once

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/legendre.hpp>

namespace steinclt::quad {

struct Result {
    double value = 0.0;
    double error = 0.0;
};

/// Adaptive 15-point Gauss-Kronrod on [a, b]. The error estimate stays pessimistic
/// across a kink and the recursion is binary, so pass kinks as breakpoints to
/// integrate_piecewise; the depth cap bounds the cost when that is not possible.
template <class F>
Result integrate(F&& f, double a, double b, double abs_tol = 1e-12, unsigned max_depth = 20) {
    if (a == b) return {};
    double err = 0.0;
    // Boost's tolerance is relative to the L1 norm; convert the absolute target.
    double l1 = 0.0;
    boost::math::quadrature::gauss_kronrod<double, 15>::integrate(f, a, b, 0, 0.0, nullptr, &l1);
    const double rel = l1 > abs_tol ? abs_tol / l1 : 1.0;
    const double v = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        f, a, b, max_depth, std::max(rel, 1e-15), &err);
    return {v, err};
}

/// Integrates over [a, b] splitting at every interior breakpoint, so kinks of the
/// integrand land on panel edges.
template <class F>
Result integrate_piecewise(F&& f, double a, double b, std::vector<double> breaks,
                           double abs_tol = 1e-12) {
    std::vector<double> edges{a};
    std::sort(breaks.begin(), breaks.end());
    for (double x : breaks)
        if (x > a && x < b) edges.push_back(x);
    edges.push_back(b);
    Result total;
    const double per_panel = abs_tol / static_cast<double>(edges.size() - 1);
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        auto r = integrate(f, edges[i], edges[i + 1], per_panel);
        total.value += r.value;
        total.error += r.error;
    }
    return total;
}

/// Fixed n-point Gauss-Legendre rule mapped to [a, b].
struct Rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline Rule gauss_legendre(unsigned n, double a, double b) {
    if (n == 0) throw std::invalid_argument("gauss_legendre: n must be >= 1");
    const auto positive = boost::math::legendre_p_zeros<double>(static_cast<int>(n));
    std::vector<double> x;
    for (double z : positive) {
        x.push_back(z);
        if (z != 0.0) x.push_back(-z);
    }
    std::sort(x.begin(), x.end());
    Rule rule;
    const double half = 0.5 * (b - a);
    const double mid = 0.5 * (a + b);
    for (double z : x) {
        const double dp = boost::math::legendre_p_prime<double>(static_cast<int>(n), z);
        rule.nodes.push_back(mid + half * z);
        rule.weights.push_back(half * 2.0 / ((1.0 - z * z) * dp * dp));
    }
    return rule;
}

}  // namespace steinclt::quad
