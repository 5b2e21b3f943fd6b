#pragma once

// The Stein operator S f = Laplacian f - <grad f, w>, the Slepian interpolation
// U_alpha f(w) = N_{sin alpha} f(w cos alpha), the Monte Carlo residual of the
// interpolation identity, and two closed integral estimates used with it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "steinclt/core/quadrature.hpp"
#include "steinclt/core/random.hpp"
#include "steinclt/sampler.hpp"
#include "steinclt/smoothing.hpp"
#include "steinclt/tensor.hpp"
#include "steinclt/test_function.hpp"

namespace steinclt {

inline constexpr double kHalfPi = std::numbers::pi / 2.0;

/// S f(w) = trace grad^2 f(w) - <grad f(w), w>.
inline double stein_apply(const TestFunction& f, std::span<const double> w) {
    for (int r = 1; r <= 2; ++r)
        if (!f.has_derivative(r))
            throw std::invalid_argument("stein_apply: '" + f.name() + "' has no derivative of order " +
                                        std::to_string(r));
    const SymTensor grad = f.derivative(1, w);
    const SymTensor hess = f.derivative(2, w);
    double value = 0.0;
    for (int i = 0; i < f.dim(); ++i) value += hess({i, i}) - grad({i}) * w[static_cast<std::size_t>(i)];
    return value;
}

/// Monte Carlo E[S f(W)] for W drawn from `sampler`.
inline Estimate stein_expectation(const TestFunction& f, const PointSampler& sampler, std::size_t mc_n,
                                  std::uint64_t seed) {
    if (sampler.dim != f.dim()) throw std::invalid_argument("stein_expectation: dimension mismatch");
    return monte_carlo_scalar(mc_n, seed, [&] {
        return [&, w = Vector(static_cast<std::size_t>(f.dim()))](Rng& rng) mutable {
            sampler(rng, w);
            return stein_apply(f, w);
        };
    });
}

namespace detail {

inline void check_alpha(double alpha, const char* who) {
    if (!(alpha >= 0.0 && alpha <= kHalfPi)) throw std::invalid_argument(std::string(who) + ": alpha must be in [0, pi/2]");
}

/// cos alpha with the endpoint pi/2 mapped to exactly 0.
inline double cos_alpha(double alpha) { return alpha == kHalfPi ? 0.0 : std::cos(alpha); }

}  // namespace detail

/// U_alpha f(w) = N_{sin alpha} f(w cos alpha). alpha = 0 is exact; at alpha = pi/2
/// the point is exactly 0, so the estimate of N f does not depend on w.
inline Estimate u_alpha(const TestFunction& f, double alpha, std::span<const double> w,
                        std::size_t mc_n = kDefaultSmoothSamples, std::uint64_t seed = 0) {
    detail::check_alpha(alpha, "u_alpha");
    if (static_cast<int>(w.size()) != f.dim()) throw std::invalid_argument("u_alpha: dimension mismatch");
    if (alpha == 0.0) return {f(w), 0.0, 1};
    const double c = detail::cos_alpha(alpha);
    Vector x(w.begin(), w.end());
    for (double& v : x) v *= c;
    return smooth(f, std::sin(alpha), x, mc_n, seed);
}

/// A point on the interpolation path between f (alpha = 0) and N f (alpha = pi/2).
class InterpolationPoint {
public:
    InterpolationPoint(const TestFunction& f, double alpha) : f_(&f), alpha_(alpha) {
        detail::check_alpha(alpha, "InterpolationPoint");
    }

    [[nodiscard]] double alpha() const { return alpha_; }
    [[nodiscard]] const TestFunction& function() const { return *f_; }

    Estimate operator()(std::span<const double> w, std::size_t mc_n = kDefaultSmoothSamples,
                        std::uint64_t seed = 0) const {
        return u_alpha(*f_, alpha_, w, mc_n, seed);
    }

private:
    const TestFunction* f_;
    double alpha_;
};

/// grad^s U_alpha f(w) = cos^s(alpha) grad^s N_{sin alpha} f(w cos alpha), 1 <= s <= 4.
inline TensorEstimate u_alpha_derivative(const TestFunction& f, double alpha, std::span<const double> w, int s,
                                         std::size_t mc_n = kDefaultDerivativeSamples, std::uint64_t seed = 0) {
    detail::check_alpha(alpha, "u_alpha_derivative");
    if (alpha == 0.0) throw std::invalid_argument("u_alpha_derivative: alpha must be > 0");
    const double c = detail::cos_alpha(alpha);
    Vector x(w.begin(), w.end());
    for (double& v : x) v *= c;
    auto est = smooth_derivative(f, std::sin(alpha), x, s, mc_n, seed);
    const double scale = std::pow(c, s);
    est.mean *= scale;
    est.se *= scale;
    return est;
}

/// Empirical M_{1+s}(U_alpha f), 0 <= s <= 3, with the Monte Carlo draws shared by
/// both endpoints of each pair.
inline double estimate_Mr_u_alpha(const TestFunction& f, double alpha, int s, std::size_t n_pairs,
                                  std::size_t mc_n, std::uint64_t seed) {
    detail::check_alpha(alpha, "estimate_Mr_u_alpha");
    if (s < 0 || s > 3) throw std::invalid_argument("estimate_Mr_u_alpha: s must be in 0..3");
    LipschitzOptions opt;
    opt.n_pairs = n_pairs;
    opt.seed = seed;
    const std::uint64_t mc_seed = derive_seed(seed, 0x5a5a);
    if (s == 0)
        return max_lipschitz_quotient(
            f.dim(), [&](std::span<const double> x) { return u_alpha(f, alpha, x, mc_n, mc_seed).mean; }, opt);
    return max_lipschitz_quotient(
        f.dim(), [&](std::span<const double> x) { return u_alpha_derivative(f, alpha, x, s, mc_n, mc_seed).mean; },
        opt);
}

/// c_s cos^{r+s}(alpha) / sin^s(alpha) M_r, the bound on M_{r+s}(U_alpha f).
inline double u_alpha_seminorm_bound(double alpha, int r, int s, double M_r) {
    detail::check_alpha(alpha, "u_alpha_seminorm_bound");
    return constants_c(s) * std::pow(detail::cos_alpha(alpha), r + s) / std::pow(std::sin(alpha), s) * M_r;
}

struct SlepianResult {
    /// E U_eps f(W) - N f + int_eps^{pi/2} E[S U_alpha f(W)] tan(alpha) d alpha
    double signed_value = 0.0;
    double residual = 0.0;
    double se = 0.0;
    std::size_t mc_n = 0;

    /// Residual in units of its standard error.
    [[nodiscard]] double z_score() const { return se > 0.0 ? residual / se : (residual == 0.0 ? 0.0 : INFINITY); }
};

/// Monte Carlo residual of the interpolation identity
///   E U_eps f(W) - N f = -int_eps^{pi/2} E[S U_alpha f(W)] tan(alpha) d alpha.
/// The alpha-integral uses n_alpha Gauss-Legendre nodes. At each node the Hermite form
///   tan(alpha) S U_alpha f(w) = E_Z[f(wc + sZ) ((c/s)(|Z|^2 - d) - <Z, w>)]
/// is used with f(wc) subtracted as a control variate. Every sample draws one W and
/// independent normals for each term, so the returned SE covers all terms jointly.
inline SlepianResult slepian_residual(const TestFunction& f, const PointSampler& sampler, double eps, int n_alpha,
                                      std::size_t mc_n, std::uint64_t seed) {
    if (!(eps > 0.0 && eps < kHalfPi)) throw std::invalid_argument("slepian_residual: eps must be in (0, pi/2)");
    if (n_alpha < 8) throw std::invalid_argument("slepian_residual: n_alpha must be >= 8");
    if (sampler.dim != f.dim()) throw std::invalid_argument("slepian_residual: dimension mismatch");
    const auto d = static_cast<std::size_t>(f.dim());
    const auto rule = quad::gauss_legendre(static_cast<unsigned>(n_alpha), eps, kHalfPi);
    std::vector<double> cs, sn;
    for (double a : rule.nodes) {
        cs.push_back(std::cos(a));
        sn.push_back(std::sin(a));
    }
    const double ce = std::cos(eps);
    const double se = std::sin(eps);
    const Estimate e = monte_carlo_scalar(mc_n, seed, [&] {
        return [&, w = Vector(d), z = Vector(d), p = Vector(d)](Rng& rng) mutable {
            sampler(rng, w);
            fill_normal(rng, z);
            for (std::size_t i = 0; i < d; ++i) p[i] = w[i] * ce + se * z[i];
            double total = f(p);
            fill_normal(rng, z);
            total -= f(z);
            for (std::size_t j = 0; j < cs.size(); ++j) {
                const double c = cs[j];
                const double s = sn[j];
                for (std::size_t i = 0; i < d; ++i) p[i] = w[i] * c;
                const double base = f(p);
                fill_normal(rng, z);
                double z2 = 0.0, zw = 0.0;
                for (std::size_t i = 0; i < d; ++i) {
                    p[i] += s * z[i];
                    z2 += z[i] * z[i];
                    zw += z[i] * w[i];
                }
                const double weight = (c / s) * (z2 - static_cast<double>(d)) - zw;
                total += rule.weights[j] * (f(p) - base) * weight;
            }
            return total;
        };
    });
    return {e.mean, std::abs(e.mean), e.se, e.n};
}

struct CircumCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    double quadrature_error = 0.0;

    [[nodiscard]] bool holds() const { return lhs <= rhs; }
};

/// lhs = int_0^{pi/2} min{2 c_1, c_3 beta2 / sin^2 alpha} cos(alpha) d alpha by adaptive
/// quadrature, rhs = 2 sqrt(2 c_1 c_3 beta2).
inline CircumCheck circum_bound_check(double beta2, double abs_tol = 1e-10) {
    if (!(beta2 >= 0.0)) throw std::invalid_argument("circum_bound_check: beta2 must be >= 0");
    const double c1 = constants_c(1);
    const double c3 = constants_c(3);
    CircumCheck out;
    out.rhs = 2.0 * std::sqrt(2.0 * c1 * c3 * beta2);
    if (beta2 == 0.0) return out;
    auto integrand = [&](double a) {
        const double s = std::sin(a);
        const double tail = s > 0.0 ? c3 * beta2 / (s * s) : INFINITY;
        return std::min(2.0 * c1, tail) * std::cos(a);
    };
    // the cap switches off where sin^2 alpha = c_3 beta2 / (2 c_1)
    std::vector<double> breaks;
    const double s_star = std::sqrt(c3 * beta2 / (2.0 * c1));
    if (s_star < 1.0) breaks.push_back(std::asin(s_star));
    const auto r = quad::integrate_piecewise(integrand, 0.0, kHalfPi, breaks, abs_tol);
    out.lhs = r.value;
    out.quadrature_error = r.error;
    return out;
}

namespace detail {
inline void check_envelope_args(double delta, double eps, const char* who) {
    if (!(delta >= 0.0)) throw std::invalid_argument(std::string(who) + ": delta must be >= 0");
    if (!(eps > 0.0 && eps < std::numbers::pi)) throw std::invalid_argument(std::string(who) + ": eps must be in (0, pi)");
}
}  // namespace detail

/// c_2 [1 + (log(c_3 delta / (2 c_2 sin(eps/2))))_+], natural logarithm.
inline double log_envelope_integral(double delta, double eps) {
    detail::check_envelope_args(delta, eps, "log_envelope_integral");
    const double c2 = constants_c(2);
    if (delta == 0.0) return c2;
    const double arg = constants_c(3) * delta / (2.0 * c2 * std::sin(0.5 * eps));
    return c2 * (1.0 + std::max(0.0, std::log(arg)));
}

/// Adaptive quadrature of int_eps^{pi/2} min{c_2 cos^2 a / sin a, c_3 delta cos^3 a / sin^2 a} da,
/// the integral bounded by log_envelope_integral. For eps >= pi/2 the range [eps, pi/2]
/// is empty or a point and the value is 0.
inline quad::Result log_envelope_quadrature(double delta, double eps, double abs_tol = 1e-10) {
    detail::check_envelope_args(delta, eps, "log_envelope_quadrature");
    if (eps >= kHalfPi) return {};
    const double c2 = constants_c(2);
    const double c3 = constants_c(3);
    auto integrand = [&](double a) {
        const double s = std::sin(a);
        const double c = std::cos(a);
        return std::min(c2 * c * c / s, c3 * delta * c * c * c / (s * s));
    };
    // the two branches cross where tan a = c_3 delta / c_2
    return quad::integrate_piecewise(integrand, eps, kHalfPi, {std::atan(c3 * delta / c2)}, abs_tol);
}

/// D f = E f(W) - E f(V). Both laws are driven by identically seeded generators, so
/// equal samplers give exactly 0 and close laws share most of their randomness.
inline Estimate d_xi(const TestFunction& f, const PointSampler& w_sampler, const PointSampler& v_sampler,
                     std::size_t mc_n, std::uint64_t seed) {
    if (w_sampler.dim != f.dim() || v_sampler.dim != f.dim()) throw std::invalid_argument("d_xi: dimension mismatch");
    const auto d = static_cast<std::size_t>(f.dim());
    return monte_carlo_scalar(mc_n, seed, [&](std::size_t chunk) {
        return [&, rng_v = make_rng(seed, chunk), w = Vector(d), v = Vector(d)](Rng& rng) mutable {
            w_sampler(rng, w);
            v_sampler(rng_v, v);
            return f(w) - f(v);
        };
    });
}

}  // namespace steinclt
